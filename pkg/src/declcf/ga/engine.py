"""Generational loop for the four counterfactual generation strategies.

BOSO/AOSO minimize a weighted sum of the objectives with top-half elitism and
binary tournaments; BOMO/AOMO keep a population of non-dominated fronts. The
"A" variants add the background-knowledge objective and use the
temporal-knowledge-aware operators.

RNG consumption order: initialization, then per generation all parent
selections, all crossovers, all mutations.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from ..declare import DeclareModel, activation_target_sets, satisfied_set
from ..encoding import EncodingSchema, decoded_activities
from ..errors import ConfigError
from ..predictor import Predictor
from . import operators as ops
from .objectives import ObjectiveVector, bk_gap, distance_rows, weighted_fitness
from .pareto import nondominated_sort, survival_select


class Mode(enum.Enum):
    BOSO = "BOSO"
    AOSO = "AOSO"
    BOMO = "BOMO"
    AOMO = "AOMO"

    @property
    def adapted(self) -> bool:
        return self in (Mode.AOSO, Mode.AOMO)

    @property
    def multi(self) -> bool:
        return self in (Mode.BOMO, Mode.AOMO)


@dataclass(frozen=True)
class GAConfig:
    mode: Mode = Mode.BOSO
    k: int = 5
    alpha: float = 0.5
    beta: float = 0.5
    gamma: float = 0.5
    delta: float = 0.5
    p_c: float = 0.5
    p_m: float = 0.1
    population_size: int | None = None  # None: 10 * k
    max_generations: int = 100
    stall_generations: int = 10
    stall_epsilon: float = 1e-6
    seed: int = 0
    lock_targets: bool = True
    fraction_neighbors: float = 0.5
    normalize_distance: bool = True
    survival: str = "age"

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))
        if not (0 <= self.p_c <= 1 and 0 <= self.p_m <= 1):
            raise ConfigError("p_c and p_m must lie in [0, 1]")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.population_size is not None and self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if min(self.alpha, self.beta, self.gamma, self.delta) < 0:
            raise ConfigError("objective weights must be nonnegative")
        if not 0 <= self.fraction_neighbors <= 1:
            raise ConfigError("fraction_neighbors must lie in [0, 1]")
        if self.survival not in ("age", "crowding"):
            raise ConfigError(f"unknown survival method {self.survival!r}")

    @property
    def effective_population_size(self) -> int:
        return self.population_size if self.population_size is not None else max(10 * self.k, 2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GAConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown GA config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid GA config: {exc}") from exc


@dataclass(frozen=True)
class Individual:
    genotype: tuple
    objectives: ObjectiveVector
    valid: bool
    fitness: float


@dataclass
class CounterfactualSet:
    query: tuple
    desired_label: int
    k: int
    members: list[Individual]
    mode: Mode
    runtime_seconds: float = 0.0
    generations: int = 0
    population: list[Individual] = field(default_factory=list, repr=False)

    @property
    def hit(self) -> float:
        return len(self.members) / self.k

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "query": list(self.query),
            "desired_label": self.desired_label,
            "k": self.k,
            "hit_rate": self.hit,
            "generations": self.generations,
            "runtime_seconds": self.runtime_seconds,
            "members": [
                {"genotype": list(m.genotype), "objectives": asdict(m.objectives), "fitness": m.fitness}
                for m in self.members
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> CounterfactualSet:
        members = [Individual(tuple(m["genotype"]), ObjectiveVector(**m["objectives"]), True, m["fitness"])
                   for m in d["members"]]
        return cls(tuple(d["query"]), int(d["desired_label"]), int(d["k"]), members, Mode(d["mode"]),
                   float(d.get("runtime_seconds", 0.0)), int(d.get("generations", 0)))


class ObjectiveEvaluator:
    """Caches objective vectors per genotype for one query."""

    def __init__(self, x: Sequence, desired: int, cfg: GAConfig, predictor: Predictor,
                 reference: np.ndarray, schema: EncodingSchema, model: DeclareModel | None):
        self.x = tuple(x)
        self.desired = desired
        self.cfg = cfg
        self.predictor = predictor
        self.reference = reference
        self.schema = schema
        self.model = model
        self.x_row = schema.to_matrix([self.x])[0]
        self.query_satisfied = (satisfied_set(model, decoded_activities(schema, self.x))
                                if cfg.mode.adapted else None)
        self._cache: dict[tuple, Individual] = {}

    def fitness(self, obj: ObjectiveVector) -> float:
        c = self.cfg
        return weighted_fitness(obj, c.alpha, c.beta, c.gamma, c.delta if c.mode.adapted else None)

    def __call__(self, genotypes: Sequence[tuple]) -> list[Individual]:
        todo = list(dict.fromkeys(g for g in genotypes if g not in self._cache))
        if todo:
            self._evaluate(todo)
        return [self._cache[g] for g in genotypes]

    def _evaluate(self, genotypes: list[tuple]) -> None:
        schema, norm = self.schema, self.cfg.normalize_distance
        M = schema.to_matrix(genotypes)
        proba = self.predictor.predict_proba_matrix(M)
        o2 = distance_rows(schema, self.x_row, M, norm)
        for g, row, p, d in zip(genotypes, M, proba, o2):
            predicted = int(p >= 0.5)
            valid = predicted == self.desired
            p_desired = p if self.desired == 1 else 1.0 - p
            o1 = 0.0 if valid else float(1.0 - p_desired)
            o3 = sum(1 for a, b in zip(self.x, g) if a != b)
            o4 = float(distance_rows(schema, row, self.reference, norm).min())
            o5 = bk_gap(self.query_satisfied, g, self.model, schema) if self.cfg.mode.adapted else None
            obj = ObjectiveVector(o1, float(d), o3, o4, o5)
            self._cache[g] = Individual(g, obj, valid, self.fitness(obj))


def _dedupe(individuals: Sequence[Individual]) -> list[Individual]:
    seen, out = set(), []
    for ind in individuals:
        if ind.genotype not in seen:
            seen.add(ind.genotype)
            out.append(ind)
    return out


def _unit_sum(ind: Individual) -> float:
    return sum(ind.objectives.as_tuple())


class _Breeder:
    def __init__(self, x: tuple, cfg: GAConfig, schema: EncodingSchema, model: DeclareModel | None,
                 rng: np.random.Generator):
        self.x, self.cfg, self.schema, self.rng = x, cfg, schema, rng
        self.sets = activation_target_sets(model) if cfg.mode.adapted else None

    def offspring(self, pairs: list[tuple[tuple, tuple]]) -> list[tuple]:
        cfg, rng, schema = self.cfg, self.rng, self.schema
        if self.sets is None:
            children = [ops.crossover_baseline(a, b, cfg.p_c, rng) for a, b in pairs]
            return [ops.mutate_baseline(c, cfg.p_m, schema, rng) for c in children]
        children = [ops.crossover_adapted(self.x, a, b, cfg.p_c, self.sets, schema, rng) for a, b in pairs]
        return [ops.mutate_adapted(c, self.x, cfg.p_m, self.sets, schema, rng, cfg.lock_targets)
                for c in children]


def _stall(stall: int, best: float, score: float, population: Sequence[Individual], cfg: GAConfig) -> int:
    """Generations without improvement; only counted once k valid members exist."""
    enough = sum(1 for i in population if i.valid) >= cfg.k
    return stall + 1 if enough and best - score < cfg.stall_epsilon else 0


def _tournament(keys: Sequence, rng: np.random.Generator) -> int:
    i, j = (int(v) for v in rng.integers(len(keys), size=2))
    return j if keys[j] < keys[i] else i


def run(x: Sequence, desired: int, cfg: GAConfig, predictor: Predictor, reference,
        model: DeclareModel | None = None) -> CounterfactualSet:
    """Search counterfactuals of ``x`` whose predicted label is ``desired``."""
    started = time.perf_counter()
    schema = predictor.schema
    x = tuple(x)
    schema.check_vector(x)
    if cfg.mode.adapted and not model:
        raise ConfigError(f"{cfg.mode.value} needs a non-empty Declare model")
    training = [tuple(v) for v in reference]
    if not training:
        raise ConfigError("the reference population is empty")
    ref_vectors = schema.to_matrix(training)

    rng = np.random.default_rng(cfg.seed)
    evaluate = ObjectiveEvaluator(x, desired, cfg, predictor, ref_vectors, schema, model)
    breeder = _Breeder(x, cfg, schema, model, rng)
    n = cfg.effective_population_size

    start = ops.init_population(x, training, n, schema, rng, cfg.fraction_neighbors, cfg.normalize_distance)
    population = _dedupe(evaluate(start))
    best, stall, generation = math.inf, 0, 0

    if cfg.mode.multi:
        population = _select_multi(population, n, cfg)
        for generation in range(1, cfg.max_generations + 1):
            fronts = nondominated_sort([i.objectives.as_tuple() for i in population])
            rank = np.empty(len(population), dtype=int)
            for r, front in enumerate(fronts):
                rank[front] = r
            pairs = [(population[_tournament(rank, rng)].genotype,
                      population[_tournament(rank, rng)].genotype) for _ in range(n)]
            children = evaluate(breeder.offspring(pairs))
            population = _select_multi(_dedupe(population + children), n, cfg)
            front1 = nondominated_sort([i.objectives.as_tuple() for i in population])[0]
            score = sum(_unit_sum(population[i]) for i in front1) / len(front1)
            stall = _stall(stall, best, score, population, cfg)
            best = min(best, score)
            if stall >= cfg.stall_generations:
                break
        members = _extract_multi(population, cfg.k)
    else:
        population.sort(key=lambda i: i.fitness)
        n_elite = max(1, n // 2)
        for generation in range(1, cfg.max_generations + 1):
            keys = [i.fitness for i in population]
            pairs = [(population[_tournament(keys, rng)].genotype,
                      population[_tournament(keys, rng)].genotype) for _ in range(n - n_elite)]
            children = evaluate(breeder.offspring(pairs))
            population = _dedupe(population[:n_elite] + children)
            population.sort(key=lambda i: i.fitness)
            score = population[0].fitness
            stall = _stall(stall, best, score, population, cfg)
            best = min(best, score)
            if stall >= cfg.stall_generations:
                break
        members = [i for i in population if i.valid][:cfg.k]

    return CounterfactualSet(x, desired, cfg.k, members, cfg.mode, time.perf_counter() - started,
                             generation, population)


def _select_multi(pool: list[Individual], n: int, cfg: GAConfig) -> list[Individual]:
    objs = [i.objectives.as_tuple() for i in pool]
    fronts = nondominated_sort(objs)
    keep = survival_select(fronts, objs, min(n, len(pool)), cfg.survival)
    return [pool[i] for i in keep]


def _extract_multi(population: list[Individual], k: int) -> list[Individual]:
    fronts = nondominated_sort([i.objectives.as_tuple() for i in population])
    out = []
    for front in fronts:
        out.extend(population[i] for i in front if population[i].valid)
        if len(out) >= k:
            break
    return out[:k]


def config_from_json(text: str) -> GAConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid GA config JSON: {exc}") from exc
    return GAConfig.from_dict(data)


def with_overrides(cfg: GAConfig, **changes) -> GAConfig:
    return replace(cfg, **changes)

"""Crossover, mutation and initialization over encoded feature vectors.

Control-flow (CF) slots may hold PAD only in a trailing run and never in the
first slot, so every genotype decodes to a non-empty trace without gaps.
"""

from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np

from ..declare import ActivationTargetSets
from ..encoding import PAD, EncodingSchema, Numeric
from .objectives import distance_rows


class MutationWarning(UserWarning):
    """A CF slot had no admissible value left after excluding activations."""


def sample_value(domain, rng: np.random.Generator, exclude: frozenset = frozenset()):
    if isinstance(domain, Numeric):
        if domain.integer:
            return int(rng.integers(math.ceil(domain.low), math.floor(domain.high) + 1))
        return float(rng.uniform(domain.low, domain.high))
    values = [v for v in domain.values if v not in exclude]
    return values[int(rng.integers(len(values)))]


def _pad_allowed(vector: Sequence, i: int, schema: EncodingSchema) -> bool:
    if i == schema.n_static:
        return False
    return all(vector[j] == PAD for j in range(i + 1, schema.n_features))


def _cf_candidates(schema: EncodingSchema, vector: Sequence, i: int,
                   exclude: frozenset = frozenset()) -> list[str]:
    if i > schema.n_static and vector[i - 1] == PAD:
        # filling a slot after a PAD would open an interior gap
        return [PAD] if PAD not in exclude else []
    skip = exclude if _pad_allowed(vector, i, schema) else exclude | {PAD}
    return [v for v in schema.activities.values if v not in skip]


def crossover_baseline(p1: Sequence, p2: Sequence, p_c: float, rng: np.random.Generator) -> tuple:
    """Uniform crossover: gene from ``p1`` where the per-gene draw is below ``p_c``."""
    draws = rng.random(len(p1))
    return tuple(a if p < p_c else b for a, b, p in zip(p1, p2, draws))


def crossover_adapted(q: Sequence, p1: Sequence, p2: Sequence, p_c: float,
                      sets: ActivationTargetSets, schema: EncodingSchema,
                      rng: np.random.Generator) -> tuple:
    """Temporal-knowledge-aware crossover.

    CF slots where the query holds an activation or target are copied from the
    query. Remaining genes come from a parent unless that parent would bring an
    activation into a CF slot, in which case the query's gene is used.
    """
    locked = sets.locked
    acts = sets.activations
    draws = rng.random(len(q))
    out = []
    for i, p in enumerate(draws):
        cf = schema.is_cf(i)
        if cf and q[i] in locked:
            out.append(q[i])
        elif p < p_c and (not cf or p1[i] not in acts):
            out.append(p1[i])
        elif p > p_c and (not cf or p2[i] not in acts):
            out.append(p2[i])
        else:
            out.append(q[i])
    return tuple(out)


def mutate_baseline(o: Sequence, p_m: float, schema: EncodingSchema, rng: np.random.Generator) -> tuple:
    out = list(o)
    draws = rng.random(len(out))
    for i, p in enumerate(draws):
        if p >= p_m:
            continue
        if schema.is_cf(i):
            candidates = _cf_candidates(schema, out, i)
            out[i] = candidates[int(rng.integers(len(candidates)))]
        else:
            out[i] = sample_value(schema.domains[i], rng)
    return tuple(out)


def mutate_adapted(o: Sequence, q: Sequence, p_m: float, sets: ActivationTargetSets,
                   schema: EncodingSchema, rng: np.random.Generator, lock_targets: bool = True) -> tuple:
    """Mutation that never samples an activation into a CF slot.

    With ``lock_targets`` the CF slots where the query holds an activation or
    target are left untouched.
    """
    out = list(o)
    locked = sets.locked
    draws = rng.random(len(out))
    for i, p in enumerate(draws):
        if p >= p_m:
            continue
        if not schema.is_cf(i):
            out[i] = sample_value(schema.domains[i], rng)
            continue
        if lock_targets and q[i] in locked:
            continue
        candidates = _cf_candidates(schema, out, i, sets.activations)
        if not candidates:
            warnings.warn(f"slot {i}: every activity is an activation; left unchanged",
                          MutationWarning, stacklevel=2)
            continue
        out[i] = candidates[int(rng.integers(len(candidates)))]
    return tuple(out)


def random_individual(schema: EncodingSchema, rng: np.random.Generator) -> tuple:
    """Uniform sample over the domains; CF slots are filled without PAD."""
    out = []
    for i, domain in enumerate(schema.domains):
        if schema.is_cf(i):
            out.append(sample_value(domain, rng, frozenset({PAD})))
        else:
            out.append(sample_value(domain, rng))
    return tuple(out)


def init_population(x: Sequence, training, size: int, schema: EncodingSchema,
                    rng: np.random.Generator, fraction_neighbors: float = 0.5,
                    normalize: bool = True) -> list[tuple]:
    """Nearest training vectors to ``x`` plus uniform domain samples."""
    vectors = [tuple(v) for v in training]
    if not vectors:
        raise ValueError("initialization needs a non-empty training set")
    n_near = min(math.ceil(fraction_neighbors * size), len(vectors), size)
    m = schema.to_matrix(vectors)
    d = distance_rows(schema, schema.to_matrix([x])[0], m, normalize)
    nearest = np.argsort(d, kind="stable")[:n_near]
    population = [vectors[i] for i in nearest]
    population.extend(random_individual(schema, rng) for _ in range(size - n_near))
    return population


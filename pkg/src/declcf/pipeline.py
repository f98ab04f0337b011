"""Data preparation, query sampling and the benchmark grid.

A benchmark cell is one (dataset, encoding, prefix length, method, k, seed,
query) combination. Its GA seed is derived from a SHA-256 hash of the
experiment seed and the cell id, so adding cells never changes the results of
existing ones.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .declare import (DeclareConstraint, DeclareModel, discover, filter_conformant, load_model,
                      parse_constraint)
from .encoding import EncodingKind, EncodingSchema, build_schema, encode
from .errors import ConfigError, DeclcfError
from .evaluation import BenchmarkRow, aggregate, evaluate_set, read_rows, write_aggregate, write_plot_data, write_rows
from .event_log import (CsvColumnMap, EventLog, LabeledPrefix, apply_labels, label_log, order_by_start, parse_csv,
                        parse_xes, prefix_log, sequential_split)
from .ga.engine import CounterfactualSet, GAConfig, Mode, run
from .predictor import DEFAULT_GRID, GridResult, Hyperparams, RandomForestModel, grid_search
from .synthesis import SynthesisSpec, synthesize_log



def load_log(path: str | Path, column_map: CsvColumnMap | None = None) -> EventLog:
    path = Path(path)
    if path.suffix.lower() == ".xes":
        return parse_xes(path)
    return parse_csv(path, column_map)


def cell_seed(seed: int, cell_id: str) -> int:
    digest = hashlib.sha256(f"{seed}|{cell_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class PreparedData:
    """One labeled, encoded, split dataset for a single encoding and prefix length."""

    schema: EncodingSchema
    model: DeclareModel
    train: list[LabeledPrefix]
    valid: list[LabeledPrefix]
    test: list[LabeledPrefix]
    train_vectors: list[tuple] = field(repr=False)
    valid_vectors: list[tuple] = field(repr=False)
    test_vectors: list[tuple] = field(repr=False)

    def xy(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        vectors = getattr(self, f"{split}_vectors")
        labels = [p.label for p in getattr(self, split)]
        return self.schema.to_matrix(vectors), np.asarray(labels, dtype=np.int64)


def discover_background(log_: EventLog, support: float, count_vacuous: bool,
                        train_ratio: float) -> DeclareModel:
    """Mine constraints from the earliest ``train_ratio`` share of traces."""
    traces = sorted(log_.traces, key=lambda t: t.start)
    n = max(1, math.floor(train_ratio * len(traces) + 1e-9))
    return discover(EventLog(tuple(traces[:n])), support, count_vacuous)


def prepare(log_: EventLog, labeling: DeclareConstraint, model: DeclareModel, kind: EncodingKind | str,
            prefix_length: int, ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)) -> PreparedData:
    conformant = filter_conformant(log_, model)
    labels = label_log(conformant, labeling)
    prefixes = order_by_start(apply_labels(prefix_log(conformant, [prefix_length]), labels))
    train, valid, test = sequential_split(prefixes, ratios)
    schema = build_schema(train, kind, prefix_length)
    enc = [[encode(schema, p.prefix) for p in part] for part in (train, valid, test)]
    return PreparedData(schema, model, train, valid, test, *enc)


def fit_predictor(data: PreparedData, grid: Sequence[Hyperparams] = DEFAULT_GRID, seed: int = 0,
                  metadata: dict | None = None) -> tuple[RandomForestModel, list[GridResult]]:
    from .predictor import train as train_forest

    X, y = data.xy("train")
    if data.valid:
        vX, vy = data.xy("valid")
        best, results = grid_search(X, y, vX, vy, data.schema, grid, seed)
    else:
        best, results = grid[0], []
    forest = train_forest(X, y, data.schema, best, seed)
    forest.metadata.update(metadata or {})
    return forest, results


def sample_queries(n_test: int, sample_size: int, seed: int) -> list[int]:
    """Sorted test indexes drawn uniformly without replacement."""
    rng = np.random.default_rng(seed)
    size = min(sample_size, n_test)
    return sorted(int(i) for i in rng.choice(n_test, size=size, replace=False))


def explain(x: tuple, predictor: RandomForestModel, reference: Sequence[tuple], model: DeclareModel | None,
            cfg: GAConfig) -> CounterfactualSet:
    desired = 1 - predictor.predict(x)
    return run(x, desired, cfg, predictor, reference, model if cfg.mode.adapted else None)


# ---------------------------------------------------------------------------
# pipeline configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    dataset: str
    log_path: Path | None
    synthesis_path: Path | None
    synthesis_seed: int
    labeling: DeclareConstraint
    model_path: Path | None
    support: float
    count_vacuous: bool
    kinds: tuple[EncodingKind, ...]
    prefix_lengths: tuple[int, ...]
    ratios: tuple[float, float, float]
    predictor_path: Path | None
    grid: tuple[Hyperparams, ...]
    ga: GAConfig
    methods: tuple[Mode, ...]
    k_values: tuple[int, ...]
    seeds: tuple[int, ...]
    sample_size: int
    seed: int
    group_by: tuple[str, ...]

    @classmethod
    def from_dict(cls, d: dict, base: Path = Path(".")) -> PipelineConfig:
        try:
            return cls._from_dict(d, base)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid pipeline config: {exc!r}") from exc

    @classmethod
    def _from_dict(cls, d: dict, base: Path) -> PipelineConfig:
        def path(key: str, src: dict = d) -> Path | None:
            v = src.get(key)
            return None if v is None else (base / v)

        synth = d.get("synthesis") or {}
        if ("log" in d) == bool(synth):
            raise ConfigError("give exactly one of 'log' or 'synthesis'")
        disc = d.get("discovery", {})
        enc = d.get("encoding", {})
        kinds = enc.get("kind", "SimpleTraceIndex")
        kinds = [kinds] if isinstance(kinds, str) else kinds
        pred = d.get("predictor", {})
        grid = DEFAULT_GRID
        if "grid" in pred:
            g = pred["grid"]
            grid = tuple(Hyperparams(n, depth, leaf, sub)
                         for n in g.get("n_trees", [50]) for depth in g.get("max_depth", [8])
                         for leaf in g.get("min_leaf", [1]) for sub in g.get("feature_subsample", [0.6]))
        exp = d.get("experiment", {})
        ga = GAConfig.from_dict(d.get("ga", {}))
        cfg = cls(
            dataset=str(d.get("dataset", "dataset")),
            log_path=path("log"),
            synthesis_path=path("spec", synth) if synth else None,
            synthesis_seed=int(synth.get("seed", 0)),
            labeling=parse_constraint(d["labeling"]),
            model_path=path("model"),
            support=float(disc.get("support", 0.9)),
            count_vacuous=bool(disc.get("count_vacuous", False)),
            kinds=tuple(EncodingKind(k) for k in kinds),
            prefix_lengths=tuple(int(p) for p in enc.get("prefix_lengths", [5])),
            ratios=tuple(float(r) for r in d.get("split", (0.7, 0.1, 0.2))),
            predictor_path=path("path", pred),
            grid=grid,
            ga=ga,
            methods=tuple(Mode(m) for m in exp.get("methods", [m.value for m in Mode])),
            k_values=tuple(int(k) for k in exp.get("k_values", [5, 10, 15, 20])),
            seeds=tuple(int(s) for s in exp.get("seeds", [0])),
            sample_size=int(exp.get("sample_size", 15)),
            seed=int(d.get("seed", 0)),
            group_by=tuple(exp.get("group_by", ["method", "k"])),
        )
        if not (cfg.kinds and cfg.prefix_lengths and cfg.methods and cfg.k_values and cfg.seeds and cfg.grid):
            raise ConfigError("every experiment grid dimension must be non-empty")
        if len(cfg.ratios) != 3:
            raise ConfigError("split needs three ratios")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> PipelineConfig:
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read pipeline config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: pipeline config must be a JSON object")
        return cls.from_dict(data, path.parent)

    def load_event_log(self) -> EventLog:
        if self.synthesis_path is not None:
            return synthesize_log(SynthesisSpec.load(self.synthesis_path), self.synthesis_seed)
        return load_log(self.log_path)

    def background_model(self, log_: EventLog) -> DeclareModel:
        if self.model_path is not None:
            return load_model(self.model_path)
        return discover_background(log_, self.support, self.count_vacuous, self.ratios[0])


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    dataset: str
    encoding: str
    prefix_length: int
    method: str
    k: int
    seed: int
    query_index: int

    @property
    def cell_id(self) -> str:
        return "|".join(str(v) for v in (self.dataset, self.encoding, self.prefix_length, self.method, self.k,
                                          self.query_index))

    @property
    def key(self) -> tuple:
        return (self.dataset, self.encoding, self.prefix_length, self.k, self.method, self.seed,
                self.query_index)

    def row(self, report=None, error: str = "") -> BenchmarkRow:
        return BenchmarkRow(self.dataset, self.encoding, self.prefix_length, self.k, self.method, self.seed,
                            self.query_index, report, error)


@dataclass(frozen=True)
class BenchOutputs:
    rows_path: Path
    aggregate_path: Path
    plot_path: Path
    new_rows: int
    rows: list[BenchmarkRow]


# state shared with worker processes, set once per (encoding, prefix length) block
_WORKER: dict = {}


def _init_worker(state: dict) -> None:
    _WORKER.clear()
    _WORKER.update(state)


def execute_cell(cell: Cell, state: dict) -> tuple[BenchmarkRow, CounterfactualSet | None]:
    """Run and score one cell; failures become a row with the error message."""
    try:
        x = state["test_vectors"][cell.query_index]
        cfg = replace(state["ga"], mode=Mode(cell.method), k=cell.k, seed=cell_seed(cell.seed, cell.cell_id))
        cfs = explain(x, state["predictor"], state["reference"], state["model"], cfg)
        report = evaluate_set(cfs, state["model"], state["reference"], state["predictor"].schema,
                              cfg.normalize_distance)
        return cell.row(report), cfs
    except Exception as exc:  # recorded per row, the grid goes on
        return cell.row(error=f"{type(exc).__name__}: {exc}"), None


def _run_cell(cell: Cell) -> BenchmarkRow:
    return execute_cell(cell, _WORKER)[0]


def prepare_block(cfg: PipelineConfig, log_: EventLog, model: DeclareModel, kind: EncodingKind,
                  prefix_length: int, output_dir: Path) -> dict:
    """Data, predictor and GA template shared by all cells of one encoding/prefix block."""
    data = prepare(log_, cfg.labeling, model, kind, prefix_length, cfg.ratios)
    if cfg.predictor_path is not None:
        predictor = RandomForestModel.load(cfg.predictor_path)
        if predictor.schema != data.schema:
            raise ConfigError(f"{cfg.predictor_path}: predictor schema does not match the prepared data")
    else:
        cache = Path(output_dir) / f"predictor_{kind.value}_{prefix_length}.json"
        if cache.exists():
            predictor = RandomForestModel.load(cache)
        else:
            predictor, _ = fit_predictor(data, cfg.grid, cfg.seed, {
                "labeling": str(cfg.labeling), "prefix_length": prefix_length, "split": list(cfg.ratios)})
            predictor.save(cache)
    return {"predictor": predictor, "reference": data.train_vectors, "test_vectors": data.test_vectors,
            "model": model, "ga": cfg.ga, "data": data}


def bench_cells(cfg: PipelineConfig, kind: EncodingKind, prefix_length: int, n_test: int) -> Iterator[Cell]:
    for seed in cfg.seeds:
        queries = sample_queries(n_test, cfg.sample_size, seed)
        for method in cfg.methods:
            for k in cfg.k_values:
                for q in queries:
                    yield Cell(cfg.dataset, kind.value, prefix_length, method.value, k, seed, q)


def run_bench(cfg: PipelineConfig, output_dir: str | Path, force: bool = False, jobs: int = 1,
              progress: Callable[[str], None] | None = None) -> BenchOutputs:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    rows_path = output_dir / "rows.csv"
    existing: list[BenchmarkRow] = []
    if rows_path.exists() and not force:
        existing = read_rows(rows_path)
    elif rows_path.exists():
        rows_path.unlink()
    done = {r.cell_key for r in existing}

    log_ = cfg.load_event_log()
    model = cfg.background_model(log_)
    new_rows: list[BenchmarkRow] = []
    for kind in cfg.kinds:
        for prefix_length in cfg.prefix_lengths:
            try:
                state = prepare_block(cfg, log_, model, kind, prefix_length, output_dir)
                n_test = len(state["test_vectors"])
                error = ""
            except DeclcfError as exc:
                state, n_test, error = None, 0, f"{type(exc).__name__}: {exc}"
            if state is None:
                # without test data the query sample is unknown; one failed row per method/k/seed
                cells = [Cell(cfg.dataset, kind.value, prefix_length, m.value, k, s, -1)
                         for s in cfg.seeds for m in cfg.methods for k in cfg.k_values]
                rows = [c.row(error=error) for c in cells if c.key not in done]
                write_rows(rows, rows_path, append=True)
                new_rows.extend(rows)
                continue
            todo = [c for c in bench_cells(cfg, kind, prefix_length, n_test) if c.key not in done]
            if progress:
                progress(f"{kind.value} prefix {prefix_length}: {len(todo)} cells")
            for row in _execute(todo, state, jobs):
                write_rows([row], rows_path, append=True)
                new_rows.append(row)

    all_rows = existing + new_rows
    aggregate_path = output_dir / "aggregate.csv"
    plot_path = output_dir / "plot_data.json"
    ok = [r for r in all_rows if r.report is not None]
    if ok:
        write_aggregate(aggregate(ok, cfg.group_by), cfg.group_by, aggregate_path)
    write_plot_data(ok, cfg.group_by, plot_path)
    return BenchOutputs(rows_path, aggregate_path, plot_path, len(new_rows), all_rows)


def _execute(cells: list[Cell], state: dict, jobs: int) -> Iterator[BenchmarkRow]:
    if jobs <= 1 or len(cells) <= 1:
        _init_worker(state)
        for c in cells:
            yield _run_cell(c)
        return
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(state,)) as pool:
        yield from pool.map(_run_cell, cells)

"""Quality metrics for counterfactual sets and their aggregation across runs."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .declare import DeclareModel, satisfied_set, trace_fitness
from .encoding import EncodingSchema, decoded_activities
from .ga.engine import CounterfactualSet
from .ga.objectives import distance_rows

SCHEMA_VERSION = 1
METRICS = ("distance", "sparsity", "implausibility", "trace_fitness", "trace_fitness_raw",
           "diversity", "hit_rate", "runtime_seconds")


@dataclass(frozen=True)
class MetricsReport:
    """Per-set metrics; ``None`` marks a metric that is undefined for the set."""

    distance: float | None
    sparsity: float | None
    implausibility: float | None
    trace_fitness: float | None
    trace_fitness_raw: float | None
    diversity: float | None
    hit_rate: float
    runtime_seconds: float


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def evaluate_set(cfs: CounterfactualSet, model: DeclareModel | None, reference,
                 schema: EncodingSchema, normalize: bool = True) -> MetricsReport:
    """Recompute every metric from the genotypes, ignoring cached objectives."""
    genotypes = [m.genotype for m in cfs.members]
    hit = len(genotypes) / cfs.k
    if not genotypes:
        return MetricsReport(None, None, None, None, None, None, hit, cfs.runtime_seconds)

    M = schema.to_matrix(genotypes)
    x_row = schema.to_matrix([cfs.query])[0]
    distance = distance_rows(schema, x_row, M, normalize).tolist()
    sparsity = [sum(1 for a, b in zip(cfs.query, g) if a != b) for g in genotypes]
    ref = schema.to_matrix([tuple(r) for r in reference])
    implausibility = [float(distance_rows(schema, row, ref, normalize).min()) for row in M]

    preserved, raw = None, None
    if model:
        kept = satisfied_set(model, decoded_activities(schema, cfs.query))
        decodes = [decoded_activities(schema, g) for g in genotypes]
        raw = _mean([trace_fitness(model, d) for d in decodes])
        if kept:
            preserved = _mean([len(kept & satisfied_set(model, d)) / len(kept) for d in decodes])

    pairs = [float(distance_rows(schema, M[i], M[j:j + 1], normalize)[0])
             for i, j in itertools.combinations(range(len(M)), 2)]
    return MetricsReport(
        distance=_mean(distance),
        sparsity=_mean([float(s) for s in sparsity]),
        implausibility=_mean(implausibility),
        trace_fitness=preserved,
        trace_fitness_raw=raw,
        diversity=_mean(pairs),
        hit_rate=hit,
        runtime_seconds=cfs.runtime_seconds,
    )


@dataclass(frozen=True)
class BenchmarkRow:
    dataset: str
    encoding: str
    prefix_length: int
    k: int
    method: str
    seed: int
    query_index: int
    report: MetricsReport | None
    error: str = ""

    def to_record(self) -> dict:
        rec = {"schema_version": SCHEMA_VERSION}
        rec.update({f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("report", "error")})
        rep = asdict(self.report) if self.report is not None else {}
        rec.update({m: rep.get(m) for m in METRICS})
        rec["error"] = self.error
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> BenchmarkRow:
        def num(v):
            return None if v in (None, "") else float(v)

        report = None
        if not rec.get("error"):
            report = MetricsReport(**{m: num(rec.get(m)) for m in METRICS})
        return cls(rec["dataset"], rec["encoding"], int(rec["prefix_length"]), int(rec["k"]),
                   rec["method"], int(rec["seed"]), int(rec["query_index"]), report, rec.get("error") or "")

    @property
    def cell_key(self) -> tuple:
        return (self.dataset, self.encoding, self.prefix_length, self.k, self.method, self.seed,
                self.query_index)


ROW_HEADER = ["schema_version", "dataset", "encoding", "prefix_length", "k", "method", "seed",
              "query_index", *METRICS, "error"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(rows: Iterable[BenchmarkRow], path: str | Path, append: bool = False) -> None:
    path = Path(path)
    new_file = not append or not path.exists() or path.stat().st_size == 0
    with path.open("a" if append else "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new_file:
            w.writerow(ROW_HEADER)
        for row in rows:
            rec = row.to_record()
            w.writerow([_cell(rec[h]) for h in ROW_HEADER])


def read_rows(path: str | Path) -> list[BenchmarkRow]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [BenchmarkRow.from_record(r) for r in csv.DictReader(fh)]


def _summary(values: list[float]) -> dict[str, float] | None:
    if not values:
        return None
    a = np.asarray(values, dtype=float)
    q1, median, q3 = np.percentile(a, [25, 50, 75])
    return {"mean": float(a.mean()), "median": float(median), "q1": float(q1), "q3": float(q3),
            "n": len(values)}


def _groups(rows: Sequence[BenchmarkRow], group_by: Sequence[str]) -> dict[tuple, list[BenchmarkRow]]:
    out: dict[tuple, list[BenchmarkRow]] = {}
    for row in rows:
        if row.report is None:
            continue
        out.setdefault(tuple(getattr(row, g) for g in group_by), []).append(row)
    return out


def aggregate(rows: Sequence[BenchmarkRow], group_by: Sequence[str] = ("method", "k")) -> list[dict]:
    """Mean, median and quartiles of every metric per group; failed rows are skipped.

    A metric that is absent in every row of a group is reported as ``None``.
    """
    if not rows:
        raise ValueError("cannot aggregate an empty set of rows")
    table = []
    for key, members in sorted(_groups(rows, group_by).items(), key=lambda kv: [str(v) for v in kv[0]]):
        entry = dict(zip(group_by, key))
        entry["rows"] = len(members)
        for m in METRICS:
            entry[m] = _summary([getattr(r.report, m) for r in members if getattr(r.report, m) is not None])
        table.append(entry)
    return table


def write_aggregate(table: list[dict], group_by: Sequence[str], path: str | Path) -> None:
    header = ["schema_version", *group_by, "rows"]
    for m in METRICS:
        header += [f"{m}_{s}" for s in ("mean", "median", "q1", "q3")]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for entry in table:
            line = [SCHEMA_VERSION, *(entry[g] for g in group_by), entry["rows"]]
            for m in METRICS:
                s = entry[m]
                line += [_cell(None if s is None else s[stat]) for stat in ("mean", "median", "q1", "q3")]
            w.writerow([_cell(v) for v in line])


def plot_data(rows: Sequence[BenchmarkRow], group_by: Sequence[str] = ("method", "k")) -> dict:
    """Raw per-group metric distributions for external plotting."""
    groups = []
    for key, members in sorted(_groups(rows, group_by).items(), key=lambda kv: [str(v) for v in kv[0]]):
        groups.append({
            "key": dict(zip(group_by, key)),
            "metrics": {m: [getattr(r.report, m) for r in members if getattr(r.report, m) is not None]
                        for m in METRICS},
        })
    return {"schema_version": SCHEMA_VERSION, "group_by": list(group_by), "groups": groups}


def write_plot_data(rows: Sequence[BenchmarkRow], group_by: Sequence[str], path: str | Path) -> None:
    Path(path).write_text(json.dumps(plot_data(rows, group_by), indent=2) + "\n", encoding="utf-8")

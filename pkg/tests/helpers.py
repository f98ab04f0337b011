from __future__ import annotations

from typing import Callable

import numpy as np

from declcf.encoding import UNK, Categorical, EncodingSchema
from declcf.predictor import Predictor


def row_to_vector(schema: EncodingSchema, row: np.ndarray) -> tuple:
    out = []
    for dom, v in zip(schema.domains, row):
        if isinstance(dom, Categorical):
            out.append(dom.values[int(v)] if v >= 0 else UNK)
        else:
            out.append(float(v))
    return tuple(out)


class RowPredictor(Predictor):
    """Black box defined by a function of one decoded feature vector."""

    def __init__(self, schema: EncodingSchema, fn: Callable[[tuple], float]):
        self.schema = schema
        self.fn = fn
        self.calls = 0

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        self.calls += len(X)
        return np.array([self.fn(row_to_vector(self.schema, row)) for row in X], dtype=float)


class ConstantPredictor(Predictor):
    def __init__(self, schema: EncodingSchema, p: float):
        self.schema = schema
        self.p = p

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        return np.full(len(X), self.p)


def small_spec(path, n_traces: int = 200) -> "Path":
    """Copy of the loan synthesis spec with fewer traces."""
    import json
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    spec = json.loads((root / "loan_synthesis.json").read_text())
    spec["n_traces"] = n_traces
    out = Path(path) / "spec.json"
    out.write_text(json.dumps(spec))
    (Path(path) / "background.decl").write_text((root / "loan_background.decl").read_text())
    return out


def small_bench_config(path, **overrides) -> "Path":
    """A fast benchmark config writing into ``path``."""
    import json
    from pathlib import Path

    small_spec(path)
    cfg = {
        "dataset": "tiny-loan",
        "synthesis": {"spec": "spec.json", "seed": 3},
        "labeling": "Existence1[Approve application]",
        "model": "background.decl",
        "encoding": {"kind": "SimpleTraceIndex", "prefix_lengths": [5]},
        "split": [0.7, 0.1, 0.2],
        "predictor": {"grid": {"n_trees": [10], "max_depth": [6], "min_leaf": [1], "feature_subsample": [0.6]}},
        "ga": {"max_generations": 8, "stall_generations": 4},
        "experiment": {"methods": ["BOSO", "AOMO"], "k_values": [3], "seeds": [0, 1], "sample_size": 1},
        "seed": 0,
    }
    cfg.update(overrides)
    out = Path(path) / "bench.json"
    out.write_text(json.dumps(cfg))
    return out

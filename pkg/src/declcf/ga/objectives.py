"""The five counterfactual objectives, all oriented for minimization.

Distances work on the numeric matrix view of feature vectors
(:meth:`EncodingSchema.to_matrix`). Numeric features are divided by their
training range unless ``normalize=False``; categorical features contribute an
indicator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..declare import DeclareModel, satisfied_set
from ..encoding import EncodingSchema, decoded_activities
from ..errors import ConfigError


@dataclass(frozen=True)
class ObjectiveVector:
    o1: float
    o2: float
    o3: int
    o4: float
    o5: float | None = None

    def as_tuple(self) -> tuple[float, ...]:
        base = (self.o1, self.o2, float(self.o3), self.o4)
        return base if self.o5 is None else base + (self.o5,)


def distance_rows(schema: EncodingSchema, x_row: np.ndarray, rows: np.ndarray,
                  normalize: bool = True) -> np.ndarray:
    """Mean per-feature distance between ``x_row`` and every row of ``rows``.

    The single implementation behind o2, o4, diversity and neighbour search, so
    batch and one-off evaluations agree bit for bit.
    """
    rows = np.atleast_2d(rows)
    numeric = schema.numeric_mask
    diff = np.abs(rows - x_row)
    per_feature = np.where(numeric, diff, (diff != 0).astype(float))
    if normalize:
        spans = schema.numeric_spans
        scale = np.where(numeric & (spans > 0), spans, 1.0)
        per_feature = np.where(numeric & (spans == 0), 0.0, per_feature / scale)
    return per_feature.sum(axis=1) / schema.n_features


def objective_validity(proba: float, predicted: int, desired: int) -> float:
    """o1: 0 when the prediction is the desired label, else 1 - P(desired)."""
    if predicted == desired:
        return 0.0
    proba_desired = proba if desired == 1 else 1.0 - proba
    return 1.0 - proba_desired


def objective_distance(x: Sequence, c: Sequence, schema: EncodingSchema, normalize: bool = True) -> float:
    m = schema.to_matrix([x, c])
    return float(distance_rows(schema, m[0], m[1:], normalize)[0])


def objective_sparsity(x: Sequence, c: Sequence) -> int:
    if len(x) != len(c):
        raise ValueError("vectors differ in length")
    return sum(1 for a, b in zip(x, c) if a != b)


def objective_implausibility(c: Sequence, reference, schema: EncodingSchema,
                             normalize: bool = True) -> float:
    """o4: distance from ``c`` to its nearest reference vector."""
    ref = reference if isinstance(reference, np.ndarray) else schema.to_matrix(reference)
    if len(ref) == 0:
        raise ValueError("implausibility needs a non-empty reference population")
    c_row = schema.to_matrix([c])[0]
    return float(distance_rows(schema, c_row, ref, normalize).min())


def objective_bk(x: Sequence, c: Sequence, model: DeclareModel, schema: EncodingSchema) -> float:
    """o5: share of model constraints that hold on dec(x) but not on dec(c)."""
    if not model:
        raise ConfigError("the background-knowledge objective needs a non-empty Declare model")
    kept = satisfied_set(model, decoded_activities(schema, x))
    return bk_gap(kept, c, model, schema)


def bk_gap(query_satisfied: frozenset, c: Sequence, model: DeclareModel, schema: EncodingSchema) -> float:
    if not query_satisfied:
        return 0.0
    now = satisfied_set(model, decoded_activities(schema, c))
    return len(query_satisfied - now) / len(model)


def weighted_fitness(obj: ObjectiveVector, alpha: float, beta: float, gamma: float,
                     delta: float | None = None) -> float:
    value = obj.o1 + alpha * obj.o2 + beta * obj.o3 + gamma * obj.o4
    if delta is not None:
        if obj.o5 is None:
            raise ConfigError("adapted fitness needs the background-knowledge objective")
        value += delta * obj.o5
    return value

from __future__ import annotations

import pytest

from declcf.declare import DeclareConstraint, DeclareModel, Template
from declcf.encoding import PAD, Categorical, EncodingKind, EncodingSchema, Numeric
from declcf.errors import ConfigError
from declcf.ga.objectives import (ObjectiveVector, objective_bk, objective_distance, objective_implausibility,
                                  objective_sparsity, objective_validity, weighted_fitness)
from oracles import mixed_distance


def test_validity():
    assert objective_validity(0.9, 1, 1) == 0.0
    assert objective_validity(0.3, 0, 1) == pytest.approx(0.7)
    assert objective_validity(0.49, 0, 1) == pytest.approx(0.51)
    # desired negative: P(desired) = 1 - proba
    assert objective_validity(0.8, 1, 0) == pytest.approx(0.8)


def numeric_only_schema():
    return EncodingSchema(EncodingKind.SimpleTraceIndex, 0, (("amount", Numeric(0, 100)),), Categorical((PAD,)))


def test_distance_examples():
    s = numeric_only_schema()
    assert objective_distance((20,), (70,), s) == 0.5
    assert objective_distance((20,), (20,), s) == 0.0
    assert objective_distance((20,), (70,), s, normalize=False) == 50.0
    two = EncodingSchema(EncodingKind.SimpleTraceIndex, 1, (("amount", Numeric(0, 100)),), Categorical((PAD, "A", "B")))
    assert objective_distance((40, "A"), (40, "B"), two) == 0.5


def test_zero_range_numeric_contributes_nothing():
    s = EncodingSchema(EncodingKind.SimpleTraceIndex, 1, (("flat", Numeric(5, 5)),), Categorical((PAD, "A")))
    assert objective_distance((5, "A"), (9, "A"), s) == 0.0


def test_distance_matches_oracle(loan_schema, loan_vectors):
    ranges = [(d.low, d.high) if isinstance(d, Numeric) else None for d in loan_schema.domains]
    for x in loan_vectors:
        for c in loan_vectors:
            assert objective_distance(x, c, loan_schema) == pytest.approx(mixed_distance(x, c, ranges), abs=1e-15)


def test_sparsity():
    assert objective_sparsity((1, "A"), (1, "A")) == 0
    assert objective_sparsity((1, "A"), (2, "A")) == 1
    assert objective_sparsity((1, "A"), (2, "B")) == 2


def test_implausibility(loan_schema, loan_vectors):
    ranges = [(d.low, d.high) if isinstance(d, Numeric) else None for d in loan_schema.domains]
    c = loan_vectors[0][:2] + (20000.0, 600) + loan_vectors[1][4:]
    expected = min(mixed_distance(c, r, ranges) for r in loan_vectors)
    assert objective_implausibility(c, loan_vectors, loan_schema) == pytest.approx(expected, abs=1e-15)
    assert objective_implausibility(loan_vectors[2], loan_vectors, loan_schema) == 0.0
    assert objective_implausibility(c, [loan_vectors[0]], loan_schema) == objective_distance(loan_vectors[0], c, loan_schema)
    with pytest.raises(ValueError):
        objective_implausibility(c, [], loan_schema)


def test_background_knowledge_gap():
    schema = EncodingSchema(EncodingKind.SimpleIndex, 3, (), Categorical((PAD, "a", "b", "c")))
    model = DeclareModel((DeclareConstraint.of(Template.Init, "a"),
                          DeclareConstraint.of(Template.ChainResponse, "a", "b")))
    x = ("a", "b", "c")
    assert objective_bk(x, x, model, schema) == 0.0
    assert objective_bk(x, ("a", "c", "b"), model, schema) == 0.5
    # x satisfies nothing: no constraint to preserve
    assert objective_bk(("b", "a", "c"), ("c", "c", "c"), model, schema) == 0.0
    with pytest.raises(ConfigError):
        objective_bk(x, x, DeclareModel(), schema)


def test_weighted_fitness():
    assert weighted_fitness(ObjectiveVector(0, 0, 0, 0), 0.5, 0.5, 0.5) == 0
    o = ObjectiveVector(0.0, 0.4, 2, 0.1)
    assert weighted_fitness(o, 0.5, 0.5, 0.5) == pytest.approx(1.25)
    assert weighted_fitness(ObjectiveVector(0.0, 0.4, 2, 0.1, 0.5), 0.5, 0.5, 0.5, 0.5) == pytest.approx(1.5)
    with pytest.raises(ConfigError):
        weighted_fitness(o, 0.5, 0.5, 0.5, 0.5)

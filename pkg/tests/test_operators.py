from __future__ import annotations

import warnings

import numpy as np
import pytest

from declcf.declare import ActivationTargetSets, activation_target_sets
from declcf.encoding import PAD, Categorical, EncodingKind, EncodingSchema, Numeric
from declcf.ga.objectives import objective_distance
from declcf.ga.operators import (MutationWarning, crossover_adapted, crossover_baseline, init_population,
                                 mutate_adapted, mutate_baseline, random_individual)

A_BOB = {"Create application", "Receive reminder"}


def pads_are_trailing(schema, v) -> bool:
    cf = [v[i] for i in schema.cf_indexes]
    if cf[0] == PAD:
        return False
    first = cf.index(PAD) if PAD in cf else len(cf)
    return all(a == PAD for a in cf[first:])


def test_bob_sets(bob_model):
    sets = activation_target_sets(bob_model)
    assert sets.activations == A_BOB
    assert sets.targets == {"Submit documents"}


def test_adapted_crossover_copies_locked_bob_slots(loan_schema, loan_vectors, bob_model):
    sets = activation_target_sets(bob_model)
    q = loan_vectors[0]
    rng = np.random.default_rng(0)
    for _ in range(200):
        p1, p2 = random_individual(loan_schema, rng), random_individual(loan_schema, rng)
        o = crossover_adapted(q, p1, p2, 0.5, sets, loan_schema, rng)
        # event 1, 2 and 4 hold Create application, Submit documents, Receive reminder
        assert (o[4], o[5], o[7]) == ("Create application", "Submit documents", "Receive reminder")


def test_adapted_crossover_falls_back_to_query(loan_schema, loan_vectors, bob_model):
    sets = activation_target_sets(bob_model)
    q = loan_vectors[0]
    p1 = q[:6] + ("Create application",) + q[7:]
    p2 = q[:6] + ("Receive reminder",) + q[7:]
    rng = np.random.default_rng(1)
    for _ in range(100):
        assert crossover_adapted(q, p1, p2, 0.5, sets, loan_schema, rng)[6] == q[6]


def test_adapted_crossover_static_genes_flow_from_both_parents(loan_schema, loan_vectors, bob_model):
    sets = activation_target_sets(bob_model)
    q, p1, p2 = loan_vectors
    rng = np.random.default_rng(2)
    seen = {crossover_adapted(q, p1, p2, 0.5, sets, loan_schema, rng)[2] for _ in range(100)}
    assert seen == {p1[2], p2[2]}


def test_baseline_crossover_edges():
    rng = np.random.default_rng(0)
    p1, p2 = (1, "A", "B"), (2, "B", "A")
    assert crossover_baseline(p1, p1, 0.5, rng) == p1
    assert crossover_baseline(p1, p2, 1.0, rng) == p1
    assert crossover_baseline(p1, p2, 0.0, rng) == p2


def test_baseline_mutation_edges(loan_schema, loan_vectors):
    rng = np.random.default_rng(0)
    v = loan_vectors[1]
    assert mutate_baseline(v, 0.0, loan_schema, rng) == v
    single = EncodingSchema(EncodingKind.SimpleTraceIndex, 1, (("x", Numeric(3, 3, True)),), Categorical((PAD, "A")))
    assert mutate_baseline((3, "A"), 1.0, single, rng) == (3, "A")
    a = mutate_baseline(v, 0.5, loan_schema, np.random.default_rng(7))
    b = mutate_baseline(v, 0.5, loan_schema, np.random.default_rng(7))
    assert a == b


def test_adapted_mutation_on_bob(loan_schema, loan_vectors, bob_model):
    sets = activation_target_sets(bob_model)
    q = loan_vectors[0]
    rng = np.random.default_rng(3)
    event5, scores = set(), set()
    for _ in range(2000):
        o = mutate_adapted(q, q, 0.5, sets, loan_schema, rng)
        event5.add(o[8])
        scores.add(o[3])
        assert o[5] == "Submit documents"
        assert pads_are_trailing(loan_schema, o)
    assert not event5 & A_BOB
    assert len(event5) > 1
    dom = loan_schema.domains[3]
    assert all(dom.low <= s <= dom.high and isinstance(s, int) for s in scores) and len(scores) > 1


def test_lock_off_allows_target_slot_to_change(loan_schema, loan_vectors, bob_model):
    sets = activation_target_sets(bob_model)
    q = loan_vectors[0]
    rng = np.random.default_rng(4)
    changed = {mutate_adapted(q, q, 1.0, sets, loan_schema, rng, lock_targets=False)[5] for _ in range(200)}
    assert changed - {"Submit documents"}
    assert not changed & A_BOB


def test_mutation_warns_when_every_activity_is_an_activation():
    schema = EncodingSchema(EncodingKind.SimpleIndex, 2, (), Categorical((PAD, "A")))
    sets = ActivationTargetSets(frozenset({"A"}), frozenset())
    with pytest.warns(MutationWarning):
        out = mutate_adapted(("A", "A"), ("B", "B"), 1.0, sets, schema, np.random.default_rng(0))
    assert out[0] == "A"


def test_random_individuals_are_full_length(loan_schema):
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = random_individual(loan_schema, rng)
        assert PAD not in v and loan_schema.conforms(v)


def test_init_population(loan_schema, loan_vectors):
    x = loan_vectors[0]
    near = init_population(x, loan_vectors, 2, loan_schema, np.random.default_rng(0), fraction_neighbors=1.0)
    by_distance = sorted(loan_vectors, key=lambda v: objective_distance(x, v, loan_schema))
    assert near == by_distance[:2]
    rand = init_population(x, loan_vectors, 4, loan_schema, np.random.default_rng(0), fraction_neighbors=0.0)
    assert not set(rand) & set(loan_vectors)
    a = init_population(x, loan_vectors, 6, loan_schema, np.random.default_rng(5))
    b = init_population(x, loan_vectors, 6, loan_schema, np.random.default_rng(5))
    assert a == b and a[:3] == by_distance[:3]


def test_mutation_never_creates_interior_pads():
    schema = EncodingSchema(EncodingKind.SimpleIndex, 4, (), Categorical((PAD, "A", "B")))
    rng = np.random.default_rng(0)
    v = ("A", "B", PAD, PAD)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for _ in range(3000):
            v = mutate_baseline(v, 0.5, schema, rng)
            assert pads_are_trailing(schema, v)

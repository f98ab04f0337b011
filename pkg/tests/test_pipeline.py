from __future__ import annotations

import json

import pytest

from declcf.declare import DeclareModel, log_fitness, parse_constraint
from declcf.errors import ConfigError, InputError
from declcf.evaluation import read_rows
from declcf.pipeline import (Cell, PipelineConfig, cell_seed, discover_background, prepare, run_bench,
                             sample_queries)
from declcf.synthesis import SynthesisSpec, synthesize_log
from helpers import small_bench_config, small_spec


def test_cell_seed_is_stable_and_distinct():
    a = Cell("d", "SimpleIndex", 5, "BOSO", 5, 0, 3)
    b = Cell("d", "SimpleIndex", 5, "BOSO", 10, 0, 3)
    assert cell_seed(0, a.cell_id) == cell_seed(0, a.cell_id)
    assert len({cell_seed(0, a.cell_id), cell_seed(1, a.cell_id), cell_seed(0, b.cell_id)}) == 3
    assert 0 <= cell_seed(123, a.cell_id) < 2 ** 63


def test_sample_queries():
    q = sample_queries(40, 15, seed=2)
    assert q == sorted(set(q)) and len(q) == 15 and all(0 <= i < 40 for i in q)
    assert q == sample_queries(40, 15, seed=2)
    assert sample_queries(4, 15, seed=2) == [0, 1, 2, 3]


def test_prepare_splits_in_time_order(tmp_path):
    log_ = synthesize_log(SynthesisSpec.load(small_spec(tmp_path, 120)), 1)
    data = prepare(log_, parse_constraint("Existence1[Approve application]"), DeclareModel(), "SimpleIndex", 4)
    starts = [p.prefix.start for p in data.train + data.valid + data.test]
    assert starts == sorted(starts)
    assert (len(data.train), len(data.valid), len(data.test)) == (84, 12, 24)
    assert data.schema.n_static == 0 and len(data.test_vectors[0]) == 4


def test_background_discovery_keeps_generating_constraints(tmp_path):
    log_ = synthesize_log(SynthesisSpec.load(small_spec(tmp_path, 120)), 1)
    model = discover_background(log_, 1.0, True, 0.7)
    names = {str(c) for c in model}
    assert {"Init[Create application]", "Precedence[Submit documents, Review application]"} <= names
    assert log_fitness(model, log_) == 1.0


def test_config_validation(tmp_path):
    base = json.loads(small_bench_config(tmp_path).read_text())
    PipelineConfig.from_dict(base, tmp_path)
    for bad in ({"log": "x.csv"}, {"split": [0.5, 0.5]}, {"experiment": {"methods": ["XOXO"]}},
                {"labeling": "Nope[a]"}, {"ga": {"k": 0}}, {"experiment": {"k_values": []}}):
        with pytest.raises(InputError):
            PipelineConfig.from_dict({**base, **bad}, tmp_path)
    (tmp_path / "broken.json").write_text("[1,")
    with pytest.raises(ConfigError):
        PipelineConfig.load(tmp_path / "broken.json")


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("bench")
    out = run_bench(PipelineConfig.load(small_bench_config(d)), d / "out")
    return d, out


def test_bench_writes_one_row_per_cell(bench_dir):
    d, out = bench_dir
    assert out.new_rows == 4
    rows = read_rows(out.rows_path)
    assert sorted((r.method, r.seed) for r in rows) == [("AOMO", 0), ("AOMO", 1), ("BOSO", 0), ("BOSO", 1)]
    assert all(not r.error for r in rows)
    assert out.aggregate_path.exists() and json.loads(out.plot_path.read_text())["groups"]
    assert (d / "out" / "predictor_SimpleTraceIndex_5.json").exists()


def test_bench_resumes_without_recomputing(bench_dir):
    d, out = bench_dir
    again = run_bench(PipelineConfig.load(d / "bench.json"), d / "out")
    assert again.new_rows == 0 and len(again.rows) == 4
    forced = run_bench(PipelineConfig.load(d / "bench.json"), d / "out", force=True)
    assert forced.new_rows == 4 and len(read_rows(forced.rows_path)) == 4


def test_bench_is_deterministic(bench_dir, tmp_path):
    d, out = bench_dir
    other = run_bench(PipelineConfig.load(d / "bench.json"), tmp_path / "again")
    strip = [r.report.__class__(**{**r.report.__dict__, "runtime_seconds": 0.0}) for r in out.rows]
    strip2 = [r.report.__class__(**{**r.report.__dict__, "runtime_seconds": 0.0}) for r in other.rows]
    assert strip == strip2


def test_corrupt_predictor_is_recorded_per_row(tmp_path):
    (tmp_path / "bad_predictor.json").write_text("{truncated")
    cfg_path = small_bench_config(tmp_path, predictor={"path": "bad_predictor.json"})
    out = run_bench(PipelineConfig.load(cfg_path), tmp_path / "out")
    assert out.new_rows == 4
    assert all(r.error.startswith("ParseError") and r.query_index == -1 for r in out.rows)
    assert not out.aggregate_path.exists()

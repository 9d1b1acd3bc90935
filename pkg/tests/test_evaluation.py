import json
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynrec.config import Config
from dynrec.engine import Engine
from dynrec.evaluation import (
    EvalReport,
    EvaluationError,
    LatencyStats,
    Metrics,
    ReportRow,
    emit_latency,
    emit_report,
    kfold_split,
    measure_latency,
    parse_report,
    precision_recall_f1,
    run_experiment,
)
from dynrec.ingest import Dataset, Interaction, ItemMeta


class TestKFold:
    def test_even(self):
        plan = kfold_split(10, 5, seed=1)
        assert [len(test) for _, test in plan.folds] == [2] * 5

    def test_too_few(self):
        with pytest.raises(ValueError):
            kfold_split(3, 5, seed=0)

    def test_k_at_least_two(self):
        with pytest.raises(ValueError):
            kfold_split(10, 1, seed=0)

    def test_uneven(self):
        plan = kfold_split(11, 5, seed=9)
        assert sorted(len(t) for _, t in plan.folds) == [2, 2, 2, 2, 3]
        assert sorted(np.concatenate([t for _, t in plan.folds]).tolist()) == list(range(11))

    def test_deterministic(self):
        a, b = kfold_split(50, 5, 3), kfold_split(50, 5, 3)
        assert all((x[1] == y[1]).all() for x, y in zip(a.folds, b.folds))

    @given(st.integers(2, 200), st.integers(2, 10), st.integers(0, 2**32 - 1))
    def test_partition(self, n, k, seed):
        if n < k:
            return
        plan = kfold_split(n, k, seed)
        tests = [set(t.tolist()) for _, t in plan.folds]
        assert sum(map(len, tests)) == n
        assert set().union(*tests) == set(range(n))
        sizes = [len(t) for t in tests]
        assert max(sizes) - min(sizes) <= 1
        for train, test in plan.folds:
            assert set(train.tolist()) == set(range(n)) - set(test.tolist())


class TestMetrics:
    def test_identical(self):
        assert precision_recall_f1([1, 2, 3], {3, 2, 1}) == Metrics(1.0, 1.0, 1.0)

    def test_disjoint(self):
        assert precision_recall_f1([1, 2], {3}) == Metrics(0.0, 0.0, 0.0)

    def test_hand(self):
        m = precision_recall_f1([1, 2, 3, 4, 5], {1, 2, 3, 6, 7, 8})
        assert m.precision == pytest.approx(0.6)
        assert m.recall == pytest.approx(0.5)
        assert m.f1 == pytest.approx(6 / 11)

    def test_empty_recommendation(self):
        assert precision_recall_f1([], {1}) == Metrics(0.0, 0.0, 0.0)

    def test_empty_relevant(self):
        with pytest.raises(ValueError):
            precision_recall_f1([1], set())

    def test_duplicates(self):
        with pytest.raises(ValueError):
            precision_recall_f1([1, 1], {1})

    @given(st.lists(st.integers(0, 20), unique=True, max_size=10), st.sets(st.integers(0, 20), min_size=1))
    def test_bounds(self, rec, rel):
        m = precision_recall_f1(rec, rel)
        assert 0 <= m.precision <= 1 and 0 <= m.recall <= 1 and 0 <= m.f1 <= 1
        assert m.f1 <= max(m.precision, m.recall) + 1e-15
        assert (m.f1 == 0) == (m.precision == 0 or m.recall == 0)


class TestLatency:
    def test_counts(self):
        stats = measure_latency(lambda u: None, list(range(10)), warmup=3)
        assert stats.n_calls == 7

    def test_p95_at_least_median(self):
        # fake clock: call j takes durations[j] seconds
        durations = [0.004, 0.001, 0.010, 0.002, 0.003, 0.050, 0.001, 0.002]
        ticks = iter(np.cumsum([x for d in durations for x in (0.0, d)]).tolist())
        stats = measure_latency(lambda u: None, list(range(8)), clock=lambda: next(ticks))
        ms = np.array(durations) * 1000
        assert stats.mean_ms == pytest.approx(ms.mean())
        assert stats.p95_ms == pytest.approx(np.percentile(ms, 95))
        assert stats.p95_ms >= np.median(ms)

    def test_fixed_delay_stub(self):
        stats = measure_latency(lambda u: time.sleep(0.005), list(range(12)), warmup=2)
        assert stats.mean_ms == pytest.approx(5.0, abs=3.0)
        assert stats.mean_ms >= 5.0

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            measure_latency(lambda u: None, [])
        with pytest.raises(ValueError):
            measure_latency(lambda u: None, [1, 2], warmup=2)


ROW = ReportRow("hybrid", "movielens", Metrics(0.768, 0.703, 0.734), LatencyStats(140.0, 180.0, 20))


class TestEmit:
    def test_empty_csv(self):
        assert emit_report(EvalReport(), "csv") == b"algorithm,dataset,precision,recall,f1,response_time_ms\n"

    def test_table_row(self):
        lines = emit_report(EvalReport((ROW,)), "csv").decode().splitlines()
        assert lines[1] == "hybrid,movielens,0.768,0.703,0.734,140.000"

    def test_row_without_latency(self):
        row = ReportRow("cf", "movielens", Metrics(0.5, 0.25, 1 / 3))
        assert emit_report(EvalReport((row,))).decode().splitlines()[1] == "cf,movielens,0.500,0.250,0.333,"

    def test_json_roundtrip(self):
        r = EvalReport((ROW, ReportRow("cf", "x", Metrics(0.1, 0.2, 2 * 0.02 / 0.3))), {"eval.k": 10}, 42)
        assert parse_report(emit_report(r, "json")) == r
        obj = json.loads(emit_report(r, "json"))
        assert obj["rows"][0]["response_time_ms"] == 140.0
        assert obj["config"] == {"eval.k": 10}

    def test_latency_csv(self):
        assert emit_latency(EvalReport((ROW,))).decode().splitlines() == [
            "algorithm,dataset,mean_ms,p95_ms,n_calls",
            "hybrid,movielens,140.000,180.000,20",
        ]


def _genre_fixture():
    cat = {i: ItemMeta(i, f"d{i}", ("drama",)) for i in range(1, 11)}
    cat.update({i: ItemMeta(i, f"c{i}", ("comedy",)) for i in range(11, 21)})
    train, test = [], []
    t = 1_000
    for i in range(1, 9):
        train.append(Interaction(1, i, "rating", t, 5))
        t += 10
    test += [Interaction(1, 9, "rating", t, 5), Interaction(1, 10, "rating", t + 1, 5)]
    rng = np.random.default_rng(0)
    for u in range(2, 8):
        for i in rng.choice(20, size=8, replace=False):
            train.append(Interaction(u, int(i) + 1, "rating", t, int(rng.integers(1, 6))))
    return cat, train, test


def test_single_genre_user_gets_content_recall():
    cat, train, test = _genre_fixture()
    engine = Engine(train, cat)
    rec = engine.content(1, 10).item_ids()
    m = precision_recall_f1(rec, {9, 10})
    assert m.recall > 0
    assert set(rec[:2]) == {9, 10}


class TestRunExperiment:
    def test_rows_and_determinism(self, ml_small):
        cfg = Config({"eval.folds": 3})
        a = run_experiment(ml_small, cfg)
        b = run_experiment(ml_small, cfg)
        assert [r.algorithm for r in a.rows] == ["content", "cf", "rules", "hybrid"]
        assert emit_report(a, "json") == emit_report(b, "json")
        assert all(0 <= r.metrics.f1 <= 1 for r in a.rows)
        assert a.config["eval.folds"] == 3

    def test_behavior_data(self, synthetic):
        r = run_experiment(synthetic, Config({"eval.folds": 2}))
        assert {row.dataset for row in r.rows} == {"synthetic"}

    def test_f1_is_harmonic_mean(self, ml_small):
        r = run_experiment(ml_small, Config({"eval.folds": 2, "eval.averaging": "micro"}))
        for row in r.rows:
            m = row.metrics
            if m.precision + m.recall > 0:
                assert m.f1 == pytest.approx(2 * m.precision * m.recall / (m.precision + m.recall))

    def test_latency(self, ml_small):
        r = run_experiment(ml_small, Config({"eval.folds": 2, "eval.latency_requests": 5}), with_latency=True)
        for row in r.rows:
            assert row.latency.n_calls == 5
            assert row.latency.p95_ms >= 0

    def test_no_eligible_users(self):
        xs = [Interaction(u, i, "rating", 0, 2) for u in range(1, 5) for i in range(1, 5)]
        with pytest.raises(EvaluationError, match="eligible"):
            run_experiment(Dataset(xs, {}), Config())

    def test_folds_precondition(self, ml_small):
        with pytest.raises(EvaluationError):
            run_experiment(ml_small, Config({"eval.folds": 1}))
        tiny = Dataset([Interaction(1, 1, "rating", 0, 5)], {})
        with pytest.raises(EvaluationError):
            run_experiment(tiny, Config())

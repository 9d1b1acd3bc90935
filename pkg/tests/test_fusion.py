import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynrec.algos import ScoredItem
from dynrec.fusion import (
    FusionWeights,
    RankedList,
    derive_weights,
    fuse,
    normalize_scores,
    ranked_to_csv,
)


def ranked(alg, pairs):
    return RankedList.from_items(alg, [ScoredItem(i, s) for i, s in pairs])


def scores(lst):
    return [(x.item_id, x.score) for x in lst]


class TestRankedList:
    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            RankedList("cf", (ScoredItem(1, 0.5), ScoredItem(1, 0.4)))

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            RankedList("cf", (ScoredItem(1, 0.1), ScoredItem(2, 0.4)))
        with pytest.raises(ValueError):
            RankedList("cf", (ScoredItem(2, 0.4), ScoredItem(1, 0.4)))


class TestNormalize:
    def test_min_max(self):
        out = normalize_scores(ranked("cf", [(1, 5), (2, 3), (3, 1)]))
        assert scores(out) == [(1, 1.0), (2, 0.5), (3, 0.0)]

    def test_single_item(self):
        assert scores(normalize_scores(ranked("cf", [(4, 3.7)]))) == [(4, 1.0)]

    def test_constant(self):
        assert [s for _, s in scores(normalize_scores(ranked("cf", [(1, 2), (2, 2)])))] == [1.0, 1.0]

    def test_unit_extremes_unchanged(self):
        lst = ranked("cf", [(1, 1.0), (2, 0.0)])
        assert normalize_scores(lst) == lst

    def test_empty(self):
        assert normalize_scores(RankedList("cf")) == RankedList("cf")


class TestFuse:
    L1 = ranked("content", [(1, 1.0), (2, 0.5)])
    L2 = ranked("cf", [(2, 1.0)])

    def test_hand_example(self):
        out = fuse([self.L1, self.L2], FusionWeights({"content": 0.5, "cf": 0.5}), 10)
        assert scores(out) == [(2, 0.75), (1, 0.5)]
        assert out.items[0].sources == ("cf", "content")

    def test_degenerate_weights(self):
        content = ranked("content", [(1, 1.0), (2, 0.6), (3, 0.2), (4, 0.0)])
        cf = ranked("cf", [(5, 1.0), (1, 0.3)])
        rules = ranked("rules", [(6, 1.0)])
        out = fuse([content, cf, rules], FusionWeights({"content": 1.0, "cf": 0.0, "rules": 0.0}), 3)
        assert scores(out) == scores(content)[:3]

    def test_identical_lists(self):
        base = [(3, 1.0), (1, 0.7), (2, 0.0)]
        lists = [ranked(a, base) for a in ("content", "cf", "rules")]
        for w in ({"content": 0.2, "cf": 0.5, "rules": 0.3}, {"content": 1.0}, {"cf": 0.9, "rules": 0.1}):
            assert scores(fuse(lists, FusionWeights(w), 10)) == base

    def test_absent_algorithm_mass_redistributed(self):
        w = FusionWeights({"content": 0.25, "cf": 0.25, "rules": 0.5})
        out = fuse([self.L1, self.L2], w, 10)
        assert scores(out) == scores(fuse([self.L1, self.L2], FusionWeights({"content": 0.5, "cf": 0.5}), 10))

    def test_duplicate_algorithm(self):
        with pytest.raises(ValueError):
            fuse([self.L1, self.L1], FusionWeights.uniform(), 5)

    def test_truncates(self):
        assert len(fuse([self.L1, self.L2], FusionWeights.uniform(), 1)) == 1


class TestDeriveWeights:
    def test_equal(self):
        w = derive_weights({"content": 0.4, "cf": 0.4, "rules": 0.4})
        assert all(v == pytest.approx(1 / 3) for v in w.weights.values())

    def test_all_zero(self):
        w = derive_weights({"content": 0.0, "cf": 0.0, "rules": 0.0})
        assert all(v == pytest.approx(1 / 3) for v in w.weights.values())

    def test_table_f1(self):
        w = derive_weights({"content": 0.671, "cf": 0.715, "rules": 0.642})
        assert w.get("content") == pytest.approx(0.3309, abs=1e-4)
        assert w.get("cf") == pytest.approx(0.3525, abs=1e-4)
        assert w.get("rules") == pytest.approx(0.3166, abs=1e-4)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            derive_weights({"cf": 1.2})

    @given(st.dictionaries(st.sampled_from(["content", "cf", "rules"]), st.floats(0, 1), min_size=1))
    def test_sums_to_one(self, f1):
        assert abs(sum(derive_weights(f1).weights.values()) - 1.0) <= 1e-12


class TestWeights:
    def test_must_sum_to_one(self):
        with pytest.raises(ValueError):
            FusionWeights({"content": 0.5, "cf": 0.6})

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            FusionWeights({"svd": 1.0})


def test_csv_export():
    out = fuse([TestFuse.L1, TestFuse.L2], FusionWeights({"content": 0.5, "cf": 0.5}), 10)
    assert ranked_to_csv(out) == (
        b"rank,item_id,score,contributing_algorithms\n"
        b"1,2,0.750000,cf|content\n"
        b"2,1,0.500000,content\n"
    )
    assert ranked_to_csv(TestFuse.L2) == b"rank,item_id,score\n1,2,1.000000\n"

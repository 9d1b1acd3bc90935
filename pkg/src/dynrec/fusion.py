"""Weighted linear fusion of per-algorithm ranked lists."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .algos.scored import ScoredItem

ALGORITHMS = ("content", "cf", "rules")
HYBRID = "hybrid"


@dataclass(frozen=True)
class FusionWeights:
    weights: Mapping[str, float]

    def __post_init__(self):
        w = dict(self.weights)
        unknown = set(w) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms in weights: {sorted(unknown)}")
        if any(not (v >= 0 and math.isfinite(v)) for v in w.values()):
            raise ValueError(f"weights must be finite and nonnegative: {w}")
        if abs(math.fsum(w.values()) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {math.fsum(w.values())}")
        object.__setattr__(self, "weights", MappingProxyType(w))

    @classmethod
    def normalized(cls, raw: Mapping[str, float]) -> "FusionWeights":
        total = math.fsum(raw.values())
        if total <= 0:
            raise ValueError("weights sum to zero")
        return cls({a: v / total for a, v in raw.items()})

    @classmethod
    def uniform(cls, algorithms: Sequence[str] = ALGORITHMS) -> "FusionWeights":
        return cls({a: 1.0 / len(algorithms) for a in algorithms})

    def get(self, algorithm: str) -> float:
        return self.weights.get(algorithm, 0.0)


def _order(item: ScoredItem):
    return (-item.score, item.item_id)


@dataclass(frozen=True)
class RankedList:
    algorithm_id: str
    items: tuple[ScoredItem, ...] = ()

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if len({x.item_id for x in items}) != len(items):
            raise ValueError(f"{self.algorithm_id}: duplicate item ids")
        for a, b in zip(items, items[1:]):
            if not _order(a) < _order(b):
                raise ValueError(f"{self.algorithm_id}: items not in (score desc, id asc) order")

    @classmethod
    def from_items(cls, algorithm_id: str, items: Iterable[ScoredItem]) -> "RankedList":
        return cls(algorithm_id, tuple(sorted(items, key=_order)))

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def item_ids(self) -> list[int]:
        return [x.item_id for x in self.items]

    def scores(self) -> dict[int, float]:
        return {x.item_id: x.score for x in self.items}


def normalize_scores(lst: RankedList) -> RankedList:
    """Min-max scale scores to [0, 1]; a constant list maps to all 1.0."""
    if not lst.items:
        return lst
    lo = min(x.score for x in lst.items)
    hi = max(x.score for x in lst.items)
    if hi == lo:
        scaled = [x._replace(score=1.0) for x in lst.items]
    else:
        span = hi - lo
        scaled = [x._replace(score=(x.score - lo) / span) for x in lst.items]
    return RankedList.from_items(lst.algorithm_id, scaled)


def fuse(lists: Sequence[RankedList], w: FusionWeights, n: int) -> RankedList:
    """Weighted sum of normalized scores; items missing from a list count as 0.

    Weight for algorithms without a list is redistributed over the lists that
    are present (uniformly if none of them carries weight). Items proposed only
    by zero-weight algorithms are dropped.
    """
    present = sorted(l.algorithm_id for l in lists)
    if len(set(present)) != len(present):
        raise ValueError(f"algorithm listed more than once: {present}")
    if not present:
        return RankedList(HYBRID)
    raw = {a: w.get(a) for a in present}
    total = math.fsum(raw.values())
    if total > 0:
        wts = {a: v / total for a, v in raw.items()}
    else:
        wts = {a: 1.0 / len(present) for a in present}

    table: dict[int, dict[str, float]] = {}
    for lst in lists:
        for x in lst.items:
            table.setdefault(x.item_id, {})[lst.algorithm_id] = x.score

    fused = []
    for item, by_alg in table.items():
        if not any(wts[a] > 0 for a in by_alg):
            continue
        vals = [by_alg.get(a, 0.0) for a in present]
        # anchoring at the minimum makes an item with equal scores s everywhere fuse to exactly s
        base, top = min(vals), max(vals)
        s = base + math.fsum(wts[a] * (v - base) for a, v in zip(present, vals))
        s = min(top, max(base, s))
        fused.append(ScoredItem(item, s, tuple(sorted(by_alg))))
    fused.sort(key=_order)
    return RankedList(HYBRID, tuple(fused[:n]))


def derive_weights(per_algorithm_f1: Mapping[str, float]) -> FusionWeights:
    """Weights proportional to validation F1; uniform when every F1 is 0."""
    for a, f in per_algorithm_f1.items():
        if not 0 <= f <= 1:
            raise ValueError(f"F1 for {a} outside [0, 1]: {f}")
    if not per_algorithm_f1:
        return FusionWeights.uniform()
    total = math.fsum(per_algorithm_f1.values())
    if total == 0:
        return FusionWeights.uniform(sorted(per_algorithm_f1))
    return FusionWeights({a: f / total for a, f in per_algorithm_f1.items()})


def ranked_to_csv(lst: RankedList, with_sources: bool | None = None) -> bytes:
    """``rank,item_id,score`` rows, plus ``contributing_algorithms`` for fused lists."""
    if with_sources is None:
        with_sources = lst.algorithm_id == HYBRID
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["rank", "item_id", "score"]
    if with_sources:
        header.append("contributing_algorithms")
    w.writerow(header)
    for rank, x in enumerate(lst.items, start=1):
        row = [rank, x.item_id, f"{x.score:.6f}"]
        if with_sources:
            row.append("|".join(x.sources))
        w.writerow(row)
    return buf.getvalue().encode("utf-8")

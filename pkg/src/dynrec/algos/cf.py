"""User-based collaborative filtering with mean-centered neighbor aggregation."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Collection, Iterable, Mapping

from ..ingest import RATING, Interaction
from .scored import ScoredItem, rank

MIN_RATING, MAX_RATING = 1.0, 5.0
DEFAULT_K = 40
DEFAULT_MIN_OVERLAP = 2

# pseudo-ratings for behavior logs; a user's strongest behavior on an item wins
IMPLICIT_RATINGS = MappingProxyType({"browse": 3.0, "click": 4.0, "purchase": 5.0})


class UnknownUserError(LookupError):
    pass


@dataclass(frozen=True)
class RatingMatrix:
    by_user: Mapping[int, Mapping[int, float]]
    user_means: Mapping[int, float]
    items: frozenset[int]

    @classmethod
    def from_ratings(cls, by_user: Mapping[int, Mapping[int, float]]) -> "RatingMatrix":
        rows, means, items = {}, {}, set()
        for u in sorted(by_user):
            row = dict(by_user[u])
            if not row:
                continue
            for i, r in row.items():
                if not MIN_RATING <= r <= MAX_RATING:
                    raise ValueError(f"rating {r} for ({u}, {i}) outside [1, 5]")
            rows[u] = MappingProxyType(row)
            means[u] = math.fsum(row.values()) / len(row)
            items.update(row)
        return cls(MappingProxyType(rows), MappingProxyType(means), frozenset(items))

    @classmethod
    def from_interactions(cls, interactions: Iterable[Interaction]) -> "RatingMatrix":
        """Explicit ratings (last one wins) take precedence over implicit behavior."""
        explicit: dict[int, dict[int, float]] = defaultdict(dict)
        implicit: dict[int, dict[int, float]] = defaultdict(dict)
        for x in interactions:
            if x.kind == RATING:
                explicit[x.user_id][x.item_id] = float(x.value)
            else:
                row = implicit[x.user_id]
                row[x.item_id] = max(row.get(x.item_id, 0.0), IMPLICIT_RATINGS[x.kind])
        merged = {u: dict(row) for u, row in implicit.items()}
        for u, row in explicit.items():
            merged.setdefault(u, {}).update(row)
        return cls.from_ratings(merged)

    def __contains__(self, user_id):
        return user_id in self.by_user

    def users(self) -> list[int]:
        return list(self.by_user)

    def row(self, user_id) -> Mapping[int, float]:
        try:
            return self.by_user[user_id]
        except KeyError:
            raise UnknownUserError(f"unknown user {user_id}") from None


@dataclass(frozen=True)
class Neighborhood:
    """Similar users sorted by descending ``|similarity|``, then user id."""

    user_id: int
    members: tuple[tuple[int, float], ...] = ()

    def __len__(self):
        return len(self.members)

    def by_user_id(self) -> list[tuple[int, float]]:
        return sorted(self.members)


def _co_rated(u: Mapping[int, float], v: Mapping[int, float]):
    common = sorted(u.keys() & v.keys())
    return [u[i] for i in common], [v[i] for i in common]


def pearson_sim(u_ratings, v_ratings, min_overlap: int = DEFAULT_MIN_OVERLAP) -> float:
    """Pearson correlation over co-rated items.

    Returns 0 when fewer than ``min_overlap`` (and at least 2) items are
    co-rated or when either side has zero variance on them.
    """
    a, b = _co_rated(u_ratings, v_ratings)
    n = len(a)
    if n < max(min_overlap, 2) or len(set(a)) == 1 or len(set(b)) == 1:
        return 0.0
    ma, mb = math.fsum(a) / n, math.fsum(b) / n
    da = [x - ma for x in a]
    db = [y - mb for y in b]
    num = math.fsum(x * y for x, y in zip(da, db))
    va = math.fsum(x * x for x in da)
    vb = math.fsum(y * y for y in db)
    if va == 0 or vb == 0:
        return 0.0
    return max(-1.0, min(1.0, num / math.sqrt(va * vb)))


def cosine_sim(u_ratings, v_ratings, min_overlap: int = DEFAULT_MIN_OVERLAP) -> float:
    """Cosine of raw co-rated rating vectors; 0 below ``min_overlap``."""
    a, b = _co_rated(u_ratings, v_ratings)
    if len(a) < max(min_overlap, 1):
        return 0.0
    num = math.fsum(x * y for x, y in zip(a, b))
    den = math.sqrt(math.fsum(x * x for x in a) * math.fsum(y * y for y in b))
    return 0.0 if den == 0 else max(-1.0, min(1.0, num / den))


SIMILARITIES = {"pearson": pearson_sim, "cosine": cosine_sim}


def build_neighborhood(
    m: RatingMatrix,
    u: int,
    k: int = DEFAULT_K,
    *,
    floor: float = 0.0,
    min_overlap: int = DEFAULT_MIN_OVERLAP,
    sim: str = "pearson",
) -> Neighborhood:
    """Up to ``k`` users with nonzero similarity of magnitude >= ``floor``."""
    simfn = SIMILARITIES[sim]
    ru = m.row(u)
    found = []
    for v, rv in m.by_user.items():
        if v == u:
            continue
        s = simfn(ru, rv, min_overlap)
        if s != 0 and abs(s) >= floor:
            found.append((v, s))
    found.sort(key=lambda vs: (-abs(vs[1]), vs[0]))
    return Neighborhood(u, tuple(found[:k]))


def _clamp(r: float) -> float:
    return min(MAX_RATING, max(MIN_RATING, r))


def predict_cf(m: RatingMatrix, u: int, i: int, hood: Neighborhood) -> float:
    """Mean-centered weighted average over neighbors who rated ``i``.

    Falls back to the user's mean when no neighbor rated ``i``; the result is
    clamped to [1, 5].
    """
    mean_u = m.user_means.get(u)
    if mean_u is None:
        raise UnknownUserError(f"unknown user {u}")
    num = den = 0.0
    for v, s in hood.by_user_id():
        r_vi = m.by_user[v].get(i)
        if r_vi is None:
            continue
        num += (r_vi - m.user_means[v]) * s
        den += abs(s)
    if den == 0:
        return _clamp(mean_u)
    return _clamp(mean_u + num / den)


def predict_all(
    m: RatingMatrix, u: int, hood: Neighborhood, candidates: Collection[int]
) -> dict[int, float]:
    """:func:`predict_cf` for every candidate in one pass over the neighbors.

    Accumulates in the same neighbor order as :func:`predict_cf`, so the
    results are bit-identical.
    """
    mean_u = m.user_means.get(u)
    if mean_u is None:
        raise UnknownUserError(f"unknown user {u}")
    num: dict[int, float] = {}
    den: dict[int, float] = {}
    for v, s in hood.by_user_id():
        mean_v = m.user_means[v]
        for i, r_vi in m.by_user[v].items():
            if i in candidates:
                num[i] = num.get(i, 0.0) + (r_vi - mean_v) * s
                den[i] = den.get(i, 0.0) + abs(s)
    out = {}
    for i in candidates:
        d = den.get(i, 0.0)
        out[i] = _clamp(mean_u + num[i] / d) if d != 0 else _clamp(mean_u)
    return out


def recommend_cf(
    m: RatingMatrix,
    u: int,
    k_neighbors: int = DEFAULT_K,
    n: int = 10,
    *,
    candidates: Collection[int] | None = None,
    hood: Neighborhood | None = None,
    **hood_kwargs,
) -> list[ScoredItem]:
    """Top-``n`` items the user has not rated, by predicted rating."""
    seen = m.row(u)
    if hood is None:
        hood = build_neighborhood(m, u, k_neighbors, **hood_kwargs)
    pool = m.items if candidates is None else candidates
    unseen = {i for i in pool if i not in seen}
    return rank(predict_all(m, u, hood, unseen), n)

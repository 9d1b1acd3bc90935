"""Models fitted on a set of interactions, serving every algorithm plus the hybrid."""

from __future__ import annotations

import logging
from collections import defaultdict
from typing import Iterable, Mapping, Sequence

from .algos import (
    RatingMatrix,
    UnknownUserError,
    build_neighborhood,
    mine_rules,
    recommend_cf,
    recommend_content,
    recommend_rules,
)
from .config import Config
from .fusion import ALGORITHMS, HYBRID, FusionWeights, RankedList, fuse, normalize_scores
from .ingest import RATING, Interaction, ItemMeta
from .profile import UserInterestProfile, build_item_features, build_profiles

_log = logging.getLogger(__name__)

ALL_ALGORITHMS = ALGORITHMS + (HYBRID,)


def is_positive(x: Interaction, threshold: int) -> bool:
    """Whether an interaction signals a liked item (rating >= threshold or click/purchase)."""
    if x.kind == RATING:
        return x.value >= threshold
    return x.kind in ("click", "purchase")


def is_relevant(x: Interaction, threshold: int) -> bool:
    """Held-out relevance: rating >= threshold, or a purchase for behavior data."""
    if x.kind == RATING:
        return x.value >= threshold
    return x.kind == "purchase"


def transactions_by_user(
    interactions: Iterable[Interaction], threshold: int
) -> dict[int, frozenset[int]]:
    baskets = defaultdict(set)
    for x in interactions:
        if is_positive(x, threshold):
            baskets[x.user_id].add(x.item_id)
    return {u: frozenset(items) for u, items in sorted(baskets.items())}


class Engine:
    """All three base recommenders and their fusion, fit on one interaction set."""

    def __init__(
        self,
        interactions: Sequence[Interaction],
        catalog: Mapping[int, ItemMeta],
        config: Config | None = None,
        weights: FusionWeights | None = None,
    ):
        self.config = config if config is not None else Config()
        cfg = self.config
        self.now = max((x.timestamp for x in interactions), default=0)

        self.index = build_item_features(catalog) if catalog else None
        if self.index is not None:
            self.profiles = build_profiles(interactions, self.index, self.now, cfg.decay())
        else:
            self.profiles = {}

        self.matrix = RatingMatrix.from_interactions(interactions)
        self.seen: dict[int, set[int]] = defaultdict(set)
        for x in interactions:
            self.seen[x.user_id].add(x.item_id)
        self.baskets = transactions_by_user(interactions, cfg["eval.relevance_threshold"])
        self.rules = []
        if self.baskets:
            self.rules = mine_rules(
                list(self.baskets.values()),
                cfg["rules.min_support"],
                cfg["rules.min_confidence"],
                max_len=cfg["rules.max_len"],
                max_consequent=cfg["rules.max_consequent"],
            )
        if weights is None:
            explicit = cfg["fusion.weights"]
            weights = FusionWeights(explicit) if explicit else FusionWeights.uniform()
        self.weights = weights
        self._hoods = {}

    def knows(self, user: int) -> bool:
        return user in self.seen

    def neighborhood(self, user: int):
        hood = self._hoods.get(user)
        if hood is None:
            hood = build_neighborhood(
                self.matrix, user, self.config["cf.k_neighbors"], **self.config.cf_kwargs()
            )
            self._hoods[user] = hood
        return hood

    def content(self, user: int, n: int) -> RankedList:
        profile = self.profiles.get(user)
        if profile is None or self.index is None:
            return RankedList("content")
        items = recommend_content(profile, self.index, n, exclude=self.seen.get(user, ()))
        return RankedList("content", tuple(items))

    def cf(self, user: int, n: int) -> RankedList:
        if user not in self.matrix:
            return RankedList("cf")
        items = recommend_cf(self.matrix, user, n=n, hood=self.neighborhood(user))
        return RankedList("cf", tuple(items))

    def rule_list(self, user: int, n: int) -> RankedList:
        owned = self.baskets.get(user, frozenset())
        seen = self.seen.get(user, ())
        items = [x for x in recommend_rules(self.rules, owned, None) if x.item_id not in seen]
        # support decides which equal-confidence items make the cut; the list itself is
        # ordered by (score, item id) like every other ranked list
        return RankedList.from_items("rules", items[:n])

    def base_lists(self, user: int, n: int) -> dict[str, RankedList]:
        return {"content": self.content(user, n), "cf": self.cf(user, n), "rules": self.rule_list(user, n)}

    def hybrid(self, user: int, n: int, bases: Mapping[str, RankedList] | None = None) -> RankedList:
        if bases is None:
            bases = self.base_lists(user, max(n, self.config["fusion.depth"]))
        lists = [normalize_scores(bases[a]) for a in ALGORITHMS if len(bases[a])]
        return fuse(lists, self.weights, n)

    def recommend(self, user: int, algorithm: str, n: int) -> RankedList:
        if algorithm == HYBRID:
            return self.hybrid(user, n)
        if algorithm == "content":
            return self.content(user, n)
        if algorithm == "cf":
            return self.cf(user, n)
        if algorithm == "rules":
            return self.rule_list(user, n)
        raise ValueError(f"unknown algorithm {algorithm!r}")

    def recommend_all(self, user: int, n: int) -> dict[str, RankedList]:
        """Top-``n`` for each base algorithm and the hybrid, sharing the base work."""
        depth = max(n, self.config["fusion.depth"])
        bases = self.base_lists(user, depth)
        out = {a: RankedList(a, bases[a].items[:n]) for a in ALGORITHMS}
        out[HYBRID] = self.hybrid(user, n, bases)
        return out

    def profile(self, user: int) -> UserInterestProfile:
        try:
            return self.profiles[user]
        except KeyError:
            raise UnknownUserError(f"unknown user {user}") from None

"""TF-IDF item features and time-decayed user interest profiles."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping

from .ingest import KINDS, RATING, Interaction, ItemMeta

DAY = 86_400
DEFAULT_HALF_LIFE = 30 * DAY
DEFAULT_BEHAVIOR_WEIGHTS = MappingProxyType(
    {"browse": 0.2, "click": 0.5, "purchase": 1.0, RATING: 1.0}
)


@dataclass(frozen=True)
class FeatureVector:
    """Sparse nonnegative term -> weight mapping. Zero weights are dropped."""

    entries: Mapping[str, float] = field(default_factory=dict)
    normalized: bool = False

    def __post_init__(self):
        clean = {}
        for term, w in self.entries.items():
            if not w >= 0 or math.isinf(w):
                raise ValueError(f"feature weight for {term!r} must be finite and >= 0, got {w}")
            if w > 0:
                clean[term] = float(w)
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __len__(self):
        return len(self.entries)

    def __bool__(self):
        return bool(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, term):
        return self.entries[term]

    def items(self):
        return self.entries.items()

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def norm(self) -> float:
        return math.sqrt(math.fsum(w * w for w in self.entries.values()))

    def dot(self, other: "FeatureVector") -> float:
        a, b = self.entries, other.entries
        if len(b) < len(a):
            a, b = b, a
        return math.fsum(w * b[t] for t, w in a.items() if t in b)

    def unit(self) -> "FeatureVector":
        n = self.norm()
        if n == 0:
            return FeatureVector()
        return FeatureVector({t: w / n for t, w in self.entries.items()}, normalized=True)


@dataclass(frozen=True)
class ItemFeatureIndex:
    vectors: Mapping[int, FeatureVector]
    vocabulary: Mapping[str, int]
    doc_freq: Mapping[int, int]
    idf: Mapping[str, float]
    empty_items: frozenset[int] = frozenset()

    def __contains__(self, item_id):
        return item_id in self.vectors

    def get(self, item_id) -> FeatureVector | None:
        return self.vectors.get(item_id)


def build_item_features(catalog: Mapping[int, ItemMeta]) -> ItemFeatureIndex:
    """TF-IDF over item term bags, each vector L2-normalized.

    tf is the raw term count in an item's bag; idf is the smoothed
    ``ln((1 + N) / (1 + df)) + 1``. Items with no terms get an empty vector
    and are listed in ``empty_items``.
    """
    if not catalog:
        raise ValueError("catalog is empty")
    n = len(catalog)
    bags = {item: Counter(meta.terms) for item, meta in catalog.items()}
    df = Counter()
    for bag in bags.values():
        df.update(bag.keys())
    vocabulary = {t: i for i, t in enumerate(sorted(df))}
    idf = {t: math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocabulary}

    vectors, empty = {}, set()
    for item, bag in bags.items():
        if not bag:
            vectors[item] = FeatureVector()
            empty.add(item)
            continue
        vectors[item] = FeatureVector({t: c * idf[t] for t, c in bag.items()}).unit()
    return ItemFeatureIndex(
        vectors=MappingProxyType(vectors),
        vocabulary=MappingProxyType(vocabulary),
        doc_freq=MappingProxyType({vocabulary[t]: c for t, c in df.items()}),
        idf=MappingProxyType(idf),
        empty_items=frozenset(empty),
    )


@dataclass(frozen=True)
class DecayConfig:
    """Forget-function parameters: half-life in seconds, per-behavior weights."""

    half_life: float = DEFAULT_HALF_LIFE
    behavior_weights: Mapping[str, float] = DEFAULT_BEHAVIOR_WEIGHTS

    def __post_init__(self):
        if not (self.half_life > 0 and math.isfinite(self.half_life)):
            raise ValueError(f"half_life must be positive, got {self.half_life}")
        weights = dict(DEFAULT_BEHAVIOR_WEIGHTS)
        weights.update(self.behavior_weights)
        unknown = set(weights) - set(KINDS)
        if unknown:
            raise ValueError(f"unknown behavior kinds {sorted(unknown)}")
        if any(not (w >= 0 and math.isfinite(w)) for w in weights.values()):
            raise ValueError("behavior weights must be finite and nonnegative")
        object.__setattr__(self, "behavior_weights", MappingProxyType(weights))

    @classmethod
    def from_days(cls, half_life_days: float, **weights) -> "DecayConfig":
        return cls(half_life_days * DAY, weights)


DEFAULT_DECAY = DecayConfig()


def decay_weight(delta_t: float, cfg: DecayConfig = DEFAULT_DECAY) -> float:
    """Exponential forgetting: ``2 ** (-delta_t / half_life)``."""
    if delta_t < 0:
        raise ValueError(f"delta_t must be >= 0, got {delta_t} (clamp clock skew before calling)")
    return 2.0 ** (-delta_t / cfg.half_life)


def behavior_weight(kind: str, cfg: DecayConfig = DEFAULT_DECAY) -> float:
    if kind not in KINDS:
        raise ValueError(f"unknown interaction kind {kind!r}")
    return cfg.behavior_weights[kind]


@dataclass(frozen=True)
class UserInterestProfile:
    user_id: int
    weights: FeatureVector = field(default_factory=FeatureVector)
    last_updated: float = 0
    skipped: int = 0

    def to_json(self) -> str:
        weights = {t: self.weights[t] for t in sorted(self.weights)}
        return json.dumps(
            {"user_id": self.user_id, "last_updated": self.last_updated, "weights": weights}
        )

    @classmethod
    def from_json(cls, text: str) -> "UserInterestProfile":
        obj = json.loads(text)
        return cls(obj["user_id"], FeatureVector(obj["weights"]), obj["last_updated"])


def _signal(event: Interaction, cfg: DecayConfig) -> float:
    w = cfg.behavior_weights[event.kind]
    if event.kind == RATING:
        # 5 -> +1, 3 -> 0, 1 -> -1
        return w * (event.value - 3) / 2
    return w


def update_profile(
    p: UserInterestProfile,
    events: Iterable[Interaction],
    index: ItemFeatureIndex,
    now: float,
    cfg: DecayConfig = DEFAULT_DECAY,
) -> UserInterestProfile:
    """Decay the existing profile to ``now`` and fold in ``events``.

    Each event adds ``behavior_weight * decay(now - ts) * item_vector``; the
    result is floored at zero. Events on items missing from ``index`` are
    skipped and added to ``skipped``.
    """
    if now < p.last_updated:
        raise ValueError(f"now ({now}) precedes last update ({p.last_updated})")
    carry = decay_weight(now - p.last_updated, cfg)
    acc = defaultdict(float)
    for term, w in p.weights.items():
        acc[term] = w * carry

    skipped = 0
    for e in events:
        if e.user_id != p.user_id:
            raise ValueError(f"event for user {e.user_id} passed to profile of user {p.user_id}")
        if e.timestamp > now:
            raise ValueError(f"event at {e.timestamp} is after now ({now})")
        vec = index.get(e.item_id)
        if vec is None:
            skipped += 1
            continue
        mult = _signal(e, cfg) * decay_weight(now - e.timestamp, cfg)
        if mult == 0:
            continue
        for term, w in vec.items():
            acc[term] += mult * w

    weights = FeatureVector({t: w for t, w in acc.items() if w > 0})
    return replace(p, weights=weights, last_updated=now, skipped=p.skipped + skipped)


def build_profiles(
    interactions: Iterable[Interaction],
    index: ItemFeatureIndex,
    now: float,
    cfg: DecayConfig = DEFAULT_DECAY,
) -> dict[int, UserInterestProfile]:
    """Profiles for every user in ``interactions``, all decayed to ``now``."""
    by_user: dict[int, list[Interaction]] = defaultdict(list)
    for x in interactions:
        by_user[x.user_id].append(x)
    return {
        u: update_profile(UserInterestProfile(u, last_updated=now), evs, index, now, cfg)
        for u, evs in sorted(by_user.items())
    }

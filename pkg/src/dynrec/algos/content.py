"""Content-based scoring: cosine between a user profile and item TF-IDF vectors."""

from __future__ import annotations

from typing import Collection

from ..profile import FeatureVector, ItemFeatureIndex, UserInterestProfile
from .scored import ScoredItem, rank


def _weights(profile) -> FeatureVector:
    return profile.weights if isinstance(profile, UserInterestProfile) else profile


def _cosine(pw: FeatureVector, pnorm: float, item: FeatureVector) -> float:
    if pnorm == 0 or item.is_zero:
        return 0.0
    s = pw.dot(item) / (pnorm * item.norm())
    return min(1.0, max(0.0, s))


def score_content(profile: UserInterestProfile | FeatureVector, item: FeatureVector) -> float:
    """Cosine similarity of profile and item vectors; 0 when either is empty.

    For unit-length vectors this is the plain weighted sum of shared-term
    products.
    """
    pw = _weights(profile)
    return _cosine(pw, pw.norm(), item)


def recommend_content(
    profile: UserInterestProfile | FeatureVector,
    index: ItemFeatureIndex,
    n: int,
    exclude: Collection[int] = (),
    candidates: Collection[int] | None = None,
) -> list[ScoredItem]:
    """Top-``n`` items with positive content score, excluding ``exclude``."""
    pw = _weights(profile)
    pnorm = pw.norm()
    if pnorm == 0:
        return []
    pool = index.vectors.keys() if candidates is None else candidates
    scores = {}
    for item in pool:
        if item in exclude:
            continue
        vec = index.get(item)
        if vec is None:
            continue
        s = _cosine(pw, pnorm, vec)
        if s > 0:
            scores[item] = s
    return rank(scores, n)

from __future__ import annotations

from typing import NamedTuple


class ScoredItem(NamedTuple):
    item_id: int
    score: float
    # algorithms that proposed the item; filled in by fusion only
    sources: tuple[str, ...] = ()


def rank(scores, n: int | None = None) -> list[ScoredItem]:
    """Sort an ``item -> score`` mapping by descending score, then ascending id."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    if n is not None:
        ordered = ordered[:n]
    return [ScoredItem(i, s) for i, s in ordered]

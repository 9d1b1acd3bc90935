"""Parsers and generators for interaction data.

Handles the MovieLens ``ratings.dat`` / ``movies.dat`` formats (``::``
separated), CSV behavior logs (``user_id,item_id,behavior,timestamp``) and a
seeded synthetic behavior generator whose users switch interest cluster
partway through their history.
"""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import BinaryIO, Iterable, Iterator, Mapping, NamedTuple

import numpy as np

_log = logging.getLogger(__name__)

RATING = "rating"
BEHAVIORS = ("browse", "click", "purchase")
KINDS = (RATING,) + BEHAVIORS
MIN_RATING, MAX_RATING = 1, 5

EVENT_HEADER = ("user_id", "item_id", "behavior", "timestamp")
DEFAULT_MAX_REJECT_RATE = 0.01
DEFAULT_BEHAVIOR_MIX = {"browse": 0.7, "click": 0.2, "purchase": 0.1}

_UINT = re.compile(r"[0-9]+")


class ParseError(ValueError):
    """Raised when a stream cannot be parsed (bad header, too many rejects)."""

    def __init__(self, message: str, report: "ParseReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, slots=True)
class Interaction:
    """One user-item event. ``value`` is set only for ``kind == "rating"``."""

    user_id: int
    item_id: int
    kind: str
    timestamp: int
    value: int | None = None

    def __post_init__(self):
        for name in ("user_id", "item_id"):
            v = getattr(self, name)
            if type(v) is not int or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if type(self.timestamp) is not int or self.timestamp < 0:
            raise ValueError(f"timestamp must be a nonnegative integer, got {self.timestamp!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown interaction kind {self.kind!r}")
        if self.kind == RATING:
            if type(self.value) is not int or not MIN_RATING <= self.value <= MAX_RATING:
                raise ValueError(f"rating must be an integer in [1, 5], got {self.value!r}")
        elif self.value is not None:
            raise ValueError(f"{self.kind} events carry no value")

    @property
    def is_rating(self) -> bool:
        return self.kind == RATING


@dataclass(frozen=True, slots=True)
class ItemMeta:
    item_id: int
    title: str
    terms: tuple[str, ...] = ()


class DatasetStats(NamedTuple):
    n_users: int
    n_items: int
    n_interactions: int


@dataclass
class ParseReport:
    """Line-level bookkeeping for a single parse run."""

    lines: int = 0
    rejects: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[tuple[int, str]] = field(default_factory=list)

    @property
    def reject_rate(self) -> float:
        return len(self.rejects) / self.lines if self.lines else 0.0

    def reject(self, line_no: int, reason: str):
        self.rejects.append((line_no, reason))

    def to_csv(self) -> bytes:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["line_number", "reason"])
        w.writerows(self.rejects)
        return buf.getvalue().encode("utf-8")


@dataclass(frozen=True)
class Dataset:
    """Immutable interaction log plus item catalog.

    ``stats`` and ``catalog_incomplete`` are derived on construction.
    """

    interactions: tuple[Interaction, ...]
    catalog: Mapping[int, ItemMeta]
    name: str = "dataset"
    stats: DatasetStats = field(init=False)
    catalog_incomplete: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "interactions", tuple(self.interactions))
        object.__setattr__(self, "catalog", MappingProxyType(dict(self.catalog)))
        object.__setattr__(self, "stats", _count(self.interactions))
        missing = any(x.item_id not in self.catalog for x in self.interactions)
        object.__setattr__(self, "catalog_incomplete", missing)

    @property
    def has_ratings(self) -> bool:
        return any(x.kind == RATING for x in self.interactions)

    def users(self) -> list[int]:
        return sorted({x.user_id for x in self.interactions})


def _count(interactions: Iterable[Interaction]) -> DatasetStats:
    users, items, n = set(), set(), 0
    for x in interactions:
        users.add(x.user_id)
        items.add(x.item_id)
        n += 1
    return DatasetStats(len(users), len(items), n)


def dataset_stats(d: Dataset) -> DatasetStats:
    """Distinct users, distinct items and interaction count, recomputed from ``d``."""
    return _count(d.interactions)


def _read(source: bytes | bytearray | BinaryIO) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    return source.read()


def _lines(data: bytes) -> Iterator[tuple[int, bytes]]:
    for no, raw in enumerate(data.split(b"\n"), start=1):
        if raw.endswith(b"\r"):
            raw = raw[:-1]
        if raw.strip():
            yield no, raw


def _uint(text: str) -> int | None:
    text = text.strip()
    return int(text) if _UINT.fullmatch(text) else None


def _check_rate(report: ParseReport, max_reject_rate: float, what: str):
    if report.reject_rate > max_reject_rate:
        first = report.rejects[0]
        raise ParseError(
            f"{what}: {len(report.rejects)} of {report.lines} lines rejected "
            f"(limit {max_reject_rate:.2%}); first at line {first[0]}: {first[1]}",
            report,
        )


def parse_movielens_ratings(
    source,
    *,
    max_reject_rate: float = DEFAULT_MAX_REJECT_RATE,
    report: ParseReport | None = None,
) -> list[Interaction]:
    """Parse ``UserID::MovieID::Rating::Timestamp`` lines.

    Malformed lines are recorded in ``report`` and skipped. Raises
    :class:`ParseError` when the reject rate exceeds ``max_reject_rate``.
    """
    report = report if report is not None else ParseReport()
    out = []
    for no, raw in _lines(_read(source)):
        report.lines += 1
        parts = raw.decode("latin-1").split("::")
        if len(parts) != 4:
            report.reject(no, f"expected 4 fields, got {len(parts)}")
            continue
        nums = [_uint(p) for p in parts]
        if any(v is None for v in nums):
            report.reject(no, "non-integer field")
            continue
        user, item, value, ts = nums
        if not MIN_RATING <= value <= MAX_RATING:
            report.reject(no, f"rating {value} outside 1-5")
            continue
        if user <= 0 or item <= 0:
            report.reject(no, "ids must be positive")
            continue
        out.append(Interaction(user, item, RATING, ts, value))
    _check_rate(report, max_reject_rate, "ratings")
    return out


def parse_movielens_movies(
    source,
    *,
    max_reject_rate: float = DEFAULT_MAX_REJECT_RATE,
    report: ParseReport | None = None,
) -> dict[int, ItemMeta]:
    """Parse ``MovieID::Title::Genre1|Genre2`` lines into a catalog.

    Genres become lowercased terms. A repeated id replaces the earlier entry
    and adds a warning to ``report``.
    """
    report = report if report is not None else ParseReport()
    catalog: dict[int, ItemMeta] = {}
    for no, raw in _lines(_read(source)):
        report.lines += 1
        parts = raw.decode("latin-1").split("::")
        if len(parts) < 3:
            report.reject(no, f"expected 3 fields, got {len(parts)}")
            continue
        item = _uint(parts[0])
        if item is None or item <= 0:
            report.reject(no, "bad movie id")
            continue
        title = "::".join(parts[1:-1])
        terms = tuple(g.strip().lower() for g in parts[-1].split("|") if g.strip())
        if item in catalog:
            report.warnings.append((no, f"duplicate item {item}"))
        catalog[item] = ItemMeta(item, title, terms)
    _check_rate(report, max_reject_rate, "movies")
    return catalog


def parse_event_log(
    source,
    *,
    max_reject_rate: float = DEFAULT_MAX_REJECT_RATE,
    report: ParseReport | None = None,
) -> list[Interaction]:
    """Parse a behavior CSV with header ``user_id,item_id,behavior,timestamp``.

    A missing or wrong header is a hard :class:`ParseError`; lines with an
    unknown behavior or bad numbers are rejected individually.
    """
    report = report if report is not None else ParseReport()
    lines = _lines(_read(source))
    first = next(lines, None)
    header = None
    if first is not None:
        try:
            header = tuple(h.strip() for h in first[1].decode("utf-8-sig").split(","))
        except UnicodeDecodeError:
            pass
    if header != EVENT_HEADER:
        raise ParseError(f"missing header {','.join(EVENT_HEADER)!r}", report)

    out = []
    for no, raw in lines:
        report.lines += 1
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            report.reject(no, "invalid utf-8")
            continue
        try:
            row = next(csv.reader([text]))
        except (csv.Error, StopIteration):
            report.reject(no, "unreadable csv row")
            continue
        if len(row) != 4:
            report.reject(no, f"expected 4 fields, got {len(row)}")
            continue
        user, item, ts = _uint(row[0]), _uint(row[1]), _uint(row[3])
        behavior = row[2].strip()
        if user is None or item is None or ts is None:
            report.reject(no, "non-integer field")
            continue
        if behavior not in BEHAVIORS:
            report.reject(no, f"unknown behavior {behavior!r}")
            continue
        if user <= 0 or item <= 0:
            report.reject(no, "ids must be positive")
            continue
        out.append(Interaction(user, item, behavior, ts))
    _check_rate(report, max_reject_rate, "event log")
    return out


def format_movielens_ratings(interactions: Iterable[Interaction]) -> bytes:
    lines = []
    for x in interactions:
        if x.kind != RATING:
            raise ValueError("only rating interactions fit the MovieLens format")
        lines.append(f"{x.user_id}::{x.item_id}::{x.value}::{x.timestamp}\n")
    return "".join(lines).encode("latin-1")


def format_movielens_movies(catalog: Mapping[int, ItemMeta]) -> bytes:
    lines = [f"{m.item_id}::{m.title}::{'|'.join(m.terms)}\n" for m in catalog.values()]
    return "".join(lines).encode("latin-1")


def format_event_log(interactions: Iterable[Interaction]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    for x in interactions:
        if x.kind == RATING:
            raise ValueError("rating interactions do not fit the event log format")
        w.writerow((x.user_id, x.item_id, x.kind, x.timestamp))
    return buf.getvalue().encode("utf-8")


# -- synthetic behavior data ------------------------------------------------

SYNTH_EPOCH = 1_600_000_000
SYNTH_SPAN = 180 * 86_400


def synthetic_clusters(n_items: int) -> int:
    return max(1, min(8, n_items // 4))


def synthetic_catalog(n_items: int) -> dict[int, ItemMeta]:
    """Catalog matching :func:`generate_synthetic_events`.

    Item ``i`` belongs to cluster ``(i - 1) % C`` and carries that cluster's
    genre term plus one of three cross-cutting style terms.
    """
    c = synthetic_clusters(n_items)
    catalog = {}
    for i in range(1, n_items + 1):
        cluster = (i - 1) % c
        style = ((i - 1) // c) % 3
        catalog[i] = ItemMeta(i, f"item {i}", (f"genre{cluster}", f"style{style}"))
    return catalog


def generate_synthetic_events(
    n_users: int,
    n_items: int,
    n_events: int,
    seed: int,
    *,
    behavior_mix: Mapping[str, float] | None = None,
    focus: float = 0.8,
) -> list[Interaction]:
    """Seeded stand-in for an e-commerce behavior log.

    Every user gets at least one event. Each user starts in one interest
    cluster and switches to another at a random point between 30% and 70% of
    their history; ``focus`` is the probability that an event targets the
    current cluster rather than a uniformly random item.
    """
    if min(n_users, n_items, n_events) <= 0:
        raise ValueError("n_users, n_items and n_events must be positive")
    if n_events < n_users:
        raise ValueError(f"n_events ({n_events}) < n_users ({n_users}): every user must appear")
    mix = dict(DEFAULT_BEHAVIOR_MIX if behavior_mix is None else behavior_mix)
    if set(mix) - set(BEHAVIORS) or any(p < 0 for p in mix.values()) or sum(mix.values()) <= 0:
        raise ValueError(f"invalid behavior mix {mix!r}")
    kinds = list(BEHAVIORS)
    probs = np.array([mix.get(k, 0.0) for k in kinds], dtype=float)
    probs /= probs.sum()

    rng = np.random.default_rng(seed)
    n_clusters = synthetic_clusters(n_items)
    members = [np.arange(c + 1, n_items + 1, n_clusters) for c in range(n_clusters)]
    counts = 1 + rng.multinomial(n_events - n_users, np.full(n_users, 1.0 / n_users))

    events = []
    for u in range(n_users):
        m = int(counts[u])
        first = int(rng.integers(n_clusters))
        second = first
        if n_clusters > 1:
            second = (first + 1 + int(rng.integers(n_clusters - 1))) % n_clusters
        switch = int(round(m * rng.uniform(0.3, 0.7)))
        times = np.sort(rng.integers(0, SYNTH_SPAN, size=m))
        targeted = rng.random(m) < focus
        kind_idx = rng.choice(len(kinds), size=m, p=probs)
        for j in range(m):
            pool = members[first if j < switch else second]
            if targeted[j]:
                item = int(pool[rng.integers(len(pool))])
            else:
                item = int(rng.integers(1, n_items + 1))
            events.append(
                Interaction(u + 1, item, kinds[kind_idx[j]], SYNTH_EPOCH + int(times[j]))
            )
    events.sort(key=lambda x: (x.timestamp, x.user_id))
    return events


def generate_synthetic_dataset(
    n_users: int, n_items: int, n_events: int, seed: int, **kwargs
) -> Dataset:
    events = generate_synthetic_events(n_users, n_items, n_events, seed, **kwargs)
    return Dataset(events, synthetic_catalog(n_items), name="synthetic")

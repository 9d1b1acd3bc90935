"""Cross-validated top-K evaluation, latency sampling and report emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Collection, Iterable, Mapping, Sequence

import numpy as np

from .config import Config
from .engine import ALL_ALGORITHMS, Engine, is_relevant
from .fusion import ALGORITHMS, FusionWeights, derive_weights
from .ingest import Dataset, Interaction

_log = logging.getLogger(__name__)

REPORT_COLUMNS = ("algorithm", "dataset", "precision", "recall", "f1", "response_time_ms")
LATENCY_COLUMNS = ("algorithm", "dataset", "mean_ms", "p95_ms", "n_calls")


class EvaluationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    folds: tuple[tuple[np.ndarray, np.ndarray], ...]
    seed: int

    def __len__(self):
        return len(self.folds)


def kfold_split(n_interactions: int, k: int, seed: int) -> SplitPlan:
    """Seeded shuffle, then contiguous partition into ``k`` test folds.

    Index arrays are returned sorted so downstream code keeps file order.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n_interactions < k:
        raise ValueError(f"need at least k={k} interactions, got {n_interactions}")
    perm = np.random.default_rng(seed).permutation(n_interactions)
    everything = np.arange(n_interactions)
    folds = []
    for chunk in np.array_split(perm, k):
        test = np.sort(chunk)
        train = np.setdiff1d(everything, test, assume_unique=True)
        folds.append((train, test))
    return SplitPlan(tuple(folds), seed)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, p: float, r: float) -> "Metrics":
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f1)


def precision_recall_f1(recommended: Sequence[int], relevant: Collection[int]) -> Metrics:
    """Set-based precision/recall/F1 of one top-K list. An empty list scores 0."""
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant set is empty; filter such users before scoring")
    if len(set(recommended)) != len(recommended):
        raise ValueError("recommended list contains duplicates")
    if not recommended:
        return Metrics(0.0, 0.0, 0.0)
    hits = sum(1 for i in recommended if i in relevant)
    return Metrics.from_pr(hits / len(recommended), hits / len(relevant))


@dataclass(frozen=True)
class LatencyStats:
    mean_ms: float
    p95_ms: float
    n_calls: int


def measure_latency(
    recommender: Callable[[int], object],
    requests: Sequence[int],
    warmup: int = 0,
    clock: Callable[[], float] = time.perf_counter,
) -> LatencyStats:
    """Time one call per request, dropping the first ``warmup`` calls.

    ``clock`` returns seconds; p95 uses linear interpolation between order
    statistics.
    """
    if not requests:
        raise ValueError("no requests to time")
    if not 0 <= warmup < len(requests):
        raise ValueError(f"warmup must be in [0, {len(requests)}), got {warmup}")
    samples = []
    for j, user in enumerate(requests):
        t0 = clock()
        recommender(user)
        elapsed = (clock() - t0) * 1000.0
        if j >= warmup:
            samples.append(elapsed)
    arr = np.asarray(samples)
    return LatencyStats(float(arr.mean()), float(np.percentile(arr, 95)), len(samples))


@dataclass(frozen=True)
class ReportRow:
    algorithm: str
    dataset: str
    metrics: Metrics
    latency: LatencyStats | None = None


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[ReportRow, ...] = ()
    config: Mapping = field(default_factory=dict)
    seed: int = 0

    def row(self, algorithm: str) -> ReportRow:
        for r in self.rows:
            if r.algorithm == algorithm:
                return r
        raise KeyError(algorithm)

    def without_latency(self) -> "EvalReport":
        rows = tuple(ReportRow(r.algorithm, r.dataset, r.metrics) for r in self.rows)
        return EvalReport(rows, self.config, self.seed)

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            lat = r.latency
            rows.append(
                {
                    "algorithm": r.algorithm,
                    "dataset": r.dataset,
                    "precision": r.metrics.precision,
                    "recall": r.metrics.recall,
                    "f1": r.metrics.f1,
                    "response_time_ms": None if lat is None else lat.mean_ms,
                    "latency": None if lat is None else {
                        "mean_ms": lat.mean_ms, "p95_ms": lat.p95_ms, "n_calls": lat.n_calls,
                    },
                }
            )
        return {"seed": self.seed, "config": dict(self.config), "rows": rows}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "EvalReport":
        rows = []
        for r in obj["rows"]:
            lat = r.get("latency")
            rows.append(
                ReportRow(
                    r["algorithm"],
                    r["dataset"],
                    Metrics(r["precision"], r["recall"], r["f1"]),
                    None if lat is None else LatencyStats(lat["mean_ms"], lat["p95_ms"], lat["n_calls"]),
                )
            )
        return cls(tuple(rows), obj.get("config", {}), obj.get("seed", 0))


def emit_report(r: EvalReport, format: str = "csv") -> bytes:
    """Serialize a report.

    CSV has the fixed column set of :data:`REPORT_COLUMNS` with three-decimal
    reals; ``response_time_ms`` is blank for rows without latency. JSON keeps
    full precision plus the config snapshot and seed.
    """
    if format == "json":
        return (json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")
    if format != "csv":
        raise ValueError(f"unknown report format {format!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for row in r.rows:
        m = row.metrics
        latency = "" if row.latency is None else f"{row.latency.mean_ms:.3f}"
        w.writerow(
            [row.algorithm, row.dataset, f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}", latency]
        )
    return buf.getvalue().encode("utf-8")


def parse_report(data: bytes) -> EvalReport:
    return EvalReport.from_dict(json.loads(data.decode("utf-8")))


def emit_latency(r: EvalReport) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LATENCY_COLUMNS)
    for row in r.rows:
        if row.latency is not None:
            lat = row.latency
            w.writerow([row.algorithm, row.dataset, f"{lat.mean_ms:.3f}", f"{lat.p95_ms:.3f}", lat.n_calls])
    return buf.getvalue().encode("utf-8")


# -- experiment ------------------------------------------------------------


def relevant_items(
    test: Iterable[Interaction], seen: Mapping[int, Collection[int]], threshold: int
) -> dict[int, set[int]]:
    """Held-out liked items per user, minus anything the user touched in training."""
    out: dict[int, set[int]] = {}
    for x in test:
        if is_relevant(x, threshold) and x.item_id not in seen.get(x.user_id, ()):
            out.setdefault(x.user_id, set()).add(x.item_id)
    return out


@dataclass
class _Tally:
    """Per-user metrics for one split, plus hit counts for micro-averaging."""

    per_user: dict[str, dict[int, Metrics]] = field(default_factory=dict)
    hits: dict[str, int] = field(default_factory=dict)
    n_rec: dict[str, int] = field(default_factory=dict)
    n_rel: int = 0

    def summary(self, algorithm: str, averaging: str) -> Metrics:
        if averaging == "micro":
            h, nr = self.hits[algorithm], self.n_rec[algorithm]
            return Metrics.from_pr(h / nr if nr else 0.0, h / self.n_rel if self.n_rel else 0.0)
        users = self.per_user[algorithm]
        ordered = [users[u] for u in sorted(users)]
        p = math.fsum(m.precision for m in ordered) / len(ordered)
        r = math.fsum(m.recall for m in ordered) / len(ordered)
        return Metrics.from_pr(p, r)


def score_split(
    engine: Engine,
    test: Sequence[Interaction],
    k: int,
    threshold: int,
    algorithms: Sequence[str] = ALL_ALGORITHMS,
) -> _Tally | None:
    """Score each algorithm's top-``k`` for every test user with a relevant item."""
    relevant = relevant_items(test, engine.seen, threshold)
    if not relevant:
        return None
    tally = _Tally({a: {} for a in algorithms}, dict.fromkeys(algorithms, 0), dict.fromkeys(algorithms, 0))
    for user in sorted(relevant):
        rel = relevant[user]
        tally.n_rel += len(rel)
        lists = engine.recommend_all(user, k)
        for a in algorithms:
            rec = lists[a].item_ids()
            tally.per_user[a][user] = precision_recall_f1(rec, rel)
            tally.hits[a] += sum(1 for i in rec if i in rel)
            tally.n_rec[a] += len(rec)
    return tally


def fit_fusion_weights(
    interactions: Sequence[Interaction],
    catalog: Mapping,
    config: Config,
    seed: int,
) -> FusionWeights:
    """F1-proportional weights from a seeded inner train/validation split."""
    explicit = config["fusion.weights"]
    if explicit:
        return FusionWeights(explicit)
    n = len(interactions)
    if n < 2:
        return FusionWeights.uniform()
    perm = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(round(n * config["eval.validation_fraction"])))
    val_idx = set(perm[:n_val].tolist())
    train = [x for j, x in enumerate(interactions) if j not in val_idx]
    val = [x for j, x in enumerate(interactions) if j in val_idx]
    engine = Engine(train, catalog, config, FusionWeights.uniform())
    tally = score_split(
        engine, val, config["eval.k"], config["eval.relevance_threshold"], algorithms=ALL_ALGORITHMS
    )
    if tally is None:
        return FusionWeights.uniform()
    f1 = {a: tally.summary(a, config["eval.averaging"]).f1 for a in ALGORITHMS}
    return derive_weights(f1)


def run_experiment(
    dataset: Dataset, config: Config | None = None, *, with_latency: bool = False
) -> EvalReport:
    """K-fold evaluation of every base algorithm and the hybrid.

    Metrics are averaged over users within a fold, then over folds. F1 in the
    report is the harmonic mean of the averaged precision and recall. Latency
    is sampled on the first fold only when ``with_latency`` is set.
    """
    config = config if config is not None else Config()
    k_folds, seed = config["eval.folds"], config["eval.seed"]
    interactions = dataset.interactions
    if k_folds < 2:
        raise EvaluationError(f"eval.folds must be >= 2, got {k_folds}")
    if len(interactions) < k_folds:
        raise EvaluationError(
            f"dataset has {len(interactions)} interactions, fewer than eval.folds={k_folds}"
        )
    plan = kfold_split(len(interactions), k_folds, seed)
    top_k = config["eval.k"]
    threshold = config["eval.relevance_threshold"]
    averaging = config["eval.averaging"]

    fold_metrics: list[dict[str, Metrics]] = []
    latency: dict[str, LatencyStats] = {}
    for fold_no, (train_idx, test_idx) in enumerate(plan.folds):
        train = [interactions[j] for j in train_idx]
        test = [interactions[j] for j in test_idx]
        weights = fit_fusion_weights(train, dataset.catalog, config, seed + 1 + fold_no)
        engine = Engine(train, dataset.catalog, config, weights)
        tally = score_split(engine, test, top_k, threshold)
        if tally is None:
            _log.warning("fold %d has no eligible test users; skipped", fold_no)
            continue
        fold_metrics.append({a: tally.summary(a, averaging) for a in ALL_ALGORITHMS})
        _log.info("fold %d: %s", fold_no, {a: round(m.f1, 4) for a, m in fold_metrics[-1].items()})
        if with_latency and not latency:
            users = sorted(tally.per_user[ALL_ALGORITHMS[0]])
            warmup = config["eval.latency_warmup"]
            total = config["eval.latency_requests"] + warmup
            users = (users * (total // len(users) + 1))[:total]
            for a in ALL_ALGORITHMS:
                latency[a] = measure_latency(lambda u, a=a: engine.recommend(u, a, top_k), users, warmup)

    if not fold_metrics:
        raise EvaluationError(
            "no eligible test users: no held-out interaction meets the relevance rule "
            f"(rating >= {threshold}, or a purchase for behavior data)"
        )
    rows = []
    for a in ALL_ALGORITHMS:
        p = math.fsum(f[a].precision for f in fold_metrics) / len(fold_metrics)
        r = math.fsum(f[a].recall for f in fold_metrics) / len(fold_metrics)
        rows.append(ReportRow(a, dataset.name, Metrics.from_pr(p, r), latency.get(a)))
    return EvalReport(tuple(rows), config.snapshot(), seed)

"""Level-wise Apriori mining and rule-based recommendation."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Collection, Iterable

from .scored import ScoredItem

DEFAULT_MAX_LEN = 3


@dataclass(frozen=True)
class AssociationRule:
    antecedent: frozenset
    consequent: frozenset
    support: float
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "antecedent", frozenset(self.antecedent))
        object.__setattr__(self, "consequent", frozenset(self.consequent))
        if not self.antecedent or not self.consequent:
            raise ValueError("antecedent and consequent must be nonempty")
        if self.antecedent & self.consequent:
            raise ValueError("antecedent and consequent overlap")
        if not (0 < self.support <= 1 and 0 < self.confidence <= 1):
            raise ValueError(f"support/confidence out of (0, 1]: {self.support}, {self.confidence}")

    def sort_key(self):
        return (-self.confidence, -self.support, sorted(self.antecedent), sorted(self.consequent))


def _check_threshold(name, value):
    if not 0 < value <= 1:
        raise ValueError(f"{name} must be in (0, 1], got {value}")


def _frequent_counts(transactions, min_support, max_len):
    n = len(transactions)
    tids: dict = defaultdict(int)
    for j, t in enumerate(transactions):
        bit = 1 << j
        for item in t:
            tids[item] |= bit

    def frequent(count):
        return count / n >= min_support

    # level maps a sorted item tuple to its transaction bitset
    level = {}
    for item in sorted(tids):
        if frequent(tids[item].bit_count()):
            level[(item,)] = tids[item]
    counts = {k: v.bit_count() for k, v in level.items()}

    size = 1
    while level and (max_len is None or size < max_len):
        by_prefix = defaultdict(list)
        for key in level:
            by_prefix[key[:-1]].append(key[-1])
        nxt = {}
        for prefix in sorted(by_prefix):
            tails = sorted(by_prefix[prefix])
            for a, b in combinations(tails, 2):
                cand = prefix + (a, b)
                # downward closure: every (size)-subset must already be frequent
                if any(cand[:j] + cand[j + 1 :] not in level for j in range(len(cand) - 2)):
                    continue
                bits = level[prefix + (a,)] & tids[b]
                c = bits.bit_count()
                if frequent(c):
                    nxt[cand] = bits
                    counts[cand] = c
        level = nxt
        size += 1
    return counts


def frequent_itemsets(
    transactions: Iterable[Collection], min_support: float, max_len: int | None = None
) -> dict[frozenset, float]:
    """All itemsets whose support (fraction of transactions) is >= ``min_support``."""
    _check_threshold("min_support", min_support)
    txs = [frozenset(t) for t in transactions]
    if not txs:
        return {}
    n = len(txs)
    return {frozenset(k): c / n for k, c in _frequent_counts(txs, min_support, max_len).items()}


def mine_rules(
    transactions: Iterable[Collection],
    min_support: float,
    min_confidence: float,
    max_len: int | None = DEFAULT_MAX_LEN,
    max_consequent: int | None = 1,
) -> list[AssociationRule]:
    """Association rules ``X -> Y`` from frequent itemsets of size <= ``max_len``.

    ``max_consequent`` bounds ``|Y|`` (``None`` for no bound). Output is sorted
    by descending confidence, descending support, then the itemsets.
    """
    _check_threshold("min_support", min_support)
    _check_threshold("min_confidence", min_confidence)
    if max_len is not None and max_len < 1:
        raise ValueError("max_len must be >= 1")
    txs = [frozenset(t) for t in transactions]
    if not txs:
        return []
    n = len(txs)
    counts = _frequent_counts(txs, min_support, max_len)

    rules = []
    for itemset, c_xy in counts.items():
        k = len(itemset)
        if k < 2:
            continue
        top = k - 1 if max_consequent is None else min(k - 1, max_consequent)
        for r in range(1, top + 1):
            for cons in combinations(itemset, r):
                ante = tuple(x for x in itemset if x not in cons)
                conf = c_xy / counts[ante]
                if conf >= min_confidence:
                    rules.append(AssociationRule(frozenset(ante), frozenset(cons), c_xy / n, conf))
    rules.sort(key=AssociationRule.sort_key)
    return rules


def recommend_rules(
    rules: Iterable[AssociationRule], owned: Collection, n: int
) -> list[ScoredItem]:
    """Score unowned consequent items by their best firing rule's confidence."""
    owned = frozenset(owned)
    best: dict = {}
    for rule in rules:
        if not rule.antecedent <= owned:
            continue
        key = (rule.confidence, rule.support)
        for item in rule.consequent:
            if item not in owned and key > best.get(item, (0.0, 0.0)):
                best[item] = key
    ordered = sorted(best.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[0]))
    return [ScoredItem(item, conf) for item, (conf, _) in ordered[:n]]


RULES_HEADER = ("antecedent", "consequent", "support", "confidence")


def rules_to_csv(rules: Iterable[AssociationRule]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RULES_HEADER)
    for r in rules:
        w.writerow(
            (
                "|".join(str(x) for x in sorted(r.antecedent)),
                "|".join(str(x) for x in sorted(r.consequent)),
                repr(r.support),
                repr(r.confidence),
            )
        )
    return buf.getvalue().encode("utf-8")


def _parse_item(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def rules_from_csv(data: bytes) -> list[AssociationRule]:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader, None)
    if tuple(header or ()) != RULES_HEADER:
        raise ValueError(f"expected header {','.join(RULES_HEADER)}")
    out = []
    for ante, cons, sup, conf in reader:
        out.append(
            AssociationRule(
                frozenset(_parse_item(x) for x in ante.split("|")),
                frozenset(_parse_item(x) for x in cons.split("|")),
                float(sup),
                float(conf),
            )
        )
    return out

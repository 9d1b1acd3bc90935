"""Run configuration: flat dotted keys with typed defaults and range checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

import yaml

from .fusion import ALGORITHMS, FusionWeights
from .profile import DAY, DecayConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Option:
    key: str
    default: Any
    kind: type
    help: str
    check: Callable[[Any], bool] | None = None
    choices: tuple[str, ...] = ()


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 < v <= 1


OPTIONS = (
    Option("decay.half_life_days", 30.0, float, "interest half-life in days", _positive),
    Option("behavior.browse", 0.2, float, "profile weight of a browse event", _nonneg),
    Option("behavior.click", 0.5, float, "profile weight of a click event", _nonneg),
    Option("behavior.purchase", 1.0, float, "profile weight of a purchase event", _nonneg),
    Option("behavior.rating", 1.0, float, "profile weight of a rating, times (value-3)/2", _nonneg),
    Option("cf.k_neighbors", 40, int, "neighborhood size cap", _positive),
    Option("cf.min_overlap", 2, int, "co-rated items needed for a similarity", _positive),
    Option("cf.sim", "pearson", str, "user similarity", choices=("pearson", "cosine")),
    Option("cf.sim_floor", 0.0, float, "minimum |similarity| for a neighbor", lambda v: 0 <= v <= 1),
    Option("rules.min_support", 0.01, float, "Apriori minimum support, in (0, 1]", _unit),
    Option("rules.min_confidence", 0.3, float, "minimum rule confidence, in (0, 1]", _unit),
    Option("rules.max_len", 3, int, "largest itemset size (antecedent + consequent)", lambda v: v >= 2),
    Option("rules.max_consequent", 1, int, "largest consequent size", _positive),
    Option("fusion.weights", None, dict, "explicit weights, e.g. content=0.3,cf=0.5,rules=0.2; "
           "unset = fit on a validation split"),
    Option("fusion.depth", 50, int, "per-algorithm list depth fed to fusion", _positive),
    Option("eval.k", 10, int, "recommendations per user (top-K)", _positive),
    Option("eval.folds", 5, int, "cross-validation folds (>= 2 to evaluate)", _positive),
    Option("eval.seed", 42, int, "seed for splits", _nonneg),
    Option("eval.relevance_threshold", 4, int, "rating counted as relevant", lambda v: 1 <= v <= 5),
    Option("eval.averaging", "macro", str, "metric averaging over users", choices=("macro", "micro")),
    Option("eval.validation_fraction", 0.2, float, "inner validation share for fusion weights",
           lambda v: 0 < v < 1),
    Option("eval.latency_requests", 50, int, "users timed per algorithm", _positive),
    Option("eval.latency_warmup", 5, int, "timed calls discarded as warmup", _nonneg),
    Option("ingest.max_reject_rate", 0.01, float, "reject share that fails a parse", lambda v: 0 <= v <= 1),
)
OPTION_BY_KEY = {o.key: o for o in OPTIONS}


def _parse_weights(value) -> dict | None:
    if value is None:
        return None
    if isinstance(value, str):
        if value.strip().lower() in ("", "none", "null"):
            return None
        pairs = {}
        for part in value.split(","):
            name, sep, num = part.partition("=")
            if not sep:
                raise ConfigError(f"fusion.weights: expected name=value, got {part!r}")
            pairs[name.strip()] = float(num)
        value = pairs
    if not isinstance(value, Mapping):
        raise ConfigError("fusion.weights must be a mapping")
    bad = set(value) - set(ALGORITHMS)
    if bad:
        raise ConfigError(f"fusion.weights: unknown algorithms {sorted(bad)}")
    try:
        w = FusionWeights.normalized({k: float(v) for k, v in value.items()})
    except ValueError as e:
        raise ConfigError(f"fusion.weights: {e}") from None
    return dict(w.weights)


def _coerce(opt: Option, value):
    if opt.kind is dict:
        return _parse_weights(value)
    try:
        if opt.kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            v = int(value)
        elif opt.kind is float:
            if isinstance(value, bool):
                raise ValueError
            v = float(value)
            if not math.isfinite(v):
                raise ValueError
        else:
            v = str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{opt.key}: expected {opt.kind.__name__}, got {value!r}") from None
    if opt.choices and v not in opt.choices:
        raise ConfigError(f"{opt.key}: must be one of {', '.join(opt.choices)}, got {v!r}")
    if opt.check is not None and not opt.check(v):
        raise ConfigError(f"{opt.key}: value {v!r} out of range ({opt.help})")
    return v


def _flatten(obj: Mapping, prefix: str = "") -> dict:
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping) and key != "fusion.weights":
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


class Config(Mapping):
    """Immutable mapping of every option key to its validated value."""

    def __init__(self, values: Mapping | None = None):
        merged = {o.key: o.default for o in OPTIONS}
        for key, value in _flatten(values or {}).items():
            opt = OPTION_BY_KEY.get(key)
            if opt is None:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _coerce(opt, value)
        self._values = merged

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: Iterable[str] = ()) -> "Config":
        values = {}
        if path is not None:
            text = Path(path).read_text(encoding="utf-8")
            try:
                loaded = yaml.safe_load(text)
            except yaml.YAMLError as e:
                raise ConfigError(f"{path}: {e}") from None
            if loaded is not None and not isinstance(loaded, Mapping):
                raise ConfigError(f"{path}: top level must be a mapping")
            values = _flatten(loaded or {})
        for item in overrides:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            values[key.strip()] = value.strip()
        return cls(values)

    def replace(self, **changes) -> "Config":
        values = dict(self._values)
        for key, value in changes.items():
            values[key.replace("__", ".")] = value
        return Config(values)

    def __getitem__(self, key):
        return self._values[key]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f"Config({self._values!r})"

    def snapshot(self) -> dict:
        return {k: (dict(v) if isinstance(v, Mapping) else v) for k, v in self._values.items()}

    def decay(self) -> DecayConfig:
        weights = {k: self[f"behavior.{k}"] for k in ("browse", "click", "purchase", "rating")}
        return DecayConfig(self["decay.half_life_days"] * DAY, weights)

    def cf_kwargs(self) -> dict:
        return {
            "floor": self["cf.sim_floor"],
            "min_overlap": self["cf.min_overlap"],
            "sim": self["cf.sim"],
        }


def describe_options() -> str:
    lines = ["Config keys (set in --config YAML/JSON or with --set key=value):", ""]
    for o in OPTIONS:
        default = "unset" if o.default is None else o.default
        lines.append(f"  {o.key} = {default}  -- {o.help}")
    return "\n".join(lines)

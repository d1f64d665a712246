"""Run configuration: a flat dotted-key document in YAML or JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .aspects import ASPECT_PRIORITY, DEFAULT_SEEDS, Aspect
from .dissim.engine import DEFAULT_MAX_DEPTH
from .sentiment import BackendKind
from .smoothing import (
    METHODS,
    Boundary,
    GapFill,
    HPParams,
    SGParams,
    SmoothingConfig,
    SmoothingError,
    WaveletParams,
)


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "corpus": None,
    "trees": None,
    "embeddings": None,
    "stopwords": None,
    "rules": None,
    "cues": None,
    "simplify.enabled": True,
    "simplify.max_depth": DEFAULT_MAX_DEPTH,
    **{f"aspects.{a.value}.seeds": list(DEFAULT_SEEDS[a]) for a in ASPECT_PRIORITY},
    "sentiment.backend": BackendKind.LEXICON.value,
    "sentiment.lexicon": None,
    "sentiment.endpoint": None,
    "sentiment.timeout": 10.0,
    "sentiment.max_in_flight": 4,
    "sentiment.batch_size": 32,
    "sentiment.retries": 2,
    "sentiment.table": None,
    "sentiment.strict": True,
    "smooth.method": "sg",
    "smooth.sg.window": 20,
    "smooth.sg.polyorder": 2,
    "smooth.sg.deriv": 0,
    "smooth.sg.delta": 1.0,
    "smooth.sg.mode": "wrap",
    "smooth.hp.lambda": 10.0,
    "smooth.wavelet.threshold": 0.9,
    "smooth.ma.window": 12,
    "smooth.gap_fill": "linear",
    "evaluate.labels": None,
    "evaluate.aspect": None,
    "evaluate.bins": None,
    "out": "out",
    "random_free": True,
}

PATH_KEYS = frozenset(
    {"corpus", "trees", "embeddings", "stopwords", "rules", "cues", "sentiment.lexicon", "sentiment.table", "evaluate.labels", "out"}
)
# paths that must exist when set; ``out`` is created on demand
_MUST_EXIST = PATH_KEYS - {"out"}

_INT_KEYS = frozenset(
    {"simplify.max_depth", "sentiment.max_in_flight", "sentiment.batch_size", "sentiment.retries",
     "smooth.sg.window", "smooth.sg.polyorder", "smooth.sg.deriv", "smooth.ma.window", "evaluate.bins"}
)
_FLOAT_KEYS = frozenset(
    {"sentiment.timeout", "smooth.sg.delta", "smooth.hp.lambda", "smooth.wavelet.threshold"}
)
_BOOL_KEYS = frozenset({"simplify.enabled", "sentiment.strict", "random_free"})


def flatten(doc: Mapping[str, Any], prefix: str = "") -> dict[str, Any]:
    """Flatten nested mappings into dotted keys; lists are leaf values."""
    out: dict[str, Any] = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if key.startswith("aspects."):
        if isinstance(value, str) or not all(isinstance(t, str) for t in value):
            raise ConfigError(f"{key}: expected a list of terms")
        return list(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration.  ``values`` holds every known key."""

    values: Mapping[str, Any]

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any], base_dir: str | Path | None = None) -> "RunConfig":
        flat = flatten(doc)
        unknown = sorted(set(flat) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        values = dict(DEFAULTS)
        for k, v in flat.items():
            values[k] = _coerce(k, v)
        base = Path(base_dir) if base_dir is not None else None
        for k in PATH_KEYS:
            if values[k] is not None and base is not None and not Path(values[k]).is_absolute():
                values[k] = str((base / values[k]).resolve())
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        """Read a config file; ``overrides`` (dotted keys, absolute paths) apply before validation."""
        p = Path(path)
        try:
            doc = yaml.safe_load(p.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{p}: {exc}") from None
        if doc is None:
            doc = {}
        if not isinstance(doc, Mapping):
            raise ConfigError(f"{p}: top level must be a mapping")
        flat = flatten(doc)
        flat.update(overrides or {})
        return cls.from_mapping(flat, p.parent)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Replace dotted keys (pass ``{"a.b": v}`` via ``**``)."""
        doc = dict(self.values)
        doc.update(overrides)
        return RunConfig.from_mapping(doc)

    def validate(self) -> None:
        v = self.values
        if v["random_free"] is not True:
            raise ConfigError("random_free must be true: the pipeline has no stochastic steps")
        if v["corpus"] is None:
            raise ConfigError("corpus path is required")
        for k in sorted(_MUST_EXIST):
            if v[k] is not None and not Path(v[k]).exists():
                raise ConfigError(f"{k}: path does not exist: {v[k]}")
        try:
            BackendKind(v["sentiment.backend"])
        except ValueError:
            raise ConfigError(f"sentiment.backend must be one of {[b.value for b in BackendKind]}") from None
        if v["sentiment.backend"] == "remote" and not v["sentiment.endpoint"]:
            raise ConfigError("sentiment.endpoint is required for the remote backend")
        if v["sentiment.backend"] == "precomputed" and not v["sentiment.table"]:
            raise ConfigError("sentiment.table is required for the precomputed backend")
        if v["evaluate.aspect"] is not None and v["evaluate.aspect"] not in {a.value for a in Aspect}:
            raise ConfigError(f"evaluate.aspect must be one of {[a.value for a in Aspect]}")
        if v["smooth.method"] not in METHODS:
            raise ConfigError(f"smooth.method must be one of {list(METHODS)}")
        try:
            self.smoothing()
        except (SmoothingError, ValueError) as exc:
            raise ConfigError(f"smoothing parameters: {exc}") from None

    # -- typed views ---------------------------------------------------------

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def path(self, key: str) -> Optional[Path]:
        p = self.values[key]
        return None if p is None else Path(p)

    def seeds(self) -> dict[Aspect, tuple[str, ...]]:
        return {a: tuple(self.values[f"aspects.{a.value}.seeds"]) for a in ASPECT_PRIORITY}

    def smoothing(self) -> SmoothingConfig:
        v = self.values
        try:
            boundary = Boundary(str(v["smooth.sg.mode"]).upper())
            gap = GapFill(str(v["smooth.gap_fill"]).upper())
        except ValueError as exc:
            raise SmoothingError(str(exc)) from None
        return SmoothingConfig(
            method=v["smooth.method"],
            sg=SGParams(v["smooth.sg.window"], v["smooth.sg.polyorder"], v["smooth.sg.deriv"], v["smooth.sg.delta"], boundary),
            hp=HPParams(v["smooth.hp.lambda"]),
            wavelet=WaveletParams(v["smooth.wavelet.threshold"]),
            ma_window=v["smooth.ma.window"],
            gap_fill=gap,
        )

    def sentiment_options(self) -> dict[str, Any]:
        prefix = "sentiment."
        return {k[len(prefix):]: val for k, val in self.values.items() if k.startswith(prefix) and val is not None}

    # -- serialization --------------------------------------------------------

    def to_mapping(self) -> dict[str, Any]:
        return {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in sorted(self.values.items())}

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_mapping(), sort_keys=True, default_flow_style=False)

    def digest(self, exclude: frozenset[str] = frozenset({"out"})) -> str:
        """SHA-256 of the canonical JSON form, ignoring keys that do not affect results."""
        doc = {k: v for k, v in self.to_mapping().items() if k not in exclude}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()

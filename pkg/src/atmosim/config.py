"""Run configuration: a JSON tree of sections, validated strictly.

Every key is addressable as ``section.key`` for command-line overrides
(``--set analysis.B=500``). Unknown sections or keys are errors.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError

CHANNEL_FAMILIES = ("log-normal", "beam-wandering", "beta-binomial", "point-mass", "uniform", "tabulated", "pdt-csv")


@dataclass(frozen=True)
class SourceSpec:
    family: str = "binomial"
    mean_photons: float = 0.0
    squeezes: tuple = ()
    n_emitters: int = 20
    emission_probability: float | None = None
    photons: int = 1
    target_mean_clicks: float | None = None  # calibrate the source strength when set
    mode_count: int = 1


@dataclass(frozen=True)
class DetectorSpec:
    bins: int = 8
    efficiency: float = 0.22
    dark: float = 0.0


@dataclass(frozen=True)
class EnsembleSpec:
    n: int = 100
    mode: str = "analytic"
    M: int | None = None
    data_dir: str | None = None  # ingest measured data instead of simulating


@dataclass(frozen=True)
class ChannelSpec:
    family: str = "log-normal"
    mu: float = -1.75
    sigma2: float = 0.55
    eta0: float = 1.0
    shape: float = 2.0
    scale: float = 1.0
    wander_variance: float = 0.5
    alpha: float = 1.0
    beta: float = 1.0
    eta: float = 1.0
    path: str | None = None  # tabulated density or ready PDT CSV


@dataclass(frozen=True)
class AnalysisSpec:
    K: tuple = (2, 8)
    B: int = 1000
    seed: int | None = None
    threshold: float = 3.0
    thresholds: tuple | None = None  # post-selection cutoffs; default 0, 0.01, ..., 0.99
    alphas: tuple | None = None  # beta-scan grids; default log-spaced over [0.1, 20]
    betas: tuple | None = None
    beta_points: int = 12


@dataclass(frozen=True)
class RytovSpec:
    mapping: str | None = None  # "linear" or "table"
    grid: tuple = ()
    eta0: float = 1.0
    shape: float = 2.0
    scale: float = 1.0
    variance_per_rytov: float = 0.1
    table: tuple = ()  # rows [sigma_r2, eta0, shape, scale, wander_variance]


SECTIONS = {
    "source": SourceSpec,
    "detector": DetectorSpec,
    "ensemble": EnsembleSpec,
    "channel": ChannelSpec,
    "analysis": AnalysisSpec,
    "rytov": RytovSpec,
}


@dataclass(frozen=True)
class RunConfig:
    source: SourceSpec = field(default_factory=SourceSpec)
    detector: DetectorSpec = field(default_factory=DetectorSpec)
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    rytov: RytovSpec = field(default_factory=RytovSpec)
    output: str = "out"

    def to_dict(self):
        d = {name: _plain(dataclasses.asdict(getattr(self, name))) for name in SECTIONS}
        d["output"] = self.output
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of everything except the output location."""
        d = self.to_dict()
        d.pop("output")
        text = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def seed(self):
        return self.analysis.seed

    @property
    def needs_seed(self):
        return self.ensemble.mode == "sampled" or self.ensemble.data_dir is not None


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def _coerce(section, key, value, default):
    """Type-check a value against the field default's kind."""
    where = f"{section}.{key}"
    if value is None:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where} must be true or false")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigurationError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{where} must be a list, got {value!r}")
        return _tuplify(list(value))
    return value


_FIELD_KINDS = {
    ("source", "emission_probability"): 0.0,
    ("source", "target_mean_clicks"): 0.0,
    ("ensemble", "M"): 0,
    ("ensemble", "data_dir"): "",
    ("channel", "path"): "",
    ("analysis", "seed"): 0,
    ("analysis", "thresholds"): (),
    ("analysis", "alphas"): (),
    ("analysis", "betas"): (),
    ("rytov", "mapping"): "",
}


def _section(name, data):
    cls = SECTIONS[name]
    if not isinstance(data, dict):
        raise ConfigurationError(f"section {name!r} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {name!r}: {', '.join(unknown)} (valid: {', '.join(known)})")
    kwargs = {}
    for key, value in data.items():
        default = _FIELD_KINDS.get((name, key), known[key].default)
        value = _coerce(name, key, value, default)
        if isinstance(default, str) and value is not None and not isinstance(value, str):
            raise ConfigurationError(f"{name}.{key} must be a string, got {value!r}")
        kwargs[key] = value
    return cls(**kwargs)


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a JSON object")
    unknown = sorted(set(data) - set(SECTIONS) - {"output"})
    if unknown:
        raise ConfigurationError(f"unknown top-level key(s): {', '.join(unknown)}")
    kwargs = {name: _section(name, data[name]) for name in SECTIONS if name in data}
    if "output" in data:
        if not isinstance(data["output"], str):
            raise ConfigurationError("output must be a string path")
        kwargs["output"] = data["output"]
    return RunConfig(**kwargs)


def demo_path():
    return resources.files("atmosim") / "data" / "demo.json"


def load(path=None) -> dict:
    """Raw JSON tree from a file, the packaged demo (``"demo"``) or defaults (``None``)."""
    if path is None:
        return {}
    if path == "demo":
        text = demo_path().read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return data


def apply_override(data: dict, assignment: str) -> dict:
    """Apply ``section.key=value``; the value is parsed as JSON, else taken as a string."""
    key, sep, raw = assignment.partition("=")
    if not sep:
        raise ConfigurationError(f"override {assignment!r} must read section.key=value")
    parts = key.strip().split(".")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = dict(data)
    if parts == ["output"]:
        out["output"] = value
        return out
    if len(parts) != 2 or parts[0] not in SECTIONS:
        raise ConfigurationError(f"unknown config key {key!r}")
    section = dict(out.get(parts[0], {}))
    section[parts[1]] = value
    out[parts[0]] = section
    return out


def validate(cfg: RunConfig) -> RunConfig:
    """Cross-field checks: files exist, seed present when sampling."""
    if cfg.ensemble.data_dir is not None and not Path(cfg.ensemble.data_dir).is_dir():
        raise ConfigurationError(f"ensemble.data_dir {cfg.ensemble.data_dir!r} does not exist")
    if cfg.channel.path is not None and not Path(cfg.channel.path).is_file():
        raise ConfigurationError(f"channel.path {cfg.channel.path!r} does not exist")
    if cfg.channel.family not in CHANNEL_FAMILIES:
        raise ConfigurationError(f"channel.family must be one of {CHANNEL_FAMILIES}, got {cfg.channel.family!r}")
    if cfg.channel.family in ("tabulated", "pdt-csv") and cfg.channel.path is None:
        raise ConfigurationError(f"channel.family={cfg.channel.family!r} needs channel.path")
    if cfg.ensemble.mode not in ("analytic", "sampled"):
        raise ConfigurationError(f"ensemble.mode must be 'analytic' or 'sampled', got {cfg.ensemble.mode!r}")
    if cfg.ensemble.mode == "sampled" and cfg.ensemble.data_dir is None and not cfg.ensemble.M:
        raise ConfigurationError("ensemble.mode='sampled' needs ensemble.M")
    if cfg.needs_seed and cfg.analysis.seed is None:
        raise ConfigurationError("analysis.seed is mandatory when sampling or bootstrapping")
    if cfg.ensemble.n < 1:
        raise ConfigurationError(f"ensemble.n must be >= 1, got {cfg.ensemble.n}")
    if cfg.rytov.mapping not in (None, "linear", "table"):
        raise ConfigurationError(f"rytov.mapping must be 'linear' or 'table', got {cfg.rytov.mapping!r}")
    return cfg


def build(path=None, overrides=()) -> RunConfig:
    data = load(path)
    for item in overrides:
        data = apply_override(data, item)
    return validate(from_dict(data))


def key_listing() -> str:
    """Every config key with its default, one per line."""
    lines = []
    for name, cls in SECTIONS.items():
        for f in dataclasses.fields(cls):
            default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
            lines.append(f"  {name}.{f.name} = {json.dumps(_plain(default))}")
    lines.append('  output = "out"')
    return "\n".join(lines)

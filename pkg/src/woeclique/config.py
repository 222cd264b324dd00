"""Flat ``key = value`` pipeline configuration and per-stage seed derivation.

Lines starting with ``#`` are comments. List values are comma separated.
Command-line overrides are applied on top of the file with ``--set key=value``
or the dedicated flags.
"""

import hashlib
from dataclasses import dataclass, fields, replace

from .exceptions import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    output_dir: str = "out"
    # data
    input: str = ""
    target_column: str = "prolonged_stay"
    target_kind: str = "auto"
    patient_column: str = "patient_id"
    time_column: str = "admit_time"
    age_column: str = ""
    schema: str = ""  # name:kind,name:kind ; empty infers
    split_train: float = 0.67
    split_test: float = 0.22
    split_validation: float = 0.11
    # selection
    smoothing: float = 0.5
    numeric_prebins: int = 10
    variance_threshold: float = 0.03
    correlation_threshold: float = 0.5
    correlation_mode: str = "absolute"
    iv_floor: float = 0.1
    max_bins: int = 6
    min_bin_fraction: float = 0.05
    min_class_count: int = 1
    max_prebins: int = 20
    monotonic: bool = False
    # model
    grid: tuple = (0.01, 0.1, 1.0, 10.0, 100.0)
    folds: int = 5
    tol: float = 1e-8
    max_iter: int = 1000
    rfe_target_count: int = 0  # 0: match the clique-IV feature count
    rfe_c: float = 1.0
    # evaluation
    bootstrap_iterations: int = 1000
    bootstrap_level: float = 0.95
    threshold: float = 0.5
    calibration_bins: int = 10
    # synthetic cohort, used when ``input`` is empty
    synth_n_records: int = 10_000
    synth_n_informative: int = 3
    synth_n_redundant: int = 2
    synth_n_noise: int = 20
    synth_category_counts: tuple = (4,)
    synth_effect_strengths: tuple = (2.5, 2.0, 1.5)
    synth_flip_prob: float = 0.1
    synth_base_log_odds: float = -0.85
    synth_n_numeric_noise: int = 0
    synth_repeat_patient_fraction: float = 0.1
    synth_missing_rate: float = 0.0

    def validate(self):
        unit = ["split_train", "split_test", "split_validation", "variance_threshold", "iv_floor",
                "min_bin_fraction", "threshold", "synth_flip_prob", "synth_repeat_patient_fraction",
                "synth_missing_rate"]
        for name in unit:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}={v} outside [0, 1]")
        if not 0.0 <= self.correlation_threshold < 1.0:
            raise ConfigError("correlation_threshold must lie in [0, 1)")
        if not 0.0 < self.bootstrap_level < 1.0:
            raise ConfigError("bootstrap_level must lie in (0, 1)")
        if abs(self.split_train + self.split_test + self.split_validation - 1.0) > 1e-9:
            raise ConfigError("split fractions must sum to 1")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be >= 0")
        if self.correlation_mode not in ("absolute", "signed"):
            raise ConfigError("correlation_mode must be 'absolute' or 'signed'")
        if self.target_kind not in ("auto", "binary", "los"):
            raise ConfigError("target_kind must be auto, binary or los")
        if not self.grid or any(c <= 0 for c in self.grid):
            raise ConfigError("grid needs positive C values")
        for name in ("numeric_prebins", "max_prebins"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be >= 2")
        if self.max_bins < 1 or self.folds < 2 or self.max_iter < 1 or self.calibration_bins < 1:
            raise ConfigError("max_bins >= 1, folds >= 2, max_iter >= 1 and calibration_bins >= 1 required")
        if self.bootstrap_iterations < 100:
            raise ConfigError("bootstrap_iterations must be >= 100")
        if self.rfe_target_count < 0 or self.min_class_count < 0:
            raise ConfigError("counts must be nonnegative")
        self.schema_dict()
        return self

    @property
    def fractions(self):
        return {"train": self.split_train, "test": self.split_test, "validation": self.split_validation}

    def schema_dict(self):
        if not self.schema.strip():
            return None
        out = {}
        for item in self.schema.split(","):
            name, sep, kind = item.strip().rpartition(":")
            if not sep or kind not in ("numeric", "categorical") or not name:
                raise ConfigError(f"bad schema entry {item!r}; expected name:numeric|categorical")
            out[name] = kind
        return out

    def optional(self, name):
        value = getattr(self, name)
        return value or None


_FIELDS = {f.name: f for f in fields(PipelineConfig)}


def _coerce(name, raw):
    default = _FIELDS[name].default
    kind = type(default) if name != "seed" else int
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if name == "synth_category_counts":
                return tuple(int(x) for x in items)
            return tuple(float(x) for x in items)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {name}={raw!r} as {kind.__name__}") from None


def parse_config_text(text):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def load_config(path=None, overrides=None):
    """Build a validated PipelineConfig from an optional file plus overrides."""
    values = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, value) if isinstance(value, str) else value
    if "seed" not in values:
        raise ConfigError("seed is mandatory")
    return PipelineConfig(**values).validate()


def dump_config(cfg):
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, bool):
            v = str(v).lower()
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def stage_seed(seed, stage):
    """Deterministic 32-bit seed for a named stage: sha256("<seed>:<stage>")."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def with_overrides(cfg, **changes):
    return replace(cfg, **changes).validate()

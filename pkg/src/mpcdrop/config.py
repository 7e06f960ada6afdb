"""Run configuration: line-oriented key = value files plus flag overrides.

Every field is validated up front; an invalid configuration aborts before
any protocol executes, so no partial output is ever written.
"""
from dataclasses import dataclass, fields, replace
from typing import Optional

from .errors import DomainError
from .ledger import CostTable
from .median import MedianConfig
from .pipeline import (DEFAULT_CIPHERTEXT_STAGES, NetProfile, PROFILES,
                       StageCostModel, StageSpec)
from .ring import RingParams
from .tokendrop import DropPlan


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit code 2)."""


_SCHEMES = ("baseline", "post", "pre", "all")
_PROFILES = ("lan", "wan", "mobile", "custom")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    ell: int = 64
    frac_bits: int = 12
    n_exp: int = 2
    score_offset: float = 8.0
    pivot_mode: str = "interp"
    divide_by_total: bool = False
    max_rounds: Optional[int] = None
    score_bound_bits: int = 14
    lambda_factor: int = 16
    # per-primitive cost-table overrides (defaults derive from ell)
    cmp_rounds: Optional[int] = None
    cmp_bytes: Optional[int] = None
    mux_rounds: Optional[int] = None
    mux_bytes: Optional[int] = None
    mul_bytes: Optional[int] = None
    recip_muls: Optional[int] = None
    recip_rounds: Optional[int] = None
    drop_layers: tuple = (1, 5, 8)
    layers: int = 12
    m0: int = 128
    d_model: int = 32
    heads: int = 4
    profile: str = "wan"
    bandwidth: Optional[float] = None
    latency: Optional[float] = None
    calibration: Optional[str] = None
    out_dir: str = "out"
    n_list: tuple = (8, 16, 32, 64, 128, 256)
    trials: int = 50
    scheme: str = "all"
    trace: bool = False
    trace_n: int = 16
    workers: int = 1
    toy_runs: int = 200
    toy_signal: int = 4
    toy_outlier_rows: int = 48
    toy_outlier_mag: float = 14.0

    # -- validation -----------------------------------------------------------

    def validate(self):
        try:
            RingParams(self.ell, self.frac_bits)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.n_exp < 1:
            raise ConfigError("n_exp must be >= 1")
        if self.pivot_mode not in ("interp", "avg"):
            raise ConfigError("pivot_mode must be 'interp' or 'avg'")
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"scheme must be one of {_SCHEMES}")
        if self.profile not in _PROFILES:
            raise ConfigError(f"profile must be one of {_PROFILES}")
        if self.profile == "custom" and (self.bandwidth is None or self.latency is None):
            raise ConfigError("custom profile requires bandwidth and latency")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.latency is not None and self.latency < 0:
            raise ConfigError("latency must be non-negative")
        if self.m0 < 2 or self.m0 & (self.m0 - 1):
            raise ConfigError("m0 must be a power of two >= 2")
        if any(n < 2 or n % 2 for n in self.n_list):
            raise ConfigError("benchmark lengths must be even and >= 2")
        if self.trace_n < 2 or self.trace_n % 2:
            raise ConfigError("trace_n must be even and >= 2")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if any(l < 1 or l > self.layers for l in self.drop_layers):
            raise ConfigError("drop_layers must lie in [1, layers]")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        for name in _TABLE_KEYS:
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.toy_runs < 1:
            raise ConfigError("toy_runs must be >= 1")
        if self.d_model % self.heads:
            raise ConfigError("d_model must be divisible by heads")
        try:
            DropPlan(self.drop_layers, self.layers).schedule(self.m0)
        except DomainError as e:
            raise ConfigError(str(e)) from None
        return self

    # -- derived objects --------------------------------------------------------

    def ring_params(self):
        return RingParams(self.ell, self.frac_bits)

    def cost_table(self):
        base = CostTable.default(self.ell, self.lambda_factor)
        overrides = {name: getattr(self, name)
                     for name in ("cmp_rounds", "cmp_bytes", "mux_rounds",
                                  "mux_bytes", "mul_bytes", "recip_muls",
                                  "recip_rounds")
                     if getattr(self, name) is not None}
        return replace(base, **overrides) if overrides else base

    def median_config(self):
        return MedianConfig(pivot_mode=self.pivot_mode,
                            divide_by_total=self.divide_by_total,
                            max_rounds=self.max_rounds,
                            score_bound_bits=self.score_bound_bits)

    def drop_plan(self):
        return DropPlan(self.drop_layers, self.layers)

    def net_profile(self):
        if self.profile == "custom":
            return NetProfile("custom", self.bandwidth, self.latency)
        return PROFILES[self.profile]

    def stage_model(self):
        if self.calibration is None:
            return StageCostModel()
        return load_calibration(self.calibration)

    def schemes(self):
        if self.scheme == "all":
            return ("baseline", "post_drop", "pre_drop")
        return {"baseline": ("baseline",), "post": ("post_drop",),
                "pre": ("pre_drop",)}[self.scheme]


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}

_TABLE_KEYS = ("cmp_rounds", "cmp_bytes", "mux_rounds", "mux_bytes",
               "mul_bytes", "recip_muls", "recip_rounds")


def _parse_value(name, raw, target_type):
    raw = raw.strip()
    if target_type is bool:
        if raw.lower() not in _BOOL:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if target_type is tuple:
        return tuple(int(tok) for tok in raw.replace(",", " ").split())
    if target_type is int:
        return int(raw, 0)
    if target_type is float:
        return float(raw)
    return raw


def parse_kv(text):
    """Parse line-oriented `key = value` text; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_OPTIONAL_NUMERIC = {"max_rounds": int, "bandwidth": float, "latency": float,
                     **{k: int for k in _TABLE_KEYS}}


def config_from_mapping(mapping, base: RunConfig = None) -> RunConfig:
    cfg = base or RunConfig()
    known = {f.name: f for f in fields(RunConfig)}
    updates = {}
    for key, raw in mapping.items():
        if key not in known:
            raise ConfigError(f"unknown configuration key {key!r}")
        if key in _OPTIONAL_NUMERIC:
            updates[key] = _parse_value(key, raw, _OPTIONAL_NUMERIC[key])
            continue
        default = getattr(RunConfig(), key)
        target = type(default) if default is not None else str
        try:
            updates[key] = _parse_value(key, raw, target)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{key}: {e}") from None
    return replace(cfg, **updates)


def load_config(path, base: RunConfig = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return config_from_mapping(parse_kv(text), base)


def load_calibration(path) -> StageCostModel:
    """Stage calibration file: `<stage>.<field> = value` plus model scalars."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            kv = parse_kv(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read calibration {path}: {e}") from None
    specs = {s.name: {"law": s.law, "share": s.share, "comm_frac": s.comm_frac,
                      "rounds": s.rounds} for s in DEFAULT_CIPHERTEXT_STAGES}
    scalars = {"ref_m": 128, "ref_seconds": 450.0, "ref_comm_bps": 200e6,
               "softmax_ph1_share": 0.82}
    for key, raw in kv.items():
        if key in scalars:
            scalars[key] = float(raw) if "." in raw or "e" in raw else int(raw)
            continue
        if "." not in key:
            raise ConfigError(f"unknown calibration key {key!r}")
        stage, attr = key.split(".", 1)
        if stage not in specs or attr not in ("law", "share", "comm_frac", "rounds"):
            raise ConfigError(f"unknown calibration key {key!r}")
        if attr == "law":
            if raw not in ("linear", "quadratic"):
                raise ConfigError("law must be linear or quadratic")
            specs[stage][attr] = raw
        elif attr == "rounds":
            specs[stage][attr] = int(raw)
        else:
            specs[stage][attr] = float(raw)
    stages = tuple(StageSpec(name, d["law"], d["share"], d["comm_frac"], d["rounds"])
                   for name, d in specs.items())
    try:
        return StageCostModel(stages=stages, ref_m=int(scalars["ref_m"]),
                              ref_seconds=float(scalars["ref_seconds"]),
                              ref_comm_bps=float(scalars["ref_comm_bps"]),
                              softmax_ph1_share=float(scalars["softmax_ph1_share"]))
    except DomainError as e:
        raise ConfigError(str(e)) from None

"""Run configuration: a flat key/value YAML file whose keys are the RunConfig field names."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .geometry import Waveguide
from .ltv_core import CirKind, SynthesisOptions
from .scenarios import CaseKind, CaseSpec
from .static_channel import FrequencyGrid


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # waveguide
    depth_w: float = 18.0
    sound_speed_c: float = 1500.0
    bottom_speed_cb: float = 1300.0
    bottom_density_rho_b: float = 1800.0  # kg/m^3
    water_density_rho: float = 1000.0
    spreading_exponent_k: float = 1.5
    max_reflections_pmax: int = 10
    absorption: str = "thorp"
    # transceivers and cases
    height_tx: float = 12.0
    height_rx: float = 12.0
    d0: float = 100.0
    v: float = 51.2
    a0: float = 0.0
    cases: list = field(default_factory=lambda: [k.value for k in CaseKind])
    sweep_m: float = 1.0
    # sampling
    f_max: float = 128e3
    n_bins: int = 2 ** 17 + 1
    fs: float = 256e3
    # synthesis
    cache_quantum: float = 0.01
    kernel_halfwidth: int = 32
    reference_frequency: float | None = None
    energy_floor_db: float = -60.0
    n_stride: int = 0  # 0: one row per centimetre of relative displacement
    workers: int = 1
    # analysis
    arrival_threshold_db: float = -20.0
    verify_tolerance: float | None = None  # seconds; None: one sample period
    # filtering
    structure: str = "type1"
    filter_case: str = "MovingRx"
    # output
    out_dir: str = "out"
    output_format: str = "text"

    def __post_init__(self):
        self.validate()

    def validate(self):
        try:
            self.waveguide()
            self.frequency_grid()
            self.options()
            for kind in self.cases:
                CaseKind(kind)
            CaseKind(self.filter_case)
            CirKind(self.structure)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.fs > 0:
            raise ConfigError("fs must be positive")
        if not 0 <= self.v < self.sound_speed_c:
            raise ConfigError("need 0 <= v < sound_speed_c")
        if not self.d0 > 0:
            raise ConfigError("d0 must be positive")
        if self.n_stride < 0:
            raise ConfigError("n_stride must be >= 0")
        if not self.sweep_m >= 0:
            raise ConfigError("sweep_m must be >= 0")
        if self.cache_quantum <= 0:
            raise ConfigError("cache_quantum must be positive")
        if self.output_format not in ("text", "binary"):
            raise ConfigError("output_format must be 'text' or 'binary'")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for h in (self.height_tx, self.height_rx):
            if not 0 <= h <= self.depth_w:
                raise ConfigError(f"height {h} outside the water column")

    # -- derived objects ----------------------------------------------------
    def waveguide(self) -> Waveguide:
        return Waveguide(self.depth_w, self.sound_speed_c, self.bottom_speed_cb,
                         self.bottom_density_rho_b, self.water_density_rho,
                         self.spreading_exponent_k, self.max_reflections_pmax)

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.f_max, self.n_bins)

    def options(self) -> SynthesisOptions:
        return SynthesisOptions(self.kernel_halfwidth, self.reference_frequency,
                                self.energy_floor_db, self.absorption)

    def duration_samples(self) -> int:
        if self.v == 0:
            return 0
        return int(round(self.sweep_m / self.v * self.fs))

    def stride(self) -> int:
        if self.n_stride:
            return self.n_stride
        if self.v == 0:
            return 1
        return max(1, int(round(0.01 / self.v * self.fs)))

    def case(self, kind, **overrides) -> CaseSpec:
        spec = dict(kind=CaseKind(kind), d0=self.d0, v=self.v, wg=self.waveguide(),
                    height_tx=self.height_tx, height_rx=self.height_rx, fs=self.fs,
                    duration=self.duration_samples(), a0=self.a0, options=self.options())
        spec.update(overrides)
        return CaseSpec(**spec)

    def tolerance(self) -> float:
        return 1.0 / self.fs if self.verify_tolerance is None else self.verify_tolerance

    def digest(self) -> str:
        """SHA-256 over every field that affects results (``out_dir`` excluded)."""
        d = dataclasses.asdict(self)
        d.pop("out_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _coerce(name: str, value):
    f = next(f for f in fields(RunConfig) if f.name == name)
    default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
    if value is None:
        return None
    if name == "cases":
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        return list(value)
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int) and not isinstance(default, bool):
        fv = float(value)
        if fv != int(fv):
            raise ConfigError(f"{name} must be an integer")
        return int(fv)
    if isinstance(default, float) or name in ("reference_frequency", "verify_tolerance"):
        return float(value)
    return str(value)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Read ``path`` (if any) and apply ``overrides``; unknown keys are errors."""
    values = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a flat key/value mapping")
        values.update(data)
    values.update(overrides or {})
    unknown = set(values) - FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, val in values.items():
        if isinstance(val, dict):
            raise ConfigError(f"{key}: nested values are not allowed")
    return RunConfig(**{k: _coerce(k, v) for k, v in values.items()})


def parse_assignment(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"expected KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)

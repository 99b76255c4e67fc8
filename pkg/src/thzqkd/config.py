"""Experiment configuration.

A single JSON document; every key is optional and defaults reproduce the
baseline link (15 THz, 32x32, 20 m, 60 dB pilots). Quantities given in dB
(``pilot_power_db``, ``element_gain_dbi``) are converted once, here.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .channel import ArrayGeometry, LinkEnvironment, PathComponent, thermal_variance
from .errors import InvalidConfigError, ThzQkdError
from .keygen import DetectionScheme
from .pilot import RANK_TOLERANCE, PilotConfig

_VARIANT_ALIASES = {"ub": "upper_bound", "upper-bound": "upper_bound"}


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    # link
    carrier_hz: float = 15e12
    distance_m: float = 20.0
    n_tx: int = 32
    n_rx: int = 32
    element_gain_dbi: float = 30.0
    absorption_db_per_km: float = 50.0
    temperature_k: float = 296.0
    aoa_rad: float = 0.0
    aod_rad: float = 0.0
    spacing_tx_m: float | None = None
    spacing_rx_m: float | None = None
    nlos_paths: tuple = ()
    # protocol
    pilot_power_db: float = 60.0
    pilot_len: int | None = None
    coherence_time: float = 5e5
    v_s: float = 1.0
    eve_noise: float = 1.0
    v_el: float = 0.01
    recon_eff: float = 0.95
    rank_tolerance: float = RANK_TOLERANCE
    # what to evaluate
    attacks: tuple = ("individual", "collective")
    detections: tuple = ("homodyne",)
    variants: tuple = ("exact",)
    mode: str = "ml"
    trials: int = 100
    seed: int = 0
    workers: int = 1
    # sweep grids
    distance_grid: tuple = field(default_factory=lambda: tuple(float(d) for d in range(1, 41)))
    pilot_len_grid: tuple = (300, 500, 1000, 2000, 4000, 8000)
    pilot_power_db_grid: tuple = tuple(float(x) for x in range(40, 95, 5))
    sigma_h_grid: tuple = tuple(10.0 ** (k / 4.0) for k in range(-36, -7))

    def __post_init__(self):
        for name in ("attacks", "detections", "variants", "distance_grid", "pilot_len_grid",
                     "pilot_power_db_grid", "sigma_h_grid", "nlos_paths"):
            value = getattr(self, name)
            if isinstance(value, (str, bytes)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        object.__setattr__(
            self, "variants", tuple(_VARIANT_ALIASES.get(v, v) for v in self.variants)
        )
        self._validate()

    def _validate(self):
        if self.trials < 1:
            raise InvalidConfigError("trials must be >= 1")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        if self.mode not in ("genie", "ml"):
            raise InvalidConfigError(f"mode must be 'genie' or 'ml', got {self.mode!r}")
        bad = set(self.attacks) - {"individual", "collective"}
        if bad or not self.attacks:
            raise InvalidConfigError(f"invalid attack set {self.attacks!r}")
        bad = set(self.detections) - {"homodyne", "heterodyne"}
        if bad or not self.detections:
            raise InvalidConfigError(f"invalid detection set {self.detections!r}")
        bad = set(self.variants) - {"exact", "approx", "upper_bound"}
        if bad or not self.variants:
            raise InvalidConfigError(f"invalid variant set {self.variants!r}")
        if not 0 < self.recon_eff <= 1:
            raise InvalidConfigError("recon_eff must lie in (0, 1]")
        if self.eve_noise < 1:
            raise InvalidConfigError("eve_noise must be >= 1")
        if self.v_el < 0 or self.v_s < 0:
            raise InvalidConfigError("v_el and v_s must be nonnegative")
        if not self.resolved_pilot_len < self.coherence_time:
            raise InvalidConfigError("pilot length must be shorter than the coherence time")
        try:
            self.environment()
            self.tx_array()
            self.rx_array()
            self.pilot_config()
        except ThzQkdError as exc:
            raise InvalidConfigError(str(exc)) from exc

    # ----------------------------------------------------------- derived

    @property
    def resolved_pilot_len(self) -> int:
        return self.n_tx + 500 if self.pilot_len is None else int(self.pilot_len)

    @property
    def pilot_power(self) -> float:
        return db_to_linear(self.pilot_power_db)

    @property
    def v_0(self) -> float:
        return thermal_variance(self.carrier_hz, self.temperature_k)

    @property
    def v_a(self) -> float:
        return self.v_s + self.v_0

    def tx_array(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_tx, self.spacing_tx_m, self.element_gain_dbi)

    def rx_array(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_rx, self.spacing_rx_m, self.element_gain_dbi)

    def environment(self) -> LinkEnvironment:
        paths = [PathComponent(self.distance_m, self.aoa_rad, self.aod_rad, is_los=True)]
        for p in self.nlos_paths:
            entry = dict(p)
            entry["is_los"] = False
            paths.append(PathComponent(**entry))
        return LinkEnvironment(self.carrier_hz, self.absorption_db_per_km, self.temperature_k, paths)

    def pilot_config(self) -> PilotConfig:
        return PilotConfig(self.pilot_power, self.resolved_pilot_len, self.n_tx)

    def detection(self, kind: str) -> DetectionScheme:
        return DetectionScheme(kind, self.v_el)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # ----------------------------------------------------------- io

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
            elif isinstance(v, float) and math.isinf(v):
                out[k] = str(v)
        return out

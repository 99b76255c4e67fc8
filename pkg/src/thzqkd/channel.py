"""Deterministic THz MIMO channel synthesis.

Uniform linear arrays at both ends, a LoS path plus optional NLoS
reflections, free-space spreading, per-element antenna gain and molecular
absorption given in dB/km.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

SPEED_OF_LIGHT = 299_792_458.0
PLANCK = 6.62607015e-34
BOLTZMANN = 1.380649e-23


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array.

    ``spacing`` of ``None`` means half a wavelength at the carrier; it is
    resolved by :meth:`spacing_at`.
    """

    n_elements: int
    spacing: float | None = None
    element_gain_dbi: float = 0.0

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise InvalidInputError(f"n_elements must be a positive integer, got {self.n_elements!r}")
        if self.spacing is not None and not (math.isfinite(self.spacing) and self.spacing > 0):
            raise InvalidInputError(f"spacing must be positive, got {self.spacing!r}")
        if not math.isfinite(self.element_gain_dbi):
            raise InvalidInputError("element_gain_dbi must be finite")

    def spacing_at(self, wavelength_m: float) -> float:
        return wavelength_m / 2.0 if self.spacing is None else self.spacing

    @property
    def array_gain(self) -> float:
        """Linear array gain ``N * 10**(G_a/10)``."""
        return self.n_elements * 10.0 ** (self.element_gain_dbi / 10.0)


@dataclass(frozen=True)
class PathComponent:
    path_length_m: float
    aoa_rad: float = 0.0
    aod_rad: float = 0.0
    is_los: bool = True
    roughness: float = 1.0
    fresnel_coeff: float = 1.0
    delay_s: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.path_length_m) and self.path_length_m > 0):
            raise InvalidInputError(f"path_length_m must be positive, got {self.path_length_m!r}")
        if not self.is_los:
            if not 0.0 <= self.roughness <= 1.0:
                raise InvalidInputError(f"roughness must lie in [0, 1], got {self.roughness!r}")
            if abs(self.fresnel_coeff) > 1.0:
                raise InvalidInputError(f"|fresnel_coeff| must be <= 1, got {self.fresnel_coeff!r}")
        for name in ("aoa_rad", "aod_rad"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"{name} must be finite")

    @property
    def delay(self) -> float:
        return self.path_length_m / SPEED_OF_LIGHT if self.delay_s is None else self.delay_s


@dataclass(frozen=True)
class LinkEnvironment:
    carrier_hz: float
    absorption_db_per_km: float
    temperature_k: float
    paths: tuple[PathComponent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not (math.isfinite(self.carrier_hz) and self.carrier_hz > 0):
            raise InvalidInputError("carrier_hz must be positive")
        if not (math.isfinite(self.absorption_db_per_km) and self.absorption_db_per_km >= 0):
            raise InvalidInputError("absorption_db_per_km must be nonnegative")
        if not (math.isfinite(self.temperature_k) and self.temperature_k > 0):
            raise InvalidInputError("temperature_k must be positive")
        if not self.paths:
            raise InvalidInputError("at least one path is required")
        if any(p.is_los for p in self.paths[1:]):
            raise InvalidInputError("only the first path may be line-of-sight")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


def array_response(angle_rad, n_elements, spacing_m, wavelength_m):
    """Unit-norm ULA steering vector.

    Parameters
    ----------
    angle_rad : float
        Arrival or departure angle measured from broadside.
    n_elements : int
    spacing_m, wavelength_m : float

    Returns
    -------
    ndarray of complex128, shape (n_elements,)
    """
    if not math.isfinite(angle_rad):
        raise InvalidInputError(f"angle must be finite, got {angle_rad!r}")
    if n_elements < 1:
        raise InvalidInputError("n_elements must be >= 1")
    if not wavelength_m > 0:
        raise InvalidInputError("wavelength must be positive")
    k = np.arange(n_elements)
    phase = 2.0 * np.pi / wavelength_m * spacing_m * math.sin(angle_rad)
    return np.exp(1j * phase * k) / math.sqrt(n_elements)


def path_loss(path: PathComponent, env: LinkEnvironment, tx: ArrayGeometry, rx: ArrayGeometry) -> float:
    """Power gain of one path including array gains and absorption."""
    if not path.path_length_m > 0:
        raise InvalidInputError("path_length_m must be positive")
    lam = env.wavelength
    spread = (lam / (4.0 * math.pi * path.path_length_m)) ** 2
    # absorption is specified per km
    absorb = 10.0 ** (-0.1 * env.absorption_db_per_km * path.path_length_m / 1000.0)
    gamma = spread * tx.array_gain * rx.array_gain * absorb
    if not path.is_los:
        gamma *= path.roughness * abs(path.fresnel_coeff)
    return gamma


def path_loss_db(path: PathComponent, env: LinkEnvironment, tx: ArrayGeometry, rx: ArrayGeometry) -> float:
    """Same link budget as :func:`path_loss`, summed in dB."""
    lam = env.wavelength
    fspl_db = 20.0 * math.log10(4.0 * math.pi * path.path_length_m / lam)
    gains_db = (
        10.0 * math.log10(tx.n_elements) + tx.element_gain_dbi
        + 10.0 * math.log10(rx.n_elements) + rx.element_gain_dbi
    )
    absorb_db = env.absorption_db_per_km * path.path_length_m / 1000.0
    total = gains_db - fspl_db - absorb_db
    if not path.is_los:
        total += 10.0 * math.log10(path.roughness * abs(path.fresnel_coeff))
    return total


def build_channel(env: LinkEnvironment, tx: ArrayGeometry, rx: ArrayGeometry) -> np.ndarray:
    """Sum of rank-one path contributions, shape ``(N_r, N_t)``."""
    lam = env.wavelength
    d_t = tx.spacing_at(lam)
    d_r = rx.spacing_at(lam)
    h = np.zeros((rx.n_elements, tx.n_elements), dtype=np.complex128)
    for p in env.paths:
        amp = math.sqrt(path_loss(p, env, tx, rx))
        if not p.is_los and p.fresnel_coeff < 0:
            amp = -amp
        phase = np.exp(2j * np.pi * env.carrier_hz * p.delay)
        psi_r = array_response(p.aoa_rad, rx.n_elements, d_r, lam)
        psi_t = array_response(p.aod_rad, tx.n_elements, d_t, lam)
        h += amp * phase * np.outer(psi_r, psi_t.conj())
    return h


def thermal_variance(carrier_hz: float, temperature_k: float) -> float:
    """Preparation noise variance ``2 n + 1`` in shot-noise units."""
    if not (carrier_hz > 0 and math.isfinite(carrier_hz)):
        raise InvalidInputError("carrier_hz must be positive")
    if not temperature_k > 0:
        raise InvalidInputError(f"temperature must be positive, got {temperature_k!r}")
    x = PLANCK * carrier_hz / (BOLTZMANN * temperature_k)
    nbar = 1.0 / math.expm1(x) if x < 700.0 else 0.0
    return 2.0 * nbar + 1.0

"""Key-generation phase: SVD beamforming over the estimated channel.

The ``r`` parallel channels are treated as independent real Gaussian
channels per quadrature,

    X_B = sqrt(T) X_A + sqrt(1 - T) X_E - n_h + n_det,

with the estimation noise ``n_h`` lumped from the diagonal of ``C_h``.
Cross-channel leakage of ``U^† H V`` is reported separately by
:func:`leakage`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLinkError, InvalidInputError
from .pilot import ChannelEstimate, NoiseCovariances, PilotConfig, dft_pilot, simulate_pilot_phase


@dataclass(frozen=True)
class DetectionScheme:
    kind: str  # "homodyne" | "heterodyne"
    v_el: float = 0.0

    def __post_init__(self):
        if self.kind not in ("homodyne", "heterodyne"):
            raise InvalidInputError(f"unknown detection {self.kind!r}")
        if not (math.isfinite(self.v_el) and self.v_el >= 0):
            raise InvalidInputError("v_el must be nonnegative")

    @property
    def d(self) -> int:
        return 1 if self.kind == "homodyne" else 2

    @property
    def sigma_det_sq(self) -> float:
        return self.d * (1.0 + self.v_el) - 1.0

    @classmethod
    def homodyne(cls, v_el=0.0):
        return cls("homodyne", v_el)

    @classmethod
    def heterodyne(cls, v_el=0.0):
        return cls("heterodyne", v_el)


@dataclass(frozen=True)
class KeygenLink:
    transmittances: np.ndarray
    sigma_h_sq: np.ndarray
    detection: DetectionScheme
    v_s: float
    v_0: float
    eve_noise: float = 1.0
    overhead: float = 1.0
    recon_eff: float = 1.0

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.transmittances, dtype=np.float64))
        s = np.atleast_1d(np.asarray(self.sigma_h_sq, dtype=np.float64))
        object.__setattr__(self, "transmittances", t)
        object.__setattr__(self, "sigma_h_sq", s)
        if t.shape != s.shape:
            raise InvalidInputError("transmittances and sigma_h_sq must have equal length")
        if np.any((t < 0) | (t > 1)) or not np.all(np.isfinite(t)):
            raise InvalidInputError("transmittances must lie in [0, 1]")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise InvalidInputError("sigma_h_sq must be nonnegative")
        if not self.eve_noise >= 1.0:
            raise InvalidInputError(f"eve_noise W must be >= 1, got {self.eve_noise!r}")
        if not self.v_s >= 0 or not self.v_0 >= 1.0:
            raise InvalidInputError("need V_s >= 0 and V_0 >= 1")
        if not self.v_a > 1.0:
            raise InvalidInputError("V_a = V_s + V_0 must exceed 1")
        if not 0.0 < self.overhead <= 1.0:
            raise InvalidInputError(f"overhead must lie in (0, 1], got {self.overhead!r}")
        if not 0.0 < self.recon_eff <= 1.0:
            raise InvalidInputError(f"recon_eff must lie in (0, 1], got {self.recon_eff!r}")

    @property
    def v_a(self) -> float:
        return self.v_s + self.v_0

    @property
    def sigma_det_sq(self) -> float:
        return self.detection.sigma_det_sq

    @property
    def rank(self) -> int:
        return int(self.transmittances.size)

    def replace(self, **changes) -> "KeygenLink":
        fields = dict(
            transmittances=self.transmittances,
            sigma_h_sq=self.sigma_h_sq,
            detection=self.detection,
            v_s=self.v_s,
            v_0=self.v_0,
            eve_noise=self.eve_noise,
            overhead=self.overhead,
            recon_eff=self.recon_eff,
        )
        fields.update(changes)
        return KeygenLink(**fields)


def build_keygen_link(
    est: ChannelEstimate,
    noise: NoiseCovariances,
    det: DetectionScheme,
    *,
    v_s: float,
    v_0: float,
    eve_noise: float = 1.0,
    pilot_len: int = 0,
    coherence_time: float = math.inf,
    recon_eff: float = 1.0,
) -> KeygenLink:
    r = est.rank
    if r == 0:
        raise DegenerateLinkError("estimated channel has rank 0")
    if noise.sigma_h_sq.size < r:
        raise InvalidInputError("noise covariances cover fewer channels than the estimate rank")
    overhead = 1.0 - pilot_len / coherence_time
    return KeygenLink(
        transmittances=est.transmittances[:r],
        sigma_h_sq=noise.sigma_h_sq[:r],
        detection=det,
        v_s=v_s,
        v_0=v_0,
        eve_noise=eve_noise,
        overhead=overhead,
        recon_eff=recon_eff,
    )


def leakage(h_true: np.ndarray, est: ChannelEstimate) -> float:
    """Frobenius norm of the off-diagonal part of ``U^† H V``."""
    g = est.u.conj().T @ h_true @ est.v
    return float(np.linalg.norm(g - np.diag(np.diag(g))))


@dataclass(frozen=True)
class KeygenSamples:
    x_a: np.ndarray  # (n_rounds, r)
    x_b: np.ndarray
    leakage: float


def simulate_keygen_round(
    h_true: np.ndarray,
    est: ChannelEstimate,
    link: KeygenLink,
    seed=None,
    *,
    n_rounds: int = 1,
    noiseless: bool = False,
) -> KeygenSamples:
    """Draw quadrature pairs from the per-channel input-output model.

    ``noiseless`` zeroes Eve's mode, the estimation noise and the detector
    noise; Alice's quadrature keeps variance ``V_a``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    r = link.rank
    t = link.transmittances
    x_a = math.sqrt(link.v_a) * rng.standard_normal((n_rounds, r))
    x_b = np.sqrt(t) * x_a
    if not noiseless:
        x_e = math.sqrt(link.eve_noise) * rng.standard_normal((n_rounds, r))
        n_h = np.sqrt(link.sigma_h_sq) * rng.standard_normal((n_rounds, r))
        n_det = math.sqrt(link.sigma_det_sq) * rng.standard_normal((n_rounds, r))
        x_b = x_b + np.sqrt(1.0 - t) * x_e - n_h + n_det
    return KeygenSamples(x_a=x_a, x_b=x_b, leakage=leakage(h_true, est))


def sample_estimation_noise(
    h_true: np.ndarray,
    est: ChannelEstimate,
    cfg: PilotConfig,
    v0: float,
    v_el: float,
    v_a: float,
    seed=None,
    *,
    n_phases: int = 1000,
    per_phase: int = 100,
) -> np.ndarray:
    """Monte Carlo draws of ``n_h = U^† (H_LS - H) V a_A`` with ``U, V`` held fixed.

    Each of ``n_phases`` fresh pilot phases yields one error matrix, which is
    applied to ``per_phase`` independent Alice vectors with complex
    covariance ``2 V_a I``. Returns an array of shape
    ``(n_phases * per_phase, m)``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x_p = dft_pilot(cfg)
    clean = h_true @ x_p
    out = []
    for _ in range(n_phases):
        rec = simulate_pilot_phase(h_true, cfg, v0, v_el, rng)
        delta_h = (rec.received - clean) @ x_p.conj().T / cfg.energy
        a = math.sqrt(v_a) * (
            rng.standard_normal((cfg.n_tx, per_phase)) + 1j * rng.standard_normal((cfg.n_tx, per_phase))
        )
        out.append((est.u.conj().T @ delta_h @ est.v @ a).T)
    return np.concatenate(out, axis=0)

"""Pilot transmission, least-squares channel estimation and noise covariance.

All complex quantities follow the convention that a mode whose two
quadratures each have variance ``V`` has complex covariance ``2 V I``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericError, PilotRankError

RANK_TOLERANCE = 1e-8


@dataclass(frozen=True)
class PilotConfig:
    pilot_power: float  # linear, shot-noise units
    pilot_len: int
    n_tx: int

    def __post_init__(self):
        if not (math.isfinite(self.pilot_power) and self.pilot_power > 0):
            raise InvalidInputError(f"pilot_power must be positive, got {self.pilot_power!r}")
        if self.n_tx < 1:
            raise InvalidInputError("n_tx must be >= 1")
        if self.pilot_len < self.n_tx:
            raise PilotRankError(
                f"pilot length {self.pilot_len} is shorter than the {self.n_tx} transmit antennas"
            )

    @property
    def energy(self) -> float:
        """``V_p * T_p``, the per-row pilot energy."""
        return self.pilot_power * self.pilot_len


@dataclass(frozen=True)
class PilotPhaseRecord:
    pilot_matrix: np.ndarray
    received: np.ndarray
    rng_seed: int | None
    cfg: PilotConfig


@dataclass(frozen=True)
class ChannelEstimate:
    h_ls: np.ndarray
    u: np.ndarray
    v: np.ndarray
    singular_values: np.ndarray
    transmittances: np.ndarray
    rank: int


@dataclass(frozen=True)
class NoiseCovariances:
    c_n: np.ndarray
    c_h: np.ndarray
    sigma_h_sq: np.ndarray


def dft_pilot(cfg: PilotConfig) -> np.ndarray:
    """Scaled DFT pilot with orthogonal rows, shape ``(N_t, T_p)``."""
    if cfg.pilot_len < cfg.n_tx:
        raise PilotRankError("pilot length must be >= number of transmit antennas")
    m = np.arange(cfg.n_tx)[:, None]
    t = np.arange(cfg.pilot_len)[None, :]
    # reduce the exponent modulo T_p before scaling to keep phases exact
    k = (m * t) % cfg.pilot_len
    return math.sqrt(cfg.pilot_power) * np.exp(2j * np.pi * k / cfg.pilot_len)


def true_noise_covariance(h: np.ndarray, v0: float, v_el: float) -> np.ndarray:
    """Column covariance of ``H X_0 + N_het``: ``2 V_0 H H^† + 2(2 v_el + 1) I``."""
    n_r = h.shape[0]
    return 2.0 * v0 * (h @ h.conj().T) + 2.0 * (2.0 * v_el + 1.0) * np.eye(n_r)


def _complex_normal(rng, shape, quad_var):
    scale = math.sqrt(quad_var)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_pilot_phase(
    h: np.ndarray,
    cfg: PilotConfig,
    v0: float,
    v_el: float,
    seed=None,
    *,
    noiseless: bool = False,
) -> PilotPhaseRecord:
    """Received pilot block ``Y_p = H X_p + H X_0 + N_het``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    ``noiseless=True`` skips both noise terms (exactness tests only).
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.shape[1] != cfg.n_tx:
        raise InvalidInputError(f"channel has {h.shape[1]} columns, pilot expects {cfg.n_tx}")
    x_p = dft_pilot(cfg)
    y = h @ x_p
    if not noiseless:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        x0 = _complex_normal(rng, (cfg.n_tx, cfg.pilot_len), v0)
        n_het = _complex_normal(rng, (h.shape[0], cfg.pilot_len), 2.0 * v_el + 1.0)
        y = y + h @ x0 + n_het
    rec_seed = seed if isinstance(seed, (int, np.integer)) else None
    return PilotPhaseRecord(pilot_matrix=x_p, received=y, rng_seed=rec_seed, cfg=cfg)


def decompose(h_ls: np.ndarray, rank_tolerance: float = RANK_TOLERANCE) -> ChannelEstimate:
    """Thin SVD of an estimate plus clamped transmittances and numerical rank."""
    if not np.all(np.isfinite(h_ls)):
        raise NumericError("channel estimate contains non-finite entries")
    try:
        u, s, vh = np.linalg.svd(h_ls, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > rank_tolerance * smax)) if smax > 0 else 0
    return ChannelEstimate(
        h_ls=h_ls,
        u=u,
        v=vh.conj().T,
        singular_values=s,
        transmittances=np.clip(s * s, 0.0, 1.0),
        rank=rank,
    )


def ls_estimate(rec: PilotPhaseRecord, rank_tolerance: float = RANK_TOLERANCE) -> ChannelEstimate:
    """``H_LS = Y_p X_p^+`` using ``X_p^+ = X_p^† / (V_p T_p)``."""
    h_ls = rec.received @ rec.pilot_matrix.conj().T / rec.cfg.energy
    return decompose(h_ls, rank_tolerance)


def ml_noise_covariance(rec: PilotPhaseRecord, est: ChannelEstimate) -> np.ndarray:
    """Sample covariance of the pilot residuals ``y_t - H_LS x_t``."""
    resid = rec.received - est.h_ls @ rec.pilot_matrix
    c = resid @ resid.conj().T / rec.cfg.pilot_len
    return 0.5 * (c + c.conj().T)


def estimation_error_covariance(
    c_n: np.ndarray, est: ChannelEstimate, v_a: float, cfg: PilotConfig
) -> NoiseCovariances:
    """Covariance of the beamformed estimation-error noise.

    ``C_h = 2 V_a N_t / (V_p T_p) * U^† C_n U``; the per-channel quadrature
    variances are half its diagonal, for the first ``rank`` channels.
    """
    c_n = np.asarray(c_n, dtype=np.complex128)
    n_r = est.u.shape[0]
    if c_n.shape != (n_r, n_r):
        raise InvalidInputError(f"c_n has shape {c_n.shape}, expected {(n_r, n_r)}")
    if est.v.shape[0] != cfg.n_tx:
        raise InvalidInputError("estimate and pilot config disagree on N_t")
    scale = 2.0 * v_a * cfg.n_tx / cfg.energy
    c_h = scale * (est.u.conj().T @ c_n @ est.u)
    c_h = 0.5 * (c_h + c_h.conj().T)
    sigma = 0.5 * np.real(np.diag(c_h))[: est.rank]
    return NoiseCovariances(c_n=c_n, c_h=c_h, sigma_h_sq=np.maximum(sigma, 0.0))

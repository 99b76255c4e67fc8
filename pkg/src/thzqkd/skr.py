"""Secret key rates under individual and collective Gaussian attacks.

Reverse reconciliation throughout. Rates are in bits per channel use; each
parallel channel is clamped at zero before summation and the unclamped
values are kept in ``SkrReport.unclamped``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DomainError, InvalidInputError, NumericError
from .keygen import DetectionScheme, KeygenLink

EIG_CLAMP_TOL = 1e-6
H_DOMAIN_TOL = 1e-9
DISC_TOL = 1e-9

ATTACKS = ("individual", "collective")
VARIANTS = ("exact", "approx", "upper_bound")


@dataclass
class SkrReport:
    per_channel_rates: np.ndarray
    unclamped: np.ndarray
    variant: str
    attack: str
    detection: DetectionScheme | None
    diagnostics: dict = field(default_factory=dict)

    @property
    def total_rate(self) -> float:
        return float(np.sum(self.per_channel_rates))


def _report(raw, overhead, variant, attack, detection, diagnostics):
    raw = overhead * np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise NumericError(f"non-finite {attack}/{variant} rate: {raw}")
    return SkrReport(
        per_channel_rates=np.maximum(raw, 0.0),
        unclamped=raw,
        variant=variant,
        attack=attack,
        detection=detection,
        diagnostics=diagnostics,
    )


def _check_index(link, i):
    if not 0 <= i < link.rank:
        raise IndexError(f"channel index {i} out of range for rank {link.rank}")


def _arrays(link):
    return link.transmittances, link.sigma_h_sq


def lambda_mix(t, x, y):
    """Transmittance-weighted mix ``t x + (1 - t) y``."""
    return t * x + (1.0 - t) * y


# ------------------------------------------------------------ entropy helpers

def h_entropy(x):
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue ``x``."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 1.0 - H_DOMAIN_TOL) or np.any(np.isnan(arr)):
        raise DomainError(f"h(x) requires x >= 1, got {x!r}")
    out = kernels.h_entropy(np.maximum(np.atleast_1d(arr), 1.0))
    return float(out[0]) if arr.ndim == 0 else out


def _clamp_symplectic(x, what):
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(x)):
        raise NumericError(f"{what}: negative radicand")
    if np.any(x < 1.0 - EIG_CLAMP_TOL):
        raise NumericError(f"{what} below 1 ({x.min()!r}); parameters are unphysical")
    return np.maximum(x, 1.0)


# ------------------------------------------------------------ individual

def _individual_terms(link: KeygenLink):
    t, s = _arrays(link)
    d = float(link.detection.d)
    i_ab = kernels.mutual_info(t, s, link.sigma_det_sq, d, link.v_s, link.v_0, link.eve_noise)
    i_be = kernels.eve_info_individual(t, s, link.sigma_det_sq, d, link.v_a, link.eve_noise)
    return i_ab, i_be


def mutual_info_ab(link: KeygenLink, i: int) -> float:
    """Alice-Bob Shannon information of parallel channel ``i`` (bits)."""
    _check_index(link, i)
    return float(_individual_terms(link)[0][i])


def eve_info_individual(link: KeygenLink, i: int) -> float:
    """Eve-Bob Shannon information of channel ``i`` in reverse reconciliation."""
    _check_index(link, i)
    return float(_individual_terms(link)[1][i])


def skr_individual(link: KeygenLink) -> SkrReport:
    i_ab, i_be = _individual_terms(link)
    raw = link.recon_eff * i_ab - i_be
    return _report(raw, link.overhead, "exact", "individual", link.detection,
                   {"i_ab": i_ab, "eve_info": i_be})


def skr_individual_approx(link: KeygenLink) -> SkrReport:
    """First-order expansion in the transmittances."""
    t, s = _arrays(link)
    raw = kernels.individual_approx(
        t, s, link.sigma_det_sq, float(link.detection.d), link.v_a, link.v_s,
        link.eve_noise, link.recon_eff,
    )
    return _report(raw, link.overhead, "approx", "individual", link.detection, {})


def _ub_link(transmittances, v_s, v_0, w):
    t = np.atleast_1d(np.asarray(transmittances, dtype=np.float64))
    return KeygenLink(
        transmittances=t,
        sigma_h_sq=np.zeros_like(t),
        detection=DetectionScheme.homodyne(0.0),
        v_s=v_s,
        v_0=v_0,
        eve_noise=w,
    )


def skr_individual_ub(transmittances, v_s, v_0, v_a=None, w=1.0) -> float:
    """Individual-attack rate with perfect CSI, ideal detection, ``beta = 1``, no overhead."""
    if v_a is not None and not math.isclose(v_a, v_s + v_0, rel_tol=1e-12):
        raise InvalidInputError("v_a must equal v_s + v_0")
    return skr_individual(_ub_link(transmittances, v_s, v_0, w)).total_rate


# ------------------------------------------------------------ collective

def _symplectic(link):
    t, s = _arrays(link)
    lam1, lam2, disc = kernels.symplectic_pair(t, s, link.v_a, link.eve_noise)
    a = lam1 * lam1 + lam2 * lam2
    if np.any(disc < -DISC_TOL * np.maximum(a * a, 1.0)):
        raise NumericError("negative discriminant in symplectic eigenvalues")
    return (_clamp_symplectic(lam1, "lambda_1"), _clamp_symplectic(lam2, "lambda_2"))


def _conditional(link, detection=None):
    det = link.detection if detection is None else detection
    t, s = _arrays(link)
    lc = kernels.conditional_eig(t, s, link.v_a, link.eve_noise, det.v_el, float(det.d))
    return _clamp_symplectic(lc, "conditional eigenvalue")


def symplectic_eigs_ab(link: KeygenLink, i: int) -> tuple[float, float]:
    """Symplectic eigenvalues ``(lambda_1, lambda_2)`` of Alice-Bob's covariance matrix."""
    _check_index(link, i)
    lam1, lam2 = _symplectic(link)
    return float(lam1[i]), float(lam2[i])


def conditional_eig(link: KeygenLink, i: int, detection: DetectionScheme | None = None) -> float:
    """Symplectic eigenvalue of Alice's state conditioned on Bob's measurement."""
    _check_index(link, i)
    return float(_conditional(link, detection)[i])


def _holevo_terms(link):
    lam1, lam2 = _symplectic(link)
    lc = _conditional(link)
    chi = kernels.h_entropy(lam1) + kernels.h_entropy(lam2) - kernels.h_entropy(lc)
    return chi, lam1, lam2, lc


def skr_collective(link: KeygenLink) -> SkrReport:
    i_ab, _ = _individual_terms(link)
    chi, lam1, lam2, lc = _holevo_terms(link)
    raw = link.recon_eff * i_ab - chi
    return _report(raw, link.overhead, "exact", "collective", link.detection,
                   {"i_ab": i_ab, "eve_info": chi, "lambda_1": lam1, "lambda_2": lam2,
                    "lambda_cond": lc})


def skr_collective_approx(link: KeygenLink, *, entropy_outside_prefactor: bool = False) -> SkrReport:
    """Low-transmittance expansion of the collective-attack rate.

    By default the zeroth-order entropy term sits inside the ``1/(2 ln 2)``
    prefactor, as the expansion is usually quoted. With
    ``entropy_outside_prefactor=True`` it is subtracted in bits instead, which
    is the value the exact rate takes at zero transmittance.
    """
    t, s = _arrays(link)
    raw = kernels.collective_approx(
        t, s, link.sigma_det_sq, float(link.detection.d), link.v_a, link.v_s,
        link.eve_noise, link.recon_eff, bool(entropy_outside_prefactor),
    )
    if np.any(np.isnan(raw)):
        raise DomainError("W + sigma_h^2 <= 1 makes the collective expansion singular")
    return _report(raw, link.overhead, "approx", "collective", link.detection, {})


def skr_collective_ub(transmittances, v_s, v_0, w=1.0) -> float:
    """Collective-attack rate with perfect CSI, ideal homodyne, ``beta = 1``, no overhead."""
    return skr_collective(_ub_link(transmittances, v_s, v_0, w)).total_rate


# ------------------------------------------------------------ thresholds

class ThresholdQuantities(NamedTuple):
    zeta_individual: float
    zeta_collective: float
    alpha_individual: float
    alpha_collective: float
    delta: float


def _safe_ratio(num, t):
    if t > 0:
        return num / t
    if num > 0:
        return math.inf
    return math.nan if num == 0 else -math.inf


def threshold_quantities(link: KeygenLink, i: int) -> ThresholdQuantities:
    """Positivity thresholds of the expanded rates on channel ``i``.

    A positive expanded rate needs ``zeta > alpha``. ``zeta`` does not depend
    on the transmittance; ``alpha`` scales as ``1 / T``.
    """
    _check_index(link, i)
    t = float(link.transmittances[i])
    s = float(link.sigma_h_sq[i])
    w, va, vs, beta = link.eve_noise, link.v_a, link.v_s, link.recon_eff
    sdet = link.sigma_det_sq
    d = float(link.detection.d)
    delta = s + w

    zeta_i = (beta * vs + w - va) / (sdet + delta) + (va * w - 1.0) / (
        va * delta * (1.0 + delta * sdet)
    )
    alpha_i = _safe_ratio(math.log(delta * (sdet + delta) / (1.0 + sdet * delta)), t)

    dm1 = s + (w - 1.0)
    if dm1 <= 0.0:
        raise DomainError(f"collective threshold needs sigma_h^2 + W > 1, got {delta!r}")
    la = math.log((va + 1.0) / (va - 1.0))
    ld = math.log((delta + 1.0) / dm1)
    zeta_c = (
        (beta * d * vs - 0.5 * d * (va * va - 1.0) * la) / (sdet + delta)
        + (va * va - 1.0) * la / (va + delta)
        - s * (w * va - 2.0 * w * w + 1.0) * ld / (delta * (va + delta))
    )
    alpha_c = _safe_ratio(h_entropy(delta), t)
    return ThresholdQuantities(zeta_i, zeta_c, alpha_i, alpha_c, delta)

"""Per-channel rate kernels.

Every kernel exists twice: a vectorised numpy implementation (``np_*``) and
an element-loop implementation compiled with numba (``nb_*``). The public
names at the bottom of the module point at one or the other depending on
:data:`thzqkd._accel.USE_NUMBA`.

Inputs are 1-D float64 arrays of per-channel transmittances ``t`` and
estimation-noise variances ``s`` plus scalar link parameters. Kernels do not
raise; invalid points come back as NaN and the callers in :mod:`thzqkd.skr`
turn them into exceptions.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

LN2 = math.log(2.0)


# ---------------------------------------------------------------- numpy path

def np_h_entropy(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    m = x > 1.0
    xp = (x[m] + 1.0) / 2.0
    xm = (x[m] - 1.0) / 2.0
    out[m] = xp * np.log2(xp) - xm * np.log2(xm)
    return out


def np_mutual_info(t, s, sdet, d, vs, v0, w):
    noise = t * v0 + (1.0 - t) * w + sdet + s
    return 0.5 * d * np.log1p(t * vs / noise) / LN2


def np_eve_info_individual(t, s, sdet, d, va, w):
    vb = t * va + (1.0 - t) * w + s + sdet
    vbe = 1.0 / (t / va + (1.0 - t) * w + s) + sdet
    return 0.5 * d * np.log2(vb / vbe)


def np_symplectic_pair(t, s, va, w):
    b = t * va + (1.0 - t) * w + s
    a = va * va * (1.0 - 2.0 * t) + 2.0 * t + b * b
    rb = t + (1.0 - t) * va * w + va * s
    disc = a * a - 4.0 * rb * rb
    root = np.sqrt(np.maximum(disc, 0.0))
    lam1 = np.sqrt(0.5 * (a + root))
    lam2 = rb / lam1
    return lam1, lam2, disc


def np_conditional_eig(t, s, va, w, v_el, d):
    b = t * va + (1.0 - t) * w + s
    if d == 1.0:
        rad = va * va - va * t * (va * va - 1.0) / (b + v_el)
        with np.errstate(invalid="ignore"):
            return np.where(rad >= 0.0, np.sqrt(np.abs(rad)), np.nan)
    return va - t * (va * va - 1.0) / (b + 2.0 * v_el + 1.0)


def np_individual_approx(t, s, sdet, d, va, vs, w, beta):
    delta = s + w
    coef = (beta * vs + w - va) / (sdet + delta) + (va * w - 1.0) / (
        va * delta * (1.0 + sdet * delta)
    )
    log_term = np.log(delta * (sdet + delta) / (1.0 + sdet * delta))
    return d / (2.0 * LN2) * (coef * t - log_term)


def np_collective_approx(t, s, sdet, d, va, vs, w, beta, h_outside):
    delta = w + s
    dm1 = s + (w - 1.0)  # delta - 1 without cancellation
    la = math.log((va + 1.0) / (va - 1.0))
    coef = (
        beta * d * vs / (sdet + delta)
        + (va * va - 1.0) * la / (va + delta)
        - d * (va * va - 1.0) * la / (2.0 * (delta + sdet))
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ld = np.log((delta + 1.0) / dm1)
        leak = s * (w * va - 2.0 * w * w + 1.0) * ld / (delta * (va + delta))
    leak = np.where(s == 0.0, 0.0, leak)
    leak = np.where(dm1 > 0.0, leak, np.where(s == 0.0, 0.0, np.nan))
    coef = coef - leak
    hd = np_h_entropy(np.maximum(delta, 1.0))
    hd = np.where(dm1 >= 0.0, hd, np.nan)
    if h_outside:
        return coef * t / (2.0 * LN2) - hd
    return (coef * t - hd) / (2.0 * LN2)


# ---------------------------------------------------------------- numba path

@njit
def _h_scalar(x):
    if x <= 1.0:
        return 0.0
    xp = (x + 1.0) / 2.0
    xm = (x - 1.0) / 2.0
    return (xp * math.log(xp) - xm * math.log(xm)) / math.log(2.0)


@njit
def nb_h_entropy(x):
    out = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        out[i] = _h_scalar(x[i])
    return out


@njit
def nb_mutual_info(t, s, sdet, d, vs, v0, w):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        noise = t[i] * v0 + (1.0 - t[i]) * w + sdet + s[i]
        out[i] = 0.5 * d * math.log1p(t[i] * vs / noise) / math.log(2.0)
    return out


@njit
def nb_eve_info_individual(t, s, sdet, d, va, w):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        vb = t[i] * va + (1.0 - t[i]) * w + s[i] + sdet
        vbe = 1.0 / (t[i] / va + (1.0 - t[i]) * w + s[i]) + sdet
        out[i] = 0.5 * d * math.log(vb / vbe) / math.log(2.0)
    return out


@njit
def nb_symplectic_pair(t, s, va, w):
    n = t.shape[0]
    lam1 = np.empty(n)
    lam2 = np.empty(n)
    disc = np.empty(n)
    for i in range(n):
        b = t[i] * va + (1.0 - t[i]) * w + s[i]
        a = va * va * (1.0 - 2.0 * t[i]) + 2.0 * t[i] + b * b
        rb = t[i] + (1.0 - t[i]) * va * w + va * s[i]
        disc[i] = a * a - 4.0 * rb * rb
        root = math.sqrt(disc[i]) if disc[i] > 0.0 else 0.0
        lam1[i] = math.sqrt(0.5 * (a + root))
        lam2[i] = rb / lam1[i]
    return lam1, lam2, disc


@njit
def nb_conditional_eig(t, s, va, w, v_el, d):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        b = t[i] * va + (1.0 - t[i]) * w + s[i]
        if d == 1.0:
            rad = va * va - va * t[i] * (va * va - 1.0) / (b + v_el)
            out[i] = math.sqrt(rad) if rad >= 0.0 else np.nan
        else:
            out[i] = va - t[i] * (va * va - 1.0) / (b + 2.0 * v_el + 1.0)
    return out


@njit
def nb_individual_approx(t, s, sdet, d, va, vs, w, beta):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        delta = s[i] + w
        coef = (beta * vs + w - va) / (sdet + delta) + (va * w - 1.0) / (
            va * delta * (1.0 + sdet * delta)
        )
        log_term = math.log(delta * (sdet + delta) / (1.0 + sdet * delta))
        out[i] = d / (2.0 * math.log(2.0)) * (coef * t[i] - log_term)
    return out


@njit
def nb_collective_approx(t, s, sdet, d, va, vs, w, beta, h_outside):
    out = np.empty(t.shape[0])
    la = math.log((va + 1.0) / (va - 1.0))
    for i in range(t.shape[0]):
        delta = w + s[i]
        # delta - 1 formed without cancellation so tiny sigma_h^2 stays resolvable
        dm1 = s[i] + (w - 1.0)
        if dm1 < 0.0 or (dm1 == 0.0 and s[i] != 0.0):
            out[i] = np.nan
            continue
        coef = (
            beta * d * vs / (sdet + delta)
            + (va * va - 1.0) * la / (va + delta)
            - d * (va * va - 1.0) * la / (2.0 * (delta + sdet))
        )
        if s[i] != 0.0:
            ld = math.log((delta + 1.0) / dm1)
            coef -= s[i] * (w * va - 2.0 * w * w + 1.0) * ld / (delta * (va + delta))
        hd = _h_scalar(delta)
        if h_outside:
            out[i] = coef * t[i] / (2.0 * math.log(2.0)) - hd
        else:
            out[i] = (coef * t[i] - hd) / (2.0 * math.log(2.0))
    return out


# ---------------------------------------------------------------- dispatch

BACKENDS = {
    "numpy": {
        "h_entropy": np_h_entropy,
        "mutual_info": np_mutual_info,
        "eve_info_individual": np_eve_info_individual,
        "symplectic_pair": np_symplectic_pair,
        "conditional_eig": np_conditional_eig,
        "individual_approx": np_individual_approx,
        "collective_approx": np_collective_approx,
    },
    "numba": {
        "h_entropy": nb_h_entropy,
        "mutual_info": nb_mutual_info,
        "eve_info_individual": nb_eve_info_individual,
        "symplectic_pair": nb_symplectic_pair,
        "conditional_eig": nb_conditional_eig,
        "individual_approx": nb_individual_approx,
        "collective_approx": nb_collective_approx,
    },
}

BACKEND = "numba" if USE_NUMBA else "numpy"
_active = BACKENDS[BACKEND]

h_entropy = _active["h_entropy"]
mutual_info = _active["mutual_info"]
eve_info_individual = _active["eve_info_individual"]
symplectic_pair = _active["symplectic_pair"]
conditional_eig = _active["conditional_eig"]
individual_approx = _active["individual_approx"]
collective_approx = _active["collective_approx"]

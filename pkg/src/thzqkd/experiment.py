"""End-to-end pipeline, Monte Carlo sweeps and result persistence."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import skr
from .channel import build_channel
from .config import ExperimentConfig
from .errors import InvalidConfigError, ResultWriteError, ThzQkdError, TrialAbortedError
from .keygen import KeygenLink, build_keygen_link
from .pilot import (
    estimation_error_covariance,
    ls_estimate,
    ml_noise_covariance,
    simulate_pilot_phase,
    true_noise_covariance,
)

AXES = ("distance", "pilot_len", "pilot_power", "noise_sigma_h")
FIXED_COLUMNS = (
    "sweep_value", "attack", "detection", "variant", "mode",
    "mean_total_rate", "std_total_rate", "n_trials", "seed",
)
SIG_DIGITS = 12


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    """Seed for trial ``trial``; independent of execution order.

    Every sweep point reuses the same trial seeds, so neighbouring points
    share noise realisations.
    """
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(trial),))


# ---------------------------------------------------------------- pipeline

def _true_transmittances(h, tol):
    s = np.linalg.svd(h, compute_uv=False)
    keep = s > tol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    return np.clip(s[keep] ** 2, 0.0, 1.0)


def _evaluate(link: KeygenLink, attack: str, variant: str) -> skr.SkrReport:
    if attack == "individual":
        return skr.skr_individual(link) if variant == "exact" else skr.skr_individual_approx(link)
    return skr.skr_collective(link) if variant == "exact" else skr.skr_collective_approx(link)


def _ub_report(t_true, cfg, attack, detection):
    link = skr._ub_link(t_true, cfg.v_s, cfg.v_0, cfg.eve_noise)
    rep = skr.skr_individual(link) if attack == "individual" else skr.skr_collective(link)
    rep.variant = "upper_bound"
    rep.detection = detection
    return rep


def run_pipeline(cfg: ExperimentConfig, seed) -> dict:
    """One Monte Carlo pass over the whole link.

    Returns ``{(attack, detection, variant): SkrReport}`` for every requested
    combination. All detections share the same pilot phase.
    """
    h = build_channel(cfg.environment(), cfg.tx_array(), cfg.rx_array())
    pcfg = cfg.pilot_config()
    v0 = cfg.v_0
    rec = simulate_pilot_phase(h, pcfg, v0, cfg.v_el, np.random.default_rng(seed))
    est = ls_estimate(rec, cfg.rank_tolerance)
    if cfg.mode == "genie":
        c_n = true_noise_covariance(h, v0, cfg.v_el)
    else:
        c_n = ml_noise_covariance(rec, est)
    noise = estimation_error_covariance(c_n, est, cfg.v_a, pcfg)

    t_true = None
    reports = {}
    for kind in cfg.detections:
        det = cfg.detection(kind)
        link = build_keygen_link(
            est, noise, det,
            v_s=cfg.v_s, v_0=v0, eve_noise=cfg.eve_noise,
            pilot_len=pcfg.pilot_len, coherence_time=cfg.coherence_time,
            recon_eff=cfg.recon_eff,
        )
        for attack in cfg.attacks:
            for variant in cfg.variants:
                if variant == "upper_bound":
                    if t_true is None:
                        t_true = _true_transmittances(h, cfg.rank_tolerance)
                    reports[(attack, kind, variant)] = _ub_report(t_true, cfg, attack, det)
                else:
                    reports[(attack, kind, variant)] = _evaluate(link, attack, variant)
    return reports


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepRow:
    sweep_value: float
    attack: str
    detection: str
    variant: str
    mode: str
    mean_total_rate: float
    std_total_rate: float
    n_trials: int
    seed: int
    per_channel_means: list = field(default_factory=list)

    def sort_key(self):
        return (self.sweep_value, self.variant, self.attack, self.detection)


@dataclass
class SweepResult:
    axis: str
    rows: list = field(default_factory=list)

    def select(self, **match) -> list:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in match.items())]

    def curve(self, attack, detection="homodyne", variant="exact"):
        """``(sweep_values, mean_total_rates)`` for one combination."""
        rows = self.select(attack=attack, detection=detection, variant=variant)
        return (np.array([r.sweep_value for r in rows]), np.array([r.mean_total_rate for r in rows]))


def _point_config(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    try:
        if axis == "distance":
            return cfg.replace(distance_m=float(value))
        if axis == "pilot_len":
            return cfg.replace(pilot_len=int(value))
        if axis == "pilot_power":
            return cfg.replace(pilot_power_db=float(value))
    except ThzQkdError as exc:
        raise InvalidConfigError(f"invalid {axis} grid value {value!r}: {exc}") from exc
    raise InvalidConfigError(f"unknown sweep axis {axis!r}")


def _run_trial(pcfg, value, trial):
    seq = trial_seed(pcfg.seed, trial)
    try:
        return run_pipeline(pcfg, seq)
    except ThzQkdError as exc:
        raise TrialAbortedError(
            f"trial {trial} at sweep value {value!r} aborted: {exc}",
            sweep_value=value, trial=trial, seed=pcfg.seed, cause=exc,
        ) from exc


def _aggregate(value, per_trial, cfg):
    rows = []
    for key in per_trial[0]:
        attack, detection, variant = key
        totals = np.array([rep[key].total_rate for rep in per_trial])
        width = max(rep[key].per_channel_rates.size for rep in per_trial)
        per_ch = np.zeros((len(per_trial), width))
        for k, rep in enumerate(per_trial):
            r = rep[key].per_channel_rates
            per_ch[k, : r.size] = r
        std = float(np.std(totals, ddof=1)) if totals.size > 1 else 0.0
        rows.append(SweepRow(
            sweep_value=float(value), attack=attack, detection=detection, variant=variant,
            mode=cfg.mode, mean_total_rate=float(np.mean(totals)), std_total_rate=std,
            n_trials=int(totals.size), seed=int(cfg.seed),
            per_channel_means=[float(x) for x in per_ch.mean(axis=0)],
        ))
    return rows


def sweep(cfg: ExperimentConfig, axis: str, grid=None) -> SweepResult:
    """Monte Carlo sweep along ``axis``.

    ``grid`` overrides the matching ``*_grid`` field of the config. The
    ``noise_sigma_h`` axis is deterministic and delegates to
    :func:`threshold_analysis`.
    """
    if axis not in AXES:
        raise InvalidConfigError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
    if axis == "noise_sigma_h":
        return threshold_analysis(cfg, grid)
    if grid is None:
        grid = {"distance": cfg.distance_grid, "pilot_len": cfg.pilot_len_grid,
                "pilot_power": cfg.pilot_power_db_grid}[axis]
    grid = list(grid)
    if not grid:
        raise InvalidConfigError(f"empty grid for axis {axis!r}")

    jobs = []
    for value in grid:
        pcfg = _point_config(cfg, axis, value)
        jobs.extend((pcfg, value, t) for t in range(cfg.trials))

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            outputs = list(pool.map(lambda job: _run_trial(*job), jobs))
    else:
        outputs = [_run_trial(*job) for job in jobs]

    rows = []
    for k, value in enumerate(grid):
        chunk = outputs[k * cfg.trials:(k + 1) * cfg.trials]
        rows.extend(_aggregate(value, chunk, cfg))
    rows.sort(key=SweepRow.sort_key)
    return SweepResult(axis=axis, rows=rows)


def single_point(cfg: ExperimentConfig) -> SweepResult:
    """Monte Carlo statistics at ``cfg.distance_m``."""
    return sweep(cfg, "distance", [cfg.distance_m])


# ---------------------------------------------------------------- thresholds

def _threshold_link(cfg: ExperimentConfig, sigma_h_sq: float, kind: str = "homodyne") -> KeygenLink:
    h = build_channel(cfg.environment(), cfg.tx_array(), cfg.rx_array())
    t1 = _true_transmittances(h, cfg.rank_tolerance)[:1]
    return KeygenLink(
        transmittances=t1,
        sigma_h_sq=np.array([sigma_h_sq]),
        detection=cfg.detection(kind),
        v_s=cfg.v_s,
        v_0=cfg.v_0,
        eve_noise=cfg.eve_noise,
        overhead=1.0 - cfg.resolved_pilot_len / cfg.coherence_time,
        recon_eff=cfg.recon_eff,
    )


def threshold_analysis(cfg: ExperimentConfig, grid=None) -> SweepResult:
    """Positivity thresholds on the strongest channel versus ``sigma_h^2``.

    The estimation-noise variance is a free variable here; the transmittance
    is the noiseless top singular value squared at ``cfg.distance_m``. For
    each grid point and attack this emits ``zeta``, ``alpha`` and the
    clamped expanded rate as rows with ``variant`` set to ``"zeta"``,
    ``"alpha"`` and ``"approx"``.
    """
    grid = list(cfg.sigma_h_grid if grid is None else grid)
    if not grid:
        raise InvalidConfigError("empty sigma_h grid")
    rows = []
    for kind in cfg.detections:
        for s in grid:
            link = _threshold_link(cfg, float(s), kind)
            tq = skr.threshold_quantities(link, 0)
            values = {
                "individual": (tq.zeta_individual, tq.alpha_individual,
                               skr.skr_individual_approx(link).total_rate),
                "collective": (tq.zeta_collective, tq.alpha_collective,
                               skr.skr_collective_approx(link).total_rate),
            }
            for attack in cfg.attacks:
                for variant, v in zip(("zeta", "alpha", "approx"), values[attack]):
                    rows.append(SweepRow(
                        sweep_value=float(s), attack=attack, detection=kind, variant=variant,
                        mode="analytic", mean_total_rate=float(v), std_total_rate=0.0,
                        n_trials=1, seed=int(cfg.seed),
                    ))
    rows.sort(key=SweepRow.sort_key)
    return SweepResult(axis="noise_sigma_h", rows=rows)


def threshold_crossing(cfg: ExperimentConfig, attack: str, lo: float = 1e-12, hi: float = 1e2) -> float:
    """Largest tolerable ``sigma_h^2`` on the strongest channel (``zeta == alpha``)."""

    def gap(log_s):
        tq = skr.threshold_quantities(_threshold_link(cfg, 10.0 ** log_s), 0)
        if attack == "individual":
            return tq.zeta_individual - tq.alpha_individual
        return tq.zeta_collective - tq.alpha_collective

    a, b = math.log10(lo), math.log10(hi)
    if gap(a) <= 0:
        return 0.0
    if gap(b) > 0:
        return math.inf
    return 10.0 ** brentq(gap, a, b, xtol=1e-12)


# ---------------------------------------------------------------- output

def _num(x):
    """Round to the serialisation precision."""
    x = float(x)
    if not math.isfinite(x):
        return x
    return float(format(x, f".{SIG_DIGITS}g"))


def _fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{SIG_DIGITS}g")


def _row_dict(row: SweepRow, width: int) -> dict:
    out = {
        "sweep_value": _num(row.sweep_value),
        "attack": row.attack,
        "detection": row.detection,
        "variant": row.variant,
        "mode": row.mode,
        "mean_total_rate": _num(row.mean_total_rate),
        "std_total_rate": _num(row.std_total_rate),
        "n_trials": int(row.n_trials),
        "seed": int(row.seed),
    }
    for k in range(width):
        val = row.per_channel_means[k] if k < len(row.per_channel_means) else None
        out[f"per_channel_{k + 1}"] = None if val is None else _num(val)
    return out


def render(result: SweepResult, fmt: str = "csv") -> str:
    width = max((len(r.per_channel_means) for r in result.rows), default=0)
    header = list(FIXED_COLUMNS) + [f"per_channel_{k + 1}" for k in range(width)]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in result.rows:
            d = _row_dict(row, width)
            writer.writerow([
                "" if d[c] is None else (_fmt(d[c]) if isinstance(d[c], float) else d[c])
                for c in header
            ])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([_row_dict(r, width) for r in result.rows], indent=1) + "\n"
    raise InvalidConfigError(f"unknown output format {fmt!r}")


def emit_results(result: SweepResult, path, fmt: str = "csv") -> Path:
    """Write ``result`` as CSV or JSON; returns the path written."""
    text = render(result, fmt)
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ResultWriteError(f"cannot write results to {path}: {exc}", path) from exc
    return path

"""Batch front end: grid sweeps, single runs, and report/CSV emission.

A sweep evaluates the requested fixed-point pipelines over a
(p_bar, k_theta) grid, records per-point results or phase-tagged
failures, and aggregates prediction errors between pipelines (RMS and
percent RMS of the apex speed and height). Output files are
deterministic: fixed column order, fixed grid order, 9-significant-
digit floats.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fixedpoint as fp
from .errors import SlipError
from .model import ApexState, ControlInputs, DEFAULT_PARAMS, SlipParams
from .simulate import (DEFAULT_CONTROL_DT, DEFAULT_DT, HybridTrajectory,
                       return_map_numeric, write_trajectory_csv)

ALL_PIPELINES = (fp.CLOSED_FORM, fp.ANALYTIC_NUMERIC, fp.SIMULATOR_NUMERIC)
SIM_TOL = 1e-6
ANALYTIC_TOL = 1e-9
_PREWARM = 3


@dataclass(frozen=True)
class SweepConfig:
    """Grid sweep description; ranges are (min, max, count) inclusive."""

    params: SlipParams = DEFAULT_PARAMS
    p_bar_range: tuple[float, float, int] = (-1.55, -0.5, 20)
    k_theta_range: tuple[float, float, int] = (0.3, 0.75, 20)
    pipelines: tuple[str, ...] = ALL_PIPELINES
    out_dir: str | None = None
    seed_chaining: bool = True
    workers: int = 1
    kp: float = 100.0
    ki: float = 0.2
    kd: float = 0.05
    tau_max: float | None = None
    dt: float = DEFAULT_DT
    control_dt: float = DEFAULT_CONTROL_DT

    def __post_init__(self):
        for name in ("p_bar_range", "k_theta_range"):
            lo, hi, n = getattr(self, name)
            if n < 1:
                raise ValueError(f"{name} count must be >= 1, got {n}")
            if lo > hi:
                raise ValueError(f"{name} must be ordered, got ({lo}, {hi})")
        unknown = set(self.pipelines) - set(ALL_PIPELINES)
        if unknown:
            raise ValueError(f"unknown pipelines: {sorted(unknown)}")
        if not self.pipelines:
            raise ValueError("at least one pipeline required")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def inputs(self, p_bar: float, k_theta: float) -> ControlInputs:
        return ControlInputs(p_bar=p_bar, k_theta=k_theta, kp=self.kp,
                             ki=self.ki, kd=self.kd, tau_max=self.tau_max)

    def p_bar_values(self) -> list[float]:
        lo, hi, n = self.p_bar_range
        return [float(v) for v in np.linspace(lo, hi, n)]

    def k_theta_values(self) -> list[float]:
        lo, hi, n = self.k_theta_range
        return [float(v) for v in np.linspace(lo, hi, n)]


@dataclass
class PointOutcome:
    """One (grid point, pipeline) cell: a result or a tagged failure."""

    p_bar: float
    k_theta: float
    pipeline: str
    result: fp.FixedPointResult | None = None
    status: str = "converged"


@dataclass
class ErrorStats:
    """Apex prediction error of one pipeline against a reference."""

    predicted: str
    reference: str
    quantity: str  # "x_dot" | "y"
    n: int
    rms: float
    percent_rms: float        # sqrt(mean(((pred-ref)/ref)^2)) * 100
    rms_over_mean_ref: float  # rms / mean(|ref|) * 100


@dataclass
class SweepReport:
    config: SweepConfig
    outcomes: list[PointOutcome]
    error_stats: list[ErrorStats]
    runtime_s: float

    def converged(self, pipeline: str) -> dict[tuple[float, float],
                                               fp.FixedPointResult]:
        return {(o.p_bar, o.k_theta): o.result for o in self.outcomes
                if o.pipeline == pipeline and o.result is not None}

    def failure_counts(self) -> dict[str, dict[str, int]]:
        counts: dict[str, dict[str, int]] = {}
        for o in self.outcomes:
            if o.result is None:
                per = counts.setdefault(o.pipeline, {})
                per[o.status] = per.get(o.status, 0) + 1
        return counts


def _fail_status(err: SlipError) -> str:
    name = type(err).__name__
    return f"{name}@{err.phase}" if err.phase else name


def _closed_form_point(cfg: SweepConfig, p_bar: float,
                       k_theta: float) -> PointOutcome:
    out = PointOutcome(p_bar, k_theta, fp.CLOSED_FORM)
    try:
        out.result = fp.closed_form_fixed_point(p_bar, k_theta, cfg.params)
    except SlipError as err:
        out.status = _fail_status(err)
    return out


def _newton_point(cfg: SweepConfig, p_bar: float, k_theta: float,
                  pipeline: str, seed: ApexState | None) -> PointOutcome:
    out = PointOutcome(p_bar, k_theta, pipeline)
    if seed is None:
        out.status = "NoSeed"
        return out
    if pipeline == fp.SIMULATOR_NUMERIC:
        def sim_map(apex, inputs, params):
            return return_map_numeric(apex, inputs, params, dt=cfg.dt,
                                      control_dt=cfg.control_dt,
                                      record=False)[0]
        return_map, tol = sim_map, SIM_TOL
    else:
        return_map, tol = fp.return_map_analytic, ANALYTIC_TOL
    try:
        out.result = fp.numeric_fixed_point(
            return_map, seed, cfg.inputs(p_bar, k_theta), cfg.params,
            tol=tol, prewarm=_PREWARM, provenance=pipeline)
    except SlipError as err:
        out.status = _fail_status(err)
    return out


def _sweep_row(cfg: SweepConfig, p_bar: float) -> list[PointOutcome]:
    """Evaluate every pipeline along one constant-p_bar row.

    Newton seeds come from the closed form; with seed chaining on, the
    previous k_theta point's fixed point takes over once available
    (row-local, so results do not depend on the worker count).
    """
    rows: list[PointOutcome] = []
    chain: dict[str, ApexState | None] = {fp.ANALYTIC_NUMERIC: None,
                                          fp.SIMULATOR_NUMERIC: None}
    for k_theta in cfg.k_theta_values():
        closed = _closed_form_point(cfg, p_bar, k_theta)
        closed_seed = closed.result.apex if closed.result else None
        if fp.CLOSED_FORM in cfg.pipelines:
            rows.append(closed)
        for pipeline in (fp.ANALYTIC_NUMERIC, fp.SIMULATOR_NUMERIC):
            if pipeline not in cfg.pipelines:
                continue
            seed = chain[pipeline] if cfg.seed_chaining else None
            point = _newton_point(cfg, p_bar, k_theta, pipeline,
                                  seed or closed_seed)
            if point.result is None and seed is not None:
                # chained seed failed; retry once from the closed form
                point = _newton_point(cfg, p_bar, k_theta, pipeline,
                                      closed_seed)
            rows.append(point)
            if point.result is not None:
                chain[pipeline] = point.result.apex
    return rows


def _error_stats(outcomes: list[PointOutcome],
                 pipelines: tuple[str, ...]) -> list[ErrorStats]:
    by_pipe: dict[str, dict[tuple[float, float], fp.FixedPointResult]] = {}
    for o in outcomes:
        if o.result is not None:
            by_pipe.setdefault(o.pipeline, {})[(o.p_bar, o.k_theta)] = o.result
    pairs = [(fp.CLOSED_FORM, fp.SIMULATOR_NUMERIC),
             (fp.ANALYTIC_NUMERIC, fp.SIMULATOR_NUMERIC),
             (fp.CLOSED_FORM, fp.ANALYTIC_NUMERIC)]
    stats: list[ErrorStats] = []
    for pred_name, ref_name in pairs:
        if pred_name not in pipelines or ref_name not in pipelines:
            continue
        pred = by_pipe.get(pred_name, {})
        ref = by_pipe.get(ref_name, {})
        keys = sorted(set(pred) & set(ref))
        if not keys:
            continue
        for quantity in ("x_dot", "y"):
            dp = np.array([getattr(pred[k].apex, quantity) for k in keys])
            dr = np.array([getattr(ref[k].apex, quantity) for k in keys])
            err = dp - dr
            rms = float(np.sqrt(np.mean(err ** 2)))
            pct = float(100.0 * np.sqrt(np.mean((err / dr) ** 2)))
            over_mean = float(100.0 * rms / np.mean(np.abs(dr)))
            stats.append(ErrorStats(pred_name, ref_name, quantity, len(keys),
                                    rms, pct, over_mean))
    return stats


def run_sweep(cfg: SweepConfig) -> SweepReport:
    """Evaluate the grid; failures never abort the sweep.

    Rows (constant p_bar) are independent work units; with workers > 1
    they run in parallel and are reassembled in grid order, so output is
    identical to a serial run.
    """
    t0 = time.perf_counter()
    p_bars = cfg.p_bar_values()
    if cfg.workers > 1 and len(p_bars) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_row = list(pool.map(_sweep_row, [cfg] * len(p_bars), p_bars))
    else:
        per_row = [_sweep_row(cfg, pb) for pb in p_bars]
    outcomes = [o for row in per_row for o in row]
    stats = _error_stats(outcomes, cfg.pipelines)
    report = SweepReport(config=cfg, outcomes=outcomes, error_stats=stats,
                         runtime_s=time.perf_counter() - t0)
    if cfg.out_dir is not None:
        write_sweep_outputs(report, Path(cfg.out_dir))
    return report


# --- single-run harness -------------------------------------------------------

@dataclass
class HopSummary:
    hop: int
    x_dot: float        # apex state at the end of the hop
    y: float
    p_liftoff: float
    theta_td: float
    theta_lo: float
    r_lo: float


@dataclass
class SingleRunReport:
    hops: list[HopSummary]
    trajectory: HybridTrajectory
    final_apex: ApexState
    failure: str | None = None


def run_single(apex: ApexState, inputs: ControlInputs, params: SlipParams,
               n_hops: int, k_theta_step: tuple[int, float] | None = None,
               dt: float = DEFAULT_DT, control_dt: float = DEFAULT_CONTROL_DT,
               out_dir: str | Path | None = None) -> SingleRunReport:
    """Chain the simulator return map for n_hops, recording everything.

    k_theta_step = (hop_index, new_value) switches the touchdown gain
    from that hop onward. Stops at the first gait failure, keeping the
    partial trajectory and a failure record.
    """
    if n_hops < 1:
        raise ValueError(f"n_hops must be >= 1, got {n_hops}")
    traj = HybridTrajectory()
    hops: list[HopSummary] = []
    failure = None
    t, x = 0.0, 0.0
    current = apex
    for hop in range(n_hops):
        gait = inputs
        if k_theta_step is not None and hop >= k_theta_step[0]:
            gait = ControlInputs(p_bar=inputs.p_bar,
                                 k_theta=k_theta_step[1], kp=inputs.kp,
                                 ki=inputs.ki, kd=inputs.kd,
                                 tau_max=inputs.tau_max)
        try:
            nxt, hop_traj = return_map_numeric(current, gait, params, dt=dt,
                                               control_dt=control_dt,
                                               record=True, t0=t, x0=x)
        except SlipError as err:
            failure = f"hop {hop}: {_fail_status(err)}: {err}"
            break
        traj.extend(hop_traj)
        events = {e.name: e for e in hop_traj.events}
        td = events["touchdown"].state or {}
        lo = events["liftoff"].state or {}
        hops.append(HopSummary(
            hop=hop, x_dot=nxt.x_dot, y=nxt.y,
            p_liftoff=lo.get("p_theta", math.nan),
            theta_td=td.get("theta", math.nan),
            theta_lo=lo.get("theta", math.nan),
            r_lo=lo.get("r", math.nan)))
        apex_event = events["apex"]
        t = apex_event.t
        x = (apex_event.state or {}).get("x", x)
        current = nxt
    report = SingleRunReport(hops=hops, trajectory=traj, final_apex=current,
                             failure=failure)
    if out_dir is not None:
        write_single_outputs(report, inputs, params, Path(out_dir))
    return report


# --- deterministic file output ------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".9g")
    return str(v)


def write_sweep_outputs(report: SweepReport, out_dir: Path) -> None:
    """Emit sweep.csv, errors.csv and report.json into out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("p_bar", "k_theta", "pipeline", "x_dot_star", "y_star",
                    "spectral_radius", "stable", "residual", "status"))
        for o in report.outcomes:
            r = o.result
            if r is None:
                w.writerow((_fmt(o.p_bar), _fmt(o.k_theta), o.pipeline,
                            "", "", "", "", "", o.status))
            else:
                w.writerow((_fmt(o.p_bar), _fmt(o.k_theta), o.pipeline,
                            _fmt(r.apex.x_dot), _fmt(r.apex.y),
                            _fmt(r.spectral_radius), _fmt(r.stable),
                            _fmt(r.residual), o.status))
    with open(out_dir / "errors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("predicted", "reference", "quantity", "n_points", "rms",
                    "percent_rms", "rms_over_mean_ref"))
        for s in report.error_stats:
            w.writerow((s.predicted, s.reference, s.quantity, s.n,
                        _fmt(s.rms), _fmt(s.percent_rms),
                        _fmt(s.rms_over_mean_ref)))
    cfg = report.config
    doc = {
        "config": {
            "params": {"m": cfg.params.m, "k": cfg.params.k,
                       "b": cfg.params.b, "r0": cfg.params.r0,
                       "g": cfg.params.g},
            "p_bar_range": list(cfg.p_bar_range),
            "k_theta_range": list(cfg.k_theta_range),
            "pipelines": list(cfg.pipelines),
            "seed_chaining": cfg.seed_chaining,
            "workers": cfg.workers,
            "gains": {"kp": cfg.kp, "ki": cfg.ki, "kd": cfg.kd,
                      "tau_max": cfg.tau_max},
            "dt": cfg.dt,
            "control_dt": cfg.control_dt,
        },
        "points_per_pipeline": {
            p: sum(1 for o in report.outcomes if o.pipeline == p)
            for p in cfg.pipelines},
        "converged_per_pipeline": {
            p: sum(1 for o in report.outcomes
                   if o.pipeline == p and o.result is not None)
            for p in cfg.pipelines},
        "failures": report.failure_counts(),
        "error_stats": [vars(s) for s in report.error_stats],
        "runtime_s": round(report.runtime_s, 3),
    }
    with open(out_dir / "report.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_single_outputs(report: SingleRunReport, inputs: ControlInputs,
                         params: SlipParams, out_dir: Path) -> None:
    """Emit trajectory.csv, hops.csv and single.json into out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(report.trajectory, out_dir / "trajectory.csv")
    with open(out_dir / "hops.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("hop", "x_dot", "y", "p_liftoff", "theta_td", "theta_lo",
                    "r_lo"))
        for h in report.hops:
            w.writerow((h.hop, _fmt(h.x_dot), _fmt(h.y), _fmt(h.p_liftoff),
                        _fmt(h.theta_td), _fmt(h.theta_lo), _fmt(h.r_lo)))
    doc = {
        "params": {"m": params.m, "k": params.k, "b": params.b,
                   "r0": params.r0, "g": params.g},
        "inputs": {"p_bar": inputs.p_bar, "k_theta": inputs.k_theta,
                   "kp": inputs.kp, "ki": inputs.ki, "kd": inputs.kd,
                   "tau_max": inputs.tau_max},
        "hops_completed": len(report.hops),
        "final_apex": {"x_dot": report.final_apex.x_dot,
                       "y": report.final_apex.y},
        "failure": report.failure,
    }
    with open(out_dir / "single.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Experiment orchestration: run, compare, equilibrium, analyze and plot.

Each command takes an :class:`~nashseek.config.ExperimentConfig`, writes its
artifacts under ``cfg.out_dir`` and returns an in-memory report. The CLI in
:mod:`nashseek.cli` maps the exceptions raised here to exit codes.
"""

from __future__ import annotations

import csv
import importlib
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, ode
from .config import ConfigError, ExperimentConfig
from .game import FREQUENCY_RTOL, GameModel, PerturbationParams, ScriptedGame, StepSchedule
from .quadratic import QuadraticGame
from .seeker import SeekerConfig, Trajectory, run
from .wireless import (WirelessGame, WirelessParams, analytic_equilibrium,
                       equilibrium_report)


class TrajectoryFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------

def wireless_params(cfg: ExperimentConfig) -> WirelessParams:
    w = cfg.wireless
    try:
        params = WirelessParams(w.n, w.omega, w.kappa, w.sigma2, np.array(w.var, dtype=float))
        params.validate()
    except ValueError as exc:
        raise ConfigError(str(exc), "wireless") from exc
    return params


def build_model(cfg: ExperimentConfig) -> GameModel:
    if cfg.game == "wireless":
        w = cfg.wireless
        try:
            return WirelessGame(wireless_params(cfg), expectation=w.expectation,
                                deterministic=w.deterministic, mc_samples=w.mc_samples,
                                mc_seed=w.mc_seed)
        except ValueError as exc:
            raise ConfigError(str(exc), "wireless.expectation") from exc
    if cfg.game == "quadratic":
        q = cfg.quadratic
        try:
            return QuadraticGame(q.centers, q.curvature, q.coupling, q.noise_std)
        except ValueError as exc:
            raise ConfigError(str(exc), "quadratic") from exc
    target = cfg.scripted.target
    module, _, attr = target.partition(":")
    try:
        fn = getattr(importlib.import_module(module), attr)
    except (ImportError, AttributeError, ValueError) as exc:
        raise ConfigError(f"cannot import {target!r}: {exc}", "scripted.target") from exc
    return ScriptedGame(fn, cfg.scripted.n)


def reference_equilibrium(cfg: ExperimentConfig, model: GameModel | None = None):
    """Known equilibrium for the configured game, or ``None``.

    An explicit ``analysis.a_star`` wins; otherwise the wireless mean-gain
    solution or the quadratic closed form is used.
    """
    if cfg.analysis.a_star is not None:
        return np.asarray(cfg.analysis.a_star, dtype=float)
    if cfg.game == "wireless":
        return analytic_equilibrium(wireless_params(cfg))
    if cfg.game == "quadratic":
        model = model if model is not None else build_model(cfg)
        return model.nash_equilibrium()
    return None


def perturbation(cfg: ExperimentConfig) -> PerturbationParams:
    s = cfg.seeker
    p = PerturbationParams(s.amplitude, s.frequency, s.phase, s.growth)
    try:
        p.validate()
    except ValueError as exc:
        raise ConfigError(str(exc), "seeker") from exc
    return p


def schedule(cfg: ExperimentConfig) -> StepSchedule:
    return StepSchedule(cfg.seeker.schedule, cfg.seeker.lambda0)


def seeker_config(cfg: ExperimentConfig, model: GameModel | None = None) -> SeekerConfig:
    s = cfg.seeker
    p = perturbation(cfg)
    if s.initial is not None:
        init = np.asarray(s.initial, dtype=float)
    else:
        a_star = reference_equilibrium(cfg, model)
        if a_star is None:
            raise ConfigError("initial_offset needs a known equilibrium", "seeker.initial_offset")
        init = a_star + s.initial_offset
    if model is not None and model.n_nodes != p.n_nodes:
        raise ConfigError(f"game has {model.n_nodes} nodes, seeker has {p.n_nodes}", "seeker")
    return SeekerConfig(p, schedule(cfg), s.horizon, init, cfg.seed, s.clamp_nonnegative)


# ---------------------------------------------------------------------------
# Trajectory CSV
# ---------------------------------------------------------------------------

def trajectory_header(n: int) -> list[str]:
    cols = ["k", "khat"]
    for j in range(1, n + 1):
        cols += [f"hat_a_{j}", f"a_{j}", f"r_{j}"]
    return cols + ["lambda"]


def write_trajectory(traj: Trajectory, path) -> None:
    """One header row, then one row per record; floats in shortest round-trip form."""
    n = traj.n_nodes
    width = 3 * n + 2
    block = np.empty((len(traj), width))
    block[:, 0] = traj.khat
    block[:, 1:-1:3] = traj.hat_a
    block[:, 2:-1:3] = traj.a
    block[:, 3:-1:3] = traj.payoff
    block[:, -1] = traj.lam
    cells = list(map(repr, block.ravel().tolist()))
    lines = [",".join(trajectory_header(n))]
    lines += [f"{k},{','.join(cells[i:i + width])}" for k, i in enumerate(range(0, len(cells), width))]
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TrajectoryFormatError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if len(lines) < 2:
        raise TrajectoryFormatError(f"{path}: no data rows")
    header = lines[0].split(",")
    n, rem = divmod(len(header) - 3, 3)
    if rem or n < 1 or header != trajectory_header(n):
        raise TrajectoryFormatError(f"{path}: unexpected header {lines[0]!r}")
    try:
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise TrajectoryFormatError(f"{path}: {exc}") from exc
    if data.shape[1] != len(header):
        raise TrajectoryFormatError(f"{path}: wrong column count")
    k = data[:, 0]
    if not np.array_equal(k, np.arange(k.size)):
        raise TrajectoryFormatError(f"{path}: k column must run 0..K")
    return Trajectory(k.astype(int), data[:, 1], data[:, 2:-1:3].copy(), data[:, 3:-1:3].copy(),
                      data[:, 4:-1:3].copy(), data[:, -1].copy())


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in np.atleast_1d(v)) + "]"
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


@dataclass
class Report:
    """Ordered ``name -> value`` pairs written as CSV and plain text."""

    values: dict = field(default_factory=dict)

    def add(self, name, value):
        self.values[name] = value

    def update(self, other: "Report"):
        self.values.update(other.values)

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def text(self) -> str:
        width = max((len(k) for k in self.values), default=0)
        return "".join(f"{k.ljust(width)} : {_fmt(v)}\n" for k, v in self.values.items())

    def write(self, stem: Path):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "index", "value"])
        for name, value in self.values.items():
            if isinstance(value, str):
                w.writerow([name, "", value])
                continue
            arr = np.atleast_1d(np.asarray(value))
            for i, x in enumerate(arr.tolist()):
                w.writerow([name, i + 1 if arr.size > 1 else "", repr(x) if isinstance(x, float) else x])
        stem.with_suffix(".csv").write_text(buf.getvalue())
        stem.with_suffix(".txt").write_text(self.text())


@dataclass
class RunReport:
    trajectory_path: Path
    trajectory: Trajectory
    summary: Report


def slowest_frequency(frequencies) -> float:
    """Lowest angular frequency present in the iterates' oscillation.

    Besides each ``Omega_j`` the products of dithers leave beats at
    ``|Omega_i - Omega_j|``; the slowest of all these sets the averaging period.
    """
    w = sorted(float(x) for x in frequencies)
    beats = [b - a for a, b in zip(w, w[1:]) if b - a > FREQUENCY_RTOL * b]
    return min([w[0]] + beats)


def period_iterations(cfg: ExperimentConfig, traj: Trajectory) -> float:
    """Slowest oscillation period in iterations at the final learning rate."""
    return 2 * math.pi / (slowest_frequency(cfg.seeker.frequency) * float(traj.lam[-1]))


def window_length(cfg: ExperimentConfig, traj: Trajectory) -> int:
    """Final-window width: ``window_fraction`` of the horizon, trimmed to whole periods.

    The period is that of the slowest oscillation component (see
    :func:`slowest_frequency`) at the last learning rate; when the window is
    shorter than one period it is kept as is.
    """
    horizon = traj.horizon
    w = max(1, int(round(cfg.window_fraction * horizon)))
    period = period_iterations(cfg, traj)
    if w >= period:
        w = int(round(math.floor(w / period) * period))
    return max(1, min(w, len(traj)))


def summarize(cfg: ExperimentConfig, traj: Trajectory, a_star) -> Report:
    rep = Report()
    w = window_length(cfg, traj)
    mean = traj.hat_a[-w:].mean(axis=0)
    rep.add("horizon", traj.horizon)
    rep.add("window_iterations", w)
    rep.add("windowed_mean_hat_a", mean)
    rep.add("windowed_mean_payoff", traj.payoff[-w:].mean(axis=0))
    rep.add("final_hat_a", traj.hat_a[-1])
    if a_star is not None:
        a_star = np.asarray(a_star, dtype=float)
        rep.add("a_star", a_star)
        rep.add("relative_error", np.abs(mean - a_star) / np.abs(a_star))
        rep.add("final_gap", float(np.linalg.norm(mean - a_star)))
    return rep


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _out_dir(cfg) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(cfg: ExperimentConfig) -> RunReport:
    t_start = time.perf_counter()
    cfg.validate()
    model = build_model(cfg)
    scfg = seeker_config(cfg, model)
    a_star = reference_equilibrium(cfg, model) if cfg.game != "scripted" or cfg.analysis.a_star else None
    traj = run(model, scfg)
    out = _out_dir(cfg)
    path = out / "trajectory.csv"
    write_trajectory(traj, path)
    rep = summarize(cfg, traj, a_star)
    a = cfg.analysis
    if a.bounds or a.diagnostics or a.envelope:
        rep.update(analyze_trajectory(cfg, traj, model))
    if a.ode_compare:
        cmp = ode.compare_window(model, traj, scfg.perturbation, a.window_start, a.window_length,
                                 a.ode_step)
        rep.add("ode_sup_gap", cmp.gap)
    rep.add("wall_clock_seconds", round(time.perf_counter() - t_start, 3))
    rep.write(out / "summary")
    return RunReport(path, traj, rep)


@dataclass
class CompareReport:
    summary: Report
    sweep: ode.GapSweep | None = None
    comparison: ode.WindowComparison | None = None


def cmd_compare(cfg: ExperimentConfig) -> CompareReport:
    """Gap between the interpolated iterates and the restarted mean ODE.

    With ``analysis.lambdas`` set, runs a sweep over constant rates and
    ``analysis.sweep_seeds`` seeds (``seed, seed+1, ...``) instead.
    """
    cfg.validate()
    model = build_model(cfg)
    scfg = seeker_config(cfg, model)
    a = cfg.analysis
    out = _out_dir(cfg)
    rep = Report()
    if a.lambdas:
        seeds = range(cfg.seed, cfg.seed + a.sweep_seeds)
        sweep = ode.gap_sweep(model, scfg.perturbation, scfg.initial, a.lambdas, seeds,
                              a.window_start, a.window_length, scfg.clamp_nonnegative)
        buf = io.StringIO()
        buf.write("lambda,seed,sup_gap\n")
        for i, lam in enumerate(sweep.lambdas.tolist()):
            for s, seed in enumerate(seeds):
                buf.write(f"{lam!r},{seed},{float(sweep.gaps[i, s])!r}\n")
        (out / "gap_sweep.csv").write_text(buf.getvalue())
        slope, intercept, r2 = sweep.sqrt_lambda_fit()
        rep.add("lambdas", sweep.lambdas)
        rep.add("mean_sup_gap", sweep.mean_gaps)
        rep.add("sqrt_lambda_slope", slope)
        rep.add("sqrt_lambda_intercept", intercept)
        rep.add("sqrt_lambda_r2", r2)
        rep.write(out / "compare_summary")
        return CompareReport(rep, sweep=sweep)

    traj = run(model, scfg)
    try:
        cmp = ode.compare_window(model, traj, scfg.perturbation, a.window_start, a.window_length,
                                 a.ode_step)
    except ode.DomainError as exc:
        raise ConfigError(str(exc), "analysis.window_start") from exc
    t, pv, ov, gap = cmp.rows()
    n = traj.n_nodes
    buf = io.StringIO()
    cols = ["t"] + [f"path_{j}" for j in range(1, n + 1)] + [f"ode_{j}" for j in range(1, n + 1)]
    buf.write(",".join(cols + ["gap"]) + "\n")
    for row in np.column_stack([t, pv, ov, gap]).tolist():
        buf.write(",".join(map(repr, row)) + "\n")
    (out / "gap.csv").write_text(buf.getvalue())
    rep.add("window", [cmp.window[0], cmp.window[1]])
    rep.add("ode_step", cmp.ode.h)
    rep.add("sup_gap", cmp.gap)
    rep.write(out / "compare_summary")
    return CompareReport(rep, comparison=cmp)


def cmd_equilibrium(cfg: ExperimentConfig):
    if cfg.game != "wireless":
        raise ConfigError("equilibrium needs the wireless game", "experiment.game")
    report = equilibrium_report(wireless_params(cfg), seed=cfg.seed)
    out = _out_dir(cfg)
    (out / "equilibrium.txt").write_text(report.summary())
    return report


def _smoothing_width(cfg: ExperimentConfig, traj: Trajectory) -> int:
    return int(max(1, min(round(period_iterations(cfg, traj)), max(1, len(traj) // 10))))


def analyze_trajectory(cfg: ExperimentConfig, traj: Trajectory, model: GameModel | None = None
                       ) -> Report:
    """Bounds, martingale diagnostics and envelope fit for a recorded run.

    Unknown constants are estimated from the run: the payoff Lipschitz
    constant from random pairs on the visited action box (scaled by
    ``max_j b_j z_j`` for the drift), ``C0`` as the largest visited action
    norm, and ``Mbar``/``mbar`` from the envelope fit. The fit uses the gap
    between ``a_star`` and ``hat_a`` averaged over one slowest oscillation period,
    subsampled to at most 400 points.
    """
    model = model if model is not None else build_model(cfg)
    params = perturbation(cfg)
    sched = schedule(cfg)
    a_cfg = cfg.analysis
    rep = Report()
    n = traj.n_nodes

    dec = analysis.decompose(traj, model, params)
    diag = analysis.martingale_diagnostics(traj, model, params, dec)
    rep.add("martingale_mean", diag.mean)
    rep.add("martingale_stderr", diag.stderr)
    rep.add("martingale_mean_zero_3se", diag.mean_zero)
    rep.add("martingale_c_hat", diag.c_hat)
    rep.add("martingale_identically_zero", diag.identically_zero)

    # Tracking bound over a window that starts where the final averaging window starts.
    w = window_length(cfg, traj)
    t_idx = max(0, traj.horizon - w)
    t_val = float(traj.khat[t_idx])
    edge_idx = int(min(np.searchsorted(traj.khat, t_val + a_cfg.bound_window), traj.horizon))
    _, lam_sq_tail = sched.tail_sums(t_idx, traj.horizon)
    lam_edge = float(traj.lam[edge_idx])
    delta_sup = float(np.max(np.linalg.norm(dec.increments(t_idx), axis=1)))
    if a_cfg.L is not None:
        L = a_cfg.L
        rep.add("L_source", "config")
    else:
        est = analysis.lipschitz_estimate(model, traj.a.min(axis=0), traj.a.max(axis=0),
                                          a_cfg.lipschitz_pairs, np.random.default_rng(cfg.seed))
        L = float(np.max(params.amplitude * params.growth)) * est.overall
        rep.add("payoff_lipschitz_estimate", est.per_node)
        rep.add("L_source", "estimated")
    C0 = a_cfg.C0 if a_cfg.C0 is not None else float(np.max(np.linalg.norm(traj.a, axis=1)))
    r0 = float(np.linalg.norm(model.expected_payoffs(np.zeros(n))))
    consts = analysis.BoundConstants(L=L, C0=C0, T=a_cfg.bound_window, r0_norm=r0)
    tb = analysis.theorem1_bound(consts, lam_sq_tail, lam_edge, delta_sup)
    rep.add("bound_L", L)
    rep.add("bound_C0", C0)
    rep.add("bound_r0_norm", r0)
    rep.add("bound_T", a_cfg.bound_window)
    rep.add("bound_t", t_val)
    rep.add("bound_C_T", tb.C_T)
    rep.add("bound_K", tb.K)
    rep.add("bound_lambda_sq_tail", lam_sq_tail)
    rep.add("bound_lambda_edge", lam_edge)
    rep.add("bound_delta_sup", delta_sup)
    rep.add("tracking_bound", tb.value)

    a_star = reference_equilibrium(cfg, model) if (cfg.game != "scripted" or a_cfg.a_star) else None
    b_max = float(np.max(params.amplitude))
    rep.add("b_max_cubed", b_max ** 3)
    if a_star is None:
        rep.add("envelope", "skipped: no reference equilibrium")
        return rep

    width = _smoothing_width(cfg, traj)
    kernel = np.ones(width) / width
    smooth = np.column_stack([np.convolve(traj.hat_a[:, j], kernel, mode="valid") for j in range(n)])
    t_s = np.convolve(traj.khat, kernel, mode="valid")
    stride = max(1, smooth.shape[0] // 400)
    gap = np.linalg.norm(smooth[::stride] - a_star, axis=1)
    t_fit = t_s[::stride]
    delta0 = float(np.linalg.norm(traj.hat_a[0] - a_star))
    rep.add("Delta0", delta0)
    fit = None
    try:
        fit = analysis.fit_stability_envelope(t_fit, gap)
        rep.add("envelope_mbar", fit.mbar)
        rep.add("envelope_Mbar", fit.Mbar)
        rep.add("envelope_floor", fit.floor)
    except analysis.EnvelopeFitError as exc:
        rep.add("envelope", f"rejected: {exc}")

    Mbar = a_cfg.Mbar if a_cfg.Mbar is not None else (fit.Mbar if fit else None)
    mbar = a_cfg.mbar if a_cfg.mbar is not None else (fit.mbar if fit else None)
    if Mbar is not None and mbar is not None and Mbar > 0 and mbar > 0:
        cb = analysis.corollary2_bound(Mbar, mbar, delta0, t_val, a_cfg.eps, b_max, tb.C_T, L,
                                       lam_edge, lam_sq_tail, delta_sup)
        rep.add("y1_unit_constant", cb.y1)
        rep.add("y2", cb.y2)
        rep.add("distance_bound", cb.total)
        if delta0 > 0:
            ct = analysis.convergence_time(delta0, Mbar, mbar, a_cfg.eps, b_max)
            rep.add("convergence_time", ct.time)
            rep.add("convergence_precision", ct.precision)
            if ct.note:
                rep.add("convergence_note", ct.note)
    return rep


def check_trajectory_matches(cfg: ExperimentConfig, traj: Trajectory):
    n = len(cfg.seeker.amplitude)
    if traj.n_nodes != n:
        raise ConfigError(f"trajectory has {traj.n_nodes} nodes, config has {n}", "seeker")
    if traj.horizon != cfg.seeker.horizon:
        raise ConfigError(f"trajectory horizon {traj.horizon} != config {cfg.seeker.horizon}",
                          "seeker.horizon")
    sched = schedule(cfg)
    if not (np.allclose(traj.lam, sched.rates(traj.horizon), rtol=1e-12, atol=0)
            and np.allclose(traj.khat, sched.clock(traj.horizon), rtol=1e-12, atol=1e-12)):
        raise ConfigError("trajectory clock does not match the configured schedule", "seeker.schedule")


def cmd_analyze(cfg: ExperimentConfig, trajectory_path) -> Report:
    cfg.validate()
    traj = read_trajectory(trajectory_path)
    check_trajectory_matches(cfg, traj)
    rep = analyze_trajectory(cfg, traj)
    rep.write(_out_dir(cfg) / "analysis")
    return rep


def cmd_plot(trajectory_path, out_dir, a_star=None) -> list[Path]:
    """Power (action) and payoff evolution images; ``a_star`` is drawn dotted."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    traj = read_trajectory(trajectory_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    meta = {"Software": None}
    for name, values, label in (("power", traj.hat_a, "action"),
                                ("payoff", traj.payoff, "payoff")):
        fig, ax = plt.subplots(figsize=(7, 4))
        for j in range(traj.n_nodes):
            line, = ax.plot(traj.k, values[:, j], lw=0.6, label=f"node {j + 1}")
            if name == "power" and a_star is not None:
                ax.axhline(a_star[j], ls=":", color=line.get_color(), lw=1.2)
        ax.set_xlabel("iteration k")
        ax.set_ylabel(label)
        ax.legend(loc="upper right")
        fig.tight_layout()
        path = out / f"{name}.png"
        fig.savefig(path, dpi=100, metadata=meta)
        plt.close(fig)
        paths.append(path)
    return paths

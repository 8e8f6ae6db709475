"""Limiting non-autonomous ODE, affine interpolation and trajectory gap metrics.

The mean dynamics of the seeker in cumulative time ``t`` are

    d hat_a_j / dt = z_j b_j sin(Omega_j t + phi_j) E_S r_j(S, a_t)
    a_j(t)         = hat_a_j(t) + b_j sin(Omega_j t + phi_j)

integrated here with fixed-step RK4. The stochastic variant replaces the
expectation with a freshly sampled payoff and uses Euler steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from .game import GameModel, PerturbationParams, StepSchedule, perturbation_signal
from .seeker import NumericalAbort, SeekerConfig, Trajectory, run


class DomainError(ValueError):
    """Evaluation outside the time range a path is defined on."""


@dataclass
class OdeSolution:
    grid: np.ndarray
    hat_a: np.ndarray
    a: np.ndarray
    h: float

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def evaluate(self, t):
        """``hat_a`` at time(s) ``t``; linear between grid points, exact on them."""
        return _piecewise_linear(self.grid, self.hat_a, t)


@dataclass
class InterpolatedPath:
    breakpoints: np.ndarray
    values: np.ndarray

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def evaluate(self, t):
        return _piecewise_linear(self.breakpoints, self.values, t)


def _piecewise_linear(x, y, t):
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    tt = np.atleast_1d(t)
    lo, hi = x[0], x[-1]
    tol = 1e-12 * max(1.0, abs(hi))
    if np.any(tt < lo - tol) or np.any(tt > hi + tol):
        raise DomainError(f"evaluation time outside [{lo}, {hi}]")
    tt = np.clip(tt, lo, hi)
    idx = np.clip(np.searchsorted(x, tt, side="right") - 1, 0, len(x) - 1)
    nxt = np.minimum(idx + 1, len(x) - 1)
    span = x[nxt] - x[idx]
    w = np.divide(tt - x[idx], span, out=np.zeros_like(tt), where=span > 0)
    out = y[idx] + w[:, None] * (y[nxt] - y[idx])
    exact = w == 0
    out[exact] = y[idx[exact]]
    return out[0] if scalar else out


def _time_grid(t0, t1, h):
    if not h > 0:
        raise ValueError("step h must be > 0")
    if t1 < t0:
        raise ValueError("t_span must be increasing")
    n = int(math.ceil((t1 - t0) / h - 1e-9))
    grid = t0 + h * np.arange(n + 1)
    grid[-1] = t1
    return grid


def interpolate(traj: Trajectory, schedule: StepSchedule | None = None) -> InterpolatedPath:
    """Affine interpolation of ``hat_a`` with breakpoints at the clock values.

    Breakpoints are ``schedule.clock`` when a schedule is supplied, otherwise
    the clock stored in the trajectory.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    bp = schedule.clock(traj.horizon) if schedule is not None else traj.khat
    return InterpolatedPath(np.asarray(bp, dtype=float), traj.hat_a.copy())


def integrate_deterministic(model: GameModel, params: PerturbationParams, hat_a0, t_span,
                            h: float) -> OdeSolution:
    """Fixed-step RK4 for the mean dynamics; the last step is shortened to land on ``t_span[1]``."""
    t0, t1 = map(float, t_span)
    grid = _time_grid(t0, t1, h)
    z = params.growth

    def drift(t, hat):
        d = perturbation_signal(t, params)
        f = z * d * model.expected_payoffs(hat + d)
        if not np.all(np.isfinite(f)):
            raise NumericalAbort(f"non-finite drift at t={t}")
        return f

    y = np.asarray(hat_a0, dtype=float).copy()
    out = np.empty((grid.size, y.size))
    out[0] = y
    for i in range(grid.size - 1):
        t, dt = grid[i], grid[i + 1] - grid[i]
        k1 = drift(t, y)
        k2 = drift(t + dt / 2, y + dt / 2 * k1)
        k3 = drift(t + dt / 2, y + dt / 2 * k2)
        k4 = drift(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return OdeSolution(grid, out, out + perturbation_signal(grid, params), h)


def integrate_stochastic(model: GameModel, params: PerturbationParams, hat_a0, t_span, h: float,
                         seed: int = 0) -> OdeSolution:
    """Euler scheme driven by a realised payoff, one fresh state per step."""
    t0, t1 = map(float, t_span)
    grid = _time_grid(t0, t1, h)
    rng = np.random.default_rng(seed)
    states = model.sample_states(rng, grid.size - 1)
    dither = perturbation_signal(grid, params)
    y = np.asarray(hat_a0, dtype=float).copy()
    out = np.empty((grid.size, y.size))
    out[0] = y
    for i in range(grid.size - 1):
        r = model.payoffs(states[i], y + dither[i])
        f = params.growth * dither[i] * r
        if not np.all(np.isfinite(f)):
            raise NumericalAbort(f"non-finite drift at t={grid[i]}", iteration=i)
        y = y + (grid[i + 1] - grid[i]) * f
        out[i + 1] = y
    return OdeSolution(grid, out, out + dither, h)


def ergodic_average_check(model: GameModel, params: PerturbationParams, a_path, t_end: float,
                          h: float = 0.01, weight=None, seed: int = 0):
    """Compare time averages of weighted realised and expected payoffs on ``[0, t_end]``.

    ``a_path(t)`` returns the action profiles at an array of times (shape
    ``(len(t), N)``). ``weight(t)`` returns per-node weights of the same shape
    and defaults to the dither ``sin(Omega_j t + phi_j)``. Trapezoidal
    quadrature on a grid of pitch ``h``; states are drawn i.i.d. per grid
    point. Returns ``(lhs, rhs, |lhs - rhs|)`` per node.
    """
    grid = _time_grid(0.0, float(t_end), h)
    if weight is None:
        mu = np.sin(np.multiply.outer(grid, params.frequency) + params.phase)
    else:
        mu = np.asarray(weight(grid), dtype=float).reshape(grid.size, -1)
    acts = np.asarray(a_path(grid), dtype=float)
    states = model.sample_states(np.random.default_rng(seed), grid.size)
    realised = model.payoffs_batch(states, acts)
    expected = model.expected_payoffs_batch(acts)
    lhs = trapezoid(mu * realised, grid, axis=0) / t_end
    rhs = trapezoid(mu * expected, grid, axis=0) / t_end
    return lhs, rhs, np.abs(lhs - rhs)


def sup_gap(first, second, window, pitch: float | None = None) -> float:
    """Largest Euclidean distance between two paths over ``window = (t0, t0 + T)``.

    Both arguments need ``evaluate(t)`` and ``domain``. The evaluation grid
    pitch defaults to the step ``h`` of whichever argument is an ODE
    solution (else 0.01).
    """
    t0, t1 = map(float, window)
    for p in (first, second):
        lo, hi = p.domain
        tol = 1e-12 * max(1.0, abs(hi))
        if t0 < lo - tol or t1 > hi + tol:
            raise DomainError(f"window [{t0}, {t1}] not inside path domain [{lo}, {hi}]")
    if pitch is None:
        pitch = next((p.h for p in (first, second) if isinstance(p, OdeSolution)), 0.01)
    grid = _time_grid(t0, t1, pitch)
    diff = first.evaluate(grid) - second.evaluate(grid)
    return float(np.max(np.linalg.norm(diff, axis=1)))


def default_step(lam: float) -> float:
    return min(0.01, lam / 10)


@dataclass
class WindowComparison:
    path: InterpolatedPath
    ode: OdeSolution
    window: tuple[float, float]
    gap: float

    def rows(self):
        """``(t, path values, ode values, gap)`` on the ODE grid."""
        t = self.ode.grid
        pv = self.path.evaluate(t)
        ov = self.ode.hat_a
        return t, pv, ov, np.linalg.norm(pv - ov, axis=1)


def compare_window(model: GameModel, traj: Trajectory, params: PerturbationParams, t0: float,
                   length: float, h: float | None = None) -> WindowComparison:
    """Restart the mean ODE from the interpolated path at ``t0`` and measure the sup gap."""
    path = interpolate(traj)
    lo, hi = path.domain
    if t0 < lo or t0 + length > hi * (1 + 1e-12):
        raise DomainError(f"window [{t0}, {t0 + length}] outside trajectory clock [{lo}, {hi}]")
    if h is None:
        h = default_step(float(traj.lam[-1]))
    ode = integrate_deterministic(model, params, path.evaluate(t0), (t0, t0 + length), h)
    return WindowComparison(path, ode, (t0, t0 + length), sup_gap(path, ode, (t0, t0 + length)))


@dataclass
class GapSweep:
    lambdas: np.ndarray
    gaps: np.ndarray  # (n_lambda, n_seeds)

    @property
    def mean_gaps(self) -> np.ndarray:
        return self.gaps.mean(axis=1)

    def sqrt_lambda_fit(self):
        """Least-squares line of mean gap against sqrt(lambda): (slope, intercept, r_squared)."""
        fit = stats.linregress(np.sqrt(self.lambdas), self.mean_gaps)
        return fit.slope, fit.intercept, fit.rvalue ** 2


def gap_sweep(model: GameModel, params: PerturbationParams, hat_a0, lambdas, seeds, t0: float,
              length: float, clamp_nonnegative: bool = False) -> GapSweep:
    """Sup gaps over a fixed window for several constant learning rates and seeds.

    The horizon for each rate is the smallest iteration count whose clock
    covers the window.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    seeds = list(seeds)
    gaps = np.empty((lambdas.size, len(seeds)))
    for i, lam in enumerate(lambdas):
        schedule = StepSchedule.constant(lam)
        horizon = int(math.ceil((t0 + length) / lam - 1e-9))
        h = default_step(lam)
        ode = None
        for s, seed in enumerate(seeds):
            cfg = SeekerConfig(params, schedule, horizon, hat_a0, seed, clamp_nonnegative)
            traj = run(model, cfg)
            path = interpolate(traj)
            start = path.evaluate(t0)
            if ode is None or not np.array_equal(ode.hat_a[0], start):
                ode = integrate_deterministic(model, params, start, (t0, t0 + length), h)
            gaps[i, s] = sup_gap(path, ode, (t0, t0 + length))
    return GapSweep(lambdas, gaps)

"""Error bounds, convergence time, Lipschitz and martingale diagnostics, envelope fits.

The seeker update is split into a mean drift and a martingale-difference
noise,

    hat_a_{k+1} = hat_a_k + lambda_k (f(k, a_k) + M_{k+1}),
    f_j(k, a)   = z_j b_j sin(Omega_j khat_k + phi_j) E_S r_j(S, a),

and the bounds below are assembled from the Lipschitz constant of ``f``,
the learning-rate tail and the cumulative noise ``xi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import GameModel, PerturbationParams
from .seeker import Trajectory


class EnvelopeFitError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Robbins-Monro split
# ---------------------------------------------------------------------------

@dataclass
class RobbinsMonroDecomposition:
    drift: np.ndarray       # (K, N)  f_j(k, a_k)
    noise: np.ndarray       # (K, N)  M_{j,k+1}
    direction: np.ndarray   # (K, N)  z_j b_j sin(.) r_{j,k+1}
    xi: np.ndarray          # (K + 1, N) cumulative noise, xi[0] = 0
    expected: np.ndarray    # (K, N)  E_S r_j(S, a_k)

    def increments(self, t: int) -> np.ndarray:
        """``delta_{t, t+k} = xi_{t+k} - xi_t`` for every ``k >= 0`` available."""
        return self.xi[t:] - self.xi[t]


def decompose(traj: Trajectory, model: GameModel, params: PerturbationParams,
              expected=None) -> RobbinsMonroDecomposition:
    """Split every recorded update direction into drift and noise.

    ``expected`` may carry precomputed ``E_S r(S, a_k)`` rows.
    """
    if expected is None:
        expected = model.expected_payoffs_batch(traj.a)
    weight = params.growth * np.sin(np.multiply.outer(traj.khat, params.frequency) + params.phase)
    weight = params.amplitude * weight
    drift = weight * expected
    noise = weight * (traj.payoff - expected)
    direction = weight * traj.payoff
    xi = np.zeros((len(traj) + 1, traj.n_nodes))
    np.cumsum(traj.lam[:, None] * noise, axis=0, out=xi[1:])
    return RobbinsMonroDecomposition(drift, noise, direction, xi, expected)


# ---------------------------------------------------------------------------
# Lipschitz estimate
# ---------------------------------------------------------------------------

@dataclass
class LipschitzEstimate:
    per_node: np.ndarray
    overall: float


def lipschitz_estimate(model: GameModel, low, high, n_pairs: int = 1000,
                       rng: np.random.Generator | None = None) -> LipschitzEstimate:
    """Largest observed difference quotient of the expected payoffs over random pairs.

    This is a lower estimate of the true constant on the box ``[low, high]``.
    Coincident pairs are redrawn.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = model.n_nodes
    lo = np.broadcast_to(np.asarray(low, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(high, dtype=float), (n,))
    if np.any(hi < lo) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("box must be bounded with low <= high")
    first = lo + (hi - lo) * rng.random((n_pairs, n))
    second = lo + (hi - lo) * rng.random((n_pairs, n))
    dist = np.linalg.norm(first - second, axis=1)
    for _ in range(100):
        bad = dist == 0
        if not bad.any():
            break
        second[bad] = lo + (hi - lo) * rng.random((int(bad.sum()), n))
        dist = np.linalg.norm(first - second, axis=1)
    keep = dist > 0
    if not keep.any():
        return LipschitzEstimate(np.zeros(n), 0.0)
    ef = model.expected_payoffs_batch(first[keep])
    es = model.expected_payoffs_batch(second[keep])
    q = np.abs(ef - es) / dist[keep, None]
    per_node = q.max(axis=0)
    return LipschitzEstimate(per_node, float(per_node.max()))


# ---------------------------------------------------------------------------
# Martingale diagnostics
# ---------------------------------------------------------------------------

@dataclass
class MartingaleReport:
    mean: np.ndarray
    stderr: np.ndarray
    c_hat: float
    ratios: np.ndarray
    running_mean: np.ndarray = field(repr=False)

    @property
    def mean_zero(self) -> bool:
        return bool(np.all(np.abs(self.mean) <= 3 * self.stderr))

    @property
    def identically_zero(self) -> bool:
        return self.c_hat == 0.0


def martingale_diagnostics(traj: Trajectory, model: GameModel, params: PerturbationParams,
                           decomposition: RobbinsMonroDecomposition | None = None
                           ) -> MartingaleReport:
    """Zero-mean and square-integrability probes for the noise sequence.

    ``ratios[k] = ||M_{k+1}||^2 / (1 + ||a_k||^2)`` and ``c_hat`` is their
    maximum; a bounded ``c_hat`` across longer horizons is the empirical
    counterpart of the conditional second-moment bound.
    """
    dec = decomposition if decomposition is not None else decompose(traj, model, params)
    m = dec.noise
    k = m.shape[0]
    mean = m.mean(axis=0)
    stderr = m.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros(m.shape[1])
    ratios = np.sum(m ** 2, axis=1) / (1 + np.sum(traj.a ** 2, axis=1))
    running = np.cumsum(m, axis=0) / np.arange(1, k + 1)[:, None]
    return MartingaleReport(mean, stderr, float(ratios.max()), ratios, running)


# ---------------------------------------------------------------------------
# Bound calculators
# ---------------------------------------------------------------------------

@dataclass
class BoundConstants:
    """Ingredients of the tracking-error bounds.

    ``r0_norm`` is the Euclidean norm of the expected-payoff vector at the
    zero action profile.
    """

    L: float
    C0: float
    T: float
    r0_norm: float
    Mbar: float | None = None
    mbar: float | None = None
    Delta0: float | None = None
    eps: float | None = None

    @property
    def C_T(self) -> float:
        return tracking_constant(self.L, self.r0_norm, self.C0, self.T)


def tracking_constant(L, r0_norm, C0, T) -> float:
    """``C_T = ||r(0)|| + L (C0 + ||r(0)|| T) e^{L T}``."""
    return r0_norm + L * (C0 + r0_norm * T) * math.exp(L * T)


@dataclass
class TrackingBound:
    C_T: float
    K: float
    lambda_sq_tail: float
    lambda_edge: float
    delta_sup: float
    value: float


def theorem1_bound(constants: BoundConstants, lambda_sq_tail: float, lambda_edge: float,
                   delta_sup: float) -> TrackingBound:
    """Tracking bound ``K e^{LT} + C_T lambda_edge`` with ``K = C_T L sum(lambda^2) + sup||delta||``.

    ``lambda_sq_tail`` is the (finite, caller-truncated) sum of squared
    learning rates over the window tail and ``lambda_edge`` the rate at the
    window's right edge. Both ingredients are returned so either reading of
    the index can be reconstructed.
    """
    vals = (constants.L, constants.C0, constants.T, constants.r0_norm,
            lambda_sq_tail, lambda_edge, delta_sup)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("bound ingredients must be finite (truncate divergent tails)")
    c_t = constants.C_T
    k = c_t * constants.L * lambda_sq_tail + delta_sup
    value = k * math.exp(constants.L * constants.T) + c_t * lambda_edge
    return TrackingBound(c_t, k, lambda_sq_tail, lambda_edge, delta_sup, value)


@dataclass
class CombinedBound:
    y1: float
    y2: float

    @property
    def total(self) -> float:
        return self.y1 + self.y2


def stability_envelope(Mbar, mbar, Delta0, t, eps, b_max) -> float:
    """``Mbar e^{-mbar t} Delta0 + (eps + b_max**3)``; the order term is taken with unit constant."""
    if mbar <= 0:
        raise ValueError("mbar must be positive")
    return Mbar * math.exp(-mbar * t) * Delta0 + (eps + b_max ** 3)


def corollary2_bound(Mbar, mbar, Delta0, t, eps, b_max, C_T, L, lambda_edge, lambda_sq_tail,
                     delta_sup) -> CombinedBound:
    """Distance-to-equilibrium bound ``y1 + y2`` for the interpolated iterates.

    ``y1`` is the stability envelope of the mean ODE and
    ``y2 = C_T (lambda_edge + L sum(lambda^2)) + sup||delta||`` the tracking
    error of the iterates around it.
    """
    y1 = stability_envelope(Mbar, mbar, Delta0, t, eps, b_max)
    y2 = C_T * (lambda_edge + L * lambda_sq_tail) + delta_sup
    return CombinedBound(y1, y2)


@dataclass
class ConvergenceTime:
    time: float
    precision: float | None
    note: str = ""


def convergence_time(Delta0, Mbar, mbar, eps, b_max=None) -> ConvergenceTime:
    """Time ``(1/mbar) ln(Delta0 Mbar / eps)`` to come within ``2 eps + max_j b_j**3``."""
    for name, v in (("Delta0", Delta0), ("Mbar", Mbar), ("mbar", mbar), ("eps", eps)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    precision = None if b_max is None else 2 * eps + b_max ** 3
    if Delta0 * Mbar <= eps:
        note = "" if Delta0 * Mbar == eps else "already within precision"
        return ConvergenceTime(0.0, precision, note)
    return ConvergenceTime((math.log(Delta0 * Mbar) - math.log(eps)) / mbar, precision)


# ---------------------------------------------------------------------------
# Stability envelope fit
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeFit:
    Mbar: float
    mbar: float
    floor: float
    Delta0: float
    n_points: int
    segment_end: float


def _moving_average(x, width=5):
    if x.size < width:
        return x.copy()
    return np.convolve(x, np.ones(width) / width, mode="valid")


def fit_stability_envelope(t, gap, floor_fraction: float = 0.1) -> EnvelopeFit:
    """Fit ``gap(t) ~ Mbar e^{-mbar t} Delta0 + floor``.

    ``floor`` is the mean gap over the final ``floor_fraction`` of the
    samples. The decaying segment is the longest prefix over which a
    5-point moving average strictly decreases; within it, only points whose
    excess ``gap - floor`` is still above ``floor`` enter the log-linear
    least-squares fit, so the noise floor does not flatten the slope.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(gap, dtype=float)
    if t.shape != d.shape or t.ndim != 1 or t.size < 8:
        raise EnvelopeFitError("need matching 1-d arrays with at least 8 samples")
    n_tail = max(1, int(round(floor_fraction * d.size)))
    floor = float(d[-n_tail:].mean())
    ma = _moving_average(d)
    dec = np.diff(ma) < 0
    stop = int(np.argmin(dec)) if not dec.all() else dec.size
    seg_end = min(stop + 5, d.size)
    if stop == 0:
        raise EnvelopeFitError("gap does not decay; envelope fit rejected")
    excess = d[:seg_end] - floor
    floor_min = max(floor, 1e-12 * max(abs(d[0]), 1.0))
    use = excess > floor_min
    if use.sum() < 3:
        raise EnvelopeFitError("too few decaying points above the floor")
    y = np.log(np.maximum(excess[use], floor_min))
    slope, intercept = np.polyfit(t[:seg_end][use], y, 1)
    if slope >= 0:
        raise EnvelopeFitError(f"non-decaying gap (slope {slope:.3g}); envelope fit rejected")
    delta0 = float(d[0])
    # intercept is ln(Mbar * Delta0) at t = t[0]
    mbar_hat = -float(slope)
    Mbar_hat = math.exp(intercept + slope * t[0]) / delta0 if delta0 > 0 else float("nan")
    return EnvelopeFit(Mbar_hat, mbar_hat, floor, delta0, int(use.sum()), float(t[seg_end - 1]))


# ---------------------------------------------------------------------------
# Approximate equilibrium checks
# ---------------------------------------------------------------------------

def epsilon_close_check(a, a_star, eps) -> bool:
    return bool(np.linalg.norm(np.asarray(a, float) - np.asarray(a_star, float)) < eps)


def epsilon_nash_check(model: GameModel, a, eps, probe_grid) -> bool:
    """True when no probed unilateral deviation gains more than ``eps`` in expected payoff.

    ``probe_grid`` is either one 1-d array of candidate actions used for every
    node or a sequence with one array per node.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    grids = probe_grid
    if np.ndim(probe_grid) == 1 and not isinstance(probe_grid[0], (list, tuple, np.ndarray)):
        grids = [np.asarray(probe_grid, dtype=float)] * n
    base = np.asarray(model.expected_payoffs(a), dtype=float)
    worst = -np.inf
    for j in range(n):
        g = np.asarray(grids[j], dtype=float)
        dev = np.repeat(a[None, :], g.size, axis=0)
        dev[:, j] = g
        gain = model.expected_payoffs_batch(dev)[:, j] - base[j]
        worst = max(worst, float(gain.max()))
    return bool(worst <= eps)

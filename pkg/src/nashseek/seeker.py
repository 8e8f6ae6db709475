"""Distributed sinus-perturbation learning (the discrete-time seeker).

Each iteration ``k``:

1. every node plays ``a_{j,k} = hat_a_{j,k} + b_j sin(Omega_j khat_k + phi_j)``;
2. one system state ``S_k`` is drawn and node ``j`` observes only its own
   payoff ``r_{j,k+1} = r_j(S_k, a_k)``;
3. ``hat_a_{j,k+1} = hat_a_{j,k} + lambda_k z_j b_j sin(Omega_j khat_k + phi_j) r_{j,k+1}``.

The dither multiplying the payoff uses the same clock value ``khat_k`` as the
dither embedded in the action, which is what turns ``sin(.) * r`` into a
gradient estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import GameModel, PerturbationParams, StepSchedule, perturbation_signal

STATE_CHUNK = 65536


class NumericalAbort(RuntimeError):
    """A payoff or iterate became non-finite (or the model rejected an action)."""

    def __init__(self, message, iteration=None, node=None):
        super().__init__(message)
        self.iteration = iteration
        self.node = node


class GradientUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class SeekerConfig:
    perturbation: PerturbationParams
    schedule: StepSchedule
    horizon: int
    initial: np.ndarray
    seed: int = 0
    clamp_nonnegative: bool = False

    def __post_init__(self):
        init = np.atleast_1d(np.asarray(self.initial, dtype=float)).copy()
        object.__setattr__(self, "initial", init)
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise ValueError("horizon must be a nonnegative integer")
        object.__setattr__(self, "horizon", int(self.horizon))
        if not np.all(np.isfinite(init)):
            raise ValueError("initial hat_a must be finite")
        if init.shape != (self.perturbation.n_nodes,):
            raise ValueError("initial hat_a length must match the perturbation parameters")

    def validate(self):
        self.perturbation.validate()


@dataclass
class Trajectory:
    """Records ``k = 0..horizon`` of a run.

    Row ``k`` holds the clock ``khat_k``, the intermediary values
    ``hat_a_k``, the played actions ``a_k``, the payoffs observed after
    playing ``a_k`` and the learning rate ``lambda_k`` applied at that step.
    """

    k: np.ndarray
    khat: np.ndarray
    hat_a: np.ndarray
    a: np.ndarray
    payoff: np.ndarray
    lam: np.ndarray

    def __len__(self):
        return self.k.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.hat_a.shape[1]

    @property
    def horizon(self) -> int:
        return len(self) - 1


def step(hat_a, khat_k, lam_k, payoffs, params: PerturbationParams, iteration=None):
    """One update of the intermediary values."""
    r = np.asarray(payoffs, dtype=float)
    bad = np.flatnonzero(~np.isfinite(r))
    if bad.size:
        raise NumericalAbort(
            f"non-finite payoff for node {bad[0]} at iteration {iteration}",
            iteration=iteration, node=int(bad[0]))
    direction = params.growth * perturbation_signal(khat_k, params) * r
    return np.asarray(hat_a, dtype=float) + lam_k * direction


def run(model: GameModel, cfg: SeekerConfig) -> Trajectory:
    """Run the learning scheme for ``cfg.horizon`` iterations.

    The run is a pure function of ``cfg`` (states come from
    ``numpy.random.default_rng(cfg.seed)``). The final record also carries the
    payoff of its action, so every row is complete; no update follows it.
    """
    cfg.validate()
    p = cfg.perturbation
    n = p.n_nodes
    if model.n_nodes != n:
        raise ValueError(f"model has {model.n_nodes} nodes, config has {n}")
    T = cfg.horizon
    rng = np.random.default_rng(cfg.seed)
    khat_all = cfg.schedule.clock(T)
    lam = cfg.schedule.rates(T)
    dither = perturbation_signal(khat_all, p)
    gain = p.growth * dither

    kernel = model.scalar_kernel()
    if kernel is not None:
        hat, act, pay = _loop_scalar(model, kernel, cfg, rng, dither, gain, lam)
    else:
        hat, act, pay = _loop_numpy(model, cfg, rng, dither, gain, lam)
    return Trajectory(np.arange(T + 1), khat_all, hat, act, pay, lam)


def _loop_numpy(model, cfg, rng, dither, gain, lam):
    T, n = cfg.horizon, dither.shape[1]
    hat = np.empty((T + 1, n))
    act = np.empty((T + 1, n))
    pay = np.empty((T + 1, n))
    h = cfg.initial.copy()
    clamp = cfg.clamp_nonnegative
    payoffs = model.payoffs
    for start in range(0, T + 1, STATE_CHUNK):
        stop = min(start + STATE_CHUNK, T + 1)
        states = model.sample_states(rng, stop - start)
        for k in range(start, stop):
            a = h + dither[k]
            if clamp:
                a = np.maximum(a, 0.0)
            try:
                r = payoffs(states[k - start], a)
            except (ValueError, FloatingPointError) as exc:
                raise NumericalAbort(f"model rejected action at iteration {k}: {exc}",
                                     iteration=k) from exc
            hat[k] = h
            act[k] = a
            pay[k] = r
            h = h + lam[k] * (gain[k] * r)
            if not math.isfinite(h.sum()):
                _raise_non_finite(r, h, k)
    return hat, act, pay


def _loop_scalar(model, kernel, cfg, rng, dither, gain, lam):
    # Same arithmetic order as the numpy loop, on Python floats.
    T, n = cfg.horizon, dither.shape[1]
    nodes = range(n)
    dither_l, gain_l, lam_l = dither.tolist(), gain.tolist(), lam.tolist()
    hat, act, pay = [], [], []
    h = cfg.initial.tolist()
    clamp = cfg.clamp_nonnegative
    isfinite = math.isfinite
    for start in range(0, T + 1, STATE_CHUNK):
        stop = min(start + STATE_CHUNK, T + 1)
        states = np.asarray(model.sample_states(rng, stop - start)).tolist()
        for k in range(start, stop):
            d = dither_l[k]
            a = [h[j] + d[j] for j in nodes]
            if clamp:
                a = [x if x > 0.0 else 0.0 for x in a]
            try:
                r = kernel(states[k - start], a)
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                raise NumericalAbort(f"model rejected action at iteration {k}: {exc}",
                                     iteration=k) from exc
            hat.append(h)
            act.append(a)
            pay.append(r)
            g, lk = gain_l[k], lam_l[k]
            h = [h[j] + lk * (g[j] * r[j]) for j in nodes]
            if not isfinite(sum(h)):
                _raise_non_finite(r, h, k)
    shape = (T + 1, n)
    return (np.array(hat, dtype=float).reshape(shape), np.array(act, dtype=float).reshape(shape),
            np.array(pay, dtype=float).reshape(shape))


def _raise_non_finite(r, h, k):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        j = int(np.flatnonzero(~np.isfinite(r))[0])
        raise NumericalAbort(f"non-finite payoff for node {j} at iteration {k}",
                             iteration=k, node=j)
    if not np.all(np.isfinite(h)):
        raise NumericalAbort(f"non-finite iterate at iteration {k + 1}", iteration=k + 1)


def _expected_gradient_fn(model: GameModel):
    grad = getattr(model, "expected_gradient", None)
    if grad is not None:
        return grad

    def fd(a):
        a = np.asarray(a, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(a))
        out = np.empty_like(a)
        for j in range(a.size):
            e = np.zeros_like(a)
            e[j] = h[j]
            try:
                up = model.expected_payoff(a + e, j)
                down = model.expected_payoff(a - e, j)
            except NotImplementedError as exc:
                raise GradientUnavailable("model exposes no expected payoff") from exc
            out[j] = (up - down) / (2 * h[j])
        return out
    return fd


def baseline_gradient_ascent(model: GameModel, schedule: StepSchedule, a_max, initial,
                             horizon: int, seed: int = 0, gradient=None) -> Trajectory:
    """Projected gradient ascent with oracle gradients, for comparison runs.

    ``a_{k+1} = clip(a_k + lambda_k * grad_k, 0, a_max)``. The gradient is
    ``gradient(a)`` if given, else ``model.expected_gradient`` when present,
    else a central difference of the expected payoff. The returned trajectory
    has ``hat_a == a`` (there is no dither) and ``khat`` from ``schedule``.
    """
    grad_fn = gradient if gradient is not None else _expected_gradient_fn(model)
    a_max = np.broadcast_to(np.asarray(a_max, dtype=float), (model.n_nodes,))
    rng = np.random.default_rng(seed)
    states = model.sample_states(rng, horizon + 1)
    lam = schedule.rates(horizon)
    a = np.clip(np.asarray(initial, dtype=float), 0.0, a_max)
    acts = np.empty((horizon + 1, model.n_nodes))
    pay = np.empty_like(acts)
    for k in range(horizon + 1):
        acts[k] = a
        pay[k] = model.payoffs(states[k], a)
        g = np.asarray(grad_fn(a), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NumericalAbort(f"non-finite gradient at iteration {k}", iteration=k)
        a = np.clip(a + lam[k] * g, 0.0, a_max)
    return Trajectory(np.arange(horizon + 1), schedule.clock(horizon), acts.copy(), acts, pay, lam)

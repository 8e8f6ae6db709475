"""Core types: dither parameters, learning-rate schedules and the game interface.

Every node ``j`` plays the scalar action

    a_j = hat_a_j + b_j * sin(Omega_j * khat + phi_j)

where ``khat`` is the cumulative clock (sum of the learning rates so far).
The game itself is described by a :class:`GameModel`, which draws a random
system state and evaluates the realised payoff of each node for a given
action profile.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np

FREQUENCY_RTOL = 1e-9
DETERMINISTIC_GRAD_TOL = 1e-6


class ScheduleKind(str, Enum):
    VANISHING = "vanishing"
    CONSTANT = "constant"


@dataclass(frozen=True)
class PerturbationParams:
    """Per-node sinusoidal dither and growth rate.

    Parameters
    ----------
    amplitude : array_like
        ``b_j > 0``, in action units.
    frequency : array_like
        ``Omega_j``, radians per unit of cumulative time ``khat``.
    phase : array_like
        ``phi_j`` in ``[0, 2*pi]``.
    growth : array_like
        ``z_j >= 0``, dimensionless.
    """

    amplitude: np.ndarray
    frequency: np.ndarray
    phase: np.ndarray
    growth: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("amplitude", "frequency", "phase", "growth"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).copy()
            arr.flags.writeable = False
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        sizes = {a.shape for a in arrays.values()}
        if len(sizes) != 1 or arrays["amplitude"].ndim != 1:
            raise ValueError(f"perturbation arrays must share one 1-d shape, got {sizes}")

    @classmethod
    def uniform(cls, n, amplitude, frequency, phase=0.0, growth=1.0):
        """Build parameters from scalars or per-node sequences."""
        def expand(v):
            return np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()
        return cls(expand(amplitude), expand(frequency), expand(phase), expand(growth))

    @property
    def n_nodes(self) -> int:
        return self.amplitude.shape[0]

    def validate(self) -> None:
        """Raise ``ValueError`` unless every invariant holds."""
        for name in ("amplitude", "frequency", "phase", "growth"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} must be finite")
        if np.any(self.amplitude <= 0):
            raise ValueError("amplitude b_j must be strictly positive")
        if np.any(self.growth < 0):
            raise ValueError("growth rate z_j must be nonnegative")
        if np.any((self.phase < 0) | (self.phase > 2 * math.pi)):
            raise ValueError("phase phi_j must lie in [0, 2*pi]")
        report = validate_frequencies(self.frequency)
        if not report.ok:
            raise ValueError(str(report))


@dataclass(frozen=True)
class StepSchedule:
    """Learning-rate rule ``lambda_k`` and the cumulative clock built from it.

    ``Constant`` uses ``lambda_k = lambda0``; ``Vanishing`` uses
    ``lambda_k = lambda0 / (k + 1)``.
    """

    kind: ScheduleKind
    lambda0: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not (math.isfinite(self.lambda0) and self.lambda0 > 0):
            raise ValueError(f"lambda0 must be finite and > 0, got {self.lambda0}")

    @classmethod
    def constant(cls, lam: float) -> "StepSchedule":
        return cls(ScheduleKind.CONSTANT, lam)

    @classmethod
    def vanishing(cls, lambda0: float = 1.0) -> "StepSchedule":
        return cls(ScheduleKind.VANISHING, lambda0)

    def rate(self, k):
        """Learning rate at iteration ``k`` (scalar or array)."""
        k = np.asarray(k, dtype=float)
        if self.kind is ScheduleKind.CONSTANT:
            out = np.full_like(k, self.lambda0)
        else:
            out = self.lambda0 / (k + 1.0)
        return out if out.ndim else float(out)

    def rates(self, horizon: int) -> np.ndarray:
        return np.asarray(self.rate(np.arange(horizon + 1)), dtype=float).reshape(-1)

    def clock(self, horizon: int) -> np.ndarray:
        """``khat(k)`` for ``k = 0..horizon``; ``khat(0) = 0``."""
        if horizon < 0:
            raise ValueError("horizon must be >= 0")
        k = np.arange(horizon + 1, dtype=float)
        if self.kind is ScheduleKind.CONSTANT:
            return k * self.lambda0
        out = np.zeros(horizon + 1)
        np.cumsum(self.lambda0 / (k[1:] + 1.0), out=out[1:])
        return out

    def tail_sums(self, start: int, stop: int) -> tuple[float, float]:
        """Return ``(sum lambda_k, sum lambda_k**2)`` over ``start <= k < stop``."""
        lam = self.rate(np.arange(start, stop))
        lam = np.atleast_1d(lam)
        return float(lam.sum()), float(np.square(lam).sum())

    def admissibility(self) -> dict[str, bool]:
        """Flags for the step-size conditions of the vanishing and constant regimes.

        Only the canonical ``lambda0/(k+1)`` rule is covered; its sum is the
        harmonic series (divergent) and its sum of squares is bounded by
        ``lambda0**2 * pi**2 / 6``.
        """
        if self.kind is ScheduleKind.VANISHING:
            return {"positive": True, "sum_diverges": True, "square_summable": True,
                    "vanishing_ok": True, "constant_ok": False}
        return {"positive": True, "sum_diverges": True, "square_summable": False,
                "vanishing_ok": False, "constant_ok": True}


def khat(k: int, schedule: StepSchedule) -> float:
    """Cumulative clock ``sum_{k'=1}^{k} lambda_{k'}``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return float(schedule.clock(k)[-1])


def perturbation_signal(khat_value, params: PerturbationParams, j=None):
    """Dither ``b_j sin(Omega_j khat + phi_j)``.

    With ``j`` given, returns the value(s) for that node; otherwise returns an
    array whose last axis runs over nodes. ``khat_value`` may be an array, in
    which case leading axes follow it.
    """
    t = np.asarray(khat_value, dtype=float)
    if j is not None:
        return params.amplitude[j] * np.sin(params.frequency[j] * t + params.phase[j])
    return params.amplitude * np.sin(np.multiply.outer(t, params.frequency) + params.phase)


@dataclass
class FrequencyReport:
    ok: bool
    equal_pairs: list[tuple[int, int]] = field(default_factory=list)
    sum_triples: list[tuple[int, int, int]] = field(default_factory=list)

    def __str__(self):
        if self.ok:
            return "frequencies ok"
        parts = [f"Omega_{i} == Omega_{j}" for i, j in self.equal_pairs]
        parts += [f"Omega_{i} + Omega_{j} == Omega_{l}" for i, j, l in self.sum_triples]
        return "frequency condition violated: " + "; ".join(parts)


def validate_frequencies(omegas: Sequence[float], rtol: float = FREQUENCY_RTOL) -> FrequencyReport:
    """Check pairwise distinctness and the no-sum condition on dither frequencies.

    A triple ``(j, j', j'')`` violates the condition when
    ``Omega_j + Omega_j' == Omega_j''`` up to relative tolerance ``rtol``;
    ``j == j'`` is included.
    """
    w = np.asarray(omegas, dtype=float)
    if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("frequencies must be a 1-d array of finite positive reals")

    def close(x, y):
        return abs(x - y) <= rtol * max(abs(x), abs(y))

    n = w.size
    equal = [(i, j) for i, j in itertools.combinations(range(n), 2) if close(w[i], w[j])]
    sums = [(i, j, l) for i in range(n) for j in range(n) for l in range(n)
            if close(w[i] + w[j], w[l])]
    return FrequencyReport(not equal and not sums, equal, sums)


class GameModel:
    """A game with a random system state and smooth per-node payoffs.

    Subclasses implement :meth:`sample_state` and :meth:`payoffs`. The
    default expected payoff is a Monte Carlo average over a fixed bank of
    ``mc_samples`` states drawn once from ``mc_seed``, so repeated calls are
    deterministic. Models with a closed form override
    :meth:`expected_payoffs`.
    """

    n_nodes: int = 1
    stochastic: bool = True
    mc_samples: int = 2000
    mc_seed: int = 12345

    def sample_state(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def sample_states(self, rng: np.random.Generator, n: int) -> Sequence[Any]:
        return [self.sample_state(rng) for _ in range(n)]

    def payoffs(self, state, a) -> np.ndarray:
        """Realised payoff of every node for state ``state`` and profile ``a``."""
        raise NotImplementedError

    def payoff(self, state, a, j: int) -> float:
        return float(self.payoffs(state, a)[j])

    def payoffs_batch(self, states, actions) -> np.ndarray:
        """Realised payoffs for paired rows of states and profiles, shape ``(K, N)``."""
        actions = np.asarray(actions, dtype=float)
        return np.array([self.payoffs(s, a) for s, a in zip(states, actions)]).reshape(actions.shape)

    def scalar_kernel(self):
        """Optional pure-float payoff function ``(state_as_list, a_list) -> list``.

        Small games pay more in numpy call overhead than in arithmetic; when
        a model returns a kernel here the seeker loop runs on Python floats.
        The kernel must agree with :meth:`payoffs` up to rounding.
        """
        return None

    def _state_bank(self):
        bank = getattr(self, "_bank", None)
        if bank is None:
            bank = self.sample_states(np.random.default_rng(self.mc_seed), self.mc_samples)
            self._bank = bank
        return bank

    def expected_payoffs(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        bank = self._state_bank()
        total = np.zeros(self.n_nodes)
        for s in bank:
            total += self.payoffs(s, a)
        return total / len(bank)

    def expected_payoff(self, a, j: int) -> float:
        return float(self.expected_payoffs(a)[j])

    def expected_payoffs_batch(self, actions) -> np.ndarray:
        """Expected payoffs for a ``(K, N)`` stack of profiles."""
        actions = np.asarray(actions, dtype=float)
        return np.array([self.expected_payoffs(a) for a in actions]).reshape(actions.shape)


class ScriptedGame(GameModel):
    """Deterministic game driven by a callable ``fn(a) -> payoffs``.

    ``fn`` receives the length-N action array and returns N payoffs (a scalar
    is accepted for a single node).
    """

    stochastic = False

    def __init__(self, fn: Callable[[np.ndarray], Any], n_nodes: int = 1):
        self.fn = fn
        self.n_nodes = n_nodes

    def sample_state(self, rng):
        return None

    def sample_states(self, rng, n):
        return [None] * n

    def payoffs(self, state, a):
        return np.atleast_1d(np.asarray(self.fn(np.asarray(a, dtype=float)), dtype=float))

    def expected_payoffs(self, a):
        return self.payoffs(None, a)


# ---------------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    """Outcome of :func:`validate_assumptions`.

    ``hessian[j, l]`` estimates the mixed second derivative of node ``j``'s
    expected payoff with respect to ``a_j`` and ``a_l``.
    """

    candidate: np.ndarray
    schedule_flags: dict[str, bool]
    gradient: np.ndarray
    gradient_stderr: np.ndarray
    gradient_tol: np.ndarray
    stationary: np.ndarray
    hessian: np.ndarray
    concave: np.ndarray
    dominance_margin: np.ndarray
    in_box: bool

    @property
    def a3_ok(self) -> bool:
        return bool(np.all(self.stationary) and np.all(self.concave))

    @property
    def a4_ok(self) -> bool:
        return bool(np.all(self.dominance_margin > 0))


def _fd_steps(a):
    return 1e-3 * np.maximum(1.0, np.abs(a))


def _derivative_samples(values_fn, a, n):
    """Central-difference gradient and Hessian from ``values_fn(profile)``.

    ``values_fn`` maps a profile to an array of shape ``(S, N)`` (one row per
    state sample, shared across all calls so differences use common random
    numbers). Returns per-sample gradient ``(S, N)`` and Hessian ``(S, N, N)``.
    """
    h = _fd_steps(a)
    eye = np.eye(n)
    base = values_fn(a)
    grad = np.empty((base.shape[0], n))
    hess = np.empty((base.shape[0], n, n))
    plus = [values_fn(a + h[j] * eye[j]) for j in range(n)]
    minus = [values_fn(a - h[j] * eye[j]) for j in range(n)]
    for j in range(n):
        grad[:, j] = (plus[j][:, j] - minus[j][:, j]) / (2 * h[j])
        hess[:, j, j] = (plus[j][:, j] - 2 * base[:, j] + minus[j][:, j]) / h[j] ** 2
        for l in range(n):
            if l == j:
                continue
            dj, dl = h[j] * eye[j], h[l] * eye[l]
            pp = values_fn(a + dj + dl)[:, j]
            pm = values_fn(a + dj - dl)[:, j]
            mp = values_fn(a - dj + dl)[:, j]
            mm = values_fn(a - dj - dl)[:, j]
            hess[:, j, l] = (pp - pm - mp + mm) / (4 * h[j] * h[l])
    return grad, hess


def validate_assumptions(model: GameModel, candidate, schedule: StepSchedule | None = None,
                         box=None, n_samples: int = 4000,
                         rng: np.random.Generator | None = None) -> AssumptionReport:
    """Check stationarity, concavity and diagonal dominance at ``candidate``.

    Derivatives are central finite differences with step
    ``1e-3 * max(1, |a_j|)``. For stochastic models they are averaged over
    ``n_samples`` fresh state draws with common random numbers, and the
    stationarity tolerance is three standard errors of that average; for
    deterministic models the tolerance is ``1e-6``.
    """
    a = np.asarray(candidate, dtype=float)
    n = model.n_nodes
    if a.shape != (n,):
        raise ValueError(f"candidate must have shape ({n},)")

    if model.stochastic:
        rng = rng if rng is not None else np.random.default_rng(0)
        states = model.sample_states(rng, n_samples)

        def values(p):
            return np.array([model.payoffs(s, p) for s in states])
    else:
        def values(p):
            return np.asarray(model.expected_payoffs(p), dtype=float)[None, :]

    g_samples, h_samples = _derivative_samples(values, a, n)
    if not (np.all(np.isfinite(g_samples)) and np.all(np.isfinite(h_samples))):
        raise FloatingPointError("non-finite derivative estimate")
    grad = g_samples.mean(axis=0)
    hess = h_samples.mean(axis=0)
    if model.stochastic:
        se = g_samples.std(axis=0, ddof=1) / math.sqrt(g_samples.shape[0])
        tol = 3 * se
    else:
        se = np.zeros(n)
        tol = np.full(n, DETERMINISTIC_GRAD_TOL)

    diag = np.abs(np.diag(hess))
    off = np.abs(hess).sum(axis=1) - diag
    in_box = True
    if box is not None:
        lo, hi = (np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in box)
        in_box = bool(np.all((a >= lo) & (a <= hi)))
    return AssumptionReport(
        candidate=a,
        schedule_flags=schedule.admissibility() if schedule is not None else {},
        gradient=grad,
        gradient_stderr=se,
        gradient_tol=tol,
        stationary=np.abs(grad) <= tol,
        hessian=hess,
        concave=np.diag(hess) < 0,
        dominance_margin=diag - off,
        in_box=in_box,
    )

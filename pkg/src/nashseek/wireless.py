"""Interference-channel power control game.

``N`` transmitter/receiver pairs share one band. Pair ``j`` earns

    gamma_j = omega * ln(1 + p_j g_jj / (sigma2 + sum_{l != j} p_l g_lj)) - kappa * p_j

where ``g_ij = |h_ij|**2`` is the gain from transmitter ``i`` into receiver
``j`` and ``h_ij`` is circularly-symmetric complex Gaussian with
``E|h_ij|**2 = var[i, j]``. Gains are therefore exponential with mean
``var[i, j]`` and independent across entries and time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import GameModel

_LOG_U_STEP = 0.05
_LOG_U = np.arange(-40.0, 5.0 + _LOG_U_STEP / 2, _LOG_U_STEP)
_U = np.exp(_LOG_U)
_EXP_NEG_U = np.exp(-_U)


class EquilibriumError(ValueError):
    pass


class SingularSystemError(EquilibriumError):
    pass


class NonpositiveTargetError(EquilibriumError):
    pass


class NegativeSolutionError(EquilibriumError):
    pass


@dataclass
class WirelessParams:
    n: int
    omega: float
    kappa: float
    sigma2: float
    var: np.ndarray

    def __post_init__(self):
        self.var = np.array(self.var, dtype=float).reshape(self.n, self.n)

    @classmethod
    def from_sigmas(cls, n=2, sigma_direct=1.0, sigma_cross=0.1, omega=10.0, kappa=2.0,
                    sigma2=1.0):
        """Channel std-devs ``sigma_jj`` on the diagonal, ``sigma_jj'`` elsewhere."""
        var = np.full((n, n), float(sigma_cross) ** 2)
        np.fill_diagonal(var, float(sigma_direct) ** 2)
        return cls(n, omega, kappa, sigma2, var)

    @property
    def mean_gain_matrix(self) -> np.ndarray:
        """Row ``j`` holds ``E g_{j'j}`` over transmitters ``j'`` (receiver ``j``'s view)."""
        return self.var.T.copy()

    @property
    def target(self) -> np.ndarray:
        return self.omega * np.diag(self.var) / self.kappa - self.sigma2

    def validate(self, require_solvable=False):
        if self.var.shape != (self.n, self.n):
            raise ValueError("var must be N x N")
        if np.any(self.var < 0) or not np.all(np.isfinite(self.var)):
            raise ValueError("channel variances must be finite and >= 0")
        for name in ("omega", "kappa", "sigma2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0")
        if require_solvable and np.any(self.target <= 0):
            bad = int(np.flatnonzero(self.target <= 0)[0])
            raise NonpositiveTargetError(
                f"nonpositive target for node {bad}: omega*g_jj <= kappa*sigma2")


def default_settings() -> WirelessParams:
    """Two pairs, ``sigma_jj = 1``, ``sigma_jj' = 0.1``, ``omega = 10``, ``kappa = 2``, unit noise."""
    return WirelessParams.from_sigmas(2, 1.0, 0.1, omega=10.0, kappa=2.0, sigma2=1.0)


@dataclass
class ChannelRealization:
    H: np.ndarray
    G: np.ndarray


def sample_channels(params: WirelessParams, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` independent gain matrices, shape ``(n, N, N)``."""
    shape = (n, params.n, params.n)
    scale = np.sqrt(params.var / 2)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re * scale) ** 2 + (im * scale) ** 2


def sample_channel(params: WirelessParams, rng: np.random.Generator) -> ChannelRealization:
    scale = np.sqrt(params.var / 2)
    shape = (params.n, params.n)
    H = scale * rng.standard_normal(shape) + 1j * scale * rng.standard_normal(shape)
    return ChannelRealization(H, np.abs(H) ** 2)


def _check_power(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError(f"negative transmit power {p.min()!r}")
    return p


def sinr(G, p, params: WirelessParams) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    gd = np.diagonal(G, axis1=-2, axis2=-1)
    received = np.einsum("...i,...ij->...j", p, G)
    return p * gd / (params.sigma2 + received - p * gd)


def payoffs(G, p, params: WirelessParams) -> np.ndarray:
    """Payoffs of all pairs; broadcasts over leading axes of ``G`` and ``p``."""
    if type(p) is np.ndarray and p.ndim == 1 and G.ndim == 2:
        # single profile: the per-iteration hot path of the seeker
        if p.min() < 0:
            raise ValueError(f"negative transmit power {p.min()!r}")
        own = p * G.diagonal()
        return params.omega * np.log1p(own / (params.sigma2 + p @ G - own)) - params.kappa * p
    p = _check_power(p)
    return params.omega * np.log1p(sinr(G, p, params)) - params.kappa * p


def payoff(G, p, params: WirelessParams, j: int) -> float:
    return float(payoffs(G, p, params)[..., j])


def payoff_own_gradient(G, p, params: WirelessParams) -> np.ndarray:
    """Per-sample derivative of each pair's payoff with respect to its own power."""
    p = _check_power(p)
    G = np.asarray(G, dtype=float)
    gd = np.diagonal(G, axis1=-2, axis2=-1)
    received = np.einsum("...i,...ij->...j", p, G)
    return params.omega * gd / (params.sigma2 + received) - params.kappa


def _expected_log1p_sum(means):
    """``E ln(1 + sum_i X_i)`` for independent ``X_i ~ Exp(mean_i)``.

    Uses ``ln(1 + x) = int_0^inf (e^{-u} - e^{-u(1+x)}) / u du`` and the Laplace
    transform ``E e^{-u X} = 1 / (1 + u mean)``, integrated on a log-spaced
    trapezoid grid. ``means`` has shape ``(..., m)``.
    """
    means = np.asarray(means, dtype=float)
    lt = np.prod(1.0 / (1.0 + _U[:, None] * means[..., None, :]), axis=-1)
    return _LOG_U_STEP * np.sum(_EXP_NEG_U * (1.0 - lt), axis=-1)


def exact_expected_payoffs(p, params: WirelessParams) -> np.ndarray:
    """Exact expected payoffs under i.i.d. exponential gains; broadcasts over profiles."""
    p = _check_power(p)
    scaled = p[..., :, None] * params.var / params.sigma2  # [.., i, j]: mean of p_i g_ij / sigma2
    out = np.empty(p.shape)
    for j in range(params.n):
        col = scaled[..., :, j]
        others = np.delete(col, j, axis=-1)
        out[..., j] = _expected_log1p_sum(col) - _expected_log1p_sum(others)
    return params.omega * out - params.kappa * p


def analytic_equilibrium(params: WirelessParams) -> np.ndarray:
    """Solve the mean-gain first-order system ``Gbar p = omega g_jj / kappa - sigma2``.

    ``Gbar[j, j'] = E g_{j'j}``. The result is the equilibrium of the game
    with every gain frozen at its mean; with random gains it is an
    approximation.
    """
    params.validate(require_solvable=True)
    gbar = params.mean_gain_matrix
    target = params.target
    try:
        p = np.linalg.solve(gbar, target)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"mean gain matrix is singular: {exc}") from exc
    if not np.all(np.isfinite(p)) or np.linalg.cond(gbar) > 1e12:
        raise SingularSystemError("mean gain matrix is numerically singular")
    resid = np.linalg.norm(gbar @ p - target)
    if resid > 1e-10 * np.linalg.norm(target):
        raise SingularSystemError(f"linear solve residual {resid:.3e} too large")
    if np.any(p <= 0):
        raise NegativeSolutionError(f"equilibrium has a nonpositive component: {p}")
    return p


def diagonal_dominance_check(params: WirelessParams):
    """Per-row margin ``Gbar_jj - sum_{j' != j} Gbar_jj'`` and whether all are positive."""
    gbar = params.mean_gain_matrix
    d = np.diag(gbar)
    margins = d - (gbar.sum(axis=1) - d)
    return bool(np.all(margins > 0)), margins


class WirelessGame(GameModel):
    """Game-model adapter for the power control game.

    Parameters
    ----------
    params : WirelessParams
    expectation : {"exact", "montecarlo", "mean_gain"}
        How ``expected_payoffs`` is computed. ``"mean_gain"`` plugs in the
        mean gains, which is an approximation of the true expectation.
    deterministic : bool
        Freeze every sampled channel at its mean gains.
    """

    def __init__(self, params: WirelessParams, expectation="exact", deterministic=False,
                 mc_samples=2000, mc_seed=12345):
        params.validate()
        if expectation not in ("exact", "montecarlo", "mean_gain"):
            raise ValueError(f"unknown expectation mode {expectation!r}")
        self.params = params
        self.n_nodes = params.n
        self.expectation = "mean_gain" if deterministic else expectation
        self.deterministic = deterministic
        self.stochastic = not deterministic
        self.mc_samples = mc_samples
        self.mc_seed = mc_seed

    @property
    def approximate(self) -> bool:
        return self.expectation == "mean_gain" and not self.deterministic

    def sample_state(self, rng):
        if self.deterministic:
            return self.params.var.copy()
        return sample_channels(self.params, rng, 1)[0]

    def sample_states(self, rng, n):
        if self.deterministic:
            return np.broadcast_to(self.params.var, (n, self.n_nodes, self.n_nodes))
        return sample_channels(self.params, rng, n)

    def payoffs(self, state, a):
        return payoffs(state, a, self.params)

    def scalar_kernel(self):
        n, omega, kappa, sigma2 = self.n_nodes, self.params.omega, self.params.kappa, self.params.sigma2
        log1p = math.log1p
        idx = range(n)

        def kernel(G, p):
            out = []
            for j in idx:
                pj = p[j]
                if pj < 0:
                    raise ValueError(f"negative transmit power {pj!r}")
                noise = sigma2
                for i in idx:
                    if i != j:
                        noise += p[i] * G[i][j]
                out.append(omega * log1p(pj * G[j][j] / noise) - kappa * pj)
            return out
        return kernel

    def payoffs_batch(self, states, actions):
        return payoffs(np.asarray(states, dtype=float), np.asarray(actions, dtype=float), self.params)

    def payoff_gradient(self, state, a):
        return payoff_own_gradient(state, a, self.params)

    def expected_payoffs(self, a):
        return self.expected_payoffs_batch(np.asarray(a, dtype=float)[None, :])[0]

    def expected_payoffs_batch(self, actions, chunk=512):
        actions = np.asarray(actions, dtype=float)
        if self.expectation == "exact":
            out = np.empty_like(actions)
            for s in range(0, actions.shape[0], chunk):
                out[s:s + chunk] = exact_expected_payoffs(actions[s:s + chunk], self.params)
            return out
        if self.expectation == "mean_gain":
            return payoffs(self.params.var, actions, self.params)
        bank = self._state_bank()
        out = np.empty_like(actions)
        for s in range(0, actions.shape[0], chunk):
            block = actions[s:s + chunk]
            out[s:s + chunk] = payoffs(bank[None], block[:, None, :], self.params).mean(axis=1)
        return out

    def expected_payoffs_stderr(self, a):
        """Monte Carlo standard error of the bank average at ``a``."""
        vals = payoffs(self._state_bank(), np.asarray(a, dtype=float)[None, :], self.params)
        return vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])

    def expected_gradient(self, a):
        """Own-power derivative of the expected payoff (central difference of the chosen mode)."""
        a = np.asarray(a, dtype=float)
        h = 1e-5 * np.maximum(1.0, np.abs(a))
        out = np.empty_like(a)
        for j in range(a.size):
            e = np.zeros_like(a)
            e[j] = h[j]
            lo = np.maximum(a - e, 0.0)
            hi = a + e
            out[j] = (self.expected_payoffs(hi)[j] - self.expected_payoffs(lo)[j]) / (hi[j] - lo[j])
        return out


@dataclass
class EquilibriumReport:
    p_star: np.ndarray
    linear_residual: float
    dominant: bool
    margins: np.ndarray
    mc_gradient: np.ndarray
    mc_gradient_stderr: np.ndarray
    exact_gradient: np.ndarray

    def summary(self) -> str:
        def fmt(v):
            return "[" + ", ".join(f"{x:.6g}" for x in np.atleast_1d(v)) + "]"
        lines = [
            "p_star = [" + ", ".join(f"{x:.4f}" for x in self.p_star) + "]",
            f"linear_system_residual = {self.linear_residual:.3e}",
            f"diagonally_dominant = {self.dominant}",
            f"dominance_margins = {fmt(self.margins)}",
            f"mc_stationarity_residual = {fmt(self.mc_gradient)} (stderr {fmt(self.mc_gradient_stderr)})",
            f"exact_stationarity_residual = {fmt(self.exact_gradient)}",
        ]
        if not self.dominant:
            lines.append("warning: mean gain matrix is not diagonally dominant")
        return "\n".join(lines) + "\n"


def equilibrium_report(params: WirelessParams, n_samples=20000, seed=0) -> EquilibriumReport:
    """Mean-gain equilibrium plus stationarity residuals of the true expected payoff there.

    The mean-gain point need not be stationary for the random-gain game
    (expectation and the logarithm do not commute), so the residuals are
    diagnostics rather than checks.
    """
    p = analytic_equilibrium(params)
    gbar = params.mean_gain_matrix
    dominant, margins = diagonal_dominance_check(params)
    G = sample_channels(params, np.random.default_rng(seed), n_samples)
    grads = payoff_own_gradient(G, p[None, :], params)
    game = WirelessGame(params, expectation="exact")
    return EquilibriumReport(
        p_star=p,
        linear_residual=float(np.linalg.norm(gbar @ p - params.target)),
        dominant=dominant,
        margins=margins,
        mc_gradient=grads.mean(axis=0),
        mc_gradient_stderr=grads.std(axis=0, ddof=1) / math.sqrt(n_samples),
        exact_gradient=game.expected_gradient(p),
    )

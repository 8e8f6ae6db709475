"""Builtin quadratic game with additive Gaussian payoff noise.

Node ``j`` receives

    r_j(S, a) = -q_j (a_j - c_j)**2 + a_j * sum_{l != j} C[j, l] a_l + S_j

with ``S ~ N(0, noise_std**2 I)``. The expected payoff drops ``S`` and the
Nash equilibrium solves ``(2 diag(q) - C) a = 2 q c``.
"""

from __future__ import annotations

import numpy as np

from .game import GameModel


class QuadraticGame(GameModel):

    def __init__(self, centers, curvature=1.0, coupling=None, noise_std=0.0):
        self.centers = np.atleast_1d(np.asarray(centers, dtype=float))
        n = self.centers.size
        self.n_nodes = n
        self.curvature = np.broadcast_to(np.asarray(curvature, dtype=float), (n,)).copy()
        if np.any(self.curvature <= 0):
            raise ValueError("curvature must be positive")
        c = np.zeros((n, n)) if coupling is None else np.array(coupling, dtype=float)
        if c.shape != (n, n):
            raise ValueError(f"coupling must be {n}x{n}")
        np.fill_diagonal(c, 0.0)
        self.coupling = c
        self.noise_std = float(noise_std)
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        self.stochastic = self.noise_std > 0

    def sample_state(self, rng):
        return self.noise_std * rng.standard_normal(self.n_nodes)

    def sample_states(self, rng, n):
        return self.noise_std * rng.standard_normal((n, self.n_nodes))

    def payoffs(self, state, a):
        a = np.asarray(a, dtype=float)
        out = -self.curvature * (a - self.centers) ** 2 + a * (self.coupling @ a)
        if state is not None:
            out = out + state
        return out

    def payoffs_batch(self, states, actions):
        return self.expected_payoffs_batch(actions) + np.asarray(states, dtype=float)

    def expected_payoffs(self, a):
        return self.payoffs(None, a)

    def expected_payoffs_batch(self, actions):
        a = np.asarray(actions, dtype=float)
        return -self.curvature * (a - self.centers) ** 2 + a * (a @ self.coupling.T)

    def expected_gradient(self, a):
        """Own-action derivative of each node's expected payoff."""
        a = np.asarray(a, dtype=float)
        return -2 * self.curvature * (a - self.centers) + self.coupling @ a

    def payoff_gradient(self, state, a):
        # noise is additive, so the per-sample gradient equals the expected one
        return self.expected_gradient(a)

    def nash_equilibrium(self) -> np.ndarray:
        m = 2 * np.diag(self.curvature) - self.coupling
        return np.linalg.solve(m, 2 * self.curvature * self.centers)

"""
The power-control equilibrium in closed form
============================================

Two transmitters share a channel. Each picks a power level ``p_j`` and is
paid ``log(1 + SINR_j) - kappa * p_j``. The gains are exponential random
variables. Replacing them with their means turns the first-order conditions
into a linear system, and solving it gives the equilibrium.
"""

import numpy as np

from nashseek.wireless import (WirelessParams, analytic_equilibrium, diagonal_dominance_check,
                               exact_expected_payoffs, default_settings)

# %%
# Default setting: omega = 10, kappa = 2, unit noise, cross-gain variance 0.01.
params = default_settings()
p_star = analytic_equilibrium(params)
print("p* =", p_star, "rounded:", np.round(p_star, 4))
print("diagonal dominance:", diagonal_dominance_check(params))

# %%
# With symmetric parameters the system reduces to ``p (1 + v) = omega/kappa - sigma^2``.
print("4 / 1.01 =", 4 / 1.01)

# %%
# The mean-gain equilibrium is not the equilibrium of the expected game.
# The log is concave, so averaging over fading lowers the marginal payoff.
# We scan node 0's expected payoff with node 1 held at p*.
grid = np.linspace(1.0, 6.0, 51)
values = [exact_expected_payoffs(np.array([x, p_star[1]]), params)[0] for x in grid]
print("best response of node 0 in the expected game ~", grid[int(np.argmax(values))])

# %%
# A weakly coupled but non-dominant variance matrix is still solvable.
loose = WirelessParams(2, 10.0, 2.0, 1.0, np.array([[1.0, 1.2], [1.2, 1.0]]))
print("non-dominant p* =", analytic_equilibrium(loose), "dominance:", diagonal_dominance_check(loose))

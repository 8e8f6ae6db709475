"""
Bringing your own game
======================

Any callable that maps an action vector to a payoff vector can be wrapped.
Here two players have coupled quadratic payoffs. The seeker finds their Nash
point even though it never sees a gradient.
"""

import numpy as np

from nashseek import PerturbationParams, ScriptedGame, SeekerConfig, StepSchedule, run


def payoff(a):
    # u_1 = -(a_1 - 1 - 0.3 a_2)^2,  u_2 = -(a_2 + 0.5 - 0.2 a_1)^2
    return np.array([-(a[0] - 1 - 0.3 * a[1]) ** 2, -(a[1] + 0.5 - 0.2 * a[0]) ** 2])


game = ScriptedGame(payoff, 2)
nash = np.linalg.solve([[1.0, -0.3], [-0.2, 1.0]], [1.0, -0.5])

# %%
dither = PerturbationParams([0.2, 0.2], [1.0, 1.4], [0.0, 0.0], [2.0, 2.0])
traj = run(game, SeekerConfig(dither, StepSchedule.constant(0.02), 20000, [0.0, 0.0], seed=3))
print("Nash point:", nash)
print("mean of last 5000 estimates:", traj.hat_a[-5000:].mean(axis=0))

# %%
# A smaller step shrinks the residual oscillation but needs more iterations
# to cover the same clock time.
traj = run(game, SeekerConfig(dither, StepSchedule.constant(0.005), 80000, [0.0, 0.0], seed=3))
print("spread of the last 5000 estimates at lambda=0.005:", traj.hat_a[-5000:].std(axis=0))

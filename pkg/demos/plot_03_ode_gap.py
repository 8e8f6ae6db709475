"""
How closely the iterates follow the mean ODE
============================================

Interpolating the iterates on the clock ``khat`` gives a continuous path.
Over a fixed window of clock time its distance from the averaged ODE
should shrink as the step size falls. Roughly it shrinks like ``sqrt(lambda)``.
We check this on a noisy scalar quadratic, where the drift is known exactly.
"""

import numpy as np

from nashseek import PerturbationParams, QuadraticGame, gap_sweep

model = QuadraticGame([2.0], 1.0, None, noise_std=1.0)
dither = PerturbationParams.uniform(1, amplitude=0.1, frequency=1.0, phase=0.0, growth=1.0)

# %%
lambdas = [0.1, 0.05, 0.025]
sweep = gap_sweep(model, dither, [0.0], lambdas, range(30), 0.0, 20.0)
for lam, g, sd in zip(lambdas, sweep.mean_gaps, sweep.gaps.std(axis=1)):
    print(f"lambda={lam:<6} mean sup gap={g:.4f} (sd {sd:.4f})")

slope, intercept, r2 = sweep.sqrt_lambda_fit()
print(f"gap ~ {slope:.3f} sqrt(lambda) + {intercept:.3f}, R^2 = {r2:.3f}")

# %%
# Halving lambda shrinks the gap by about sqrt(2), not by 2.
print("successive ratios:", np.round(sweep.mean_gaps[:-1] / sweep.mean_gaps[1:], 3))

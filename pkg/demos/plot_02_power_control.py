"""
Seeking the power-control equilibrium without gradients
=======================================================

Each node sees only its own realized payoff. It adds a sinusoidal dither to
its estimate, correlates the payoff with the same sinusoid and takes a
step. The nodes use distinct frequencies so their probes do not interfere.
"""

import tempfile
from pathlib import Path

import numpy as np

from nashseek import harness
from nashseek.config import reference_config

out = Path(tempfile.mkdtemp(prefix="nashseek-demo-"))

# %%
# The reference configuration: b = 0.9, Omega = (0.9, 1.0), lambda = 0.01,
# 200000 iterations, and a start 10 units above p*.
cfg = reference_config(str(out / "run"), seed=0)
report = harness.cmd_run(cfg)
for key in ("windowed_mean_hat_a", "a_star", "relative_error", "window_iterations"):
    print(key, "=", report.summary[key])

# %%
# The trajectory file has the columns k, khat, hat_a_j, a_j and u_j. It can be
# reloaded bit-for-bit.
traj = harness.read_trajectory(report.trajectory_path)
print("rows:", len(traj), "final estimate:", traj.hat_a[-1])

# %%
# A constant step leaves a residual oscillation, so judge convergence by the
# average over whole periods of the slowest beat.
w = harness.window_length(cfg, traj)
print("window mean over the last", w, "iterations:", traj.hat_a[-w:].mean(axis=0))

# %%
# Figures for the estimate and the payoff.
for path in harness.cmd_plot(report.trajectory_path, out, a_star=np.asarray(report.summary["a_star"])):
    print("wrote", path)

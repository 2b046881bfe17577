#!/usr/bin/env python3
"""What a noisy loss landscape looks like along one gradient direction.

Every batch defines its own loss curve on the line theta0 + s*d. The curves
scatter widely, but their mean (the empirical loss restricted to the line)
is smooth and well approximated by a low-order polynomial. This script
samples all batch curves of a quadratic ensemble densely, prints the spread
statistics, and checks the mean curve against the closed form.
"""

import numpy as np

from elfopt.problems import NoisyQuadraticEnsemble, cross_section_profile, empirical_loss
from elfopt.seeding import rng_streams

streams = rng_streams(0)
problem = NoisyQuadraticEnsemble(n_batches=60, dim=12, rng=streams.data)
theta0 = problem.initial_theta(streams.theta_init)

gradient = problem.batch_gradient(theta0, problem.train_batches[0])
direction = -gradient / np.linalg.norm(gradient)

s_grid = np.linspace(-0.3, 0.7, 50)
profile = cross_section_profile(problem, theta0, direction, s_grid)

print(f"{len(problem.train_batches)} batch curves sampled at {s_grid.size} step sizes")
print(f"empirical loss at s=0:      {empirical_loss(problem, theta0):.6f}")
print(f"mean curve at s=0:          {profile.mean[np.argmin(np.abs(s_grid))]:.6f}")

spread = profile.q3 - profile.q1
print(f"interquartile spread:       {spread.min():.4f} .. {spread.max():.4f}")
i_min = int(np.argmin(profile.mean))
print(f"mean-curve minimum:         s = {s_grid[i_min]:.4f}, loss = {profile.mean[i_min]:.6f}")

closed = np.array([problem.closed_form_empirical(theta0 + s * direction) for s in s_grid])
print(f"max |mean - closed form|:   {np.abs(profile.mean - closed).max():.2e}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for row in profile.per_batch:
        ax.plot(s_grid, row, color="tab:blue", alpha=0.15, lw=0.8)
    ax.plot(s_grid, profile.mean, color="tab:red", lw=2, label="empirical loss")
    ax.plot(s_grid, profile.q1, color="black", lw=1, ls="--", label="quartiles")
    ax.plot(s_grid, profile.q3, color="black", lw=1, ls="--")
    ax.set_xlabel("step size s")
    ax.set_ylabel("loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig("cross_section_anatomy.png", dpi=120)
    print("plot saved to cross_section_anatomy.png")
except ImportError:
    print("matplotlib not available; skipping the plot")

"""Action sets: exact linear maximization, projection and UCB maximization.

The UCB index is maximized by projected gradient ascent with restarts.  The
index turns out to be convex in the action (the width is a norm), so the
ascent's certificate proves stationarity; on a radially symmetric problem it
is also globally optimal, which this script checks against a 1-D grid.
"""

import math

import numpy as np

from vclbandit import ActionSet, ConfidenceSchedule, init_state, maximize_linear, maximize_ucb, project
from vclbandit.action_sets import ucb_objective
from vclbandit.estimator import alpha

half_disk = ActionSet.clipped_ball(normals=[[1.0, 0.0]], offsets=[0.0])
print("interior point found by LP:", np.round(half_disk.interior, 4))
print("argmax <x, (1, 0.2)> over the half disk:", np.round(maximize_linear(half_disk, [1.0, 0.2])[0], 4))
print("projection of (1, 0) onto the half disk:", np.round(project(half_disk, [1.0, 0.0]), 6))
print("projection of (3, 4) onto the unit ball:", project(ActionSet.unit_ball(2), [3.0, 4.0]))

T, d = 1024, 2
schedule = ConfidenceSchedule(T, d)
index = ucb_objective(init_state(d), schedule, constant=1.0, smooth=True)
x, report = maximize_ucb(ActionSet.unit_ball(d), index, slack=1e-6, rng=np.random.default_rng(1))
r = np.linspace(0, 1, 10**6)[1:]
grid = float(np.max((math.sqrt(d) + alpha(schedule, r, smooth=True)) * r))
print()
print(f"fresh-state UCB maximum: {report.objective:.8f} after {report.iterations} iterations")
print(f"1-D radial grid optimum:  {grid:.8f}")
print(f"returned |x| = {np.linalg.norm(x):.6f}, certificate {report.slack:.1e}, converged={report.converged}")

finite = ActionSet.finite([[1.0, 0.0], [0.0, 0.5], [0.3, 0.3]])
x, report = maximize_ucb(finite, index, slack=1e-6)
print(f"finite set: exact scan picks {x} with index {report.objective:.4f}")

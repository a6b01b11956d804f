"""Online ridge regression and the varying confidence level.

Feeds noisy rewards into the incremental ridge state and shows how the
confidence width of a direction shrinks as it gets explored, and how the
confidence level responds to that width.
"""

import numpy as np

from vclbandit import ConfidenceSchedule, alpha, init_state, log_det, update, width

rng = np.random.default_rng(0)
theta = np.array([0.6, -0.8, 0.0])
state = init_state(3)
schedule = ConfidenceSchedule(horizon=1000, dim=3)

probe_explored = np.array([1.0, 0.0, 0.0])
probe_rare = np.array([0.0, 0.0, 1.0])

print("rounds  |est - theta|  width(e1)  width(e3)  level(e1)  level(e3)  log det")
for t in range(1, 201):
    # mostly play the first two coordinates; the third is rarely touched
    x = rng.standard_normal(3) * np.array([1.0, 1.0, 0.05])
    x /= max(1.0, np.linalg.norm(x))
    update(state, x, x @ theta + rng.standard_normal())
    if t in (1, 10, 50, 200):
        w1, w3 = width(state, probe_explored), width(state, probe_rare)
        print(
            f"{t:6d}  {np.linalg.norm(state.estimate - theta):12.3f}  {w1:9.3f}  {w3:9.3f}"
            f"  {alpha(schedule, w1):9.3f}  {alpha(schedule, w3):9.3f}  {log_det(state):7.3f}"
        )

print()
print("The explored direction's width shrinks and its level falls toward the floor")
print("of 1 (reached once (T ln T) w^2 / d drops below e). The neglected direction")
print("keeps a wide width and a high level, so its bonus (sqrt(d) + level) * width")
print("stays large until it is explored.")
print(f"max |gram @ gram_inv - I| after 200 rank-one updates: {state.inverse_deviation():.1e}")

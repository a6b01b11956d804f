"""Empirical checks: potential inequality, estimator tail, regret scaling, greedy failure.

Runs reduced-size versions of the acceptance experiments (a minute or so).
The full-size checks are `vclbandit diagnose elliptical|tail|scaling`.
"""

from vclbandit import ConfidenceSchedule, PolicyConfig, SetGenerator, make_instance, run_episode
from vclbandit.diagnostics import diagnostic_elliptical, diagnostic_tail_bound, scaling_report

for report in (
    diagnostic_elliptical(trials=200, horizon=200, dim=8, seed=1),
    diagnostic_tail_bound(delta=0.05, reps=200, t=300, dim=5, seed=2),
    scaling_report(dims=[2], horizons=[256, 1024, 4096], replications=6, seed=3),
):
    print("\n".join(report.lines()))
    print("->", "PASS" if report.passed else "FAIL")
    print()

# Greedy on two arms e1, e2 with theta = (0.1, 0.5): the first-round tie goes to
# e1, and as long as e1's estimate stays positive e2 is never tried.
T = 2000
pair = SetGenerator("fixed_finite", points=((1.0, 0.0), (0.0, 1.0)))
stuck = {"greedy": 0, "vcl_ucb": 0}
for seed in range(20):
    instance = make_instance(2, T, seed, theta_mode="fixed", theta=[0.1, 0.5], generator=pair)
    for kind in stuck:
        stuck[kind] += run_episode(instance, PolicyConfig(kind, ConfidenceSchedule(T, 2)))[-1].cumulative_regret > 0.35 * T
print(f"episodes with linear regret out of 20: {stuck}")

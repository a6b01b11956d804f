"""One seeded instance, four policies.

Every policy faces the same parameter vector, the same action sets and the
same noise sequence, so the regret differences come from the decisions alone.
"""

from vclbandit import ConfidenceSchedule, PolicyConfig, SetGenerator, make_instance, run_episode

T, d = 3000, 3
for env in ("unit_ball", "iid_sphere_finite"):
    instance = make_instance(d, T, seed=7, generator=SetGenerator(env, size=20))
    print(f"environment {env}: |theta| = 1, T = {T}, d = {d}")
    for kind in ("vcl_ucb", "oful", "greedy", "random"):
        records = run_episode(instance, PolicyConfig(kind, ConfidenceSchedule(T, d)))
        checkpoints = "  ".join(f"R_{t}={records[t - 1].cumulative_regret:7.1f}" for t in (100, 1000, T))
        print(f"  {kind:8s} {checkpoints}")
    print()

print("vcl_ucb and oful grow sublinearly; random grows linearly. Greedy can do")
print("well on smooth sets, but see 05_diagnostics.py for a set where it locks in.")

"""Average sum-rate as the power station moves along the PS-sink axis.

The sink stays d_ps meters from the PS; d_p is the PS distance to the user
line. Larger path-loss exponent and longer PS-sink separation both cost
throughput.
"""
from wpcn import ScenarioConfig, run_monte_carlo

base = ScenarioConfig(n_trials=300, seed=7)
for alpha in (2.0, 3.0):
    for d_ps in (10, 20):
        means = []
        for d_p in range(1, d_ps):
            _, summary = run_monte_carlo(base.with_(path_loss_exp=alpha, d_p=float(d_p),
                                                    d_s=float(d_ps - d_p)))
            means.append(summary.mean)
        curve = " ".join(f"{m:.3f}" for m in means)
        print(f"alpha={alpha:g} d_ps={d_ps:>2}: {curve}")

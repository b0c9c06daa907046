"""The semi-closed-form solver against the relaxation-based reference.

Draws random scenarios from the channel simulator and reports the relative
gap in sum-rate and how close the reference's energy covariance is to rank one.
"""
import numpy as np

from wpcn import ScenarioConfig, solve, solve_bca
from wpcn.channel_sim import draw_instance

rng = np.random.default_rng(1)
gaps, ratios = [], []
for trial in range(50):
    cfg = ScenarioConfig(n_users=int(rng.integers(1, 9)), n_antennas=int(rng.integers(1, 9)), seed=1)
    params, channels = draw_instance(cfg, trial)
    fast = solve(params, channels)
    ref, _ = solve_bca(params, channels)
    gaps.append(abs(fast.sum_rate - ref.sum_rate) / fast.sum_rate)
    ratios.append(ref.meta["rank_ratio"])

print(f"instances          : {len(gaps)}")
print(f"max relative gap   : {max(gaps):.2e}")
print(f"max lambda2/lambda1: {max(ratios):.2e}")

"""One user, one antenna, unit gains.

With c = P * lambda_max = 1 the optimal harvest fraction is 1 - 1/e and the
throughput is log2(e) / e. Both solvers should land on it.
"""
import math

import numpy as np

from wpcn import ChannelSet, SystemParams, solve, solve_bca

params = SystemParams(n_antennas=1, n_users=1, p_max=1.0, noise_power=1.0,
                      harvest_eff=0.5, snr_gap=1.0)
# gamma = xi |g|^2 / (Gamma sigma^2) = 0.5 * 2 = 1
channels = ChannelSet.from_gains(params, np.array([[1.0]]), np.array([math.sqrt(2.0)]))

fast = solve(params, channels)
ref, trace = solve_bca(params, channels)

print(f"closed form : tau0 = {1 - 1 / math.e:.10f}  rate = {math.log2(math.e) / math.e:.10f}")
print(f"fast solver : tau0 = {fast.tau0:.10f}  rate = {fast.sum_rate:.10f}")
print(f"reference   : tau0 = {ref.tau0:.10f}  rate = {ref.sum_rate:.10f}"
      f"  ({len(trace.iterations)} BCA steps at the first grid point)")

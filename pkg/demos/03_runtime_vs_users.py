"""Per-instance solve time as the number of users grows (N_t = 4)."""
import time

from wpcn import ScenarioConfig, solve, solve_bca
from wpcn.channel_sim import draw_instance


def mean_time(fn, instances):
    t0 = time.perf_counter()
    for params, channels in instances:
        fn(params, channels)
    return (time.perf_counter() - t0) / len(instances)


print(f"{'K':>3} {'fast [us]':>10} {'reference [ms]':>15} {'speed-up':>9}")
for k in (2, 4, 8, 16, 32):
    cfg = ScenarioConfig(n_users=k, n_antennas=4, seed=k)
    inst = [draw_instance(cfg, t) for t in range(20)]
    t_fast = mean_time(solve, inst)
    t_ref = mean_time(solve_bca, inst[:5])
    print(f"{k:>3} {t_fast * 1e6:>10.0f} {t_ref * 1e3:>15.2f} {t_ref / t_fast:>8.0f}x")

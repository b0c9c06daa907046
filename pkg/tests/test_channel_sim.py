import math

import numpy as np
import pytest

from wpcn import channel_sim as cs


def test_unit_conversions():
    assert cs.dbm_to_watts(30) == pytest.approx(1.0)
    assert cs.dbm_to_watts(-70) == pytest.approx(1e-10)
    assert cs.db_to_linear(9.8) == pytest.approx(10 ** 0.98)


def test_paper_params():
    p = cs.ScenarioConfig().system_params()
    assert p.p_max == pytest.approx(1.0)
    np.testing.assert_allclose(p.noise_power, 1e-10)
    assert p.snr_gap == pytest.approx(10 ** 0.98)


@pytest.mark.parametrize("k, expected", [
    (2, [-5, 5]),
    (4, [-5, -5 / 3, 5 / 3, 5]),
    (1, [0]),
])
def test_user_positions(k, expected):
    np.testing.assert_allclose(cs.user_positions(cs.ScenarioConfig(n_users=k)), expected, atol=1e-14)


def test_ps_and_sink_on_opposite_sides():
    cfg = cs.ScenarioConfig(d_p=3.0, d_s=7.0)
    assert np.linalg.norm(cs.ps_position(cfg) - cs.sink_position(cfg)) == pytest.approx(10.0)
    np.testing.assert_allclose(cs.dl_distances(cfg)[0], math.hypot(5, 3))
    np.testing.assert_allclose(cs.ul_distances(cfg)[0], math.hypot(5, 7))


def test_broadside_steering_is_all_ones():
    np.testing.assert_allclose(cs.steering_vector(4, 0.0), np.ones(4))


def test_direction_geometry():
    cfg = cs.ScenarioConfig(n_users=2, d_p=5.0)
    assert cs.user_direction(cfg, 1) == pytest.approx(math.pi / 4)
    assert cs.user_direction(cfg, 0) == pytest.approx(-math.pi / 4)


def test_large_rician_factor_gives_scaled_los():
    cfg = cs.ScenarioConfig(n_users=2, rician_k=1e9, path_loss_exp=3.0)
    h = cs.gen_dl_channel(cfg, cs.rng_stream(1, 0, 0, 0), 0)
    pl = 1e-3 * cs.dl_distances(cfg)[0] ** -3
    np.testing.assert_allclose(np.abs(h) ** 2, pl, rtol=1e-4)
    los = cs.steering_vector(4, cs.user_direction(cfg, 0))
    cos = abs(np.vdot(los, h)) / (np.linalg.norm(los) * np.linalg.norm(h))
    assert cos == pytest.approx(1.0, abs=1e-4)


def test_dl_normalization_monte_carlo():
    cfg = cs.ScenarioConfig(n_users=3, rician_k=3.0)
    rng = np.random.default_rng(5)
    draws = np.array([np.sum(np.abs(cs.gen_dl_channel(cfg, rng, 1)) ** 2) / cfg.n_antennas
                      for _ in range(100_000)])
    target = 1e-3 * cs.dl_distances(cfg)[1] ** -cfg.path_loss_exp
    assert abs(draws.mean() - target) <= 0.02 * target
    assert abs(draws.mean() - target) <= 3 * draws.std(ddof=1) / math.sqrt(draws.size)


@pytest.mark.parametrize("d, expected", [(1.0, 1e-3), (10.0, 1e-6)])
def test_ul_path_loss(d, expected):
    cfg = cs.ScenarioConfig(path_loss_exp=3.0)
    assert cs.path_loss(cfg, d) == pytest.approx(expected)


def test_ul_normalization_monte_carlo():
    cfg = cs.ScenarioConfig(n_users=4)
    rng = np.random.default_rng(6)
    draws = np.array([abs(cs.gen_ul_channel(cfg, rng, 2)) ** 2 for _ in range(100_000)])
    target = 1e-3 * cs.ul_distances(cfg)[2] ** -cfg.path_loss_exp
    assert abs(draws.mean() - target) <= 0.02 * target
    assert abs(draws.mean() - target) <= 3 * draws.std(ddof=1) / math.sqrt(draws.size)


def test_draws_keyed_by_trial_not_order():
    cfg = cs.ScenarioConfig(seed=11)
    _, a = cs.draw_instance(cfg, 7)
    cs.draw_instance(cfg, 3)
    _, b = cs.draw_instance(cfg, 7)
    np.testing.assert_array_equal(a.dl, b.dl)
    np.testing.assert_array_equal(a.ul, b.ul)
    _, c = cs.draw_instance(cfg, 8)
    assert not np.array_equal(a.dl, c.dl)


def test_seed_changes_draws():
    _, a = cs.draw_instance(cs.ScenarioConfig(seed=1), 0)
    _, b = cs.draw_instance(cs.ScenarioConfig(seed=2), 0)
    assert not np.array_equal(a.dl, b.dl)


def test_run_twice_identical():
    cfg = cs.ScenarioConfig(n_trials=1, seed=99)
    (a,), _ = cs.run_monte_carlo(cfg)
    (b,), _ = cs.run_monte_carlo(cfg)
    assert (a.sum_rate, a.tau0, a.trial_index) == (b.sum_rate, b.tau0, b.trial_index)


def test_threads_do_not_change_results():
    cfg = cs.ScenarioConfig(n_trials=40, seed=3)
    serial, s1 = cs.run_monte_carlo(cfg, threads=1)
    parallel, s2 = cs.run_monte_carlo(cfg, threads=4)
    assert [r.sum_rate for r in serial] == [r.sum_rate for r in parallel]
    assert s1.mean == s2.mean


def test_fast_and_reference_agree_per_trial():
    cfg = cs.ScenarioConfig(n_trials=5, seed=21)
    fast, _ = cs.run_monte_carlo(cfg, "fast")
    ref, _ = cs.run_monte_carlo(cfg, "reference")
    for a, b in zip(fast, ref):
        assert b.sum_rate == pytest.approx(a.sum_rate, rel=1e-6)


def test_failed_trials_are_recorded(monkeypatch):
    def boom(params, channels):
        raise ArithmeticError("nope")

    monkeypatch.setitem(cs.SOLVERS, "fast", boom)
    results, summary = cs.run_monte_carlo(cs.ScenarioConfig(n_trials=3))
    assert all(r.failed for r in results)
    assert summary.n_failed == 3 and summary.n_ok == 0


def test_summary_statistics():
    results = [cs.TrialResult(x, 0.5, 0.0, i) for i, x in enumerate([1.0, 2.0, 3.0])]
    s = cs.summarize(results)
    assert s.mean == pytest.approx(2.0)
    assert s.std_error == pytest.approx(1.0 / math.sqrt(3))


def test_unknown_solver():
    with pytest.raises(ValueError):
        cs.run_monte_carlo(cs.ScenarioConfig(n_trials=1), "cvx")


@pytest.mark.parametrize("change", [
    dict(path_loss_exp=3.5), dict(d_p=8.0), dict(d_s=8.0), dict(line_length=20.0),
])
def test_path_loss_monotonicity(change):
    base = cs.ScenarioConfig(n_trials=200, seed=5, path_loss_exp=3.0)
    _, a = cs.run_monte_carlo(base)
    _, b = cs.run_monte_carlo(base.with_(**change))
    assert b.mean <= a.mean


def test_config_validation():
    with pytest.raises(ValueError):
        cs.ScenarioConfig(d_p=0.0)
    with pytest.raises(ValueError):
        cs.ScenarioConfig(n_trials=0)

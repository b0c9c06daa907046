import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from wpcn.model import (
    ChannelSet,
    EnergyCovariance,
    SystemParams,
    TimeAllocation,
    ValidationError,
    compute_gamma,
    harvested_energy,
    make_solution,
    sum_rate,
    user_rate,
    validate,
)


def params(k=1, n=2, **kw):
    base = dict(n_antennas=n, n_users=k, p_max=1.0, noise_power=1.0, harvest_eff=0.5, snr_gap=1.0)
    base.update(kw)
    return SystemParams(**base)


class TestSystemParams:
    @pytest.mark.parametrize("kw", [
        dict(p_max=0.0), dict(p_max=-1.0), dict(noise_power=0.0), dict(harvest_eff=1.0),
        dict(harvest_eff=0.0), dict(snr_gap=0.5), dict(n_users=0), dict(n_antennas=0),
    ])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValidationError):
            params(**kw)

    def test_broadcasts_per_user(self):
        p = params(k=3, noise_power=2.0)
        assert p.noise_power.shape == (3,)
        assert not p.noise_power.flags.writeable


class TestGamma:
    def test_unit_case(self):
        p = params(harvest_eff=0.5, noise_power=1.0, snr_gap=1.0)
        assert compute_gamma(p, math.sqrt(2.0), 0) == pytest.approx(1.0, rel=1e-15)

    def test_paper_constants(self):
        # 0.5 * 1e-3 / (10**0.98 * 1e-10) worked by hand
        p = params(harvest_eff=0.5, noise_power=1e-10, snr_gap=10 ** 0.98)
        assert compute_gamma(p, math.sqrt(1e-3), 0) == pytest.approx(5.236e5, rel=1e-3)

    def test_zero_gain(self):
        assert compute_gamma(params(), 0.0, 0) == 0.0

    def test_bad_index(self):
        with pytest.raises(ValidationError):
            compute_gamma(params(k=2), 1.0, 2)

    def test_channelset_gamma_matches(self, rng):
        p, ch = random_instance(rng, k=5, n=3)
        expected = p.harvest_eff * np.abs(ch.ul) ** 2 / (p.snr_gap * p.noise_power)
        np.testing.assert_allclose(ch.gamma, expected, rtol=1e-12)

    def test_channelset_rejects_nonfinite(self):
        p = params(k=1, n=2)
        with pytest.raises(ValidationError):
            ChannelSet.from_gains(p, [[np.nan, 0]], [1.0])


class TestEnergy:
    def test_direct(self):
        p = params(n=2)
        ch = ChannelSet.from_gains(p, [[1, 0]], [1.0])
        cov = EnergyCovariance.rank_one([2, 0])
        assert harvested_energy(p, ch, 0.5, cov, 0) == pytest.approx(1.0)

    def test_zero_time(self):
        p = params(n=2)
        ch = ChannelSet.from_gains(p, [[1, 0]], [1.0])
        assert harvested_energy(p, ch, 0.0, EnergyCovariance.rank_one([2, 0]), 0) == 0.0

    def test_orthogonal(self):
        p = params(n=2)
        ch = ChannelSet.from_gains(p, [[1, 0]], [1.0])
        assert harvested_energy(p, ch, 0.7, EnergyCovariance.rank_one([0, 3]), 0) == 0.0

    def test_bad_tau0(self):
        p = params(n=2)
        ch = ChannelSet.from_gains(p, [[1, 0]], [1.0])
        with pytest.raises(ValidationError):
            harvested_energy(p, ch, 1.5, EnergyCovariance.rank_one([1, 0]), 0)

    def test_non_psd_cov(self):
        with pytest.raises(ValidationError):
            EnergyCovariance(np.diag([1.0, -1.0]))

    def test_non_hermitian_cov(self):
        with pytest.raises(ValidationError):
            EnergyCovariance(np.array([[1.0, 1j], [1j, 1.0]]))


class TestRates:
    def test_user_rate_direct(self):
        # gamma = 1, Tr(h h^H V) = 0.5, tau_k = 0.5 -> 0.5 log2(2)
        p = params(n=1)
        ch = ChannelSet.from_gains(p, [[1.0]], [math.sqrt(2)])
        r = user_rate(p, ch, TimeAllocation([0.5, 0.5]), EnergyCovariance([[0.5]]), 0)
        assert r == pytest.approx(0.5, rel=1e-15)

    def test_zero_time_slot(self):
        p = params(n=1)
        ch = ChannelSet.from_gains(p, [[1.0]], [math.sqrt(2)])
        assert user_rate(p, ch, TimeAllocation([0.5, 0.0]), EnergyCovariance([[0.5]]), 0) == 0.0

    def test_zero_gain(self):
        p = params(n=1)
        ch = ChannelSet.from_gains(p, [[1.0]], [0.0])
        assert user_rate(p, ch, TimeAllocation([0.5, 0.3]), EnergyCovariance([[0.5]]), 0) == 0.0

    def test_sum_rate_direct(self):
        # gamma |h^H w|^2 = 2, tau0 = tau1 = 0.5 -> 0.5 log2(3)
        p = params(n=1)
        ch = ChannelSet.from_gains(p, [[1.0]], [math.sqrt(2)])
        sol = make_solution(p, ch, [0.5, 0.5], [math.sqrt(2)])
        p2 = params(n=1, p_max=2.0)
        assert sum_rate(p2, ch, sol) == pytest.approx(0.5 * math.log2(3), rel=1e-14)

    def test_zero_channels(self):
        p = params(k=2, n=3)
        ch = ChannelSet.from_gains(p, np.zeros((2, 3)), [1.0, 1.0])
        sol = make_solution(p, ch, [0.4, 0.3, 0.3], [1, 0, 0])
        assert sum_rate(p, ch, sol) == 0.0

    def test_sum_rate_matches_user_rates(self, rng):
        p, ch = random_instance(rng, k=4, n=3)
        w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        w /= np.linalg.norm(w)
        tau = np.array([0.3, 0.1, 0.2, 0.15, 0.25])
        sol = make_solution(p, ch, tau, w)
        cov = EnergyCovariance.rank_one(math.sqrt(tau[0]) * w)
        t = TimeAllocation(tau)
        per_user = sum(user_rate(p, ch, t, cov, k) for k in range(4))
        assert sum_rate(p, ch, sol) == pytest.approx(per_user, rel=1e-12)

    def test_rank_one_trace_identity(self, rng):
        p, ch = random_instance(rng, k=3, n=4)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        vv = np.outer(v, v.conj())
        for h in ch.dl:
            tr = np.trace(np.outer(h, h.conj()) @ vv).real
            assert tr == pytest.approx(abs(h.conj() @ v) ** 2, rel=1e-12)

    def test_infeasible_raises(self):
        p = params(n=1)
        ch = ChannelSet.from_gains(p, [[1.0]], [1.0])
        sol = make_solution(p, ch, [0.7, 0.5], [1.0])
        with pytest.raises(ValidationError, match="time-budget"):
            sum_rate(p, ch, sol)


class TestValidate:
    def setup_method(self):
        self.p = params(k=2, n=2)
        self.ch = ChannelSet.from_gains(self.p, [[1, 0], [0, 1]], [1.0, 1.0])

    def test_feasible(self):
        sol = make_solution(self.p, self.ch, [0.5, 0.25, 0.25], [0.6, 0.8])
        assert validate(self.p, self.ch, sol) == []

    def test_time_budget(self):
        sol = make_solution(self.p, self.ch, [0.6, 0.3, 0.3], [0.6, 0.8])
        (v,) = validate(self.p, self.ch, sol)
        assert v.constraint == "time-budget"
        assert v.slack == pytest.approx(0.2)

    def test_power(self):
        sol = make_solution(self.p, self.ch, [0.5, 0.25, 0.25], [1.0, 1.0])
        (v,) = validate(self.p, self.ch, sol)
        assert v.constraint == "power-budget"
        assert v.slack == pytest.approx(1.0)

    def test_negative_time(self):
        sol = make_solution(self.p, self.ch, [0.5, -0.1, 0.25], [0.6, 0.8])
        assert [v.constraint for v in validate(self.p, self.ch, sol)] == ["time-nonnegativity"]


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 2 * math.pi), st.integers(0, 2 ** 32 - 1))
def test_phase_invariance_of_rates(theta, seed):
    rng = np.random.default_rng(seed)
    p, ch = random_instance(rng, k=3, n=3)
    w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    w /= np.linalg.norm(w)
    tau = [0.4, 0.2, 0.2, 0.2]
    a = make_solution(p, ch, tau, w).rates
    b = make_solution(p, ch.rotated(theta), tau, w).rates
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(1e-12, 1e-3))
def test_rate_vanishes_as_slot_shrinks(c, tau):
    # tau log2(1 + c / tau) <= tau log2(1 + c) + tau log2(1/tau) -> 0
    p = params(n=1)
    ch = ChannelSet.from_gains(p, [[1.0]], [math.sqrt(2)])
    r = user_rate(p, ch, TimeAllocation([0.5, tau]), EnergyCovariance([[c]]), 0)
    assert 0 <= r <= tau * (math.log2(1 + c) + math.log2(1 / tau)) + 1e-15

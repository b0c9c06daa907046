import numpy as np
import pytest

from wpcn.model import ChannelSet, SystemParams


def random_instance(rng, k=None, n=None, p_max=1.0):
    """Unit-scale Rayleigh DL/UL instance with gamma_k = |g_k|^2."""
    k = int(rng.integers(1, 9)) if k is None else k
    n = int(rng.integers(1, 9)) if n is None else n
    params = SystemParams(n_antennas=n, n_users=k, p_max=p_max, noise_power=1.0,
                          harvest_eff=0.5, snr_gap=1.0)
    dl = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2)
    ul = np.sqrt(2) * (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2)
    return params, ChannelSet.from_gains(params, dl, ul)


def scalar_instance():
    """N_t = K = 1, h = 1, gamma = 1, P_max = 1, so P_max * lambda_max = 1."""
    params = SystemParams(n_antennas=1, n_users=1, p_max=1.0, noise_power=1.0,
                          harvest_eff=0.5, snr_gap=1.0)
    return params, ChannelSet.from_gains(params, [[1.0]], [np.sqrt(2.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20140301)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    report = getattr(mod, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(report):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")

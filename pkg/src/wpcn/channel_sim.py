"""Simulation geometry, fading channels and seeded Monte-Carlo runs.

Geometry (meters): the users sit on the x axis, spread uniformly over
``line_length`` and centred at the origin. The power station is at
``(0, d_p)`` and the sink at ``(0, -d_s)``, i.e. on opposite sides of the user
line, so the PS-sink distance is ``d_p + d_s``.

Every random draw comes from its own Philox stream keyed by
``(seed, trial, user, link)``, so results do not depend on the order in which
trials are executed.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import fast_solver, reference_solver
from .model import ChannelSet, Solution, SystemParams, ValidationError

DL_LINK = 0
UL_LINK = 1
PATH_LOSS_REF = 1e-3


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    n_users: int = 4
    n_antennas: int = 4
    line_length: float = 10.0
    d_p: float = 5.0
    d_s: float = 5.0
    path_loss_exp: float = 3.0
    rician_k: float = 3.0
    p_max_dbm: float = 30.0
    noise_dbm: float = -70.0
    harvest_eff: float = 0.5
    snr_gap_db: float = 9.8
    n_trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 1 or self.n_antennas < 1:
            raise ValidationError("n_users and n_antennas must be >= 1")
        if min(self.line_length, self.d_p, self.d_s) <= 0:
            raise ValidationError("line_length, d_p and d_s must be > 0")
        if self.n_trials < 1:
            raise ValidationError("n_trials must be >= 1")
        if self.rician_k < 0:
            raise ValidationError("rician_k must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def system_params(self) -> SystemParams:
        return SystemParams(
            n_antennas=self.n_antennas,
            n_users=self.n_users,
            p_max=dbm_to_watts(self.p_max_dbm),
            noise_power=dbm_to_watts(self.noise_dbm),
            harvest_eff=self.harvest_eff,
            snr_gap=db_to_linear(self.snr_gap_db),
        )

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def user_positions(config: ScenarioConfig) -> np.ndarray:
    """x coordinates of the users (all at y = 0)."""
    k = config.n_users
    if k == 1:
        return np.zeros(1)
    half = config.line_length / 2
    return np.linspace(-half, half, k)


def ps_position(config: ScenarioConfig) -> np.ndarray:
    return np.array([0.0, config.d_p])


def sink_position(config: ScenarioConfig) -> np.ndarray:
    return np.array([0.0, -config.d_s])


def dl_distances(config: ScenarioConfig) -> np.ndarray:
    return np.hypot(user_positions(config), config.d_p)


def ul_distances(config: ScenarioConfig) -> np.ndarray:
    return np.hypot(user_positions(config), config.d_s)


def path_loss(config: ScenarioConfig, distance) -> np.ndarray:
    return PATH_LOSS_REF * np.asarray(distance, dtype=float) ** (-config.path_loss_exp)


def rng_stream(seed: int, trial: int, user: int, link: int) -> np.random.Generator:
    """Independent counter-based generator for one (trial, user, link) draw."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial, user, link))
    return np.random.Generator(np.random.Philox(ss))


def _cn(rng: np.random.Generator, size) -> np.ndarray:
    # circularly-symmetric complex Gaussian, unit mean square
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return (z[0] + 1j * z[1]) / math.sqrt(2.0)


def steering_vector(n_antennas: int, beta: float) -> np.ndarray:
    """ULA response ``[1, e^{j a}, ..., e^{j (N-1) a}]`` with ``a = -pi sin(beta)``."""
    a = -math.pi * math.sin(beta)
    return np.exp(1j * a * np.arange(n_antennas))


def user_direction(config: ScenarioConfig, user_index: int) -> float:
    """Angle of user k seen from the PS, measured from the perpendicular bisector."""
    x = user_positions(config)[user_index]
    return math.atan2(x, config.d_p)


def gen_dl_channel(config: ScenarioConfig, rng: np.random.Generator, user_index: int) -> np.ndarray:
    """Rician DL vector; each entry has mean square ``1e-3 d^-alpha``."""
    k_r = config.rician_k
    los = steering_vector(config.n_antennas, user_direction(config, user_index))
    nlos = _cn(rng, config.n_antennas)
    if math.isinf(k_r):
        h = los
    else:
        h = math.sqrt(k_r / (1 + k_r)) * los + math.sqrt(1 / (1 + k_r)) * nlos
    return math.sqrt(path_loss(config, dl_distances(config)[user_index])) * h


def gen_ul_channel(config: ScenarioConfig, rng: np.random.Generator, user_index: int) -> complex:
    """Rayleigh UL gain with ``E|g|^2 = 1e-3 d^-alpha``."""
    z = _cn(rng, 1)[0]
    return complex(math.sqrt(path_loss(config, ul_distances(config)[user_index])) * z)


def draw_instance(config: ScenarioConfig, trial: int) -> tuple[SystemParams, ChannelSet]:
    params = config.system_params()
    dl = np.stack([gen_dl_channel(config, rng_stream(config.seed, trial, k, DL_LINK), k)
                   for k in range(config.n_users)])
    ul = np.array([gen_ul_channel(config, rng_stream(config.seed, trial, k, UL_LINK), k)
                   for k in range(config.n_users)])
    return params, ChannelSet.from_gains(params, dl, ul)


def _reference(params, channels) -> Solution:
    return reference_solver.solve_bca(params, channels)[0]


SOLVERS: dict[str, Callable[[SystemParams, ChannelSet], Solution]] = {
    "fast": fast_solver.solve,
    "reference": _reference,
}


@dataclass(frozen=True)
class TrialResult:
    sum_rate: float
    tau0: float
    solver_wall_time: float
    trial_index: int
    flags: str = ""

    @property
    def failed(self) -> bool:
        return self.flags.startswith("error")


@dataclass(frozen=True)
class MonteCarloSummary:
    mean: float
    std_error: float
    n_ok: int
    n_failed: int
    mean_wall_time: float
    results: tuple[TrialResult, ...] = field(repr=False, default=())


def run_trial(config: ScenarioConfig, trial: int, solver: str = "fast") -> TrialResult:
    """Draw one channel realization and solve it; solver errors become flags."""
    fn = SOLVERS[solver]
    params, channels = draw_instance(config, trial)
    t0 = time.perf_counter()
    try:
        sol = fn(params, channels)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        wall = time.perf_counter() - t0
        return TrialResult(math.nan, math.nan, wall, trial, f"error:{type(exc).__name__}")
    wall = time.perf_counter() - t0
    return TrialResult(sol.sum_rate, sol.tau0, wall, trial, "degenerate" if sol.degenerate else "")


def summarize(results) -> MonteCarloSummary:
    ok = [r for r in results if not r.failed]
    rates = np.array([r.sum_rate for r in ok])
    n = rates.size
    mean = float(rates.mean()) if n else math.nan
    se = float(rates.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    wall = float(np.mean([r.solver_wall_time for r in ok])) if n else math.nan
    return MonteCarloSummary(mean, se, n, len(results) - n, wall, tuple(results))


def run_monte_carlo(config: ScenarioConfig, solver_choice: str = "fast",
                    threads: int = 1) -> tuple[list[TrialResult], MonteCarloSummary]:
    """Solve ``config.n_trials`` independent channel draws.

    Results are ordered by trial index whatever ``threads`` is; channel draws
    depend only on ``(config.seed, trial)``.
    """
    if solver_choice not in SOLVERS:
        raise ValidationError(f"unknown solver {solver_choice!r}; choose from {sorted(SOLVERS)}")
    trials = range(config.n_trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda t: run_trial(config, t, solver_choice), trials))
    else:
        results = [run_trial(config, t, solver_choice) for t in trials]
    results.sort(key=lambda r: r.trial_index)
    return results, summarize(results)

"""Reference solver for the relaxed covariance problem.

Independent of the golden-section path in :mod:`wpcn.fast_solver`. For every
``tau0`` on a grid it runs block-coordinate ascent on ``(V, tau_1..tau_K)``:

* time step: closed-form SNR-equalizing split of ``1 - tau0`` for fixed ``V``;
* covariance step: maximize the linearization of the rate sum at ``V_n``,
  which over ``{Tr V <= tau0 P_max, V >= 0}`` is attained by the rank-one
  matrix ``tau0 P_max u u^H`` with ``u`` the top eigenvector of
  ``sum_k c_k h_k h_k^H``.

The best grid point is refined by successive zooms. The final covariance must
be numerically rank one; the beam is read off its top eigenpair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fast_solver import allocate_ul_time
from .linalg import principal_eigenpair, principal_eigenpairs
from .model import (
    ChannelSet,
    EnergyCovariance,
    NumericalError,
    Solution,
    SystemParams,
    TimeAllocation,
    ValidationError,
    make_solution,
    rates_for,
)

RANK_RATIO_MAX = 1e-8
GRID_EDGE = 1e-4
SHRINK = 10.0
MIN_ROUNDS = 3
SCA_MAX_ITER = 1000
EDGE_FLOOR = 1e-15
LN2 = math.log(2.0)


class RelaxationNotTightError(NumericalError):
    """The recovered covariance is not numerically rank one."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class TraceEntry:
    objective: float
    rank_ratio: float
    tau: np.ndarray


@dataclass
class SolverTrace:
    """Ascent history of the covariance/time iterations at the selected ``tau0``."""

    iterations: list[TraceEntry] = field(default_factory=list)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([it.objective for it in self.iterations])

    def is_ascent(self, slack: float = 1e-10) -> bool:
        obj = self.objectives
        return bool(np.all(np.diff(obj) >= -slack)) if obj.size > 1 else True


def rank_ratio(v: np.ndarray) -> float:
    """``lambda_2 / lambda_1`` of a Hermitian PSD matrix (0 for 1x1 or zero input)."""
    w = np.linalg.eigvalsh(v)
    if w.size < 2 or w[-1] <= 0:
        return 0.0
    return float(max(w[-2], 0.0) / w[-1])


# Batched kernels: leading axis M indexes independent tau0 values.

def _snr_numerators(channels: ChannelSet, v: np.ndarray) -> np.ndarray:
    hv = np.einsum("ki,mij,kj->mk", channels.dl.conj(), v, channels.dl).real
    return channels.gamma * np.maximum(hv, 0.0)


def _split(tau0: np.ndarray, x: np.ndarray) -> np.ndarray:
    total = x.sum(axis=1, keepdims=True)
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, (1.0 - tau0)[:, None] * x / safe, 0.0)


def _objective(tau_ul: np.ndarray, x: np.ndarray) -> np.ndarray:
    on = (tau_ul > 0) & (x > 0)
    t = np.where(on, tau_ul, 1.0)
    return np.where(on, tau_ul * np.log1p(np.where(on, x, 0.0) / t), 0.0).sum(axis=1) / LN2


def _sca(params: SystemParams, channels: ChannelSet, tau0: np.ndarray,
         tau_ul: np.ndarray, x: np.ndarray) -> np.ndarray:
    active = tau_ul > 0
    t_act = np.where(active, tau_ul, 0.0).sum(axis=1)
    x_act = np.where(active, x, 0.0).sum(axis=1)
    pooled = np.where(t_act > 0, x_act / np.where(t_act > 0, t_act, 1.0), 0.0)
    snr = np.where(active, x / np.where(active, tau_ul, 1.0), pooled[:, None])
    coef = channels.gamma / (1.0 + snr)
    a = np.einsum("mk,ki,kj->mij", coef, channels.dl, channels.dl.conj())
    lam, u = principal_eigenpairs(a)
    scale = np.where((lam > 0) & (tau0 > 0), tau0 * params.p_max, 0.0)
    return scale[:, None, None] * (u[:, :, None] * u.conj()[:, None, :])


def sca_step(params: SystemParams, channels: ChannelSet, time: TimeAllocation,
             v_current: EnergyCovariance) -> EnergyCovariance:
    """One linearize-and-maximize update of the covariance at fixed time split.

    Coefficients are ``c_k = gamma_k / (1 + snr_k)`` with
    ``snr_k = gamma_k h_k^H V_n h_k / tau_k``. A user with ``tau_k == 0`` is
    given the pooled SNR of the active users, the value the SNR-equalizing
    split would assign to it. Returns ``tau0 P_max u u^H``.
    """
    if not isinstance(v_current, EnergyCovariance):
        v_current = EnergyCovariance(v_current)
    if v_current.trace > time.tau0 * params.p_max * (1 + 1e-9) + 1e-12:
        raise ValidationError("v_current exceeds the trace budget tau0 * p_max")
    v = v_current.v[None]
    x = _snr_numerators(channels, v)
    return EnergyCovariance(_sca(params, channels, np.array([time.tau0]), time.ul[None], x)[0])


def optimal_time_given_v(params: SystemParams, channels: ChannelSet, tau0: float,
                         v: EnergyCovariance) -> TimeAllocation:
    """SNR-equalizing UL split for fixed ``tau0`` and ``V``.

    Degenerate input (no user receives energy) yields an all-zero UL part.
    """
    vv = v.v if isinstance(v, EnergyCovariance) else np.asarray(v)
    tau_ul, _ = allocate_ul_time(tau0, _snr_numerators(channels, vv[None])[0])
    return TimeAllocation(np.concatenate(([tau0], tau_ul)))


def _bca(params: SystemParams, channels: ChannelSet, tau0: np.ndarray, inner_tol: float,
         trace: SolverTrace | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Ascent on (V, tau) for every tau0; returns final objectives and covariances.

    ``trace`` records the iterates of the first tau0 only.
    """
    n = params.n_antennas
    v = (tau0 * params.p_max / n)[:, None, None] * np.eye(n, dtype=complex)
    x = _snr_numerators(channels, v)
    tau_ul = _split(tau0, x)
    obj = _objective(tau_ul, x)
    if trace is not None:
        trace.iterations.append(TraceEntry(float(obj[0]), rank_ratio(v[0]), np.r_[tau0[0], tau_ul[0]]))
    running = np.ones(tau0.size, dtype=bool)
    for _ in range(SCA_MAX_ITER):
        idx = np.flatnonzero(running)
        if not idx.size:
            break
        v_new = _sca(params, channels, tau0[idx], tau_ul[idx], x[idx])
        x_new = _snr_numerators(channels, v_new)
        tau_new = _split(tau0[idx], x_new)
        obj_new = _objective(tau_new, x_new)
        ok = obj_new >= obj[idx]
        keep = idx[ok]
        gain = obj_new - obj[idx]
        v[keep], x[keep], tau_ul[keep], obj[keep] = v_new[ok], x_new[ok], tau_new[ok], obj_new[ok]
        running[idx[~ok | (gain < inner_tol)]] = False
        if trace is not None and idx[0] == 0 and ok[0]:
            trace.iterations.append(
                TraceEntry(float(obj[0]), rank_ratio(v[0]), np.r_[tau0[0], tau_ul[0]]))
    return obj, v


def solve_bca(params: SystemParams, channels: ChannelSet, n_grid: int = 101,
              inner_tol: float = 1e-12, outer_tol: float = 1e-8) -> tuple[Solution, SolverTrace]:
    """Grid search over ``tau0`` with block-coordinate ascent at each point.

    The initial grid has ``n_grid`` points on ``[1e-4, 1 - 1e-4]``. Each
    refinement re-grids a window ten times narrower around the incumbent;
    at least three rounds run, and refinement stops once the grid spacing
    is below ``outer_tol``.
    """
    if n_grid < 3:
        raise ValidationError(f"n_grid must be >= 3, got {n_grid}")
    if not np.any(channels.gamma * np.sum(np.abs(channels.dl) ** 2, axis=1) > 0):
        tau = np.zeros(params.n_users + 1)
        sol = make_solution(params, channels, tau, np.zeros(params.n_antennas),
                            degenerate=True, rank_ratio=0.0)
        return sol, SolverTrace()

    lo, hi = GRID_EDGE, 1.0 - GRID_EDGE
    best_tau0, best_obj = None, -np.inf
    width = hi - lo
    rounds = 0
    while True:
        grid = np.linspace(lo, hi, n_grid)
        obj, _ = _bca(params, channels, grid, inner_tol)
        i = int(np.argmax(obj))
        if obj[i] > best_obj:
            best_tau0, best_obj = float(grid[i]), float(obj[i])
        spacing = (hi - lo) / (n_grid - 1)
        rounds += 1
        if rounds > MIN_ROUNDS and spacing <= outer_tol:
            break
        width /= SHRINK
        lo = max(best_tau0 - width / 2, EDGE_FLOOR)
        hi = min(best_tau0 + width / 2, 1.0 - EDGE_FLOOR)

    trace = SolverTrace()
    obj, v = _bca(params, channels, np.array([best_tau0]), inner_tol, trace)
    ratio = rank_ratio(v[0])
    if ratio > RANK_RATIO_MAX:
        raise RelaxationNotTightError(
            f"relaxation not tight numerically: lambda2/lambda1 = {ratio:.3e}", trace)
    return _extract(params, channels, best_tau0, float(obj[0]), v[0], ratio), trace


def _extract(params: SystemParams, channels: ChannelSet, tau0: float, objective: float,
             v: np.ndarray, ratio: float) -> Solution:
    lam, u = principal_eigenpair(v, validate=False)
    v_vec = math.sqrt(lam) * u
    beam = v_vec / math.sqrt(tau0)
    tau_ul, degenerate = allocate_ul_time(tau0, channels.gamma * np.abs(channels.dl.conj() @ v_vec) ** 2)
    tau = np.concatenate(([tau0], tau_ul))
    return make_solution(params, channels, tau, beam, degenerate=degenerate,
                         rank_ratio=ratio, relaxed_objective=objective)


@dataclass(frozen=True)
class EquivalenceReport:
    deterministic_objective: float
    gaussian_objective: float
    rel_gap: float

    @property
    def equivalent(self) -> bool:
        return self.rel_gap <= 1e-9


def deterministic_rates(params: SystemParams, channels: ChannelSet, tau, beams) -> np.ndarray:
    """Rates when the WPT signal is deterministic (``s_k(t) = 1``).

    The beams add coherently: user k sees ``|h_k^H sum_i w_i|^2``.
    """
    beams = np.atleast_2d(np.asarray(beams, dtype=complex))
    return rates_for(params, channels, tau, beams.sum(axis=0))


def solve_deterministic(params: SystemParams, channels: ChannelSet, n_grid: int = 101,
                        inner_tol: float = 1e-12, outer_tol: float = 1e-8,
                        reference: Solution | None = None) -> tuple[Solution, EquivalenceReport]:
    """Optimal deterministic-signalling design and its comparison with Gaussian WPT.

    With a deterministic WPT signal only the aggregate beam
    ``v_bar = sqrt(tau0) sum_i w_i`` matters. Relaxing ``v_bar v_bar^H`` to a
    PSD matrix gives the same covariance problem as Gaussian signalling, so
    the same ascent machinery solves it. The rank-one solution is split back
    into a single deterministic beam, scored with :func:`deterministic_rates`,
    and compared with ``reference`` (computed with :func:`solve_bca` if not
    given).
    """
    if reference is None:
        reference, _ = solve_bca(params, channels, n_grid, inner_tol, outer_tol)
    relaxed, _ = solve_bca(params, channels, n_grid, inner_tol, outer_tol)
    tau = relaxed.time.tau
    v_bar = math.sqrt(relaxed.tau0) * relaxed.beamformer
    beam = v_bar / math.sqrt(relaxed.tau0) if relaxed.tau0 > 0 else np.zeros_like(v_bar)
    rates = deterministic_rates(params, channels, tau, beam[None, :])
    det = Solution(TimeAllocation(tau), beam, rates, float(rates.sum()),
                   degenerate=relaxed.degenerate, meta={"signalling": "deterministic"})
    g = reference.sum_rate
    gap = abs(det.sum_rate - g) / max(abs(g), 1e-300) if (g or det.sum_rate) else 0.0
    return det, EquivalenceReport(det.sum_rate, g, gap)

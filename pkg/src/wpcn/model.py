"""System model for a MISO harvest-then-transmit network.

A power station with ``n_antennas`` antennas charges ``n_users`` single-antenna
nodes during the first fraction ``tau[0]`` of a unit frame; node ``k`` then
spends everything it harvested sending to the sink in its own TDMA slot
``tau[k]``. Every quantity here is linear-scale (watts, not dBm).

All solvers evaluate candidate solutions through the functions in this module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_FLOOR = -1e-10
TIME_TOL = 1e-12
POWER_RTOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input or a candidate solution violates a constraint."""


class NumericalError(ArithmeticError):
    """Raised when a numerical routine fails to reach its accuracy target."""


def _frozen(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _per_user(value, n_users: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_users, float(arr))
    if arr.shape != (n_users,):
        raise ValidationError(f"{name} must be a scalar or have length {n_users}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SystemParams:
    """Static system parameters.

    ``noise_power`` and ``harvest_eff`` accept a scalar (shared by all users)
    or one value per user; they are stored per user.
    """

    n_antennas: int
    n_users: int
    p_max: float
    noise_power: np.ndarray
    harvest_eff: np.ndarray
    snr_gap: float = 1.0

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ValidationError(f"n_antennas must be a positive integer, got {self.n_antennas!r}")
        if int(self.n_users) != self.n_users or self.n_users < 1:
            raise ValidationError(f"n_users must be a positive integer, got {self.n_users!r}")
        object.__setattr__(self, "n_antennas", int(self.n_antennas))
        object.__setattr__(self, "n_users", int(self.n_users))
        if not np.isfinite(self.p_max) or self.p_max <= 0:
            raise ValidationError(f"p_max must be > 0, got {self.p_max!r}")
        if not np.isfinite(self.snr_gap) or self.snr_gap < 1:
            raise ValidationError(f"snr_gap must be >= 1 (linear), got {self.snr_gap!r}")
        noise = _per_user(self.noise_power, self.n_users, "noise_power")
        eff = _per_user(self.harvest_eff, self.n_users, "harvest_eff")
        if not np.all(np.isfinite(noise)) or np.any(noise <= 0):
            raise ValidationError("every noise_power must be > 0")
        if not np.all((eff > 0) & (eff < 1)):
            raise ValidationError("every harvest_eff must lie strictly inside (0, 1)")
        object.__setattr__(self, "p_max", float(self.p_max))
        object.__setattr__(self, "snr_gap", float(self.snr_gap))
        object.__setattr__(self, "noise_power", _frozen(noise, float))
        object.__setattr__(self, "harvest_eff", _frozen(eff, float))


def compute_gamma(params: SystemParams, ul_gain: complex, user_index: int) -> float:
    """Effective UL gain ``xi_k |g_k|^2 / (Gamma sigma_k^2)`` of user ``user_index``."""
    if not 0 <= user_index < params.n_users:
        raise ValidationError(f"user_index {user_index} out of range for {params.n_users} users")
    return float(params.harvest_eff[user_index] * abs(ul_gain) ** 2
                 / (params.snr_gap * params.noise_power[user_index]))


@dataclass(frozen=True)
class ChannelSet:
    """DL vectors ``dl[k]`` (length N_t), UL scalars ``ul[k]`` and derived ``gamma``.

    Build with :meth:`from_gains` so that ``gamma`` is consistent with the
    parameters.
    """

    dl: np.ndarray
    ul: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_gains(cls, params: SystemParams, dl, ul) -> "ChannelSet":
        dl = np.array(dl, dtype=complex)
        if dl.ndim == 1 and params.n_users == 1:
            dl = dl[None, :]
        ul = np.atleast_1d(np.array(ul, dtype=complex))
        if dl.shape != (params.n_users, params.n_antennas):
            raise ValidationError(
                f"dl must have shape ({params.n_users}, {params.n_antennas}), got {dl.shape}")
        if ul.shape != (params.n_users,):
            raise ValidationError(f"ul must have length {params.n_users}, got shape {ul.shape}")
        if not (np.all(np.isfinite(dl)) and np.all(np.isfinite(ul))):
            raise ValidationError("channel entries must be finite")
        gamma = [compute_gamma(params, ul[k], k) for k in range(params.n_users)]
        return cls(_frozen(dl, complex), _frozen(ul, complex), _frozen(gamma, float))

    @property
    def n_users(self) -> int:
        return self.dl.shape[0]

    def rotated(self, theta: float) -> "ChannelSet":
        """Copy with every DL vector multiplied by ``exp(j theta)``."""
        return ChannelSet(_frozen(self.dl * np.exp(1j * theta), complex), self.ul, self.gamma)


@dataclass(frozen=True)
class TimeAllocation:
    """Frame fractions ``tau[0]`` (WPT) and ``tau[1:]`` (UL slots)."""

    tau: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if tau.ndim != 1 or tau.size < 2:
            raise ValidationError("tau must hold tau_0 and at least one UL fraction")
        if not np.all(np.isfinite(tau)):
            raise ValidationError("tau entries must be finite")
        object.__setattr__(self, "tau", _frozen(tau, float))

    @property
    def tau0(self) -> float:
        return float(self.tau[0])

    @property
    def ul(self) -> np.ndarray:
        return self.tau[1:]


@dataclass(frozen=True)
class EnergyCovariance:
    """Hermitian PSD transmit covariance."""

    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"covariance must be square, got shape {v.shape}")
        check_hermitian_psd(v, "covariance")
        object.__setattr__(self, "v", _frozen(v, complex))

    @classmethod
    def rank_one(cls, vec) -> "EnergyCovariance":
        vec = np.asarray(vec, dtype=complex)
        return cls(np.outer(vec, vec.conj()))

    @property
    def trace(self) -> float:
        return float(np.trace(self.v).real)


def check_hermitian_psd(m: np.ndarray, name: str = "matrix") -> None:
    """Raise ValidationError unless ``m`` is Hermitian and PSD within tolerance.

    Both tolerances are scaled by ``max(1, max|m_ij|)``.
    """
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise ValidationError(f"{name} is not Hermitian")
    if m.size and np.linalg.eigvalsh(m).min() < PSD_FLOOR * scale:
        raise ValidationError(f"{name} is not positive semidefinite")


@dataclass(frozen=True)
class Solution:
    """Time split plus the single energy beamformer and the resulting rates."""

    time: TimeAllocation
    beamformer: np.ndarray
    rates: np.ndarray
    sum_rate: float
    degenerate: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beamformer", _frozen(self.beamformer, complex))
        object.__setattr__(self, "rates", _frozen(self.rates, float))
        object.__setattr__(self, "sum_rate", float(self.sum_rate))

    @property
    def tau0(self) -> float:
        return self.time.tau0

    def covariance(self) -> EnergyCovariance:
        """Substituted covariance ``tau_0 w w^H``."""
        return EnergyCovariance.rank_one(np.sqrt(self.time.tau0) * self.beamformer)


def _channel_energy(channels: ChannelSet, v: np.ndarray, user_index: int) -> float:
    h = channels.dl[user_index]
    return max(float(np.real(h.conj() @ v @ h)), 0.0)


def harvested_energy(params: SystemParams, channels: ChannelSet, tau0: float,
                     cov: EnergyCovariance, user_index: int) -> float:
    """Energy harvested by one user during the WPT slot.

    ``cov`` is the covariance of the un-substituted beamformers (``sum w_i w_i^H``),
    so the result is ``xi_k tau_0 h_k^H cov h_k``.
    """
    if not 0.0 <= tau0 <= 1.0:
        raise ValidationError(f"tau0 must lie in [0, 1], got {tau0!r}")
    if not isinstance(cov, EnergyCovariance):
        cov = EnergyCovariance(cov)
    return float(params.harvest_eff[user_index] * tau0 * _channel_energy(channels, cov.v, user_index))


def perspective_rate(tau_k: float, snr_numerator: float) -> float:
    """``tau_k log2(1 + x / tau_k)``, extended by 0 at ``tau_k == 0``."""
    if tau_k <= 0.0 or snr_numerator <= 0.0:
        return 0.0
    return tau_k * math.log1p(snr_numerator / tau_k) / math.log(2.0)


def user_rate(params: SystemParams, channels: ChannelSet, time: TimeAllocation,
              cov: EnergyCovariance, user_index: int) -> float:
    """Throughput of one user for the substituted covariance ``V = tau_0 sum w_i w_i^H``."""
    v = cov.v if isinstance(cov, EnergyCovariance) else np.asarray(cov, dtype=complex)
    x = channels.gamma[user_index] * _channel_energy(channels, v, user_index)
    return perspective_rate(float(time.tau[user_index + 1]), x)


def rates_for(params: SystemParams, channels: ChannelSet, tau: Sequence[float],
              beamformer: np.ndarray) -> np.ndarray:
    """Per-user rates ``tau_k log2(1 + gamma_k tau_0 |h_k^H w|^2 / tau_k)``."""
    tau = np.asarray(tau, dtype=float)
    gains = np.abs(channels.dl.conj() @ np.asarray(beamformer, dtype=complex)) ** 2
    x = channels.gamma * tau[0] * gains
    return np.array([perspective_rate(t, xk) for t, xk in zip(tau[1:], x)])


def make_solution(params: SystemParams, channels: ChannelSet, tau, beamformer,
                  degenerate: bool = False, **meta) -> Solution:
    """Assemble a Solution, computing rates and sum-rate from the model."""
    rates = rates_for(params, channels, tau, beamformer)
    return Solution(TimeAllocation(tau), beamformer, rates, float(np.sum(rates)),
                    degenerate=degenerate, meta=meta)


@dataclass(frozen=True)
class Violation:
    constraint: str
    slack: float

    def __str__(self):
        return f"{self.constraint} violated by {self.slack:.3g}"


def validate(params: SystemParams, channels: ChannelSet, solution: Solution) -> list[Violation]:
    """List every violated feasibility constraint; empty means feasible."""
    out = []
    tau = solution.time.tau
    if tau.size != params.n_users + 1:
        out.append(Violation("time-shape", float(abs(tau.size - params.n_users - 1))))
    neg = tau.min()
    if neg < 0:
        out.append(Violation("time-nonnegativity", float(-neg)))
    excess = float(tau.sum()) - 1.0
    if excess > TIME_TOL:
        out.append(Violation("time-budget", excess))
    w = solution.beamformer
    if w.shape != (params.n_antennas,):
        out.append(Violation("beamformer-shape", float(abs(w.size - params.n_antennas))))
    power = float(np.vdot(w, w).real)
    if power > params.p_max * (1 + POWER_RTOL):
        out.append(Violation("power-budget", power - params.p_max))
    r = solution.rates
    if r.size and r.min() < 0:
        out.append(Violation("rate-nonnegativity", float(-r.min())))
    if abs(solution.sum_rate - float(r.sum())) > 1e-12 * max(1.0, abs(solution.sum_rate)):
        out.append(Violation("sum-rate-consistency", abs(solution.sum_rate - float(r.sum()))))
    return out


def sum_rate(params: SystemParams, channels: ChannelSet, solution: Solution) -> float:
    """Sum-throughput of ``solution`` recomputed from the channels.

    Raises ValidationError naming each violated constraint.
    """
    violations = validate(params, channels, solution)
    if violations:
        raise ValidationError("; ".join(str(v) for v in violations))
    return float(np.sum(rates_for(params, channels, solution.time.tau, solution.beamformer)))

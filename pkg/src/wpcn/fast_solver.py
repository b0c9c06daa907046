"""Semi-closed-form solver: one eigendecomposition plus a 1-D golden-section search.

The joint problem collapses to

    max_{tau0 in [0, 1]}  (1 - tau0) log2(1 + c tau0 / (1 - tau0)),   c = P_max lambda_max,

where ``lambda_max`` is the top eigenvalue of ``G G^H`` with
``G = [sqrt(gamma_1) h_1, ..., sqrt(gamma_K) h_K]``. The energy beam points
along the matching eigenvector and the UL slots equalize the received SNR.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import principal_eigenpair
from .model import ChannelSet, Solution, SystemParams, ValidationError, make_solution

__all__ = [
    "EffectiveChannel",
    "build_effective_channel",
    "principal_eigenpair",
    "reduced_objective",
    "reduced_slope",
    "golden_section_max",
    "maximize_tau0",
    "allocate_ul_time",
    "solve",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
EDGE = 1e-15
LN2 = math.log(2.0)
EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class EffectiveChannel:
    g_matrix: np.ndarray
    lambda_max: float
    principal_vec: np.ndarray


def build_effective_channel(params: SystemParams, channels: ChannelSet) -> EffectiveChannel:
    g = (channels.dl * np.sqrt(channels.gamma)[:, None]).T
    lam, vec = principal_eigenpair(g @ g.conj().T, validate=False)
    return EffectiveChannel(g, lam, vec)


def reduced_objective(tau0: float, c: float) -> float:
    """``(1 - tau0) log2(1 + c tau0 / (1 - tau0))``, zero at both endpoints."""
    if not 0.0 <= tau0 <= 1.0:
        raise ValidationError(f"tau0 must lie in [0, 1], got {tau0!r}")
    if c < 0:
        raise ValidationError(f"c must be >= 0, got {c!r}")
    if tau0 == 0.0 or tau0 == 1.0 or c == 0.0:
        return 0.0
    rest = 1.0 - tau0
    return rest * math.log1p(c * tau0 / rest) / LN2


def reduced_slope(tau0: float, c: float) -> float:
    """Derivative of the reduced objective times ``ln 2``.

    Equals ``c / (1 + (c - 1) tau0) - ln(1 + c tau0 / (1 - tau0))``; it vanishes
    exactly at the maximizer and, unlike the objective itself, stays well
    conditioned there.
    """
    rest = 1.0 - tau0
    return c / (rest + c * tau0) - math.log1p(c * tau0 / rest)


def golden_section_max(f, a: float, b: float, tol: float, slope=None) -> float:
    """Maximizer of a unimodal ``f`` on ``[a, b]``, to bracket width ``tol``.

    Near a smooth maximum the two probe values become equal to within
    rounding long before the bracket reaches ``tol``. When they tie within
    a few ulps and ``slope`` (the derivative, or anything with its sign) is
    given, the side to discard is chosen from the slope at the midpoint of
    the probes instead.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if slope is not None and abs(fc - fd) <= 8 * EPS * max(abs(fc), abs(fd)):
            keep_left = slope(0.5 * (c + d)) < 0
        else:
            keep_left = fc >= fd
        if keep_left:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def maximize_tau0(c: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section maximization of :func:`reduced_objective` over ``tau0``.

    Returns ``(tau0_star, value)``; ``c == 0`` gives ``(0.0, 0.0)``.
    """
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol!r}")
    if c < 0:
        raise ValidationError(f"c must be >= 0, got {c!r}")
    if c == 0.0:
        return 0.0, 0.0
    tau0 = golden_section_max(lambda t: reduced_objective(t, c), EDGE, 1.0 - EDGE, tol,
                              slope=lambda t: reduced_slope(t, c))
    return tau0, reduced_objective(tau0, c)


def allocate_ul_time(tau0: float, weights) -> tuple[np.ndarray, bool]:
    """Split the remaining ``1 - tau0`` of the frame in proportion to ``weights``.

    ``weights[k]`` is user k's received-SNR numerator ``gamma_k h_k^H V h_k``.
    Returns ``(tau_ul, degenerate)``; all-zero weights give zeros and
    ``degenerate=True``.
    """
    if not 0.0 <= tau0 <= 1.0:
        raise ValidationError(f"tau0 must lie in [0, 1], got {tau0!r}")
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValidationError("weights must be nonnegative")
    total = weights.sum()
    if total <= 0:
        return np.zeros_like(weights), True
    return (1.0 - tau0) * (weights / total), False


def solve(params: SystemParams, channels: ChannelSet, tol: float = 1e-10) -> Solution:
    """Globally optimal time split and energy beam.

    The beam is ``sqrt(P_max) * v`` with ``v`` the unit principal eigenvector,
    so the transmit power budget is met with equality.
    """
    eff = build_effective_channel(params, channels)
    if eff.lambda_max <= 0.0:
        tau = np.zeros(params.n_users + 1)
        return make_solution(params, channels, tau, np.zeros(params.n_antennas),
                             degenerate=True, lambda_max=0.0, predicted=0.0)
    c = params.p_max * eff.lambda_max
    tau0, value = maximize_tau0(c, tol)
    beam = math.sqrt(params.p_max) * eff.principal_vec
    # gamma_k h_k^H V h_k with V = tau0 P_max v v^H
    weights = tau0 * params.p_max * channels.gamma * np.abs(channels.dl.conj() @ eff.principal_vec) ** 2
    tau_ul, degenerate = allocate_ul_time(tau0, weights)
    tau = np.concatenate(([tau0], tau_ul))
    return make_solution(params, channels, tau, beam, degenerate=degenerate,
                         lambda_max=eff.lambda_max, predicted=value)

"""Principal eigenpair of a Hermitian PSD matrix with a deterministic convention."""
from __future__ import annotations

import numpy as np

from .model import NumericalError, check_hermitian_psd

# relative gap below which two top eigenvalues count as a tie
TIE_RTOL = 1e-10


def normalize_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate ``vec`` so its largest-magnitude entry (first on ties) is real positive."""
    vec = np.asarray(vec, dtype=complex)
    if not vec.size:
        return vec
    i = int(np.argmax(np.abs(vec)))
    if vec[i] == 0:
        return vec
    return vec * (abs(vec[i]) / vec[i])


def principal_eigenpair(m: np.ndarray, validate: bool = True) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a unit eigenvector of the Hermitian PSD matrix ``m``.

    When the top eigenvalue is repeated, the eigenspace is resolved by
    projecting the standard basis onto it and taking the column with the
    largest projection (first index on exact ties). The vector is then
    phase-normalized with :func:`normalize_phase`.
    """
    m = np.asarray(m, dtype=complex)
    if validate:
        check_hermitian_psd(m, "eigenproblem input")
    n = m.shape[0]
    try:
        w, u = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigendecomposition failed: {exc}") from exc
    lam = float(max(w[-1], 0.0))
    if lam == 0.0:
        vec = np.zeros(n, dtype=complex)
        vec[0] = 1.0
        return 0.0, vec
    top = w >= lam * (1 - TIE_RTOL)
    if top.sum() > 1:
        basis = u[:, top]
        proj = basis @ basis.conj().T
        norms = np.linalg.norm(proj, axis=0)
        j = int(np.flatnonzero(norms >= norms.max() * (1 - 1e-12))[0])
        vec = proj[:, j] / norms[j]
    else:
        vec = u[:, -1]
    vec = normalize_phase(vec / np.linalg.norm(vec))
    residual = np.linalg.norm(m @ vec - lam * vec)
    if residual > 1e-9 * lam:
        raise NumericalError(f"eigenpair residual {residual:.3e} exceeds 1e-9 * lambda_max")
    return lam, vec


def principal_eigenpairs(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """:func:`principal_eigenpair` over a ``(M, N, N)`` stack of Hermitian PSD matrices.

    Matrices with a repeated top eigenvalue go through the scalar routine so
    the tie convention is identical.
    """
    stack = np.asarray(stack, dtype=complex)
    w, u = np.linalg.eigh(stack)
    lam = np.maximum(w[:, -1], 0.0)
    vec = u[:, :, -1].copy()
    redo = lam <= 0.0
    if w.shape[1] > 1:
        redo |= w[:, -2] >= lam * (1 - TIE_RTOL)
    for m in np.flatnonzero(redo):
        lam[m], vec[m] = principal_eigenpair(stack[m], validate=False)
    i = np.argmax(np.abs(vec), axis=1)
    pivot = vec[np.arange(vec.shape[0]), i]
    nz = pivot != 0
    vec[nz] *= (np.abs(pivot[nz]) / pivot[nz])[:, None]
    return lam, vec

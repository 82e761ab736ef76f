"""Dense linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays. Functions that require Hermitian input
check it on entry and symmetrize before handing off to LAPACK, so the
returned spectra are exactly real.
"""

from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

from .errors import ContractError

HERMITIAN_TOL = 1e-12
PINV_RCOND = 1e-12


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"{name} must be square, got shape {a.shape}")
    return a


def hermitian_defect(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def check_hermitian(a, tol: float = HERMITIAN_TOL, name: str = "matrix") -> np.ndarray:
    """Validate that ``a`` is Hermitian and return its exact symmetrization.

    The tolerance is absolute for matrices with entries of order one and
    scales with the largest entry otherwise.
    """
    a = _square(a, name)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    defect = hermitian_defect(a)
    if defect > tol * scale:
        raise ContractError(f"{name} is not Hermitian (max |A - A^H| = {defect:.3e})")
    return 0.5 * (a + a.conj().T)


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Fix the phase of each column so its largest-magnitude entry is real positive.

    Ties in magnitude are broken towards the lowest index.
    """
    v = np.array(vectors, copy=True)
    if v.ndim == 1:
        return canonical_signs(v[:, None])[:, 0]
    mags = np.abs(v)
    for j in range(v.shape[1]):
        col = mags[:, j]
        top = col.max()
        if top == 0.0:
            continue
        idx = int(np.flatnonzero(col >= top * (1.0 - 1e-12))[0])
        phase = v[idx, j] / abs(v[idx, j])
        v[:, j] = v[:, j] / phase
        if np.isrealobj(vectors):
            v[:, j] = v[:, j].real
    if np.isrealobj(vectors):
        v = v.real
    return v


def eig_hermitian(a) -> EigenDecomposition:
    """Full ascending spectrum of a Hermitian matrix with canonical eigenvector phases."""
    h = check_hermitian(a)
    w, v = np.linalg.eigh(h)
    return EigenDecomposition(w, canonical_signs(v))


def solve_linear(a, b) -> np.ndarray:
    """Solve ``a x = b``; falls back to the pseudo-inverse when ``a`` is singular.

    The pseudo-inverse uses the relative cutoff ``1e-12 * sigma_max``, so the
    result always minimizes ``|a x - b|``.
    """
    a = _square(a)
    b = np.asarray(b)
    if b.shape[0] != a.shape[0]:
        raise ContractError(f"dimension mismatch: a is {a.shape}, b has {b.shape[0]} rows")
    if a.shape[0] == 0:
        return b.copy()
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] > PINV_RCOND * s[0]:
        return np.linalg.solve(a, b)
    return np.linalg.pinv(a, rcond=PINV_RCOND) @ b


def partial_trace(rho, dims, keep: int = 0) -> np.ndarray:
    """Reduced operator of a bipartite ``rho`` on ``d1 x d2``.

    ``keep=0`` traces out the second factor, ``keep=1`` the first.
    """
    rho = _square(rho, "rho")
    d1, d2 = (int(d) for d in dims)
    if d1 * d2 != rho.shape[0]:
        raise ContractError(f"dims {d1}x{d2} do not match operator of size {rho.shape[0]}")
    if keep not in (0, 1):
        raise ContractError("keep must be 0 (first subsystem) or 1 (second)")
    r = rho.reshape(d1, d2, d1, d2)
    if keep == 0:
        return np.einsum("ajbj->ab", r)
    return np.einsum("iaib->ab", r)


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b`` for Hermitian arguments."""
    diff = check_hermitian(np.asarray(a) - np.asarray(b), tol=1e-9)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def state_fidelity(x, y) -> float:
    """|<x|y>|^2 for two vectors, normalized internally."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ContractError("fidelity of a zero vector is undefined")
    return float(abs(np.vdot(x, y)) ** 2 / (nx * ny) ** 2)


def expm_hermitian(h, t: float) -> np.ndarray:
    """``exp(-1j * t * h)`` for Hermitian ``h``."""
    return sla.expm(-1j * t * check_hermitian(h, tol=1e-9))


def orthonormal_complement(v) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of span(v)."""
    v = np.atleast_2d(np.asarray(v))
    if v.shape[0] == 1 and v.ndim == 2:
        v = v.T
    return sla.null_space(v.conj().T)


def gershgorin_bound(a) -> tuple[float, float]:
    """Lower and upper Gershgorin bounds on the spectrum of a Hermitian matrix."""
    a = _square(a)
    diag = np.real(np.diag(a))
    radius = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    return float(np.min(diag - radius)), float(np.max(diag + radius))

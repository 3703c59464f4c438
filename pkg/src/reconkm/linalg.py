"""Dense symmetric eigendecomposition (cyclic Jacobi) and truncated SVD
(block subspace iteration)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

SYMMETRY_TOL = 1e-9
JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SVD_ANGLE_TOL = 1e-10
SVD_MAX_ITER = 1000


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # descending |.|, ties by descending signed value
    eigenvectors: np.ndarray  # column i pairs with eigenvalues[i]
    sweeps: int = 0


@dataclass(frozen=True)
class TruncatedSVD:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray
    iterations: int = 0


def abs_order(values: np.ndarray) -> np.ndarray:
    """Indices sorting by descending absolute value, ties by descending value."""
    return np.lexsort((-values, -np.abs(values)))


def _off_norm(A: np.ndarray) -> float:
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


@njit(cache=True)
def _jacobi_sweep(A, V):
    # one cyclic sweep over all (p, q), p < q, in row order; A and V updated in place
    n = A.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = A[p, q]
            if apq == 0.0:
                continue
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            if theta == 0.0:
                t = 1.0
            elif abs(theta) > 1e150:
                t = 0.5 / theta
            else:
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            for r in range(n):
                arp = A[r, p]
                arq = A[r, q]
                A[r, p] = c * arp - s * arq
                A[r, q] = s * arp + c * arq
            for r in range(n):
                apr = A[p, r]
                aqr = A[q, r]
                A[p, r] = c * apr - s * aqr
                A[q, r] = s * apr + c * aqr
            A[p, q] = 0.0
            A[q, p] = 0.0
            for r in range(n):
                vrp = V[r, p]
                vrq = V[r, q]
                V[r, p] = c * vrp - s * vrq
                V[r, q] = s * vrp + c * vrq


def eigh(A, *, tol: float = JACOBI_REL_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    Stops once the off-diagonal Frobenius norm drops below ``tol * ||A||_F``.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"eigh needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("eigh input has non-finite entries")
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"eigh input is not symmetric (max |A - A^T| = {asym:.3e})")
    A = np.ascontiguousarray((A + A.T) / 2)
    V = np.eye(A.shape[0])
    threshold = tol * float(np.linalg.norm(A))

    sweeps = 0
    off = _off_norm(A)
    while off > threshold:
        if sweeps >= max_sweeps:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps", off)
        _jacobi_sweep(A, V)
        sweeps += 1
        off = _off_norm(A)

    w = np.diag(A).copy()
    order = abs_order(w)
    return EigenDecomposition(w[order], V[:, order], sweeps)


def _orthonormalize(X: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(X)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def truncated_svd(
    A,
    r: int,
    *,
    oversample: int = 5,
    tol: float = SVD_ANGLE_TOL,
    max_iter: int = SVD_MAX_ITER,
    seed: int = 0,
) -> TruncatedSVD:
    """Top-``r`` singular triplets by block subspace iteration.

    Iterates on the smaller Gram matrix (A^T A or A A^T, never formed) with
    an oversampled block and Rayleigh-Ritz extraction. Converged when the
    top-r subspace moves by less than ``tol`` between iterations, or when
    every Ritz residual is below ``tol`` relative to sigma_1^2.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("truncated_svd needs a 2-D matrix")
    n, m = A.shape
    if not 1 <= r <= min(n, m):
        raise ValueError(f"r={r} out of range [1, {min(n, m)}]")
    if not np.all(np.isfinite(A)):
        raise ValueError("truncated_svd input has non-finite entries")

    transposed = n < m
    M = A.T if transposed else A  # iterate on M^T M, which is the smaller side
    dim = M.shape[1]
    b = min(r + oversample, dim)
    rng = np.random.default_rng(seed)
    Q = _orthonormalize(rng.standard_normal((dim, b)))

    prev = None
    it = 0
    while True:
        it += 1
        Q = _orthonormalize(M.T @ (M @ Q))
        B = M @ Q
        ritz = eigh(B.T @ B)
        order = np.argsort(-ritz.eigenvalues, kind="stable")
        vecs = Q @ ritz.eigenvectors[:, order]
        vals = np.clip(ritz.eigenvalues[order], 0.0, None)
        top = vecs[:, :r]
        if b == dim:
            break
        if prev is not None:
            moved = float(np.linalg.norm(top - prev @ (prev.T @ top)))
            if moved < tol:
                break
        resid = M.T @ (M @ top) - top * vals[:r]
        scale = max(vals[0], np.finfo(float).tiny)
        if float(np.max(np.linalg.norm(resid, axis=0))) <= tol * scale:
            break
        if it >= max_iter:
            moved = float(np.linalg.norm(top - prev @ (prev.T @ top))) if prev is not None else np.inf
            raise ConvergenceError(f"subspace iteration did not converge in {max_iter} iterations", moved)
        prev = top
        Q = vecs

    right = vecs[:, :r]
    left = _orthonormalize(M @ right)
    sigma = np.sqrt(vals[:r])
    if transposed:
        return TruncatedSVD(right, sigma, left, it)
    return TruncatedSVD(left, sigma, right, it)


def frobenius_energy_fraction(svd: TruncatedSVD, A) -> float:
    """Share of ||A||_F^2 captured by the retained singular values."""
    total = float(np.sum(np.asarray(A, dtype=float) ** 2))
    if total == 0.0:
        raise ValueError("energy fraction undefined for the zero matrix")
    return min(float(np.sum(svd.singular_values**2)) / total, 1.0)


def components_for_energy(A, target: float) -> int:
    """Smallest r whose top-r singular values reach ``target`` of ||A||_F^2."""
    if not 0.0 < target <= 1.0:
        raise ValueError("target fraction must be in (0, 1]")
    A = np.asarray(A, dtype=float)
    full = truncated_svd(A, min(A.shape))
    total = float(np.sum(A**2))
    if total == 0.0:
        raise ValueError("energy fraction undefined for the zero matrix")
    cum = np.cumsum(full.singular_values**2) / total
    return int(min(np.searchsorted(cum, target - 1e-12) + 1, len(cum)))

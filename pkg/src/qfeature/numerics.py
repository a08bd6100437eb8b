"""Dense complex linear algebra and a symmetric eigensolver.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` (or ``float64``
for the eigensolver).  The wrappers here add the shape/finiteness checks the
rest of the package relies on; the heavy lifting is numpy's.
"""
from __future__ import annotations

import numpy as np


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine hits its iteration cap."""


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def _check_finite(arr: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError("non-finite entry in matrix result")
    return arr


def matmul(a, b) -> np.ndarray:
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    with np.errstate(invalid="ignore", over="ignore"):
        return _check_finite(a @ b)


def adjoint(a) -> np.ndarray:
    return _as_matrix(a, "a").conj().T


def kron(a, b) -> np.ndarray:
    """Tensor product with block layout ``a[i, j] * b``."""
    with np.errstate(invalid="ignore", over="ignore"):
        return _check_finite(np.kron(_as_matrix(a, "a"), _as_matrix(b, "b")))


def eigh_symmetric(
    a,
    tol: float = 1e-12,
    max_sweeps: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns.  Each column is
    sign-normalised so its largest-magnitude entry is positive, which makes
    the output deterministic.

    Convergence is declared once the off-diagonal Frobenius mass drops below
    ``tol`` times the Frobenius norm of ``a`` (absolute ``tol`` for the zero
    matrix).
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-10):
        raise ValueError("matrix is not symmetric within 1e-10")
    n = a.shape[0]
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = np.linalg.norm(a)
    threshold = tol * scale if scale > 0 else tol

    def off_mass(m: np.ndarray) -> float:
        off = m - np.diag(np.diag(m))
        return float(np.sqrt(np.sum(off * off)))

    for _ in range(max_sweeps):
        if off_mass(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # stable rotation: t = tan(phi) of the smaller root
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta  # theta**2 would overflow
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        if off_mass(a) > threshold:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal mass {off_mass(a):.3e})"
            )

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    for j in range(n):
        k = int(np.argmax(np.abs(v[:, j])))
        if v[k, j] < 0:
            v[:, j] = -v[:, j]
    return w, v

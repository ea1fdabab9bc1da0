"""Small dense linear-algebra helpers shared across modules."""

from __future__ import annotations

import numpy as np


def haar_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed m x m orthogonal matrix (QR of a Gaussian with sign fix)."""
    Z = rng.standard_normal((m, m))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def haar_special_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    Q = haar_orthogonal(m, rng)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def haar_stiefel(m: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random m x k matrix with orthonormal columns."""
    Z = rng.standard_normal((m, k))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def haar_special_unitary_real(n: int, rng: np.random.Generator) -> np.ndarray:
    """Real 2n x 2n form, acting on (x, y) coordinates, of a Haar SU(n) matrix."""
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    U = Q * (d / np.abs(d))
    U = U / np.linalg.det(U) ** (1.0 / n)
    A, B = U.real, U.imag
    return np.block([[A, -B], [B, A]])


def qr_retract(X: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of X (stack-aware), keeping R's diagonal positive."""
    Q, R = np.linalg.qr(X)
    s = np.sign(np.diagonal(R, axis1=-2, axis2=-1)).copy()
    s[s == 0] = 1.0
    return Q * s[..., None, :]


def op_norm(A) -> float | np.ndarray:
    """Operator norm (largest singular value); stack-aware."""
    A = np.asarray(A, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    val = s[..., 0]
    return float(val) if np.ndim(val) == 0 else val


def hs_matrix_norm(A) -> float | np.ndarray:
    A = np.asarray(A, dtype=float)
    val = np.sqrt(np.sum(A * A, axis=(-2, -1)))
    return float(val) if np.ndim(val) == 0 else val


def orthonormal_complement(Q: np.ndarray) -> np.ndarray:
    """Orthonormal basis (m x (m-k)) of the complement of the column span of Q."""
    m, k = Q.shape
    U, _, _ = np.linalg.svd(Q, full_matrices=True)
    C = U[:, k:]
    # project out residual span components and re-orthonormalize
    C = C - Q @ (Q.T @ C)
    if C.shape[1]:
        C, R = np.linalg.qr(C)
        C = C * np.sign(np.diag(R))
    return C


def complete_to_special_orthogonal(Q: np.ndarray) -> np.ndarray:
    """Square rotation ``M = [C | Q]`` whose last k columns are Q and det M = +1.

    A sign flip is applied to the first complement column if needed; when Q is
    already square the frame is returned as is and must have det +1.
    """
    m, k = Q.shape
    C = orthonormal_complement(Q)
    M = np.hstack([C, Q])
    if np.linalg.det(M) < 0:
        if k == m:
            raise ValueError("square frame has negative determinant")
        M[:, 0] = -M[:, 0]
    return M

"""Constructive decompositions of calibrations.

Face normalization, the coordinate peel ``omega = pi_1^* alpha ^ dx_{m-1} ^ dx_m + eps``,
the rigid perturbation family, and the normal form of 2-covectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .comass import CERT_TOL, ComassEstimate, comass_ascent, exact_comass
from .exterior import Covector, _mask, eval_frame, max_abs_diff, pullback
from .linalg import complete_to_special_orthogonal

FACE_TOL = 1e-8


class DecompositionError(ValueError):
    pass


def face_frame(m: int, n: int) -> np.ndarray:
    """Frame (e_{m-n+1}, ..., e_m)."""
    Q = np.zeros((m, n))
    Q[m - n:, :] = np.eye(n)
    return Q


def face_value(omega: Covector) -> float:
    return eval_frame(omega, face_frame(omega.m, omega.k))


def normalize_face(omega: Covector, known_value: float | None = 1.0, **ascent_kw):
    """Rotate ``omega`` so that its last coordinate n-plane is a value-1 face.

    Returns ``(M, omega')`` where M is special orthogonal and
    ``omega' = M^* omega``; M maps e_{m-n+j} to the j-th column of the
    maximizing frame.  Raises if the comass cannot be certified as 1.
    """
    m, n = omega.m, omega.k
    if abs(face_value(omega) - 1) <= FACE_TOL:
        return np.eye(m), omega
    est = comass_ascent(omega, known_value=known_value, **ascent_kw)
    if not est.certified or abs(est.lower - 1) > CERT_TOL:
        raise DecompositionError(f"comass not certified as 1 (lower={est.lower}, upper={est.upper})")
    M = complete_to_special_orthogonal(est.best_frame)
    rotated = pullback(M, omega)
    if abs(face_value(rotated) - 1) > FACE_TOL:
        raise DecompositionError("rotated face value deviates from 1")
    return M, rotated


@dataclass
class SplitResult:
    alpha: Covector  # on R^{m-2}, degree n-2
    epsilon: Covector  # on R^m, degree n
    rigid: Covector  # pi_1^* alpha ^ dx_{m-1} ^ dx_m
    reconstructed: Covector
    beta: Covector  # on R^{m-1}, degree n-1
    gamma: Covector | None  # on R^{m-1}, degree n; None when n = m
    theta: Covector | None  # on R^{m-2}, degree n-1; None when n = m
    epsilon_comass_upper: float
    epsilon_comass_lower: float
    diagnostics: dict = field(default_factory=dict)
    rotation: np.ndarray | None = None  # M with split input = M^* source
    source: Covector | None = None

    @property
    def omega(self) -> Covector:
        return self.reconstructed


def _peel_last(omega: Covector) -> tuple[Covector, Covector | None]:
    """Write ``omega = pi^* beta ^ dx_m + pi^* gamma`` with beta, gamma on R^{m-1}.

    gamma is None when its degree exceeds m - 1 (it then vanishes).
    """
    m = omega.m
    top = 1 << (m - 1)
    beta, gamma = {}, {}
    for mask, c in omega.terms.items():
        if mask & top:
            # m is the largest index, so dx_J ^ dx_m is already sorted
            beta[mask ^ top] = c
        else:
            gamma[mask] = c
    if omega.k > m - 1:
        return Covector(m - 1, omega.k - 1, beta), None
    return Covector(m - 1, omega.k - 1, beta), Covector(m - 1, omega.k, gamma)


def _lift(a: Covector, m: int) -> Covector:
    """Pull back along the projection onto the first ``a.m`` coordinates."""
    return Covector(m, a.k, a.terms)


def _append(a: Covector, m: int, coords: tuple[int, ...]) -> Covector:
    """``pi^* a ^ dx_{coords}`` where every coordinate in ``coords`` exceeds a.m."""
    extra = _mask(coords)
    return Covector(m, a.k + len(coords), {mask | extra: c for mask, c in a.terms.items()})


def split(omega: Covector, comass_value: float = 1.0, certify: bool = True, **ascent_kw) -> SplitResult:
    """Coordinate peel of a face-normalized calibration.

    Requires ``omega(e_{m-n+1}, ..., e_m) = 1`` to ``FACE_TOL``; run
    :func:`normalize_face` first otherwise.  ``comass_value`` is the known
    comass of ``omega``, used for the triangle-inequality bound on ``eps``.
    """
    m, n = omega.m, omega.k
    if n < 3:
        raise DecompositionError("splitting needs degree n >= 3")
    fv = face_value(omega)
    if abs(fv - 1) > FACE_TOL:
        raise DecompositionError(f"face value {fv} is not 1; normalize the face first")

    beta, gamma = _peel_last(omega)
    alpha_prime, theta = _peel_last(beta)
    alpha = alpha_prime  # already on R^{m-2}
    rigid = _append(alpha, m, (m - 1, m))
    epsilon = Covector.zero(m, n)
    if theta is not None:
        epsilon = epsilon + _append(theta, m, (m,))
    if gamma is not None:
        epsilon = epsilon + _lift(gamma, m)
    reconstructed = rigid + epsilon

    diag = {
        "face_value": fv,
        "rigid_face_value": face_value(rigid),
        "epsilon_face_value": face_value(epsilon),
        "reconstruction_max_abs_diff": max_abs_diff(reconstructed, omega),
        "reconstruction_exact": reconstructed == omega,
        "alpha_face_value": eval_frame(alpha, face_frame(m - 2, n - 2)),
    }
    alpha_comass = exact_comass(alpha)
    if alpha_comass is None:
        alpha_comass = comass_ascent(alpha, known_value=1.0, **ascent_kw).lower
    diag["alpha_comass"] = alpha_comass

    eps_lower = 0.0
    eps_upper = comass_value + alpha_comass
    if certify and not epsilon.is_zero():
        est = comass_ascent(epsilon, **ascent_kw)
        eps_lower = est.lower
        eps_upper = min(eps_upper, est.upper)
        b = comass_ascent(beta, **ascent_kw)
        g = comass_ascent(gamma, **ascent_kw) if gamma is not None and not gamma.is_zero() else None
        diag["beta_comass_lower"] = b.lower
        diag["gamma_comass_lower"] = g.lower if g else 0.0
    diag.update(_emergent_checks(alpha_prime, theta, m, n))
    return SplitResult(
        alpha=alpha,
        epsilon=epsilon,
        rigid=rigid,
        reconstructed=reconstructed,
        beta=beta,
        gamma=gamma,
        theta=theta,
        epsilon_comass_upper=eps_upper,
        epsilon_comass_lower=eps_lower,
        diagnostics=diag,
    )


def _emergent_checks(alpha_prime: Covector, theta: Covector | None, m: int, n: int) -> dict:
    """Structural facts of the peel: no alpha' or theta term involves coordinate m-1."""
    bit = 1 << (m - 2)
    return {
        "alpha_free_of_last": all(not (mask & bit) for mask in alpha_prime.terms),
        "theta_free_of_last": theta is None or all(not (mask & bit) for mask in theta.terms),
    }


def decompose(omega: Covector, certify: bool = True, **ascent_kw) -> SplitResult:
    """Normalize the face of ``omega`` and split the rotated form.

    The components live in the rotated coordinates; ``rotation`` and
    ``source`` record how to get back.
    """
    M, rotated = normalize_face(omega, **ascent_kw)
    sr = split(rotated, certify=certify, **ascent_kw)
    sr.rotation = M
    sr.source = omega
    return sr


def perturb_family(source: Covector | SplitResult, t: float, **ascent_kw) -> Covector:
    """``omega_t = rigid + t * eps``; ``t = 1`` returns the input form exactly.

    A SplitResult yields ``omega_t`` in its own (face-normalized) coordinates.
    A bare covector is decomposed first and ``omega_t`` is rotated back to
    the input coordinates.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if isinstance(source, SplitResult):
        sr, back = source, False
    else:
        sr, back = decompose(source, certify=False, **ascent_kw), True
    if t == 1.0:
        return source if back else sr.reconstructed
    omega_t = sr.rigid if t == 0.0 else sr.rigid + sr.epsilon * t
    if back and sr.rotation is not None:
        omega_t = pullback(sr.rotation.T, omega_t)
    return omega_t


def perturbation_comass(sr: SplitResult, t: float, comass_value: float = 1.0, **ascent_kw) -> ComassEstimate:
    """Comass of ``omega_t`` with the convexity bound ``(1-t)|rigid| + t|omega|`` as certificate.

    The rigid part is a product with a simple factor, so its comass is that of alpha.
    """
    omega_t = perturb_family(sr, t)
    bound = (1 - t) * sr.diagnostics["alpha_comass"] + t * comass_value
    return comass_ascent(omega_t, upper_bound=bound, **ascent_kw)


# 2-covector normal form ---------------------------------------------------


@dataclass
class SympNormalForm:
    lambdas: np.ndarray  # descending positive paired singular values
    basis: np.ndarray  # m x 2k, columns v_1..v_{2k}
    ell: int  # multiplicity of the top value
    projector_isometry: np.ndarray  # 2ell x m, rows v_1..v_{2ell}
    m: int

    def reconstruct(self) -> Covector:
        """``sum_j lambda_j v*_{2j-1} ^ v*_{2j}`` as a covector on R^m."""
        if not len(self.lambdas):
            return Covector.zero(self.m, 2)
        tau = Covector.zero(2 * len(self.lambdas), 2)
        for j, lam in enumerate(self.lambdas):
            tau = tau + Covector.basis(2 * len(self.lambdas), 2 * j + 1, 2 * j + 2, coeff=lam)
        return pullback(self.basis.T, tau)

    def top_face_form(self) -> Covector:
        """``(iota o pi)^* symp_ell``: the symplectic form on the top-value subspace."""
        if self.ell == 0:
            return Covector.zero(self.m, 2)
        tau = Covector.zero(2 * self.ell, 2)
        for j in range(self.ell):
            tau = tau + Covector.basis(2 * self.ell, 2 * j + 1, 2 * j + 2)
        return pullback(self.projector_isometry, tau)


def skew_matrix(omega: Covector) -> np.ndarray:
    if omega.k != 2:
        raise ValueError("need a 2-covector")
    W = np.zeros((omega.m, omega.m))
    for (i, j), c in omega.items():
        W[i - 1, j - 1] = c
        W[j - 1, i - 1] = -c
    return W


def symp_normal_form(omega: Covector, rank_tol: float = 1e-7, group_tol: float = 1e-9) -> SympNormalForm:
    """Orthonormal pair basis in which ``omega`` is ``sum_j lambda_j v*_{2j-1} ^ v*_{2j}``.

    Eigen-decomposes ``W^T W`` for the coefficient skew matrix W; inside each
    eigenspace the pairs ``(u, W^T u / lambda)`` are formed by Gram-Schmidt
    against earlier pairs in index order.  Values are square roots of
    eigenvalues, so a numerically zero eigenvalue shows up near
    ``sqrt(eps) * scale``; ``rank_tol`` (relative) sits above that.
    """
    W = skew_matrix(omega)
    m = omega.m
    evals, evecs = np.linalg.eigh(W.T @ W)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    scale = max(1.0, float(np.sqrt(max(evals[0], 0.0))))
    lambdas, basis = [], []
    i = 0
    while i < m:
        lam2 = evals[i]
        lam = float(np.sqrt(max(lam2, 0.0)))
        if lam <= rank_tol * scale:
            break
        j = i
        while j < m and abs(np.sqrt(max(evals[j], 0.0)) - lam) <= group_tol * scale:
            j += 1
        space = evecs[:, i:j]
        if (j - i) % 2:
            raise DecompositionError("odd multiplicity in a skew spectrum")
        group = []
        for col in range(space.shape[1]):
            u = space[:, col].copy()
            for v in group:
                u -= (v @ u) * v
            nu = np.linalg.norm(u)
            if nu < 1e-6:
                continue
            u /= nu
            w = W.T @ u
            w -= sum(((v @ w) * v for v in group), np.zeros(m))
            w -= (u @ w) * u
            w /= np.linalg.norm(w)
            group.extend([u, w])
            lambdas.append(float(u @ W @ w))
            basis.extend([u, w])
            if len(group) == j - i:
                break
        if len(group) != j - i:
            raise DecompositionError("failed to pair an eigenspace")
        i = j
    lambdas = np.array(lambdas)
    B = np.array(basis).T if basis else np.zeros((m, 0))
    if len(lambdas):
        top = lambdas[0]
        ell = int(np.sum(lambdas >= top - group_tol * scale))
    else:
        ell = 0
    P = B[:, : 2 * ell].T
    return SympNormalForm(lambdas=lambdas, basis=B, ell=ell, projector_isometry=P, m=m)


def reconstruction_error(omega: Covector, nf: SympNormalForm) -> float:
    return max_abs_diff(nf.reconstruct(), omega)


__all__ = [
    "DecompositionError",
    "SplitResult",
    "SympNormalForm",
    "decompose",
    "face_frame",
    "face_value",
    "normalize_face",
    "perturb_family",
    "perturbation_comass",
    "reconstruction_error",
    "skew_matrix",
    "split",
    "symp_normal_form",
]

"""Comass norm estimation by multistart Riemannian ascent over orthonormal frames."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exterior import Covector, compile_form, eval_frame, frame_gradient, hodge_star, hs_norm
from .linalg import haar_stiefel, qr_retract

CERT_TOL = 1e-6
DEFAULT_STARTS = 32
DEFAULT_MAX_ITER = 500
GRAD_TOL = 1e-10
ARMIJO = 1e-4
MAX_HALVINGS = 40


@dataclass
class ComassEstimate:
    lower: float
    upper: float
    best_frame: np.ndarray
    certified: bool
    iterations: int
    starts: int
    seed: int
    upper_source: str = "hs"
    known_value: float | None = None
    per_start: list = field(default_factory=list, repr=False)

    @property
    def value(self) -> float:
        return self.lower

    def to_json_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "upper_source": self.upper_source,
            "certified": self.certified,
            "known_value": self.known_value,
            "iterations": self.iterations,
            "starts": self.starts,
            "seed": self.seed,
            "best_frame": self.best_frame.tolist(),
        }


def _coordinate_best(omega: Covector) -> tuple[float, np.ndarray]:
    """Largest |coefficient| and its coordinate frame, signed so the value is positive."""
    Q = np.zeros((omega.m, omega.k))
    if omega.is_zero():
        for j in range(omega.k):
            Q[j, j] = 1.0
        return 0.0, Q
    idx, c = max(omega.items(), key=lambda item: abs(item[1]))
    for j, i in enumerate(idx):
        Q[i - 1, j] = 1.0
    if c < 0:
        Q[:, 0] = -Q[:, 0]
    return abs(c), Q


def comass_bounds(omega: Covector) -> tuple[float, float]:
    """(max coordinate value, coefficient l2 norm): a cheap sandwich of the comass."""
    if not 1 <= omega.k <= omega.m:
        raise ValueError("need 1 <= k <= m")
    return _coordinate_best(omega)[0], hs_norm(omega)


def _skew_matrix(omega: Covector) -> np.ndarray:
    W = np.zeros((omega.m, omega.m))
    for (i, j), c in omega.items():
        W[i - 1, j - 1] = c
        W[j - 1, i - 1] = -c
    return W


def exact_comass(omega: Covector) -> float | None:
    """Closed-form comass in degrees where one exists, else None.

    Degrees 1 and m-1 (and m) reduce to the l2 norm; degrees 2 and m-2 reduce
    to the top singular value of the coefficient skew matrix.
    """
    m, k = omega.m, omega.k
    if k in (1, m - 1, m):
        return hs_norm(omega)
    if k == 2:
        return float(np.linalg.svd(_skew_matrix(omega), compute_uv=False)[0])
    if k == m - 2:
        return exact_comass(hodge_star(omega))
    return None


def _ascend(c, Q0: np.ndarray, max_iter: int):
    """Batched Riemannian gradient ascent on the Stiefel manifold.

    Returns final frames, values, per-start iteration counts, and a flag
    recording whether any accepted step decreased the objective.
    """
    Q = qr_retract(Q0)
    S = Q.shape[0]
    f = np.asarray(eval_frame(c, Q), dtype=float).reshape(S)
    active = np.ones(S, dtype=bool)
    iters = np.zeros(S, dtype=int)
    monotone = True
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        Qa = Q[idx]
        G = frame_gradient(c, Qa)
        sym = Qa.transpose(0, 2, 1) @ G
        xi = G - Qa @ (0.5 * (sym + sym.transpose(0, 2, 1)))
        gnorm2 = np.sum(xi * xi, axis=(1, 2))
        done = np.sqrt(gnorm2) < GRAD_TOL
        active[idx[done]] = False
        keep = ~done
        idx, Qa, xi, gnorm2 = idx[keep], Qa[keep], xi[keep], gnorm2[keep]
        if idx.size == 0:
            break
        fa = f[idx]
        step = np.ones(idx.size)
        newQ = Qa.copy()
        newf = fa.copy()
        pending = np.ones(idx.size, dtype=bool)
        for _h in range(MAX_HALVINGS):
            p = np.nonzero(pending)[0]
            if p.size == 0:
                break
            cand = qr_retract(Qa[p] + step[p, None, None] * xi[p])
            fc = np.asarray(eval_frame(c, cand), dtype=float).reshape(p.size)
            ok = fc >= fa[p] + ARMIJO * step[p] * gnorm2[p]
            acc = p[ok]
            newQ[acc] = cand[ok]
            newf[acc] = fc[ok]
            pending[acc] = False
            step[p[~ok]] *= 0.5
        stalled = pending
        # refine accepted steps by further halving while the value improves;
        # breaks the step-1 two-cycle when the curvature sits at 2
        refining = ~stalled
        for _h in range(MAX_HALVINGS):
            p = np.nonzero(refining)[0]
            if p.size == 0:
                break
            half = 0.5 * step[p]
            cand = qr_retract(Qa[p] + half[:, None, None] * xi[p])
            fc = np.asarray(eval_frame(c, cand), dtype=float).reshape(p.size)
            better = fc > newf[p]
            acc = p[better]
            newQ[acc] = cand[better]
            newf[acc] = fc[better]
            step[acc] = half[better]
            refining[p[~better]] = False
        accepted = ~stalled
        if np.any(newf[accepted] < fa[accepted]):
            monotone = False
        Q[idx[accepted]] = newQ[accepted]
        f[idx[accepted]] = newf[accepted]
        iters[idx] += 1
        active[idx[stalled]] = False
    return Q, f, iters, monotone


def initial_frames(omega: Covector, starts: int, seed: int) -> np.ndarray:
    """Start 0 is the best coordinate frame; the rest are Haar frames drawn in sequence."""
    rng = np.random.default_rng(seed)
    c = compile_form(omega)
    frames = [_coordinate_best(omega)[1]]
    for _ in range(starts - 1):
        Q = haar_stiefel(omega.m, omega.k, rng)
        # flipping one column negates the value; start on the positive side
        if eval_frame(c, Q) < 0:
            Q[:, 0] = -Q[:, 0]
        frames.append(Q)
    return np.stack(frames)


def comass_ascent(
    omega: Covector,
    starts: int = DEFAULT_STARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    seed: int = 42,
    known_value: float | None = None,
    upper_bound: float | None = None,
    tol: float = CERT_TOL,
) -> ComassEstimate:
    """Estimate the comass of ``omega``.

    ``lower`` is the best frame value found.  ``upper`` is the tightest of the
    coefficient l2 norm, a closed form where available (degrees 1, 2, m-2,
    m-1, m) and a caller-supplied ``upper_bound``.  The estimate is certified
    when ``upper - lower <= tol`` or when ``known_value`` matches ``lower``.
    """
    if not 1 <= omega.k <= omega.m:
        raise ValueError("need 1 <= k <= m")
    if starts < 1:
        raise ValueError("starts must be >= 1")
    c = compile_form(omega)
    Q0 = initial_frames(omega, starts, seed)
    if omega.is_zero():
        Qf, vals, iters = qr_retract(Q0), np.zeros(starts), np.zeros(starts, dtype=int)
    else:
        Qf, vals, iters, _ = _ascend(c, Q0, max_iter)
    best = int(np.argmax(vals))
    best_frame = Qf[best]
    lower = float(eval_frame(c, best_frame))

    upper, source = hs_norm(omega), "hs"
    exact = exact_comass(omega)
    if exact is not None and exact < upper:
        upper, source = exact, "closed-form"
    if upper_bound is not None and upper_bound < upper:
        upper, source = float(upper_bound), "supplied"
    # closed forms are exact up to rounding; never report upper < lower
    upper = max(upper, lower)
    certified = upper - lower <= tol or (known_value is not None and abs(known_value - lower) <= tol)
    return ComassEstimate(
        lower=lower,
        upper=upper,
        best_frame=best_frame,
        certified=bool(certified),
        iterations=int(iters.max()) if iters.size else 0,
        starts=starts,
        seed=seed,
        upper_source=source,
        known_value=known_value,
        per_start=vals.tolist(),
    )


def comass(omega: Covector, **kw) -> float:
    return comass_ascent(omega, **kw).lower


@dataclass
class CalibrationVerdict:
    status: str  # "calibration", "not-calibration", "indeterminate"
    estimate: ComassEstimate

    def __bool__(self):
        return self.status == "calibration"


def is_calibration(omega: Covector, tol: float = CERT_TOL, **kw) -> CalibrationVerdict:
    """Three-way verdict.

    A lower bound above ``1 + tol`` proves the form is not a calibration even
    without certification; otherwise an uncertified estimate is indeterminate.
    """
    est = comass_ascent(omega, **kw)
    if est.lower > 1 + tol:
        status = "not-calibration"
    elif not est.certified:
        status = "indeterminate"
    elif abs(est.lower - 1) <= tol:
        status = "calibration"
    else:
        status = "not-calibration"
    return CalibrationVerdict(status, est)


def is_simple(omega: Covector, tol: float = CERT_TOL, **kw) -> bool:
    """Simple iff comass equals the coefficient l2 norm (Cauchy-Schwarz equality)."""
    if omega.is_zero():
        raise ValueError("zero covector")
    est = comass_ascent(omega, **kw)
    return est.lower >= hs_norm(omega) - tol


def brute_force_lower(omega: Covector, samples: int, seed: int) -> float:
    """Best value over Haar-random frames; an ascent-free lower bound used as an oracle."""
    rng = np.random.default_rng(seed)
    frames = np.stack([haar_stiefel(omega.m, omega.k, rng) for _ in range(samples)])
    vals = np.asarray(eval_frame(omega, frames))
    return float(np.max(np.abs(vals)))


def coordinate_frames(m: int, k: int):
    for idx in itertools.combinations(range(m), k):
        Q = np.zeros((m, k))
        for j, i in enumerate(idx):
            Q[i, j] = 1.0
        yield Q


__all__ = [
    "ComassEstimate",
    "CalibrationVerdict",
    "comass_bounds",
    "comass_ascent",
    "comass",
    "exact_comass",
    "is_calibration",
    "is_simple",
    "brute_force_lower",
]

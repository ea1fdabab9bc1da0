"""Named calibrations, calibration-building operations and membership tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exterior import (
    Covector,
    embed,
    eval_frame,
    hodge_star,
    hs_norm,
    pullback,
    wedge,
)
from .linalg import haar_orthogonal, haar_special_orthogonal, haar_special_unitary_real, op_norm

# Membership tolerances: analytic differentials vs finite-difference ones.
TOL_ANALYTIC = 1e-9
TOL_FD = 1e-5


@dataclass(frozen=True)
class NamedCalibration:
    name: str
    params: tuple = ()
    form: Covector = field(default=None, compare=False)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({','.join(map(str, self.params))})"


def volume(n: int) -> NamedCalibration:
    if n < 1:
        raise ValueError("n must be positive")
    return NamedCalibration("vol", (n,), Covector.volume(n))


def _symp_pairs(ell: int) -> Covector:
    m = 2 * ell
    out = Covector.zero(m, 2)
    for j in range(1, ell + 1):
        out = out + Covector.basis(m, 2 * j - 1, 2 * j)
    return out


def make_symp(ell: int) -> NamedCalibration:
    """Standard symplectic form ``sum_j dx_{2j-1} ^ dx_{2j}`` on R^{2 ell}."""
    if ell < 1:
        raise ValueError("ell must be positive")
    return NamedCalibration("symp", (ell,), _symp_pairs(ell))


def make_symp_power(ell: int, k: int) -> NamedCalibration:
    """``symp^k / k!`` on R^{2 ell}, a calibration by Wirtinger's inequality."""
    if not 1 <= k <= ell:
        raise ValueError(f"need 1 <= k <= ell, got k={k}, ell={ell}")
    base = _symp_pairs(ell)
    acc = base
    for _ in range(k - 1):
        acc = wedge(acc, base)
    return NamedCalibration("symp_power", (ell, k), acc / math.factorial(k))


def kahler_form(n: int) -> Covector:
    """Symplectic form ``sum_j dx_j ^ dy_j`` on C^n = R^n x R^n, coordinates (x, y)."""
    m = 2 * n
    out = Covector.zero(m, 2)
    for j in range(1, n + 1):
        out = out + Covector.basis(m, j, n + j)
    return out


def _complex_volume_parts(n: int) -> tuple[Covector, Covector]:
    """Real and imaginary parts of ``dz_1 ^ ... ^ dz_n`` in (x, y) coordinates."""
    m = 2 * n
    re, im = {}, {}
    for mask in range(1 << n):
        # bit j set: take i*dy_{j+1} from the j-th factor, else dx_{j+1}
        idx = [n + j + 1 if mask >> j & 1 else j + 1 for j in range(n)]
        ndy = bin(mask).count("1")
        term = Covector.basis(m, *idx)
        (key, c), = term.terms.items()
        phase = ndy % 4  # i^ndy
        if phase == 0:
            re[key] = re.get(key, 0.0) + c
        elif phase == 2:
            re[key] = re.get(key, 0.0) - c
        elif phase == 1:
            im[key] = im.get(key, 0.0) + c
        else:
            im[key] = im.get(key, 0.0) - c
    return Covector(m, n, re), Covector(m, n, im)


def make_special_lagrangian(n: int) -> NamedCalibration:
    """``Re(dz_1 ^ ... ^ dz_n)`` on R^{2n} with coordinates (x_1..x_n, y_1..y_n)."""
    if n < 2:
        raise ValueError("special Lagrangian needs n >= 2")
    return NamedCalibration("special_lagrangian", (n,), _complex_volume_parts(n)[0])


def imaginary_special_lagrangian(n: int) -> Covector:
    """``Im(dz_1 ^ ... ^ dz_n)``."""
    return _complex_volume_parts(n)[1]


def _shift(a: Covector, offset: int, m: int) -> Covector:
    return embed(a, m, [offset + i for i in range(1, a.m + 1)])


def make_associative() -> NamedCalibration:
    """``dt ^ symp + Re Omega`` on R^7 with coordinates (t, x1, x2, x3, y1, y2, y3)."""
    dt = Covector.basis(7, 1)
    form = wedge(dt, _shift(kahler_form(3), 1, 7)) + _shift(_complex_volume_parts(3)[0], 1, 7)
    return NamedCalibration("associative", (), form)


def make_coassociative() -> NamedCalibration:
    """Hodge dual of the associative form, assembled termwise on R^7.

    With the real ordering (t, x, y) the orientation differs from the complex
    one, which flips the sign of the ``symp^2 / 2`` term relative to the
    complex-orientation formula: ``-symp^2 / 2 - dt ^ *Re Omega``.
    """
    w = kahler_form(3)
    dt = Covector.basis(7, 1)
    form = -_shift(wedge(w, w) / 2, 1, 7) - wedge(dt, _shift(hodge_star(_complex_volume_parts(3)[0]), 1, 7))
    return NamedCalibration("coassociative", (), form)


def make_cayley() -> NamedCalibration:
    """``symp^2 / 2 + Re Omega`` on R^8 with coordinates (x1..x4, y1..y4)."""
    w = kahler_form(4)
    form = wedge(w, w) / 2 + _complex_volume_parts(4)[0]
    return NamedCalibration("cayley", (), form)


def make_eta(n: int) -> Covector:
    """``sum_j (-1)^(n-j) dy_1 ^ .. (omit dy_j) .. ^ dy_n ^ dt`` on R^n x R (t last)."""
    if n < 1:
        raise ValueError("n must be positive")
    m = n + 1
    out = Covector.zero(m, n)
    for j in range(1, n + 1):
        idx = [i for i in range(1, n + 1) if i != j] + [m]
        out = out + Covector.basis(m, *idx, coeff=(-1.0) ** (n - j))
    return out


def standard_catalog() -> dict[str, NamedCalibration]:
    """The calibrations exercised by the reproduction suite, keyed by short name."""
    cat = {}
    for n in range(3, 7):
        cat[f"vol{n}"] = volume(n)
    for ell, k in [(2, 1), (2, 2), (3, 2), (4, 3)]:
        cat[f"symp{ell}" if k == 1 else f"symp{ell}_{k}"] = make_symp_power(ell, k)
    for n in (2, 3):
        cat[f"sl{n}"] = make_special_lagrangian(n)
    cat["assoc"] = make_associative()
    cat["coassoc"] = make_coassociative()
    cat["cayley"] = make_cayley()
    return cat


def resolve_form(name: str) -> Covector:
    """Parse a short catalog name such as ``vol3``, ``sl3``, ``symp2_2``, ``eta3``, ``assoc``."""
    import re

    fixed = {"assoc": make_associative, "coassoc": make_coassociative, "cayley": make_cayley}
    if name in fixed:
        return fixed[name]().form
    patterns = [
        (r"vol(\d+)", lambda n: volume(n).form),
        (r"sl(\d+)", lambda n: make_special_lagrangian(n).form),
        (r"symp(\d+)", lambda ell: make_symp(ell).form),
        (r"symp(\d+)_(\d+)", lambda ell, k: make_symp_power(ell, k).form),
        (r"eta(\d+)", make_eta),
        (r"kahler(\d+)", kahler_form),
    ]
    for pat, ctor in patterns:
        mt = re.fullmatch(pat, name)
        if mt:
            return ctor(*map(int, mt.groups()))
    raise KeyError(f"unknown form name {name!r}")


# building operations ----------------------------------------------------


def stabilize(omega: Covector, r: int) -> Covector:
    """``pi_1^* omega ^ pi_2^* vol_{R^r}`` on R^{m + r}; new coordinates appended last."""
    if r < 1:
        raise ValueError("r must be >= 1")
    m = omega.m + r
    lifted = embed(omega, m, range(1, omega.m + 1))
    vol = embed(Covector.volume(r), m, range(omega.m + 1, m + 1))
    return wedge(lifted, vol)


def direct_sum(parts: list[tuple[Covector, int]]) -> Covector:
    """``sum_j pi_j^* omega_j`` on R^{p_1 + ... + p_l}, blocks in the given order."""
    if not parts:
        raise ValueError("need at least one part")
    n = parts[0][0].k
    if n < 3:
        raise ValueError("direct-sum comass formula needs degree n >= 3")
    for form, p in parts:
        if form.k != n:
            raise ValueError("all parts must share the same degree")
        if form.m != p:
            raise ValueError(f"part lives on R^{form.m}, block size {p}")
        if p < 3:
            raise ValueError("block sizes must be >= 3")
    m = sum(p for _, p in parts)
    out = Covector.zero(m, n)
    offset = 0
    for form, p in parts:
        out = out + _shift(form, offset, m)
        offset += p
    return out


def block_projections(sizes: list[int]) -> list[np.ndarray]:
    m = sum(sizes)
    out, offset = [], 0
    for p in sizes:
        P = np.zeros((p, m))
        P[:, offset:offset + p] = np.eye(p)
        out.append(P)
        offset += p
    return out


def subspace_pullback(tau: Covector, P, tol: float = 1e-10) -> Covector:
    """``(iota o pi)^* tau`` for a matrix P (ell x m) with orthonormal rows."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != tau.m:
        raise ValueError(f"map must have {tau.m} rows, got shape {P.shape}")
    gram = P @ P.T
    if np.max(np.abs(gram - np.eye(P.shape[0]))) > tol:
        raise ValueError("rows are not orthonormal; map is not isometry o projection")
    return pullback(P, tau)


# membership --------------------------------------------------------------


def is_co_member(omega: Covector, A, tol: float = TOL_ANALYTIC) -> bool:
    """Whether ``||A||^n == *A^*omega`` within ``tol * max(1, ||A||^n)``."""
    A = np.asarray(A, dtype=float)
    if A.shape != (omega.m, omega.k):
        raise ValueError(f"map shape {A.shape} does not match ({omega.m}, {omega.k})")
    normn = op_norm(A) ** omega.k
    return abs(normn - eval_frame(omega, A)) <= tol * max(1.0, normn)


@dataclass
class GrMembership:
    frame: np.ndarray
    value: float
    is_member: bool
    tol: float


def gr_membership(omega: Covector, frame, tol: float = TOL_ANALYTIC) -> GrMembership:
    """Oriented-frame membership in Gr(omega): orthonormal and value 1."""
    Q = np.asarray(frame, dtype=float)
    value = eval_frame(omega, Q)
    ortho = np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1])))
    return GrMembership(Q, value, bool(abs(value - 1) <= tol and ortho <= tol), tol)


def x_plane_frame(n: int) -> np.ndarray:
    """Frame (e_1, ..., e_n) of the x-plane in R^{2n}."""
    return np.vstack([np.eye(n), np.zeros((n, n))])


def sample_sl_frames(n: int, samples: int, seed: int, group: str = "so") -> np.ndarray:
    """Frames of special Lagrangian planes, shape (samples, 2n, n).

    ``group="so"`` applies U x U for Haar special-orthogonal U to the x-plane;
    ``group="su"`` applies the real form of a Haar special-unitary matrix.
    """
    rng = np.random.default_rng(seed)
    base = x_plane_frame(n)
    out = np.empty((samples, 2 * n, n))
    for s in range(samples):
        if group == "so":
            U = haar_special_orthogonal(n, rng)
            T = np.block([[U, np.zeros((n, n))], [np.zeros((n, n)), U]])
        elif group == "su":
            T = haar_special_unitary_real(n, rng)
        else:
            raise ValueError(f"unknown group {group!r}")
        out[s] = T @ base
    return out


@dataclass
class HLReport:
    n: int
    samples: int
    seed: int
    group: str
    max_violation: float
    min_sl_value: float
    passed: bool
    tol: float = 1e-10


def hl_orthogonality_check(n: int, samples: int, seed: int, group: str = "so", tol: float = 1e-10) -> HLReport:
    """Check that the Kahler form vanishes on sampled special Lagrangian planes."""
    if n < 3:
        raise ValueError("needs n >= 3")
    frames = sample_sl_frames(n, samples, seed, group)
    w = kahler_form(n)
    W = np.zeros((2 * n, 2 * n))
    for (i, j), c in w.items():
        W[i - 1, j - 1] = c
        W[j - 1, i - 1] = -c
    pair = np.einsum("sai,ab,sbj->sij", frames, W, frames)
    sl = make_special_lagrangian(n).form
    vals = eval_frame(sl, frames)
    worst = float(np.max(np.abs(pair))) if samples else 0.0
    return HLReport(n, samples, seed, group, worst, float(np.min(vals)) if samples else 1.0, worst <= tol, tol)


def random_orthonormal_frames(m: int, k: int, count: int, rng) -> np.ndarray:
    return np.stack([haar_orthogonal(m, rng)[:, :k] for _ in range(count)])

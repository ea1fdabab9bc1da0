"""Numerical checks of the analytic inequalities satisfied by conformal curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .comass import comass_ascent
from .curves import CurveSpec, DomainError, conformality_report, norm
from .exterior import Covector, eval_frame
from .grids import GridSpec
from .linalg import haar_special_orthogonal, op_norm

# Float floor added to 3-sigma bands so zero-variance estimates tolerate rounding.
ROUNDING_FLOOR = 1e-12
SUBHARMONIC_H = 1e-2
HADAMARD_SLACK = 1e-12
EQUALITY_TOL = 1e-9


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def almgren_constant(n: int) -> float:
    """Isoperimetric constant for n-dimensional currents, ``w_n / (n w_n)^{n/(n-1)}``."""
    w = unit_ball_volume(n)
    return w / (n * w) ** (n / (n - 1))


def almgren_constant_alt(n: int) -> float:
    """The same constant written as ``1 / (n^{n/(n-1)} w_n^{1/(n-1)})``."""
    w = unit_ball_volume(n)
    return 1.0 / (n ** (n / (n - 1)) * w ** (1 / (n - 1)))


def _ball_samples(rng, n, count):
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.uniform(size=(count, 1)) ** (1.0 / n)


def _sphere_samples(rng, n, count):
    d = rng.standard_normal((count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass
class IsoperimetricReport:
    n: int
    center: list
    radius: float
    lhs: float
    rhs: float
    ratio: float
    lhs_stderr: float
    sphere_integral: float
    sphere_stderr: float
    ratio_stderr: float
    constant: float
    samples: int
    seed: int
    violation: bool

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def isoperimetric_check(
    F: CurveSpec, omega: Covector | None, x, r: float, samples: int = 10_000, seed: int = 42, fd: bool = False
) -> IsoperimetricReport:
    """Monte Carlo comparison of ``int_B ||DF||^n`` with ``A (int_dB ||DF||^{n-1})^{n/(n-1)}``.

    The ratio's standard error comes from the delta method on the two
    independent sample means.  ``omega`` only fixes dimensions.
    """
    n = F.n
    if n < 2:
        raise ValueError("need n >= 2")
    if omega is not None and (omega.k != n or omega.m != F.m):
        raise ValueError("form and curve dimensions disagree")
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    ball = x + r * _ball_samples(rng, n, samples)
    sphere = x + r * _sphere_samples(rng, n, samples)
    if not (F.in_domain(ball).all() and F.in_domain(sphere).all()):
        raise DomainError("ball leaves the curve's domain")
    w = unit_ball_volume(n)
    gb = norm(F, ball, fd=fd) ** n
    gs = norm(F, sphere, fd=fd) ** (n - 1)
    vol, area = w * r**n, n * w * r ** (n - 1)
    lhs = vol * float(np.mean(gb))
    lhs_se = vol * float(np.std(gb, ddof=1)) / math.sqrt(samples)
    S = area * float(np.mean(gs))
    S_se = area * float(np.std(gs, ddof=1)) / math.sqrt(samples)
    A = almgren_constant(n)
    rhs = A * S ** (n / (n - 1))
    p = n / (n - 1)
    if rhs == 0.0 and lhs == 0.0:
        ratio, ratio_se = 1.0, 0.0
    else:
        ratio = lhs / rhs
        rel = math.sqrt((lhs_se / lhs if lhs else 0.0) ** 2 + (p * S_se / S if S else 0.0) ** 2)
        ratio_se = abs(ratio) * rel
    return IsoperimetricReport(
        n=n,
        center=x.tolist(),
        radius=float(r),
        lhs=lhs,
        rhs=rhs,
        ratio=ratio,
        lhs_stderr=lhs_se,
        sphere_integral=S,
        sphere_stderr=S_se,
        ratio_stderr=ratio_se,
        constant=A,
        samples=samples,
        seed=seed,
        violation=bool(ratio > 1 + 3 * ratio_se + ROUNDING_FLOOR),
    )


@dataclass
class SubharmonicityReport:
    n: int
    regime: str  # "power" (n >= 3) or "log" (n = 2)
    h: float
    tol: float
    min_laplacian: float
    argmin: list
    points: int
    excluded: int
    passed: bool
    laplacians: np.ndarray = field(repr=False, default=None)

    def to_json_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("laplacians")
        return d


def rho(F: CurveSpec, x, fd: bool = False, floor: float = 0.0):
    """``||DF||^{(n-2)/2}`` for n >= 3, ``log ||DF||`` for n = 2; NaN where ||DF|| <= floor in the log regime."""
    v = np.atleast_1d(norm(F, x, fd=fd))
    if F.n >= 3:
        return v ** ((F.n - 2) / 2)
    with np.errstate(divide="ignore"):
        return np.where(v > floor, np.log(np.maximum(v, 1e-300)), np.nan)


def discrete_laplacian(F: CurveSpec, points, h: float, fd: bool = False) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = F.n
    centre = rho(F, pts, fd=fd)
    total = -2.0 * n * centre
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        total = total + rho(F, pts + e, fd=fd) + rho(F, pts - e, fd=fd)
    return total / h**2


def subharmonicity_check(
    F: CurveSpec,
    grid: GridSpec | np.ndarray,
    h: float = SUBHARMONIC_H,
    tol: float | None = None,
    seed: int = 42,
    fd: bool = False,
) -> SubharmonicityReport:
    """Min over grid points of the (2n+1)-point Laplacian of rho_F; passes if ``>= -tol``.

    ``tol`` defaults to ``10 h``.  Points whose stencil leaves the domain, or
    where rho is undefined, are excluded and counted.
    """
    n = F.n
    tol = 10 * h if tol is None else tol
    pts = grid.points(n, seed) if isinstance(grid, GridSpec) else np.atleast_2d(np.asarray(grid, dtype=float))
    ok = F.in_domain(pts)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        ok &= F.in_domain(pts + e) & F.in_domain(pts - e)
    pts_ok = pts[ok]
    if len(pts_ok) == 0:
        raise DomainError("no admissible grid point")
    lap = discrete_laplacian(F, pts_ok, h, fd=fd)
    finite = np.isfinite(lap)
    if not finite.any():
        raise DomainError("rho undefined on every stencil")
    excluded = int(np.sum(~ok) + np.sum(~finite))
    vals = lap[finite]
    i = int(np.argmin(vals))
    return SubharmonicityReport(
        n=n,
        regime="power" if n >= 3 else "log",
        h=h,
        tol=tol,
        min_laplacian=float(vals[i]),
        argmin=pts_ok[finite][i].tolist(),
        points=int(len(vals)),
        excluded=excluded,
        passed=bool(vals[i] >= -tol),
        laplacians=lap,
    )


def off_plane_laplacian(n: int, x, y0, z0: float, scale: float = 1.0) -> np.ndarray:
    """Closed-form Laplacian of ``||DG||^{(n-2)/2}`` for the off-plane-pole extension."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    s2 = np.sum((x - np.asarray(y0, dtype=float)) ** 2, axis=-1)
    q = s2 + z0**2
    return scale ** (n - 2) * (n - 2) * n / q ** (n / 2) * (s2 / q - 1)


@dataclass
class MaxPrincipleReport:
    verdict: str  # "consistent" or "interior-maximum"
    maxima: list
    count: int
    grid_constant: bool
    tol: float
    points: int

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def max_principle_scan(F: CurveSpec, grid: GridSpec, tol: float = 1e-9, fd: bool = False, limit: int = 20):
    """Interior box-grid local maxima of ||DF|| that are not flat.

    A point counts when ``||DF||`` is at least every one of its 2n
    neighbours (up to ``tol``) and exceeds at least one by more than ``tol``.
    The verdict is "consistent" when none exist or the norm is grid-constant.
    """
    if grid.kind != "box":
        raise ValueError("the scan needs a box grid")
    n = F.n
    shape = grid.shape(n)
    if min(shape) < 3:
        raise ValueError("every axis needs at least three grid values")
    pts = grid.points(n)
    if not F.in_domain(pts).all():
        raise DomainError("grid leaves the curve's domain")
    v = np.atleast_1d(norm(F, pts, fd=fd)).reshape(shape)
    constant = bool(np.max(v) - np.min(v) <= tol * max(1.0, float(np.max(np.abs(v)))))
    inner = tuple(slice(1, s - 1) for s in shape)
    core = v[inner]
    geq = np.ones(core.shape, dtype=bool)
    above = np.zeros(core.shape, dtype=bool)
    for ax in range(n):
        for shift in (-1, 1):
            sl = [slice(1, s - 1) for s in shape]
            sl[ax] = slice(1 + shift, shape[ax] - 1 + shift)
            nb = v[tuple(sl)]
            geq &= core >= nb - tol
            above |= core > nb + tol
    is_max = geq & above
    flat = pts.reshape(shape + (n,))[inner][is_max]
    count = int(is_max.sum())
    verdict = "consistent" if count == 0 or constant else "interior-maximum"
    return MaxPrincipleReport(verdict, flat[:limit].tolist(), count, constant, tol, int(pts.shape[0]))


@dataclass
class WeakQSReport:
    H: float
    per_ball: list
    flagged: int
    rho: float
    samples: int
    seed: int

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def weak_qs_estimate(F: CurveSpec, balls, rho: float, samples: int = 2000, seed: int = 42, zero_tol: float = 1e-13):
    """Empirical H in ``sup_{B(x0, rho r0)} |F - F(x0)| <= H inf_{dB(x0, rho r0)} |F - F(x0)|``.

    The sup runs over samples of the closed small ball (interior and
    boundary).  A numerically vanishing inf is flagged and gives H = inf.
    """
    if not 0 < rho <= 0.25:
        raise ValueError("rho must lie in (0, 1/4]")
    rng = np.random.default_rng(seed)
    n = F.n
    per_ball, flagged, H = [], 0, 0.0
    for x0, r0 in balls:
        x0 = np.asarray(x0, dtype=float)
        big = x0 + r0 * np.vstack([_ball_samples(rng, n, samples), _sphere_samples(rng, n, samples)])
        if not F.in_domain(big).all() or not F.in_domain(x0[None]).all():
            raise DomainError("ball leaves the curve's domain")
        s = rho * r0
        inner = x0 + s * _ball_samples(rng, n, samples)
        shell = x0 + s * _sphere_samples(rng, n, samples)
        f0 = F(x0[None])[0]
        d_in = np.linalg.norm(F(inner) - f0, axis=-1)
        d_sh = np.linalg.norm(F(shell) - f0, axis=-1)
        sup = float(max(d_in.max(), d_sh.max()))
        inf = float(d_sh.min())
        if inf <= zero_tol * max(1.0, sup):
            q = math.inf
            flagged += 1
        else:
            q = sup / inf
        H = max(H, q)
        per_ball.append({"center": x0.tolist(), "radius": float(r0), "sup": sup, "inf": inf, "quotient": q})
    return WeakQSReport(H, per_ball, flagged, rho, samples, seed)


@dataclass
class HadamardReport:
    samples: int
    violations_hs: int
    violations_op: int
    max_ratio_hs: float
    max_ratio_op: float
    equality_error: float
    reversed_error: float
    seed: int
    slack: float = HADAMARD_SLACK
    equality_tol: float = EQUALITY_TOL

    @property
    def passed(self) -> bool:
        return (
            self.violations_hs == 0
            and self.violations_op == 0
            and self.equality_error <= self.equality_tol
            and self.reversed_error <= self.equality_tol
        )

    def to_json_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def hadamard_fuzz(
    omega: Covector, samples: int = 100_000, seed: int = 42, batch: int = 100_000, best_frame=None, equality_samples: int = 100
) -> HadamardReport:
    """Check ``|star A^* omega| <= n^{-n/2} ||A||_HS^n <= ||A||^n`` on Gaussian A.

    Equality branches: ``A = lam Q U`` with Q a maximizing frame and U a
    rotation gives ``+||A||^n`` in all three terms; composing with the
    reflection ``diag(1, ..., 1, -1)`` gives ``-||A||^n``.
    """
    m, n = omega.m, omega.k
    rng = np.random.default_rng(seed)
    c = n ** (-n / 2)
    v_hs = v_op = 0
    r_hs = r_op = 0.0
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        A = rng.standard_normal((b, m, n))
        d = np.abs(np.asarray(eval_frame(omega, A)))
        hs = c * np.sum(A * A, axis=(1, 2)) ** (n / 2)
        op = op_norm(A) ** n
        v_hs += int(np.sum(d > hs * (1 + HADAMARD_SLACK)))
        v_op += int(np.sum(hs > op * (1 + HADAMARD_SLACK)))
        r_hs = max(r_hs, float(np.max(d / hs)))
        r_op = max(r_op, float(np.max(hs / op)))
        done += b

    if best_frame is None:
        best_frame = comass_ascent(omega, known_value=1.0).best_frame
    Q = np.asarray(best_frame, dtype=float)
    C = np.eye(n)
    C[-1, -1] = -1.0
    eq_err = rev_err = 0.0
    for _ in range(equality_samples):
        lam = float(rng.uniform(0.2, 3.0))
        U = haar_special_orthogonal(n, rng)
        A = lam * Q @ U
        target = lam**n
        d = float(eval_frame(omega, A))
        hs = c * float(np.sum(A * A)) ** (n / 2)
        op = float(op_norm(A)) ** n
        eq_err = max(eq_err, abs(d - target) / target, abs(hs - target) / target, abs(op - target) / target)
        dr = float(eval_frame(omega, A @ C))
        rev_err = max(rev_err, abs(dr + target) / target)
    return HadamardReport(samples, v_hs, v_op, r_hs, r_op, eq_err, rev_err, seed)


@dataclass
class ConstantNormReport:
    constant_norm: bool
    affine_residual: float
    diameter: float
    norm_spread: float
    verdict: str  # "affine", "non-affine", or "inconsistent"
    tol: float
    max_defect: float

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def constant_norm_diagnostic(
    F: CurveSpec, omega: Covector, grid: GridSpec | np.ndarray, tol: float = 1e-6, seed: int = 42, defect_tol: float = 1e-5
) -> ConstantNormReport:
    """Constant ||DF|| on the grid should go with an affine fit, and non-constant with a bad one."""
    rep = conformality_report(F, omega, grid, seed=seed)
    if rep.max_defect > defect_tol:
        raise ValueError(f"curve is not conformal on the grid (max defect {rep.max_defect:.3g})")
    pts = rep.grid
    vals = F(pts)
    nv = rep.norm_values
    spread = float(np.max(nv) - np.min(nv))
    constant = spread <= tol * max(1.0, float(np.max(nv)))
    X = np.hstack([np.ones((len(pts), 1)), pts])
    coef, *_ = np.linalg.lstsq(X, vals, rcond=None)
    resid = float(np.max(np.linalg.norm(vals - X @ coef, axis=1)))
    diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    small = resid <= tol * max(diam, 1e-300)
    if constant and small:
        verdict = "affine"
    elif not constant and not small:
        verdict = "non-affine"
    else:
        verdict = "inconsistent"
    return ConstantNormReport(constant, resid, diam, spread, verdict, tol, rep.max_defect)


__all__ = [
    "almgren_constant",
    "almgren_constant_alt",
    "constant_norm_diagnostic",
    "discrete_laplacian",
    "hadamard_fuzz",
    "isoperimetric_check",
    "max_principle_scan",
    "off_plane_laplacian",
    "rho",
    "subharmonicity_check",
    "unit_ball_volume",
    "weak_qs_estimate",
]

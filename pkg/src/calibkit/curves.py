"""Differentiable maps R^n -> R^m, the explicit conformal curves, and pointwise conformality checks.

Maps are vectorized: ``evaluate`` takes an ``(..., n)`` array and returns
``(..., m)``; an analytic ``differential`` returns ``(..., m, n)``.
Complex targets C^n are stored as (x_1..x_n, y_1..y_n).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .catalog import make_eta, make_special_lagrangian, x_plane_frame
from .exterior import Covector, eval_frame
from .grids import GridSpec
from .linalg import hs_matrix_norm, op_norm

FD_REL_STEP = 1e-6
DENSITY_FLOOR = 1e-12
CATENOID_RADIUS_FLOOR = 1e-8


class DomainError(ValueError):
    pass


def _everywhere(x):
    return np.ones(np.shape(x)[:-1], dtype=bool)


@dataclass
class CurveSpec:
    n: int
    m: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    differential: Callable[[np.ndarray], np.ndarray] | None = None
    domain_predicate: Callable[[np.ndarray], np.ndarray] = _everywhere
    label: str = "curve"
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))

    def in_domain(self, x) -> np.ndarray:
        return np.asarray(self.domain_predicate(np.asarray(x, dtype=float)), dtype=bool)


def _as_points(F: CurveSpec, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != F.n:
        raise ValueError(f"points have dimension {x.shape[-1]}, curve expects {F.n}")
    return x, single


def fd_differential(F: CurveSpec, x, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Central differences with step ``rel_step * max(1, |x|)`` per point."""
    x, single = _as_points(F, x)
    h = rel_step * np.maximum(1.0, np.linalg.norm(x, axis=-1))
    cols = []
    for j in range(F.n):
        e = np.zeros(F.n)
        e[j] = 1.0
        xp = x + h[:, None] * e
        xm = x - h[:, None] * e
        if not (F.in_domain(xp).all() and F.in_domain(xm).all()):
            raise DomainError("finite-difference stencil leaves the domain")
        cols.append((F(xp) - F(xm)) / (2 * h[:, None]))
    J = np.stack(cols, axis=-1)
    return J[0] if single else J


def differential(F: CurveSpec, x, fd: bool = False) -> np.ndarray:
    """DF at ``x``: the analytic differential when present (and ``fd`` is false), else central differences."""
    x, single = _as_points(F, x)
    if not F.in_domain(x).all():
        raise DomainError("point outside the curve's domain")
    if F.differential is not None and not fd:
        J = np.asarray(F.differential(x), dtype=float)
    else:
        J = fd_differential(F, x)
    return J[0] if single else J


def norm(F: CurveSpec, x, fd: bool = False):
    """Operator norm of DF(x)."""
    return op_norm(differential(F, x, fd=fd))


def hs_norm_differential(F: CurveSpec, x, fd: bool = False):
    return hs_matrix_norm(differential(F, x, fd=fd))


def pullback_density(F: CurveSpec, omega: Covector, x, fd: bool = False):
    """``star F^* omega`` at x, i.e. omega(d_1 F, ..., d_n F)."""
    if omega.k != F.n or omega.m != F.m:
        raise ValueError("form and curve dimensions disagree")
    return eval_frame(omega, differential(F, x, fd=fd))


# constructors -------------------------------------------------------------


def _complex_to_real(z: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts along the target axis (-1 for points, -2 for matrices)."""
    return np.concatenate([z.real, z.imag], axis=-1)


def _complex_jac_to_real(J: np.ndarray) -> np.ndarray:
    return np.concatenate([J.real, J.imag], axis=-2)


def make_affine(y0, L, label: str = "affine") -> CurveSpec:
    y0 = np.asarray(y0, dtype=float)
    L = np.asarray(L, dtype=float)
    m, n = L.shape

    def ev(x):
        return y0 + x @ L.T

    def dev(x):
        return np.broadcast_to(L, x.shape[:-1] + L.shape).copy()

    return CurveSpec(n, m, ev, dev, label=label, params={"y0": y0.tolist(), "L": L.tolist()})


def catenoid_profile(t, n: int, mirrored: bool = False):
    """``f(t) = (sinh nt + i)^{1/n}``, principal root; ``mirrored`` uses ``sinh nt - i``."""
    s = -1.0 if mirrored else 1.0
    return (np.sinh(n * np.asarray(t, dtype=float)) + s * 1j) ** (1.0 / n)


def make_catenoid(n: int, mirrored: bool = False) -> CurveSpec:
    """``F(x) = f(log|x|) x/|x|`` into C^n = R^{2n}, with the analytic differential.

    The default root ``(sinh nt + i)^{1/n}`` lands on
    ``{|x|y = |y|x, Im(|x| + i|y|)^n = 1}``.  ``mirrored=True`` uses
    ``(sinh nt - i)^{1/n}``, whose image is the reflection ``y -> -y`` of that
    variety; both are conformal for the special Lagrangian form.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    s = -1.0 if mirrored else 1.0

    def ev(x):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        f = catenoid_profile(np.log(r), n, mirrored)
        return _complex_to_real(f * (x / r))

    def dev(x):
        r = np.linalg.norm(x, axis=-1)
        t = np.log(r)
        f = catenoid_profile(t, n, mirrored)
        fp = np.cosh(n * t) / (np.sinh(n * t) + s * 1j) * f
        p = x / r[..., None]
        P = p[..., :, None] * p[..., None, :]
        eye = np.eye(n)
        J = (f / r)[..., None, None] * (eye - P) + (fp / r)[..., None, None] * P
        return _complex_jac_to_real(J)

    def dom(x):
        return np.linalg.norm(x, axis=-1) > CATENOID_RADIUS_FLOOR

    label = "catenoid-mirrored" if mirrored else "catenoid"
    return CurveSpec(n, 2 * n, ev, dev, dom, label=label, params={"n": n, "mirrored": mirrored})


def catenoid_variety_residuals(points: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of ``|x|y - |y|x`` (max-abs) and ``Im(|x| + i|y|)^n - 1`` at image points."""
    X, Y = points[..., :n], points[..., n:]
    ax = np.linalg.norm(X, axis=-1, keepdims=True)
    ay = np.linalg.norm(Y, axis=-1, keepdims=True)
    first = np.max(np.abs(ax * Y - ay * X), axis=-1)
    second = np.abs(((ax[..., 0] + 1j * ay[..., 0]) ** n).imag - 1.0)
    return first, second


def catenoid_cylinder_norm(F: CurveSpec, x, fd: bool = False) -> np.ndarray:
    """``(|x| ||DF(x)||)^n``: the norm of the cylinder parametrization at ``(log|x|, x/|x|)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return (np.linalg.norm(x, axis=-1) * norm(F, x, fd=fd)) ** F.n


def torus_isometry(n: int) -> np.ndarray:
    """Isometry O: R^n -> R^{n+1} onto (e_1 + ... + e_n)^perp with last column e_{n+1}.

    Gram-Schmidt on e_1 - e_2, ..., e_{n-1} - e_n, then e_{n+1}; the first
    column is negated if ``star O^* eta < 0``.
    """
    vecs = []
    for j in range(n - 1):
        v = np.zeros(n + 1)
        v[j], v[j + 1] = 1.0, -1.0
        vecs.append(v)
    last = np.zeros(n + 1)
    last[n] = 1.0
    vecs.append(last)
    cols = []
    for v in vecs:
        w = v.copy()
        for c in cols:
            w -= (c @ w) * c
        cols.append(w / np.linalg.norm(w))
    O = np.stack(cols, axis=1)
    if eval_frame(make_eta(n), O) < 0:
        O[:, 0] = -O[:, 0]
    return O


def torus_phase(n: int, literal: bool = False) -> complex:
    """Per-component phase of h.

    The pulled-back complex volume needs the overall factor ``i^{-(n-1)}``,
    so each component carries its n-th root ``exp(-i pi (n-1) / (2n))``.
    ``literal=True`` puts ``i^{-(n-1)}`` on every component instead, which
    agrees for odd n and makes ``h`` special Lagrangian of the wrong phase
    for even n.
    """
    if literal:
        return complex((1j) ** (-(n - 1)))
    return complex(np.exp(-1j * np.pi * (n - 1) / (2 * n)))


def _torus_h(n: int, literal: bool = False):
    c = torus_phase(n, literal) / np.sqrt(n)
    rn = np.sqrt(n)

    def h(z):
        y, t = z[..., :n], z[..., n]
        return c * np.exp(t)[..., None] * np.exp(1j * rn * y)

    def dh(z):
        w = h(z)
        J = np.zeros(z.shape[:-1] + (n, n + 1), dtype=complex)
        idx = np.arange(n)
        J[..., idx, idx] = 1j * rn * w
        J[..., :, n] = w
        return J

    return h, dh


def torus_map(n: int, literal: bool = False) -> tuple[Callable, Callable]:
    """``h(y, t)`` into R^{2n} and its real (2n, n+1) differential."""
    h, dh = _torus_h(n, literal)
    return (lambda z: _complex_to_real(h(z))), (lambda z: _complex_jac_to_real(dh(z)))


def make_torus_curve(n: int, literal_phase: bool = False) -> CurveSpec:
    """Entire, non-affine curve ``F = h o O`` with ``||DF(x)|| = e^{x_n}``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    O = torus_isometry(n)
    h, dh = torus_map(n, literal_phase)

    def ev(x):
        return h(x @ O.T)

    def dev(x):
        return dh(x @ O.T) @ O

    return CurveSpec(n, 2 * n, ev, dev, label="torus", params={"n": n, "literal_phase": literal_phase})


def torus_restriction_check(n: int, samples: int, seed: int, literal_phase: bool = False) -> float:
    """Max of ``|h^*omega_SL - e^{nt}/sqrt(n) eta|`` over frames tangent to ``ker S x R``.

    Base points are drawn with ``y_1 + ... + y_n = 0``; frames are ``O U``
    for random rotations U of R^n.
    """
    from .linalg import haar_special_orthogonal

    rng = np.random.default_rng(seed)
    O = torus_isometry(n)
    _, dh = torus_map(n, literal_phase)
    sl = make_special_lagrangian(n).form
    eta = make_eta(n)
    worst = 0.0
    for _ in range(samples):
        z = O @ rng.uniform(-2.0, 2.0, n)
        V = O @ haar_special_orthogonal(n, rng)
        lhs = eval_frame(sl, dh(z) @ V)
        rhs = np.exp(n * z[n]) / np.sqrt(n) * eval_frame(eta, V)
        worst = max(worst, abs(lhs - rhs) / max(1.0, np.exp(n * z[n])))
    return worst


@dataclass
class MobiusSpec:
    """Data of an inner Mobius curve ``x -> y0 + L g(x)``.

    ``frame`` is an m x n matrix with orthonormal columns and ``L = scale * frame``.
    For ``eps = 2``, ``g`` is inversion in the sphere of radius ``scale``
    about ``x0`` followed by the reflection ``R = diag(1, ..., 1, -1)``, which
    keeps g orientation preserving; then ``||DF|| = scale^2 / |x - x0|^2``.
    """

    x0: np.ndarray
    y0: np.ndarray
    scale: float
    eps: int
    frame: np.ndarray

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        self.y0 = np.asarray(self.y0, dtype=float)
        self.frame = np.asarray(self.frame, dtype=float)
        if self.eps not in (0, 2):
            raise ValueError("eps must be 0 or 2")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        m, n = self.frame.shape
        if np.max(np.abs(self.frame.T @ self.frame - np.eye(n))) > 1e-10:
            raise ValueError("frame columns must be orthonormal")
        if self.x0.shape != (n,) or self.y0.shape != (m,):
            raise ValueError("x0 / y0 shapes do not match the frame")

    @property
    def L(self) -> np.ndarray:
        return self.scale * self.frame


def make_inner_mobius(spec: MobiusSpec) -> CurveSpec:
    m, n = spec.frame.shape
    lam, Q = spec.scale, spec.frame
    R = np.ones(n)
    R[-1] = -1.0
    QR = Q * R  # Q @ diag(R)

    if spec.eps == 0:
        F = make_affine(spec.y0 - spec.L @ spec.x0, spec.L, label="mobius-affine")
        F.params = {"eps": 0, "scale": lam}
        return F

    def ev(x):
        u = x - spec.x0
        return spec.y0 + lam**2 * (u / np.sum(u * u, axis=-1, keepdims=True)) @ QR.T

    def dev(x):
        u = x - spec.x0
        r2 = np.sum(u * u, axis=-1)
        uh = u / np.sqrt(r2)[..., None]
        inv = np.eye(n) - 2 * uh[..., :, None] * uh[..., None, :]
        return (lam**2 / r2)[..., None, None] * (QR @ inv)

    def dom(x):
        return np.linalg.norm(x - spec.x0, axis=-1) > 1e-12

    return CurveSpec(n, m, ev, dev, dom, label="mobius", params={"eps": 2, "scale": lam, "x0": spec.x0.tolist()})


def make_mobius_extension(n: int, y0, z0: float, scale: float = 1.0) -> CurveSpec:
    """``G(x) = scale^2 ((x,0) - x0) / |(x,0) - x0|^2`` into R^{n+1} with pole ``x0 = (y0, z0)``.

    ``||DG||(x) = scale^2 / (|x - y0|^2 + z0^2)``.  A pole off the plane
    (``z0 != 0``) breaks the subharmonicity enjoyed by conformal curves.
    """
    y0 = np.asarray(y0, dtype=float)
    x0 = np.concatenate([y0, [float(z0)]])
    lam2 = scale**2

    def ev(x):
        w = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1) - x0
        return lam2 * w / np.sum(w * w, axis=-1, keepdims=True)

    def dev(x):
        w = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1) - x0
        r2 = np.sum(w * w, axis=-1)
        inc = np.eye(n + 1)[:, :n]
        J = inc / r2[..., None, None] - 2 * w[..., :, None] * w[..., None, :n] / (r2**2)[..., None, None]
        return lam2 * J

    def dom(x):
        w = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1) - x0
        return np.linalg.norm(w, axis=-1) > 1e-12

    return CurveSpec(n, n + 1, ev, dev, dom, label="mobius-extension", params={"z0": float(z0), "scale": scale})


def make_folding(n: int) -> CurveSpec:
    """``(x_1, ..., x_n) -> (|x_1|, x_2, ..., x_n)``; orientation reversing on x_1 < 0."""

    def ev(x):
        out = x.copy()
        out[..., 0] = np.abs(x[..., 0])
        return out

    def dev(x):
        J = np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()
        J[..., 0, 0] = np.sign(x[..., 0])
        return J

    return CurveSpec(n, n, ev, dev, label="fold", params={"n": n})


def make_sine(n: int, m: int | None = None) -> CurveSpec:
    """``x -> (sin x_1, 0, ..., 0)``: a non-conformal map with interior norm maxima."""
    m = n if m is None else m

    def ev(x):
        out = np.zeros(x.shape[:-1] + (m,))
        out[..., 0] = np.sin(x[..., 0])
        return out

    def dev(x):
        J = np.zeros(x.shape[:-1] + (m, n))
        J[..., 0, 0] = np.cos(x[..., 0])
        return J

    return CurveSpec(n, m, ev, dev, label="sine", params={"n": n})


def default_mobius(n: int, eps: int = 2, scale: float = 1.0) -> CurveSpec:
    """Inner Mobius curve into C^n through the special Lagrangian x-plane, pole at the origin."""
    spec = MobiusSpec(np.zeros(n), np.zeros(2 * n), scale, eps, x_plane_frame(n))
    return make_inner_mobius(spec)


BUILTIN_CURVES = ("catenoid", "catenoid-mirrored", "torus", "mobius", "mobius-affine", "mobius-extension", "fold", "sine")


def builtin_curve(name: str, n: int, **params) -> CurveSpec:
    if name == "catenoid":
        return make_catenoid(n)
    if name == "catenoid-mirrored":
        return make_catenoid(n, mirrored=True)
    if name == "torus":
        return make_torus_curve(n)
    if name == "mobius":
        return default_mobius(n, 2, params.get("scale", 1.0))
    if name == "mobius-affine":
        return default_mobius(n, 0, params.get("scale", 1.0))
    if name == "mobius-extension":
        return make_mobius_extension(n, np.zeros(n), params.get("z0", 0.5), params.get("scale", 1.0))
    if name == "fold":
        return make_folding(n)
    if name == "sine":
        return make_sine(n)
    raise KeyError(f"unknown curve {name!r}; choose from {', '.join(BUILTIN_CURVES)}")


# sampled curves -----------------------------------------------------------


@dataclass
class SampledCurve:
    """A map known only on a uniform axis-aligned grid; differentials by grid differences."""

    points: np.ndarray  # (N, n)
    values: np.ndarray  # (N, m)
    jacobians: np.ndarray  # (N, m, n)
    shape: tuple[int, ...]
    label: str = "sampled"

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def sampled_from_grid(points: np.ndarray, values: np.ndarray, label: str = "sampled") -> SampledCurve:
    """Sort grid samples into C order and differentiate with ``np.gradient``."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    N, n = points.shape
    axes = [np.unique(np.round(points[:, j], 12)) for j in range(n)]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != N:
        raise ValueError("samples do not form a full axis-aligned grid")
    for a in axes:
        if len(a) < 2:
            raise ValueError("every axis needs at least two grid values")
        d = np.diff(a)
        if np.max(np.abs(d - d[0])) > 1e-9 * max(1.0, abs(d[0])):
            raise ValueError("grid is not uniform")
    order = np.lexsort(tuple(points[:, j] for j in reversed(range(n))))
    points, values = points[order], values[order]
    V = values.reshape(shape + (values.shape[1],))
    spacing = [a[1] - a[0] for a in axes]
    grads = np.gradient(V, *spacing, axis=tuple(range(n)))
    if n == 1:
        grads = [grads]
    J = np.stack([g.reshape(N, -1) for g in grads], axis=-1)
    return SampledCurve(points, values, J, shape, label)


def load_csv_curve(path, n: int) -> SampledCurve:
    """Read ``x_1..x_n, F_1..F_m`` rows (an optional non-numeric header is skipped)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] <= n:
        raise ValueError("CSV needs n coordinate columns followed by at least one value column")
    return sampled_from_grid(data[:, :n], data[:, n:], label=str(path))


# conformality -------------------------------------------------------------


@dataclass
class ConformalityReport:
    grid: np.ndarray
    defect: np.ndarray
    norm_values: np.ndarray
    density: np.ndarray
    qr_constant: float
    below_floor: int
    negative: int
    floor: float = DENSITY_FLOOR

    @property
    def max_defect(self) -> float:
        return float(np.max(self.defect))

    def summary(self) -> dict:
        return {
            "points": int(len(self.grid)),
            "max_defect": self.max_defect,
            "qr_constant": self.qr_constant,
            "below_floor": self.below_floor,
            "negative_density": self.negative,
            "density_floor": self.floor,
            "min_norm": float(np.min(self.norm_values)),
            "max_norm": float(np.max(self.norm_values)),
        }


def _report_from_jacobians(points, J, omega, floor) -> ConformalityReport:
    n = J.shape[-1]
    nrm = np.atleast_1d(op_norm(J))
    dens = np.atleast_1d(eval_frame(omega, J))
    pw = nrm**n
    defect = np.abs(pw - dens) / np.maximum(pw, floor)
    ok = dens > floor
    qr = float(np.max(pw[ok] / dens[ok])) if ok.any() else float("inf")
    return ConformalityReport(
        grid=points,
        defect=defect,
        norm_values=nrm,
        density=dens,
        qr_constant=qr,
        below_floor=int(np.sum(~ok)),
        negative=int(np.sum(dens < -floor)),
        floor=floor,
    )


def conformality_report(
    F: CurveSpec | SampledCurve,
    omega: Covector,
    grid: GridSpec | np.ndarray | None = None,
    seed: int = 42,
    fd: bool = False,
    floor: float = DENSITY_FLOOR,
) -> ConformalityReport:
    """Per-point defect ``| ||DF||^n - star F^* omega | / max(||DF||^n, floor)`` and the distortion estimate.

    Points outside the curve's domain are dropped; an empty admissible grid is an error.
    """
    if omega.k != F.n or omega.m != F.m:
        raise ValueError("form and curve dimensions disagree")
    if isinstance(F, SampledCurve):
        return _report_from_jacobians(F.points, F.jacobians, omega, floor)
    if isinstance(grid, GridSpec):
        pts = grid.points(F.n, seed)
    else:
        pts = np.atleast_2d(np.asarray(grid, dtype=float))
    pts = pts[F.in_domain(pts)]
    if len(pts) == 0:
        raise DomainError("no grid point lies in the curve's domain")
    return _report_from_jacobians(pts, differential(F, pts, fd=fd), omega, floor)


def differential_agreement(F: CurveSpec, points) -> float:
    """Max relative gap between the analytic and finite-difference differentials."""
    if F.differential is None:
        raise ValueError("curve has no analytic differential")
    A = differential(F, points)
    B = fd_differential(F, points)
    scale = np.maximum(1.0, op_norm(A))
    return float(np.max(np.max(np.abs(A - B), axis=(-2, -1)) / scale))

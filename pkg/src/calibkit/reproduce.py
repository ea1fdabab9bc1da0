"""One-shot runner for the full acceptance suite.

Each ``check_NN`` function returns a :class:`Report`; :func:`reproduce_all`
writes one JSON file per check plus a summary table.  Wall-clock timings go
to a separate ``timing.json`` so that the per-check reports stay
byte-identical across runs with the same seed.
"""

from __future__ import annotations

import math
import os
import time
from typing import Callable

import numpy as np

from . import analysis, catalog, comass, curves, decomp
from .exterior import Covector, eval_frame, hodge_star, max_abs_diff, random_covector
from .grids import GridSpec
from .linalg import haar_special_orthogonal
from .report import Report, covector_digest, dumps, write_json

SHELL = "shell:r=0.5..2,count=1000"
BOX = "box:-1..1,count=1000"


class FormSource:
    """Catalog lookup with optional overrides (used for fault injection)."""

    def __init__(self, overrides: dict[str, Covector] | None = None):
        self.overrides = dict(overrides or {})

    def __call__(self, name: str) -> Covector:
        if name in self.overrides:
            return self.overrides[name]
        return catalog.resolve_form(name)

    def catalog_names(self) -> list[str]:
        return list(catalog.standard_catalog())


def _inputs(forms: FormSource, names) -> dict:
    return {name: covector_digest(forms(name)) for name in names}


def check_01(forms: FormSource, seed: int) -> Report:
    rep = Report("comass-catalog")
    names = forms.catalog_names()
    rep.inputs = _inputs(forms, names)
    t0 = time.perf_counter()
    worst = 0.0
    for name in names:
        est = comass.comass_ascent(forms(name), seed=seed, known_value=1.0)
        err = abs(est.lower - 1.0)
        worst = max(worst, err)
        rep.add(f"{name}: |comass - 1|", err, 1e-6, "wirtinger-and-exceptional-calibrations")
        rep.add(f"{name}: certified", float(est.certified), 1.0, "comass-certification", "==")
        rep.details[name] = {"lower": est.lower, "upper": est.upper, "upper_source": est.upper_source, "iterations": est.iterations}
    elapsed = time.perf_counter() - t0
    rep.add("runtime within budget", float(elapsed <= 60.0), 1.0, "desk-scale-budget", "==")
    rep.details["worst"] = worst
    return rep


def check_02(forms: FormSource, seed: int) -> Report:
    rep = Report("eta-comass")
    for n in (3, 4, 5):
        eta = forms(f"eta{n}")
        est = comass.comass_ascent(eta, seed=seed)
        rep.add(f"n={n}: |comass(eta) - sqrt(n)|", abs(est.lower - math.sqrt(n)), 1e-6, "eta-simple-comass")
        m = n + 1
        expected = Covector.zero(m, 1)
        for j in range(n):
            expected = expected - Covector.basis(m, j + 1)
        diff = max_abs_diff(hodge_star(eta), expected)
        rep.add(f"n={n}: star eta == -(dy_1 + ... + dy_n)", diff, 0.0, "eta-hodge-dual", "==")
        rep.details[f"n={n}"] = {"lower": est.lower, "upper": est.upper}
    return rep


def check_03(forms: FormSource, seed: int) -> Report:
    rep = Report("hodge-duality")
    assoc, coassoc = forms("assoc"), forms("coassoc")
    rep.inputs = _inputs(forms, ["assoc", "coassoc"])
    rep.add("star assoc == coassoc", float(hodge_star(assoc) == coassoc), 1.0, "coassociative-is-dual", "==")
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(200):
        m = int(rng.integers(1, 9))
        k = int(rng.integers(0, m + 1))
        a = random_covector(m, k, rng, terms=int(rng.integers(1, 6)))
        sign = (-1) ** (k * (m - k))
        if hodge_star(hodge_star(a)) != a * sign:
            bad += 1
    rep.add("star star == (-1)^{k(m-k)} on 200 random forms", bad, 0, "hodge-involution", "==")
    return rep


def check_04(forms: FormSource, seed: int) -> Report:
    rep = Report("lagrangian-catenoid")
    grid = GridSpec.parse(SHELL)
    for n in (2, 3, 4):
        F = curves.make_catenoid(n)
        sl = forms(f"sl{n}")
        pts = grid.points(n, seed)
        for fd in (False, True):
            tag = "fd" if fd else "analytic"
            cr = curves.conformality_report(F, sl, pts, fd=fd)
            rep.add(f"n={n} {tag}: max conformality defect", cr.max_defect, 1e-5, "catenoid-conformal")
            cyl = curves.catenoid_cylinder_norm(F, pts, fd=fd)
            t = np.log(np.linalg.norm(pts, axis=1))
            rep.add(f"n={n} {tag}: max |(|x| ||DF||)^n - cosh(nt)|", float(np.max(np.abs(cyl - np.cosh(n * t)))), 1e-5, "catenoid-cosh-norm")
        r1, r2 = curves.catenoid_variety_residuals(F(pts), n)
        rep.add(f"n={n}: max | |x|y - |y|x |", float(r1.max()), 1e-7, "catenoid-variety")
        rep.add(f"n={n}: max |Im(|x| + i|y|)^n - 1|", float(r2.max()), 1e-7, "catenoid-variety")
    return rep


def check_05(forms: FormSource, seed: int) -> Report:
    rep = Report("torus-curve")
    grid = GridSpec.parse(BOX)
    for n in (2, 3, 4):
        F = curves.make_torus_curve(n)
        pts = grid.points(n, seed)
        nrm = curves.norm(F, pts)
        rep.add(f"n={n}: max | ||DF|| - e^(x_n) |", float(np.max(np.abs(nrm - np.exp(pts[:, -1])))), 1e-6, "torus-norm-law")
        cr = curves.conformality_report(F, forms(f"sl{n}"), pts)
        rep.add(f"n={n}: max conformality defect", cr.max_defect, 1e-5, "torus-conformal")
        rep.add(f"n={n}: restriction identity on ker S x R", curves.torus_restriction_check(n, 100, seed), 1e-8, "torus-restriction")
        rep.details[f"n={n}"] = {"points": len(pts)}
    return rep


def check_06(forms: FormSource, seed: int) -> Report:
    rep = Report("hadamard-inequality")
    names = forms.catalog_names()
    rep.inputs = _inputs(forms, names)
    for name in names:
        h = analysis.hadamard_fuzz(forms(name), samples=100_000, seed=seed)
        rep.add(f"{name}: violations", h.violations_hs + h.violations_op, 0, "hadamard-inequality", "==")
        rep.add(f"{name}: equality branch rel. error", h.equality_error, 1e-9, "hadamard-equality")
        rep.add(f"{name}: reversed branch rel. error", h.reversed_error, 1e-9, "hadamard-orientation-reversed")
        rep.details[name] = h
    return rep


def check_07(forms: FormSource, seed: int) -> Report:
    rep = Report("isoperimetric-inequality")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    sl3 = forms("sl3")
    for j, (c, r) in enumerate([(1.0, 1.0), (2.5, 0.3), (0.4, 3.0)]):
        Q = np.kron(np.eye(2), haar_special_orthogonal(3, rng)) @ catalog.x_plane_frame(3)
        A = curves.make_affine(rng.standard_normal(6), c * Q)
        x = rng.standard_normal(3)
        iso = analysis.isoperimetric_check(A, sl3, x, r, 10_000, seed + j)
        band = 3 * iso.ratio_stderr + analysis.ROUNDING_FLOOR
        rep.add(f"affine c={c}, r={r}: |ratio - 1| - 3 sigma", abs(iso.ratio - 1) - band, 0.0, "isoperimetric-equality-affine")
        rep.details[f"affine-{j}"] = iso
    cat = analysis.isoperimetric_check(curves.make_catenoid(3), sl3, [0.0, 0.0, 1.5], 0.3, 10_000, seed)
    rep.add("catenoid: ratio + 3 sigma", cat.ratio + 3 * cat.ratio_stderr, 1.0, "isoperimetric-strict-nonaffine", "<")
    rep.details["catenoid"] = cat
    rep.details["constant"] = analysis.almgren_constant(3)
    rep.add("runtime within budget", float(time.perf_counter() - t0 <= 30.0), 1.0, "desk-scale-budget", "==")
    return rep


def check_08(forms: FormSource, seed: int) -> Report:
    rep = Report("subharmonicity")
    h = analysis.SUBHARMONIC_H
    tol = 10 * h
    shell, box = GridSpec.parse(SHELL), GridSpec.parse(BOX)
    cases = []
    for n in (2, 3):
        cases.append((f"catenoid n={n}", curves.make_catenoid(n), shell))
        cases.append((f"torus n={n}", curves.make_torus_curve(n), box))
    cases.append(("inner mobius n=3", curves.default_mobius(3), shell))
    for label, F, grid in cases:
        s = analysis.subharmonicity_check(F, grid, h=h, tol=tol, seed=seed)
        rep.add(f"{label}: min discrete laplacian", s.min_laplacian, -tol, "subharmonicity", ">=")
        rep.details[label] = s
    G = curves.make_mobius_extension(3, np.zeros(3), 0.5)
    s = analysis.subharmonicity_check(G, box, h=h, tol=tol, seed=seed)
    rep.add("off-plane pole: min discrete laplacian", s.min_laplacian, 0.0, "off-plane-pole-sign", "<")
    rep.details["off-plane"] = s
    return rep


SPLIT_CASES = ("vol3", "symp_dt", "sl3", "assoc")


def _split_form(forms: FormSource, name: str) -> Covector:
    if name == "symp_dt" and name not in forms.overrides:
        return catalog.stabilize(forms("symp2"), 1)
    return forms(name)


def check_09(forms: FormSource, seed: int) -> Report:
    rep = Report("splitting-lemma")
    for name in SPLIT_CASES:
        omega = _split_form(forms, name)
        try:
            sr = decomp.decompose(omega, seed=seed)
        except decomp.DecompositionError as exc:
            rep.add(f"{name}: decomposition", 0.0, 1.0, "splitting-lemma", "==")
            rep.details[name] = {"error": str(exc)}
            continue
        d = sr.diagnostics
        rep.add(f"{name}: reconstruction exact", float(d["reconstruction_exact"]), 1.0, "splitting-reconstruction", "==")
        rep.add(f"{name}: |rigid(face) - 1|", abs(d["rigid_face_value"] - 1), 1e-8, "splitting-rigid-face")
        rep.add(f"{name}: |eps(face)|", abs(d["epsilon_face_value"]), 1e-12, "splitting-epsilon-face")
        rep.add(f"{name}: comass(eps) upper", sr.epsilon_comass_upper, 2 + 1e-6, "splitting-epsilon-bound")
        rep.add(f"{name}: |comass(alpha) - 1|", abs(d["alpha_comass"] - 1), 1e-6, "splitting-alpha-calibration")
        for t in (0.0, 0.25, 0.5, 0.75, 0.99):
            est = decomp.perturbation_comass(sr, t, seed=seed)
            ok = est.certified and abs(est.lower - 1) <= 1e-6
            rep.add(f"{name}: t={t} |comass(omega_t) - 1| (certified={est.certified})", abs(est.lower - 1) if ok else max(1.0, abs(est.lower - 1)), 1e-6, "rigid-perturbation-family")
        rep.details[name] = {
            "alpha": sr.alpha,
            "epsilon_terms": len(sr.epsilon),
            "epsilon_comass_lower": sr.epsilon_comass_lower,
            "epsilon_comass_upper": sr.epsilon_comass_upper,
        }
    return rep


def _complex_line_frames(ell: int, count: int, rng) -> np.ndarray:
    """Frames (u, J u) of complex lines in R^{2ell} with pair coordinates (x_{2j-1}, x_{2j})."""
    u = rng.standard_normal((count, 2 * ell))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    Ju = np.empty_like(u)
    Ju[:, 0::2] = -u[:, 1::2]
    Ju[:, 1::2] = u[:, 0::2]
    return np.stack([u, Ju], axis=-1)


def co_equivalence_mismatches(omega: Covector, maps: int, seed: int) -> tuple[int, int, int]:
    """(mismatches, members, non-members) of CO(omega) vs CO of its top-face form on mixed random maps."""
    nf = decomp.symp_normal_form(omega)
    top = nf.top_face_form()
    rng = np.random.default_rng(seed)
    m = omega.m
    half = maps // 2
    lines = _complex_line_frames(nf.ell, half, rng)
    scale = rng.uniform(0.1, 3.0, half)
    members = scale[:, None, None] * (nf.projector_isometry.T @ lines)
    others = rng.standard_normal((maps - half, m, 2))
    mismatch = n_in = 0
    for A in np.concatenate([members, others]):
        a = catalog.is_co_member(omega, A)
        b = catalog.is_co_member(top, A)
        mismatch += a != b
        n_in += a
    return int(mismatch), int(n_in), int(maps - n_in)


def handcrafted_two_forms(seed: int) -> dict[str, Covector]:
    first = Covector.basis(4, 1, 2) + Covector.basis(4, 3, 4) * 0.5
    base = Covector.basis(6, 1, 2) + Covector.basis(6, 3, 4) + Covector.basis(6, 5, 6) * 0.3
    R = haar_special_orthogonal(6, np.random.default_rng(seed))
    return {"dx12+dx34/2": first, "rotated(dx12+dx34+0.3dx56)": decomp.pullback(R, base)}


def check_10(forms: FormSource, seed: int) -> Report:
    rep = Report("symplectic-normal-form")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 9))
        w = random_covector(m, 2, rng)
        worst = max(worst, decomp.reconstruction_error(w, decomp.symp_normal_form(w)))
    rep.add("max reconstruction error, 100 random 2-forms", worst, 1e-10, "symplectic-normal-form")
    for label, w in handcrafted_two_forms(seed).items():
        mis, n_in, n_out = co_equivalence_mismatches(w, 1000, seed)
        rep.add(f"{label}: CO mismatches over 1000 maps", mis, 0, "conformal-cone-equivalence", "==")
        rep.add(f"{label}: members and non-members both present", float(n_in > 0 and n_out > 0), 1.0, "conformal-cone-equivalence", "==")
        nf = decomp.symp_normal_form(w)
        rep.details[label] = {"lambdas": nf.lambdas, "ell": nf.ell, "members": n_in, "non_members": n_out}
    return rep


def check_11(forms: FormSource, seed: int) -> Report:
    rep = Report("associative-reduction")
    rep.inputs = _inputs(forms, ["assoc", "sl3"])
    F = curves.make_catenoid(3)
    pts = GridSpec.parse(SHELL).points(3, seed)
    J = curves.differential(F, pts)
    J7 = np.concatenate([np.zeros((len(pts), 1, 3)), J], axis=1)
    gap = float(np.max(np.abs(eval_frame(forms("assoc"), J7) - eval_frame(forms("sl3"), J))))
    rep.add("max |H^*assoc - F^*sl| on catenoid", gap, 1e-9, "associative-restricts-to-sl")
    for group in ("so", "su"):
        hl = catalog.hl_orthogonality_check(3, 100, seed, group=group)
        rep.add(f"kahler form on sampled SL frames ({group})", hl.max_violation, 1e-10, "sl-planes-lagrangian")
        rep.details[group] = hl.__dict__
    return rep


def check_12(forms: FormSource, seed: int) -> Report:
    rep = Report("direct-sum-product")
    rng = np.random.default_rng(seed)
    vol3 = forms("vol3")
    worst = 0.0
    for _ in range(10):
        c = rng.uniform(0.2, 2.0, 2)
        w = catalog.direct_sum([(vol3 * c[0], 3), (vol3 * c[1], 3)])
        est = comass.comass_ascent(w, seed=seed)
        worst = max(worst, abs(est.lower - c.max()))
    rep.add("max |comass(direct sum) - max part comass|", worst, 2e-6, "direct-sum-max")
    for name in ("vol3", "sl2"):
        omega = forms(name)
        st = catalog.stabilize(omega, 1)
        m, n = omega.m, omega.k
        if name == "vol3":
            frames = np.stack([haar_special_orthogonal(3, rng) for _ in range(100)])
        else:
            frames = catalog.sample_sl_frames(2, 100, seed)
        ext = np.zeros((100, m + 1, n + 1))
        ext[:, :m, :n] = frames
        ext[:, m, n] = 1.0
        err = float(np.max(np.abs(np.asarray(eval_frame(st, ext)) - 1)))
        rep.add(f"{name}: max |stabilized value - 1| on V x R", err, 1e-9, "product-grassmannian")
        base = float(np.max(np.abs(np.asarray(eval_frame(omega, frames)) - 1)))
        rep.details[name] = {"base_face_error": base}
        if m == n:
            continue  # every frame of R^{n+1} spans V x R
        haar = np.stack([np.linalg.qr(rng.standard_normal((m + 1, n + 1)))[0] for _ in range(1000)])
        top = float(np.max(np.asarray(eval_frame(st, haar))))
        rep.add(f"{name}: max stabilized value on 1000 Haar frames", top, 1.0 - 1e-9, "product-grassmannian", "<")
    return rep


CHECKS: dict[int, Callable[[FormSource, int], Report]] = {
    1: check_01,
    2: check_02,
    3: check_03,
    4: check_04,
    5: check_05,
    6: check_06,
    7: check_07,
    8: check_08,
    9: check_09,
    10: check_10,
    11: check_11,
    12: check_12,
}


def run_check(i: int, forms: FormSource | None = None, seed: int = 42) -> Report:
    rep = CHECKS[i](forms or FormSource(), seed)
    rep.config = {"seed": seed, "check": i}
    return rep


def _headline(checks):
    """First failing check, else the tightest ``<=`` check (largest value/tol), else the first."""
    failing = [c for c in checks if not c.passed]
    if failing:
        return failing[0]
    bounded = [c for c in checks if c.relation == "<=" and c.tol > 0]
    if bounded:
        return max(bounded, key=lambda c: c.value / c.tol)
    return checks[0]


def summary_table(rows: list[dict]) -> str:
    head = f"{'id':>3}  {'anchor':<38} {'headline check':<64} {'value':>12} {'tol':>10}  result"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r['id']:>3}  {r['anchor']:<38} {r['worst']['name'][:64]:<64} {_fmt(r['worst']['value']):>12} {_fmt(r['worst']['tol']):>10}  {'PASS' if r['pass'] else 'FAIL'}"
        )
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return f"{v:.3g}" if isinstance(v, float) else str(v)


def reproduce_all(out_dir, forms: dict[str, Covector] | None = None, seed: int = 42, only=None) -> dict:
    """Run every acceptance check, writing ``check_NN.json``, ``summary.json``, ``summary.txt``."""
    os.makedirs(out_dir, exist_ok=True)
    source = FormSource(forms)
    rows, timing = [], {}
    for i in sorted(CHECKS if only is None else only):
        t0 = time.perf_counter()
        try:
            rep = run_check(i, source, seed)
        except Exception as exc:  # keep partial results
            rep = Report(f"check-{i}")
            rep.add("check raised", 0.0, 1.0, f"error: {type(exc).__name__}: {exc}", "==")
            rep.config = {"seed": seed, "check": i}
        timing[i] = time.perf_counter() - t0
        write_json(rep, os.path.join(out_dir, f"check_{i:02d}.json"))
        failing = [c for c in rep.checks if not c.passed]
        worst = _headline(rep.checks)
        rows.append({"id": i, "anchor": rep.command, "pass": rep.passed, "worst": worst.to_json_dict(), "failed": [c.name for c in failing]})
    summary = {"seed": seed, "checks": rows, "pass": all(r["pass"] for r in rows)}
    write_json(summary, os.path.join(out_dir, "summary.json"))
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(summary_table(rows))
    write_json({str(k): v for k, v in timing.items()}, os.path.join(out_dir, "timing.json"))
    return summary


__all__ = ["CHECKS", "FormSource", "reproduce_all", "run_check", "summary_table", "dumps"]

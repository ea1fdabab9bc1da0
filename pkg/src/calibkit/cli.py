"""Batch command-line front end.

Exit codes: 0 when every asserted check passes, 1 when one fails, 2 on
usage or input errors.  Reports are deterministic JSON (sorted keys, no
timestamps); timings only go to stderr with ``-v``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import analysis, catalog, comass, curves, decomp
from .exterior import Covector
from .grids import GridSpec, GridSpecError
from .report import Report, bytes_digest, covector_digest, dumps

DEFAULT_SEED = 42

DEFAULT_TOLS = {
    "comass": comass.CERT_TOL,
    "defect": 1e-5,
    "qr": 1e-5,
    "subharmonic": None,  # 10 h
    "maxprin": 1e-9,
    "constnorm": 1e-6,
    "hadamard": analysis.HADAMARD_SLACK,
    "equality": analysis.EQUALITY_TOL,
    "face": decomp.FACE_TOL,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    verbosity: int = 0

    def tol(self, name: str):
        return self.tolerances.get(name, DEFAULT_TOLS.get(name))

    def to_json_dict(self) -> dict:
        eff = dict(DEFAULT_TOLS)
        eff.update(self.tolerances)
        return {"seed": self.seed, "tolerances": eff}


def default_seed() -> int:
    env = os.environ.get("CALIB_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"CALIB_SEED must be an integer, got {env!r}") from exc


def parse_tols(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--tol expects NAME=VAL, got {item!r}")
        name, val = item.split("=", 1)
        try:
            out[name.strip()] = float(val)
        except ValueError as exc:
            raise UsageError(f"bad tolerance value {val!r}") from exc
    return out


def parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects NAME=VAL, got {item!r}")
        name, val = item.split("=", 1)
        try:
            out[name.strip()] = float(val)
        except ValueError as exc:
            raise UsageError(f"bad parameter value {val!r}") from exc
    return out


def load_form(spec: str) -> tuple[Covector, dict]:
    """Covector from a JSON file path, or a catalog name such as ``sl3``."""
    if spec is None:
        raise UsageError("--form is required")
    if os.path.exists(spec):
        try:
            with open(spec, "rb") as fh:
                raw = fh.read()
            omega = Covector.from_json(raw.decode())
        except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
            raise UsageError(f"malformed covector JSON in {spec}: {exc}") from exc
        return omega, {"form": spec, "form_sha256": bytes_digest(raw)}
    try:
        omega = catalog.resolve_form(spec)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{spec!r} is neither a file nor a catalog name") from exc
    return omega, {"form": spec, "form_sha256": covector_digest(omega)}


def load_curve(args) -> curves.CurveSpec:
    if args.curve is None:
        raise UsageError("--curve is required")
    if args.n is None:
        raise UsageError("--n is required")
    try:
        return curves.builtin_curve(args.curve, args.n, **parse_params(args.param))
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def load_grid(text: str | None, curve: curves.CurveSpec) -> GridSpec:
    if text is None:
        text = "shell:r=0.5..2,count=1000" if curve.label.startswith(("catenoid", "mobius")) else "box:-1..1,count=1000"
    try:
        return GridSpec.parse(text)
    except GridSpecError as exc:
        raise UsageError(str(exc)) from exc


def parse_point(text: str, n: int) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}") from exc
    if len(vals) != n:
        raise UsageError(f"point {text!r} needs {n} coordinates")
    return np.array(vals)


def known_comass(omega: Covector) -> tuple[float | None, str | None]:
    """Analytic comass when ``omega`` is exactly a catalog form (or eta), else ``(None, None)``."""
    for key, nc in catalog.standard_catalog().items():
        if nc.form == omega:
            return 1.0, key
    for n in range(2, 8):
        if catalog.make_eta(n) == omega:
            return math.sqrt(n), f"eta{n}"
    return None, None


def _known(args, omega, inputs) -> float | None:
    if args.known is not None:
        inputs["known_value"] = {"value": args.known, "source": "--known"}
        return args.known
    value, key = known_comass(omega)
    if value is not None:
        inputs["known_value"] = {"value": value, "source": f"catalog:{key}"}
    return value


# handlers -----------------------------------------------------------------


def cmd_comass(args, cfg: RunConfig) -> Report:
    omega, inputs = load_form(args.form)
    known = _known(args, omega, inputs)
    rep = Report("calib comass", inputs=inputs)
    est = comass.comass_ascent(omega, starts=args.starts, max_iter=args.iters, seed=cfg.seed, known_value=known, tol=cfg.tol("comass"))
    rep.details["estimate"] = est
    rep.add("upper - lower", est.upper - est.lower, -1e-12, "comass-sandwich", ">=")
    if args.expect_calibration:
        rep.add("|comass - 1| (certified)", abs(est.lower - 1) if est.certified else math.inf, cfg.tol("comass"), "calibration-definition")
    return rep


def cmd_check(args, cfg: RunConfig) -> Report:
    omega, inputs = load_form(args.form)
    known = _known(args, omega, inputs)
    rep = Report("calib check", inputs=inputs)
    tol = cfg.tol("comass")
    verdict = comass.is_calibration(omega, tol=tol, starts=args.starts, max_iter=args.iters, seed=cfg.seed, known_value=known)
    rep.details["status"] = verdict.status
    rep.details["estimate"] = verdict.estimate
    rep.details["simple"] = None if omega.is_zero() else comass.is_simple(omega, tol=tol, seed=cfg.seed)
    rep.add("is calibration", float(verdict.status == "calibration"), 1.0, "calibration-definition", "==")
    return rep


def cmd_decompose(args, cfg: RunConfig) -> Report:
    omega, inputs = load_form(args.form)
    rep = Report(f"calib decompose {args.action}", inputs=inputs)
    kw = {"seed": cfg.seed, "starts": args.starts, "max_iter": args.iters}
    if args.action == "symp-normal":
        try:
            nf = decomp.symp_normal_form(omega)
        except (ValueError, decomp.DecompositionError) as exc:
            raise UsageError(str(exc)) from exc
        err = decomp.reconstruction_error(omega, nf)
        rep.add("reconstruction error", err, 1e-10, "symplectic-normal-form")
        rep.details.update(
            lambdas=nf.lambdas, ell=nf.ell, basis=nf.basis, projector_isometry=nf.projector_isometry, top_face_form=nf.top_face_form()
        )
        return rep
    try:
        sr = decomp.decompose(omega, **kw)
    except decomp.DecompositionError as exc:
        rep.details["error"] = str(exc)
        rep.add("decomposition succeeded", 0.0, 1.0, "splitting-lemma", "==")
        return rep
    d = sr.diagnostics
    if args.action == "split":
        rep.add("reconstruction exact", float(d["reconstruction_exact"]), 1.0, "splitting-reconstruction", "==")
        rep.add("|rigid(face) - 1|", abs(d["rigid_face_value"] - 1), cfg.tol("face"), "splitting-rigid-face")
        rep.add("|eps(face)|", abs(d["epsilon_face_value"]), 1e-12, "splitting-epsilon-face")
        rep.add("comass(eps) upper", sr.epsilon_comass_upper, 2 + 1e-6, "splitting-epsilon-bound")
        rep.add("|comass(alpha) - 1|", abs(d["alpha_comass"] - 1), cfg.tol("comass"), "splitting-alpha-calibration")
        rep.details.update(
            rotation=sr.rotation,
            alpha=sr.alpha,
            epsilon=sr.epsilon,
            rigid=sr.rigid,
            epsilon_comass_lower=sr.epsilon_comass_lower,
            diagnostics=d,
        )
    else:
        t = args.t
        if not 0 <= t <= 1:
            raise UsageError("--t must lie in [0, 1]")
        est = decomp.perturbation_comass(sr, t, **kw)
        rep.add("|comass(omega_t) - 1| (certified)", abs(est.lower - 1) if est.certified else math.inf, cfg.tol("comass"), "rigid-perturbation-family")
        omega_t = decomp.pullback(sr.rotation.T, decomp.perturb_family(sr, t)) if t < 1 else omega
        rep.details.update(t=t, omega_t=omega_t, estimate=est)
    return rep


def _curve_inputs(args, curve) -> dict:
    return {"curve": curve.label, "n": curve.n, "params": curve.params}


def cmd_verify(args, cfg: RunConfig) -> Report:
    omega, inputs = load_form(args.form)
    if args.csv:
        if args.n is None:
            raise UsageError("--n is required with --csv")
        try:
            sampled = curves.load_csv_curve(args.csv, args.n)
            with open(args.csv, "rb") as fh:
                inputs["csv_sha256"] = bytes_digest(fh.read())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load {args.csv}: {exc}") from exc
        F, grid = sampled, None
        rep = Report("curve verify", inputs=inputs)
    else:
        F = load_curve(args)
        grid = load_grid(args.grid, F)
        inputs.update(_curve_inputs(args, F), grid=str(grid))
        rep = Report("curve verify", inputs=inputs)
    if omega.k != F.n or omega.m != F.m:
        raise UsageError(f"form on R^{omega.m} of degree {omega.k} does not fit a curve R^{F.n} -> R^{F.m}")
    try:
        cr = curves.conformality_report(F, omega, grid, seed=cfg.seed, fd=args.fd)
    except curves.DomainError as exc:
        raise UsageError(str(exc)) from exc
    rep.add("max conformality defect", cr.max_defect, cfg.tol("defect"), "conformal-curve-definition")
    if cr.below_floor == 0:
        rep.add("distortion K - 1", cr.qr_constant - 1, cfg.tol("qr"), "quasiregular-distortion")
    rep.details["summary"] = cr.summary()
    if isinstance(F, curves.CurveSpec) and F.label == "catenoid":
        pts = cr.grid
        r1, r2 = curves.catenoid_variety_residuals(F(pts), F.n)
        cyl = curves.catenoid_cylinder_norm(F, pts, fd=args.fd)
        t = np.log(np.linalg.norm(pts, axis=1))
        rep.add("max | |x|y - |y|x |", float(r1.max()), 1e-7, "catenoid-variety")
        rep.add("max |Im(|x| + i|y|)^n - 1|", float(r2.max()), 1e-7, "catenoid-variety")
        rep.add("max |(|x| ||DF||)^n - cosh(nt)|", float(np.max(np.abs(cyl - np.cosh(F.n * t)))), 1e-5, "catenoid-cosh-norm")
    if isinstance(F, curves.CurveSpec) and F.label == "torus":
        pts = cr.grid
        rep.add("max | ||DF|| - e^(x_n) |", float(np.max(np.abs(cr.norm_values - np.exp(pts[:, -1])))), 1e-6, "torus-norm-law")
    if args.csv_out:
        _write_grid_csv(args.csv_out, cr)
    return rep


def _write_grid_csv(path, cr: curves.ConformalityReport) -> None:
    n = cr.grid.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join([f"x{i + 1}" for i in range(n)] + ["norm", "density", "defect"]) + "\n")
        for p, nv, dv, df in zip(cr.grid, cr.norm_values, cr.density, cr.defect):
            fh.write(",".join(repr(float(v)) for v in (*p, nv, dv, df)) + "\n")


def cmd_analyze(args, cfg: RunConfig) -> Report:
    F = load_curve(args)
    inputs = _curve_inputs(args, F)
    rep = Report(f"curve analyze {args.check}", inputs=inputs)
    try:
        if args.check == "iso":
            center = parse_point(args.center, F.n) if args.center else np.zeros(F.n)
            omega = load_form(args.form)[0] if args.form else None
            iso = analysis.isoperimetric_check(F, omega, center, args.radius, args.samples, cfg.seed, fd=args.fd)
            margin = iso.ratio - 1 - 3 * iso.ratio_stderr - analysis.ROUNDING_FLOOR
            rep.add("ratio - 1 - 3 sigma", margin, 0.0, "isoperimetric-inequality")
            rep.details["report"] = iso
        elif args.check == "subharmonic":
            grid = load_grid(args.grid, F)
            inputs["grid"] = str(grid)
            tol = cfg.tol("subharmonic")
            s = analysis.subharmonicity_check(F, grid, h=args.h, tol=tol, seed=cfg.seed, fd=args.fd)
            rep.add("min discrete laplacian", s.min_laplacian, -s.tol, "subharmonicity", ">=")
            rep.details["report"] = s
        elif args.check == "maxprin":
            grid = load_grid(args.grid or "box:-1..1,count=1000", F)
            inputs["grid"] = str(grid)
            mp = analysis.max_principle_scan(F, grid, tol=cfg.tol("maxprin"), fd=args.fd)
            rep.add("non-constant interior local maxima", 0 if mp.verdict == "consistent" else mp.count, 0, "maximum-principle", "==")
            rep.details["report"] = mp
        elif args.check == "weakqs":
            center = parse_point(args.center, F.n) if args.center else np.zeros(F.n)
            wq = analysis.weak_qs_estimate(F, [(center, args.radius)], args.rho, args.samples, cfg.seed)
            rep.add("balls with vanishing inf", wq.flagged, 0, "weak-quasisymmetry", "==")
            rep.details["report"] = wq
        elif args.check == "constnorm":
            omega, finputs = load_form(args.form)
            inputs.update(finputs)
            grid = load_grid(args.grid, F)
            inputs["grid"] = str(grid)
            cn = analysis.constant_norm_diagnostic(F, omega, grid, tol=cfg.tol("constnorm"), seed=cfg.seed)
            rep.add("constant-norm vs affine agreement", float(cn.verdict != "inconsistent"), 1.0, "constant-norm-affine", "==")
            rep.details["report"] = cn
    except curves.DomainError as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return rep


def cmd_catalog(args, cfg: RunConfig) -> Report | str:
    if args.action == "list":
        entries = []
        for key, nc in catalog.standard_catalog().items():
            entries.append({"name": key, "label": nc.label, "m": nc.form.m, "k": nc.form.k, "terms": len(nc.form)})
        return dumps(entries)
    try:
        omega = catalog.resolve_form(args.name)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    return dumps(omega)


def cmd_hadamard(args, cfg: RunConfig) -> Report:
    omega, inputs = load_form(args.form)
    rep = Report("fuzz hadamard", inputs=inputs)
    h = analysis.hadamard_fuzz(omega, samples=args.samples, seed=cfg.seed)
    rep.add("violations", h.violations_hs + h.violations_op, 0, "hadamard-inequality", "==")
    rep.add("equality branch rel. error", h.equality_error, cfg.tol("equality"), "hadamard-equality")
    rep.add("reversed branch rel. error", h.reversed_error, cfg.tol("equality"), "hadamard-orientation-reversed")
    rep.details["report"] = h
    return rep


def cmd_reproduce(args, cfg: RunConfig) -> Report | str:
    from .reproduce import reproduce_all, summary_table

    out = args.out or "reproduce-out"
    summary = reproduce_all(out, seed=cfg.seed, only=args.only)
    sys.stdout.write(summary_table(summary["checks"]))
    rep = Report("reproduce")
    for row in summary["checks"]:
        rep.add(f"check {row['id']} ({row['anchor']})", float(row["pass"]), 1.0, row["anchor"], "==")
    rep.details["out_dir"] = out
    args.out = os.path.join(out, "reproduce.json")
    return rep


# parser -------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, form=True):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $CALIB_SEED or 42)")
    p.add_argument("--tol", action="append", metavar="NAME=VAL", help="override a named tolerance")
    p.add_argument("--out", metavar="PATH", help="write the JSON report here (stdout otherwise)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    if form:
        p.add_argument("--form", metavar="PATH|NAME", help="covector JSON file or catalog name")


def _ascent(p):
    p.add_argument("--starts", type=int, default=comass.DEFAULT_STARTS)
    p.add_argument("--iters", type=int, default=comass.DEFAULT_MAX_ITER)
    p.add_argument("--known", type=float, default=None, help="analytic comass value used for certification")


def _curve(p):
    p.add_argument("--curve", metavar="NAME", help=f"one of {', '.join(curves.BUILTIN_CURVES)}")
    p.add_argument("--n", type=int)
    p.add_argument("--param", action="append", metavar="NAME=VAL", help="curve parameter (scale, z0)")
    p.add_argument("--grid", metavar="SPEC", help="box:lo..hi,count=K or shell:r=a..b,count=K")
    p.add_argument("--fd", action="store_true", help="use finite-difference differentials")


def add_calib(sub):
    calib = sub.add_parser("calib", help="comass, calibration check, decompositions")
    cs = calib.add_subparsers(dest="verb", required=True)
    p = cs.add_parser("comass")
    _common(p)
    _ascent(p)
    p.add_argument("--expect-calibration", action="store_true", help="fail unless comass is certified 1")
    p.set_defaults(func=cmd_comass)
    p = cs.add_parser("check")
    _common(p)
    _ascent(p)
    p.set_defaults(func=cmd_check)
    p = cs.add_parser("decompose")
    p.add_argument("action", choices=["split", "symp-normal", "perturb"])
    _common(p)
    _ascent(p)
    p.add_argument("--t", type=float, default=0.5)
    p.set_defaults(func=cmd_decompose)


def add_curve(sub):
    curve = sub.add_parser("curve", help="conformality and analytic checks on curves")
    cs = curve.add_subparsers(dest="verb", required=True)
    p = cs.add_parser("verify")
    _common(p)
    _curve(p)
    p.add_argument("--csv", metavar="PATH", help="sampled curve x_1..x_n,F_1..F_m on a uniform grid")
    p.add_argument("--csv-out", metavar="PATH", help="also write per-point grid data as CSV")
    p.set_defaults(func=cmd_verify)
    p = cs.add_parser("analyze")
    p.add_argument("check", choices=["iso", "subharmonic", "maxprin", "weakqs", "constnorm"])
    _common(p)
    _curve(p)
    p.add_argument("--center", metavar="X1,...,XN")
    p.add_argument("--radius", type=float, default=0.3)
    p.add_argument("--rho", type=float, default=0.25)
    p.add_argument("--h", type=float, default=analysis.SUBHARMONIC_H)
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(func=cmd_analyze)


def add_catalog(sub):
    cat = sub.add_parser("catalog", help="list or emit named calibrations")
    cs = cat.add_subparsers(dest="action", required=True)
    p = cs.add_parser("list")
    _common(p, form=False)
    p.set_defaults(func=cmd_catalog)
    p = cs.add_parser("emit")
    p.add_argument("name")
    _common(p, form=False)
    p.set_defaults(func=cmd_catalog)


def add_fuzz(sub):
    fz = sub.add_parser("fuzz", help="randomized inequality tests")
    fs = fz.add_subparsers(dest="verb", required=True)
    p = fs.add_parser("hadamard")
    _common(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_hadamard)


def add_reproduce(sub):
    p = sub.add_parser("reproduce", help="run the full acceptance suite")
    _common(p, form=False)
    p.add_argument("--only", type=int, action="append", help="run only these check ids")
    p.set_defaults(func=cmd_reproduce)


GROUPS = {"calib": add_calib, "curve": add_curve, "catalog": add_catalog, "fuzz": add_fuzz, "reproduce": add_reproduce}


def build_parser(groups=None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calibkit", description="Computations with constant-coefficient calibrations.")
    sub = parser.add_subparsers(dest="group", required=True)
    for name in groups or GROUPS:
        GROUPS[name](sub)
    return parser


def run_command(argv=None, group: str | None = None) -> int:
    """Parse ``argv`` and run; ``group`` prefixes argv (used by the per-group entry points)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if group is not None:
        argv = [group] + argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        seed = args.seed if args.seed is not None else default_seed()
        cfg = RunConfig(seed=seed, tolerances=parse_tols(args.tol), out=args.out, verbosity=args.verbose)
        t0 = time.perf_counter()
        result = args.func(args, cfg)
        elapsed = time.perf_counter() - t0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, str):
        text, code = result, 0
    else:
        result.config = cfg.to_json_dict()
        text, code = dumps(result), 0 if result.passed else 1
    try:
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return 2
    if cfg.verbosity:
        print(f"elapsed {elapsed:.3f}s", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run_command())


def main_calib() -> None:
    sys.exit(run_command(group="calib"))


def main_curve() -> None:
    sys.exit(run_command(group="curve"))


if __name__ == "__main__":
    main()

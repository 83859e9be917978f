"""Command-line front end.

Subcommands: ``solve``, ``oracle``, ``convergence``, ``validate``,
``export`` and ``list``.  A scenario is either a built-in name or a YAML
file given with ``--scenario``.

Exit codes: 0 ok, 2 parse error, 3 jump-validation failure, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import exports
from .bvmeasure import CountableSkewPath, truncate_jumps, validate_jumps
from .curvegeom import (
    Curve,
    CurveRefused,
    discrete_frechet,
    integrate_tangent,
    jump_angles,
    summarize,
    tantrix_variation,
)
from .scenario import BUILTIN_NAMES, FORMATS, Scenario, ScenarioError, builtin, load_scenario
from .solver import (
    JumpValidationError,
    residual_check,
    solve_bv,
    solve_bv_general,
    solve_continuous,
    solve_mollified_oracle,
)

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4
RESIDUAL_TOL = 1e-6


class NumericalFailure(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# argument handling


def _float_list(text):
    try:
        vals = tuple(float(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _formats(text):
    vals = tuple(x for x in text.replace(" ", "").split(",") if x)
    bad = [v for v in vals if v not in FORMATS]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"formats must be among {', '.join(FORMATS)}; got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bvfrenet", description="Frenet frames and curves from BV curvature/torsion data.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("name", nargs="?", help=f"built-in scenario ({', '.join(BUILTIN_NAMES)})")
    common.add_argument("--scenario", type=Path, help="scenario YAML file")
    common.add_argument("--out", type=Path, help="output directory (default: out/<scenario>)")
    common.add_argument("--grid", type=int, help="base grid size M")
    common.add_argument("--eps", type=_float_list, help="mollification scale(s), comma-separated")
    common.add_argument("--format", type=_formats, help="output formats: csv,json,obj")
    common.add_argument("--seed", type=int, help="seed for randomised scenarios")
    common.add_argument("--d", type=float, help="curvature jump (case-study, planar-jump)")
    common.add_argument("--tau", type=float, help="torsion jump (case-study)")
    common.add_argument("--segments", type=int, help="inscribed polygon segment count")

    sub.add_parser("solve", parents=[common], help="solve and write frames, curve and summary")
    sub.add_parser("oracle", parents=[common], help="solve the mollified problem at scale --eps")
    c = sub.add_parser("convergence", parents=[common], help="epsilon ladder and truncation ladder")
    c.add_argument("--levels", type=int, help="number of truncation levels")
    sub.add_parser("validate", parents=[common], help="jump validation and residual check only")
    e = sub.add_parser("export", help="re-emit stored frames/curve CSVs in other formats")
    e.add_argument("--from", dest="source", type=Path, required=True, help="directory holding stored results")
    e.add_argument("--out", type=Path, help="target directory (default: the source directory)")
    e.add_argument("--format", type=_formats, required=True, help="target formats: csv,json,obj")
    sub.add_parser("list", help="list built-in scenarios")
    return p


def _scenario(args) -> Scenario:
    if args.scenario is not None:
        if args.name:
            raise ScenarioError("give either a built-in name or --scenario, not both")
        sc = load_scenario(args.scenario)
    elif args.name:
        params = {k: getattr(args, k) for k in ("d", "tau", "seed") if getattr(args, k) is not None}
        sc = builtin(args.name, **params)
    else:
        raise ScenarioError("no scenario given (built-in name or --scenario PATH)")
    if args.grid is not None:
        if args.grid < 1:
            raise ScenarioError("--grid must be positive")
        sc = replace(sc, config=replace(sc.config, grid_size=args.grid))
    if args.eps is not None:
        try:
            sc = replace(sc, config=replace(sc.config, eps_ladder=args.eps))
        except ValueError as exc:
            raise ScenarioError(f"--eps: {exc}") from None
    if args.format is not None:
        sc = replace(sc, formats=args.format)
    if args.segments is not None:
        if args.segments < 3:
            raise ScenarioError("--segments must be at least 3")
        sc = replace(sc, polygon_segments=args.segments)
    return sc


def _out_dir(args, sc: Scenario) -> Path:
    if args.out is not None:
        return args.out
    if sc.out_dir:
        return Path(sc.out_dir)
    return Path("out") / sc.name


# ----------------------------------------------------------------------------
# runs


def _finite_datum(sc: Scenario):
    if isinstance(sc.omega, CountableSkewPath):
        return truncate_jumps(sc.omega, sc.truncation_levels)
    return sc.omega


def _solve(sc: Scenario, omega):
    if omega.n in (2, 3) and (omega.n == 2 or omega.is_frenet):
        path = solve_bv(omega, sc.initial, sc.config)
    else:
        path = solve_continuous(omega, sc.initial, sc.config)
    _check_path(path, sc)
    return path


def _check_path(path, sc: Scenario):
    if not np.all(np.isfinite(path.frames)):
        raise NumericalFailure("non-finite frame entries")
    err = path.orthogonality_error()
    if err > sc.config.orthogonality_tol:
        raise NumericalFailure(f"orthogonality error {err:.3e} exceeds {sc.config.orthogonality_tol:.1e}")


def _curve(path, sc: Scenario):
    try:
        return integrate_tangent(path, sc.theta_increasing), None
    except CurveRefused as exc:
        return None, str(exc)


def _jump_table(path):
    out = []
    for r in path.jump_records:
        row = {"location": r.location, "d": r.d, "tau": r.tau, "angle": r.angle,
               "left": r.left, "right": r.right}
        if r.axis is not None:
            row["axis"] = r.axis
            row["angle_t"], row["angle_n"], row["angle_b"] = jump_angles(r.d, r.tau)
        out.append(row)
    return out


def _summary(sc: Scenario, omega, path, curve, refused, extra=None) -> dict:
    res = residual_check(path, omega)
    doc = {
        "scenario": sc.name,
        "dimension": path.n,
        "length": path.length,
        "grid_nodes": int(path.s.size),
        "orthogonality_error": path.orthogonality_error(),
        "residual": {"max": res.max_residual, "diffuse": res.diffuse_residual, "jump": res.jump_residual,
                     "worst_s": res.worst_s},
        "jumps": _jump_table(path),
        "curve": None,
        "invariants": None,
    }
    if curve is not None:
        doc["curve"] = {"start": curve.points[0], "end": curve.points[-1], "samples": int(curve.s.size)}
    else:
        doc["curve"] = {"refused": refused}
    if path.n in (2, 3) and (path.n == 2 or omega.is_frenet):
        segs = sc.polygon_segments if curve is not None else None
        geo = summarize(path, omega, segs, curve)
        doc["invariants"] = geo.to_dict()
        var, dt = tantrix_variation(path)
        doc["tantrix"] = {"variation": var, "derivative_mass": dt}
    if extra:
        doc.update(extra)
    return doc


def _write(out: Path, sc: Scenario, stem: str, path, curve, summary) -> list:
    written = []
    fmts = set(sc.formats)
    if "csv" in fmts:
        if "frames" in sc.outputs:
            written.append(exports.atomic_write(out / f"{stem}frames.csv", exports.frames_csv(path)))
        if "curve" in sc.outputs and curve is not None:
            written.append(exports.atomic_write(out / f"{stem}curve.csv", exports.curve_csv(curve)))
    if "obj" in fmts and "curve" in sc.outputs and curve is not None:
        written.append(exports.atomic_write(out / f"{stem}curve.obj", exports.curve_obj(curve)))
    if "json" in fmts and "summary" in sc.outputs:
        written.append(exports.atomic_write(out / f"{stem}summary.json", exports.to_json(summary)))
    return written


def cmd_solve(args) -> int:
    sc = _scenario(args)
    omega = _finite_datum(sc)
    path = _solve(sc, omega)
    curve, refused = _curve(path, sc)
    summary = _summary(sc, omega, path, curve, refused)
    written = _write(_out_dir(args, sc), sc, "", path, curve, summary)
    inv = summary["invariants"]
    line = f"{sc.name}: {path.s.size} nodes, orthogonality {summary['orthogonality_error']:.2e}, " \
           f"residual {summary['residual']['max']:.2e}"
    if inv:
        line += f", TC {inv['tc_exact']:.12g}, TAT {inv['tat_exact']:.12g}"
    print(line)
    for w in written:
        print(f"  wrote {w}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    sc = _scenario(args)
    omega = _finite_datum(sc)
    eps = args.eps[0] if args.eps else sc.config.eps_ladder[-1]
    try:
        path = solve_mollified_oracle(omega, eps, sc.initial, sc.config)
    except ValueError as exc:
        raise ScenarioError(f"--eps: {exc}") from None
    _check_path(path, sc)
    curve, refused = _curve(path, sc)
    smooth = omega.mollify(eps, sc.config.mollifier)
    extra = {"eps": eps}
    if curve is not None:
        exact = integrate_tangent(_solve(sc, omega), sc.theta_increasing)
        extra["frechet_to_exact"] = discrete_frechet(curve, exact)
    summary = _summary(sc, smooth, path, curve, refused, extra)
    written = _write(_out_dir(args, sc), sc, f"oracle_eps{eps:g}_", path, curve, summary)
    print(f"{sc.name} oracle eps={eps:g}: frechet to exact curve "
          f"{extra.get('frechet_to_exact', float('nan')):.6g}")
    for w in written:
        print(f"  wrote {w}")
    return EXIT_OK


def convergence_table(sc: Scenario, levels: int | None = None):
    """Rows of the epsilon ladder and (if jumps exist) the truncation ladder."""
    omega = _finite_datum(sc)
    exact_path = _solve(sc, omega)
    exact_curve, refused = _curve(exact_path, sc)
    if exact_curve is None:
        raise ScenarioError(f"convergence needs a curve: {refused}")
    rows = []
    for eps in sc.config.eps_ladder:
        try:
            p = solve_mollified_oracle(omega, eps, sc.initial, sc.config)
        except ValueError as exc:
            raise ScenarioError(f"eps ladder: {exc}") from None
        _check_path(p, sc)
        c = integrate_tangent(p, sc.theta_increasing)
        smooth = omega.mollify(eps, sc.config.mollifier)
        tc = smooth.theta.diffuse_mass()
        tat = smooth.phi.diffuse_mass() if smooth.n == 3 else 0.0
        rows.append(["eps", eps, discrete_frechet(c, exact_curve), math.nan, tc, tat])
    has_jumps = isinstance(sc.omega, CountableSkewPath) or bool(sc.omega.jumps)
    if has_jumps and sc.omega.n == 3:
        n_max = levels or sc.truncation_levels
        study = solve_bv_general(sc.omega, sc.initial, sc.config, n_max=n_max)
        for i, lvl in enumerate(study.levels):
            trunc = truncate_jumps(sc.omega, lvl)
            geo = summarize(study.paths[i], trunc)
            succ = study.successive_distances[i - 1] if i else math.nan
            rows.append(["level", float(lvl), discrete_frechet(study.curves[i], exact_curve), succ,
                         geo.tc_exact, geo.tat_exact])
    return rows


def cmd_convergence(args) -> int:
    sc = _scenario(args)
    rows = convergence_table(sc, args.levels)
    out = _out_dir(args, sc)
    header = ["study", "parameter", "frechet_to_reference", "successive_frechet", "tc", "tat"]
    written = [exports.atomic_write(out / "convergence.csv", exports.table_csv(header, rows))]
    if "json" in sc.formats:
        doc = [dict(zip(header, r)) for r in rows]
        written.append(exports.atomic_write(out / "convergence.json", exports.to_json(doc)))
    for r in rows:
        print(f"{r[0]:>6} {r[1]:<8g} frechet {r[2]:.6g}")
    for w in written:
        print(f"  wrote {w}")
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = _scenario(args)
    omega = _finite_datum(sc)
    if omega.n in (2, 3):
        report = validate_jumps(omega, sc.config.jump_angle_cap)
        if not report.ok:
            for v in report.violations:
                print(f"invalid jump at s={v['location']:.12g}: {v['reason']}", file=sys.stderr)
            return EXIT_VALIDATION
        print(f"{report.checked} jumps admissible")
    path = _solve(sc, omega)
    res = residual_check(path, omega)
    print(f"residual {res.max_residual:.3e} (diffuse {res.diffuse_residual:.3e}, jumps {res.jump_residual:.3e}); "
          f"orthogonality {path.orthogonality_error():.3e}")
    if res.max_residual > RESIDUAL_TOL:
        print(f"residual exceeds {RESIDUAL_TOL:.0e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_export(args) -> int:
    src = args.source
    out = args.out or src
    frames = src / "frames.csv"
    curve = src / "curve.csv"
    if not frames.exists() and not curve.exists():
        raise ScenarioError(f"no frames.csv or curve.csv in {src}")
    written = []
    try:
        if frames.exists():
            s, g, flags = exports.read_frames_csv(frames)
            if "json" in args.format:
                doc = {"s": s, "frames": g, "jump": flags}
                written.append(exports.atomic_write(out / "frames.json", exports.to_json(doc)))
            if "csv" in args.format and out != src:
                written.append(exports.atomic_write(out / "frames.csv", frames.read_text()))
        if curve.exists():
            s, pts = exports.read_curve_csv(curve)
            c = Curve(s, pts, np.zeros_like(pts), np.zeros_like(pts))
            if "obj" in args.format:
                written.append(exports.atomic_write(out / "curve.obj", exports.curve_obj(c)))
            if "json" in args.format:
                written.append(exports.atomic_write(out / "curve.json", exports.to_json({"s": s, "points": pts})))
            if "csv" in args.format and out != src:
                written.append(exports.atomic_write(out / "curve.csv", exports.curve_csv(c)))
    except (ValueError, OSError) as exc:
        raise ScenarioError(f"cannot read stored results: {exc}") from None
    for w in written:
        print(f"wrote {w}")
    return EXIT_OK


def cmd_list(args) -> int:
    for n in BUILTIN_NAMES:
        print(n)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "convergence": cmd_convergence,
    "validate": cmd_validate,
    "export": cmd_export,
    "list": cmd_list,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 on --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except JumpValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalFailure, FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Scenario files (YAML) and the built-in named scenarios.

A scenario declares the datum, the initial frame, solver settings and the
requested outputs::

    name: corner
    length: 2.0
    theta:
      value: 0.0            # continuous part at s = 0
      pieces:
        - {kind: slope, end: 2.0, slope: 1.0}
      jumps:
        - {at: 1.0, value: 0.5}
    phi:
      jumps:
        - {at: 1.0, value: 0.5}
    initial: identity
    solver: {grid_size: 4096}
    outputs: [frames, curve, summary]
    formats: [csv, json]
    polygon_segments: 4096

Piece kinds are ``slope`` (``slope``), ``samples`` (``values``, uniformly
spaced, shifted to continue the previous piece) and ``expr`` (``expr`` and
optional ``deriv``, numpy expressions in ``s``).  ``expr`` strings are
evaluated, so only load scenario files you trust.  Higher dimensions use
``dimension: N`` and ``entries: {"i,j": <scalar>}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import liegroup as lg
from .bvmeasure import (
    Affine,
    BVScalar,
    CountableSkewPath,
    GeometricJumpFamily,
    Jump,
    Sampled,
    Smooth,
    SkewPath,
)
from .solver import SolverConfig

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "parse_scenario",
    "builtin",
    "BUILTIN_NAMES",
    "case_study_initial",
]

OUTPUTS = ("frames", "curve", "summary", "convergence")
FORMATS = ("csv", "json", "obj")


class ScenarioError(ValueError):
    """Malformed scenario; carries the offending line and field when known."""

    def __init__(self, message, line=None, field=None, source=None):
        self.line, self.field, self.source = line, field, source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field '{field}'")
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


@dataclass
class Scenario:
    """A fully resolved scenario, ready to run."""

    name: str
    omega: SkewPath | CountableSkewPath
    initial: np.ndarray
    config: SolverConfig = field(default_factory=SolverConfig)
    outputs: tuple = ("frames", "curve", "summary")
    formats: tuple = ("csv", "json")
    polygon_segments: int | None = None
    truncation_levels: int = 12
    out_dir: str | None = None

    @property
    def datum(self) -> SkewPath:
        """Finite datum to solve (the base plus no tail for countable families)."""
        return self.omega.base if isinstance(self.omega, CountableSkewPath) else self.omega

    @property
    def theta_increasing(self) -> bool:
        om = self.datum
        return om.n in (2, 3) and (0, 1) in om.entries and om.theta.is_strictly_increasing()


# ----------------------------------------------------------------------------
# YAML with line numbers


class _LineDict(dict):
    line = None

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.lines = {}


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _LineDict()
    out.line = node.start_mark.line + 1
    for knode, vnode in node.value:
        key = loader.construct_object(knode, deep=True)
        out[key] = loader.construct_object(vnode, deep=True)
        out.lines[key] = knode.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


class _Ctx:
    def __init__(self, source):
        self.source = source

    def fail(self, msg, node=None, key=None, path=""):
        line = None
        if isinstance(node, _LineDict):
            line = node.lines.get(key, node.line)
        fld = f"{path}.{key}" if path and key is not None else (path or key)
        raise ScenarioError(msg, line, fld, self.source)

    def need(self, node, key, path, kind=None):
        if not isinstance(node, dict) or key not in node:
            self.fail("missing required field", node, None, f"{path}.{key}" if path else key)
        return self.get(node, key, path, kind)

    def get(self, node, key, path, kind=None, default=None):
        if not isinstance(node, dict) or key not in node:
            return default
        v = node[key]
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                self.fail(f"expected a finite number, got {v!r}", node, key, path)
            return float(v)
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                self.fail(f"expected an integer, got {v!r}", node, key, path)
            return v
        if kind is list and not isinstance(v, list):
            self.fail(f"expected a list, got {type(v).__name__}", node, key, path)
        if kind is dict and not isinstance(v, dict):
            self.fail(f"expected a mapping, got {type(v).__name__}", node, key, path)
        if kind is str and not isinstance(v, str):
            self.fail(f"expected a string, got {v!r}", node, key, path)
        return v

    def unknown(self, node, allowed, path):
        for k in node:
            if k not in allowed:
                self.fail(f"unknown field (allowed: {', '.join(sorted(allowed))})", node, k, path)


_EXPR_NAMES = {n: getattr(np, n) for n in ("sin", "cos", "tan", "exp", "log", "sqrt", "arctan", "sinh", "cosh",
                                            "tanh", "abs", "pi")}


def _expr(text, ctx, node, key, path):
    try:
        code = compile(str(text), "<scenario>", "eval")
    except SyntaxError as exc:
        ctx.fail(f"invalid expression: {exc.msg}", node, key, path)
    for name in code.co_names:
        if name != "s" and name not in _EXPR_NAMES:
            ctx.fail(f"unknown name {name!r} in expression", node, key, path)

    def fn(s):
        return eval(code, {"__builtins__": {}}, dict(_EXPR_NAMES, s=s))  # noqa: S307

    return fn


def _scalar(node, length, ctx, path, allow_increasing=False) -> BVScalar:
    if node is None:
        return BVScalar.constant(length)
    if not isinstance(node, dict):
        ctx.fail("expected a mapping", None, None, path)
    ctx.unknown(node, {"value", "pieces", "jumps", "increasing"}, path)
    value = ctx.get(node, "value", path, float, 0.0)
    specs = ctx.get(node, "pieces", path, list, None) or [{"kind": "slope", "end": length, "slope": 0.0}]
    pieces = []
    start, level = 0.0, value
    for i, p in enumerate(specs):
        pp = f"{path}.pieces[{i}]"
        if not isinstance(p, dict):
            ctx.fail("expected a mapping", node, "pieces", pp)
        kind = ctx.need(p, "kind", pp, str)
        end = ctx.get(p, "end", pp, float, length)
        if not end > start:
            ctx.fail(f"piece end {end!r} must exceed its start {start!r}", p, "end", pp)
        if kind == "slope":
            ctx.unknown(p, {"kind", "end", "slope"}, pp)
            slope = ctx.need(p, "slope", pp, float)
            pieces.append(Affine(start, end, slope, level - slope * start))
            level += slope * (end - start)
        elif kind == "samples":
            ctx.unknown(p, {"kind", "end", "values"}, pp)
            vals = ctx.need(p, "values", pp, list)
            try:
                v = np.asarray(vals, dtype=float)
            except (TypeError, ValueError):
                ctx.fail("values must be numbers", p, "values", pp)
            if v.ndim != 1 or v.size < 2 or not np.all(np.isfinite(v)):
                ctx.fail("values must be at least two finite numbers", p, "values", pp)
            v = v - v[0] + level
            pieces.append(Sampled(start, end, v))
            level = float(v[-1])
        elif kind == "expr":
            ctx.unknown(p, {"kind", "end", "expr", "deriv"}, pp)
            f = _expr(ctx.need(p, "expr", pp, str), ctx, p, "expr", pp)
            df = _expr(p["deriv"], ctx, p, "deriv", pp) if "deriv" in p else None
            try:
                shift = level - float(f(start))
            except Exception as exc:  # user expression
                ctx.fail(f"expression failed to evaluate: {exc}", p, "expr", pp)
            func = (lambda s, f=f, c=shift: f(s) + c)
            pieces.append(Smooth(start, end, func, df))
            level = float(func(end))
        else:
            ctx.fail(f"unknown piece kind {kind!r} (use slope, samples or expr)", p, "kind", pp)
        start = end
    if abs(start - length) > 1e-12 * max(1.0, length):
        ctx.fail(f"pieces end at {start!r}, not at the domain length {length!r}", node, "pieces", path)
    jumps = []
    for i, j in enumerate(ctx.get(node, "jumps", path, list, []) or []):
        jp = f"{path}.jumps[{i}]"
        if not isinstance(j, dict):
            ctx.fail("expected a mapping with 'at' and 'value'", node, "jumps", jp)
        ctx.unknown(j, {"at", "value"}, jp)
        jumps.append(Jump(ctx.need(j, "at", jp, float), ctx.need(j, "value", jp, float)))
    inc = bool(ctx.get(node, "increasing", path, None, False)) if allow_increasing else False
    try:
        return BVScalar(length, pieces, jumps, increasing=inc)
    except ValueError as exc:
        ctx.fail(str(exc), node, None, path)


def _initial(node, n, ctx, key="initial"):
    v = node.get(key, "identity") if isinstance(node, dict) else "identity"
    if v == "identity" or v is None:
        return np.eye(n)
    try:
        if isinstance(v, list) and v and isinstance(v[0], dict):
            g = np.eye(3)
            for i, r in enumerate(v):
                ax = np.asarray(r["axis"], dtype=float)
                g = g @ lg.rotation(ax, float(r["angle"]))
            if n != 3:
                raise ValueError("axis-angle initial frames are three-dimensional")
            return g
        return lg.as_rotation(np.asarray(v, dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        ctx.fail(f"invalid initial frame: {exc}", node, key, key)


def _config(node, ctx) -> SolverConfig:
    raw = ctx.get(node, "solver", "", dict, None) or {}
    allowed = {"grid_size", "eps_ladder", "orthogonality_tol", "jump_angle_cap", "oracle_substeps",
               "max_increment", "mollifier"}
    ctx.unknown(raw, allowed, "solver")
    kw = {}
    for k in allowed:
        if k in raw:
            kw[k] = tuple(raw[k]) if k == "eps_ladder" else raw[k]
    try:
        return SolverConfig(**kw)
    except (TypeError, ValueError) as exc:
        ctx.fail(str(exc), node, "solver", "solver")


def parse_scenario(data, source=None) -> Scenario:
    """Build a :class:`Scenario` from parsed YAML."""
    ctx = _Ctx(source)
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping", 1, None, source)
    ctx.unknown(data, {"name", "length", "dimension", "theta", "phi", "entries", "family", "initial", "solver",
                       "outputs", "formats", "polygon_segments", "truncation_levels", "out"}, "")
    name = str(ctx.get(data, "name", "", None, Path(str(source)).stem if source else "scenario"))
    length = ctx.need(data, "length", "", float)
    if not length > 0:
        ctx.fail("must be positive", data, "length", "")
    n = ctx.get(data, "dimension", "", int, 3)
    if n < 2:
        ctx.fail("must be at least 2", data, "dimension", "")
    try:
        if "entries" in data:
            if "theta" in data or "phi" in data:
                ctx.fail("use either theta/phi or entries", data, "entries", "")
            raw = ctx.get(data, "entries", "", dict)
            entries = {}
            for key, spec in raw.items():
                try:
                    i, j = (int(x) for x in str(key).split(","))
                except ValueError:
                    ctx.fail("entry keys must look like 'i,j'", raw, key, "entries")
                entries[(i, j)] = _scalar(spec, length, ctx, f"entries.{key}")
            omega = SkewPath(n, entries)
        else:
            theta = _scalar(ctx.need(data, "theta", "", dict), length, ctx, "theta", allow_increasing=True)
            if n == 2:
                if "phi" in data:
                    ctx.fail("planar scenarios take no phi", data, "phi", "")
                omega = SkewPath.planar(theta)
            elif n == 3:
                omega = SkewPath.frenet(theta, _scalar(ctx.get(data, "phi", "", dict), length, ctx, "phi"))
            else:
                ctx.fail("theta/phi data are for dimension 2 or 3; use entries", data, "dimension", "")
    except ScenarioError:
        raise
    except ValueError as exc:
        ctx.fail(str(exc), data, None, "")
    if "family" in data:
        fam = ctx.get(data, "family", "", dict)
        ctx.unknown(fam, {"d0", "tau0", "ratio", "k_start"}, "family")
        try:
            family = GeometricJumpFamily(
                d0=ctx.need(fam, "d0", "family", float),
                tau0=ctx.get(fam, "tau0", "family", float, 0.0),
                ratio=ctx.get(fam, "ratio", "family", float, 0.8),
                k_start=ctx.get(fam, "k_start", "family", int, 1),
            )
            omega = CountableSkewPath(omega, family)
        except ValueError as exc:
            ctx.fail(str(exc), data, "family", "family")
    outputs = tuple(ctx.get(data, "outputs", "", list, list(Scenario.outputs)))
    for o in outputs:
        if o not in OUTPUTS:
            ctx.fail(f"unknown output {o!r} (supported: {', '.join(OUTPUTS)})", data, "outputs", "")
    formats = tuple(ctx.get(data, "formats", "", list, list(Scenario.formats)))
    for f in formats:
        if f not in FORMATS:
            ctx.fail(f"unknown format {f!r} (supported: {', '.join(FORMATS)})", data, "formats", "")
    seg = ctx.get(data, "polygon_segments", "", int, None)
    if seg is not None and seg < 3:
        ctx.fail("must be at least 3", data, "polygon_segments", "")
    levels = ctx.get(data, "truncation_levels", "", int, 12)
    return Scenario(
        name=name,
        omega=omega,
        initial=_initial(data, n, ctx),
        config=_config(data, ctx),
        outputs=outputs,
        formats=formats,
        polygon_segments=seg,
        truncation_levels=levels,
        out_dir=ctx.get(data, "out", "", str, None),
    )


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises
    ------
    ScenarioError
        On unreadable files, YAML syntax errors or invalid fields, with the
        line number where available.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", source=path) from None
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ScenarioError(f"YAML syntax error: {exc.problem}", mark.line + 1 if mark else None,
                            source=path) from None
    except yaml.YAMLError as exc:
        raise ScenarioError(f"YAML error: {exc}", source=path) from None
    return parse_scenario(data, source=path)


# ----------------------------------------------------------------------------
# built-ins


def case_study_initial(d: float, tau: float) -> np.ndarray:
    """Initial frame that places the case-study jump symmetrically at ``s = 1``.

    With it, ``G(1-) = exp(-(d J3 + tau J1) / 2)`` and
    ``G(1+) = exp((d J3 + tau J1) / 2)``, i.e. the frame at the jump is the
    identity "on average", as for the symmetric domain ``(-1, 1)``.
    """
    r = math.hypot(d, tau)
    half = lg.rotation((tau, 0.0, d), -0.5 * r) if r > 0 else np.eye(3)
    return half @ lg.rotation((0.0, 0.0, 1.0), -1.0)


def _case_study(d=1.0, tau=1.0, **_):
    theta = BVScalar.affine(2.0, 1.0, -1.0, jumps=[(1.0, d)], increasing=d > 0)
    phi = BVScalar.constant(2.0, jumps=[(1.0, tau)])
    return Scenario("case-study", SkewPath.frenet(theta, phi), case_study_initial(d, tau), polygon_segments=4096)


def _planar_jump(d=1.0, **_):
    theta = BVScalar.affine(2.0, 1.0, 0.0, jumps=[(1.0, d)], increasing=True)
    return Scenario("planar-jump", SkewPath.planar(theta), np.eye(2), polygon_segments=4096)


def _helix(**_):
    length = 4.0 * math.pi
    theta = BVScalar.affine(length, 1.0, increasing=True)
    phi = BVScalar.affine(length, 0.5)
    return Scenario("helix", SkewPath.frenet(theta, phi), np.eye(3), polygon_segments=2048)


def _circle_2d(**_):
    theta = BVScalar.from_function(
        2.0 * math.pi,
        lambda s: s + 0.25 * np.sin(s),
        lambda s: 1.0 + 0.25 * np.cos(s),
        lambda s: 0.5 * s * s - 0.25 * np.cos(s),
        increasing=True,
    )
    return Scenario("circle-2d", SkewPath.planar(theta), np.eye(2), polygon_segments=2048)


def _three_jumps(**_):
    jumps = [(0.5, 0.5, 0.0), (1.0, 0.0, 0.5), (1.5, 0.3, 0.4)]
    theta = BVScalar.affine(2.0, 1.0, jumps=[(s, d) for s, d, _ in jumps])
    phi = BVScalar.affine(2.0, 0.2, jumps=[(s, t) for s, _, t in jumps])
    return Scenario("three-jumps", SkewPath.frenet(theta, phi), np.eye(3), polygon_segments=4096)


def _geometric_family(d0=1.0, tau0=0.0, ratio=0.8, **_):
    base = SkewPath.frenet(BVScalar.affine(2.0, 1.0, increasing=True), BVScalar.affine(2.0, 0.3))
    fam = GeometricJumpFamily(d0=d0, tau0=tau0, ratio=ratio)
    return Scenario("geometric-family", CountableSkewPath(base, fam), np.eye(3),
                    outputs=("frames", "curve", "summary", "convergence"))


def random_jump_datum(rng: np.random.Generator, length: float = 2.0, max_jumps: int = 4) -> SkewPath:
    """Affine ``theta`` / ``phi`` plus a few random admissible jumps."""
    m = int(rng.integers(1, max_jumps + 1))
    locs = np.sort(rng.uniform(0.1, length - 0.1, size=m))
    while m > 1 and np.min(np.diff(locs)) < 1e-3:
        locs = np.sort(rng.uniform(0.1, length - 0.1, size=m))
    r = rng.uniform(0.05, 0.95 * math.pi, size=m)
    ang = rng.uniform(0.0, 2.0 * math.pi, size=m)
    d, tau = np.abs(r * np.cos(ang)), r * np.sin(ang)
    theta = BVScalar.affine(length, float(rng.uniform(0.2, 2.0)), jumps=[(a, b) for a, b in zip(locs, d)])
    phi = BVScalar.affine(length, float(rng.uniform(-1.0, 1.0)), jumps=[(a, b) for a, b in zip(locs, tau)])
    return SkewPath.frenet(theta, phi)


def _random_jumps(seed=0, **_):
    omega = random_jump_datum(np.random.default_rng(seed))
    return Scenario(f"random-jumps-{seed}", omega, np.eye(3))


_BUILTINS = {
    "case-study": _case_study,
    "planar-jump": _planar_jump,
    "helix": _helix,
    "circle-2d": _circle_2d,
    "three-jumps": _three_jumps,
    "geometric-family": _geometric_family,
    "random-jumps": _random_jumps,
}
BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name: str, grid: int | None = None, **params) -> Scenario:
    """Named scenario; ``params`` are forwarded (``d``, ``tau``, ``seed``...)."""
    try:
        sc = _BUILTINS[name](**params)
    except KeyError:
        raise ScenarioError(f"unknown built-in scenario {name!r} (known: {', '.join(BUILTIN_NAMES)})") from None
    if grid is not None:
        sc = replace(sc, config=replace(sc.config, grid_size=int(grid)))
    return sc

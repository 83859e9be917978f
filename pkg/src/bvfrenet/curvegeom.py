"""Curve reconstruction and geometric invariants.

Total curvature and total absolute torsion are computed two ways: from the
datum (diffuse mass plus closed-form jump angles) and from inscribed
polygons (turning angles and angles between consecutive osculating planes).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
from scipy.spatial.distance import pdist

from .bvmeasure import SkewPath
from .solver import FramePath

__all__ = [
    "Curve",
    "PolygonalCurve",
    "GeomSummary",
    "CurveRefused",
    "integrate_tangent",
    "jump_angles",
    "jump_angles_arccos",
    "corner_plane_angle",
    "invariants_exact",
    "inscribe",
    "tantrix_variation",
    "discrete_frechet",
    "summarize",
]

ALIGNED_TOL = 1e-10


class CurveRefused(ValueError):
    """Curve reconstruction refused; the frame path is kept on ``.path``."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


@dataclass(frozen=True)
class Curve:
    """Arc-length parametrised curve sampled at ``s``.

    ``t_left`` / ``t_right`` are the one-sided unit tangents at each sample
    (they differ only at corners) and drive the Hermite interpolant of
    :meth:`at`.
    """

    s: np.ndarray
    points: np.ndarray
    t_left: np.ndarray
    t_right: np.ndarray
    frames: FramePath | None = field(default=None, repr=False)

    def __post_init__(self):
        for a in (self.s, self.points, self.t_left, self.t_right):
            a.setflags(write=False)

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def at(self, s) -> np.ndarray:
        """Cubic Hermite interpolation between samples, with one-sided tangents."""
        s = np.clip(np.asarray(s, dtype=float), self.s[0], self.s[-1])
        i = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, self.s.size - 2)
        h = self.s[i + 1] - self.s[i]
        u = ((s - self.s[i]) / h)[..., None]
        u2, u3 = u * u, u * u * u
        h00 = 2 * u3 - 3 * u2 + 1
        h10 = u3 - 2 * u2 + u
        h01 = -2 * u3 + 3 * u2
        h11 = u3 - u2
        hh = h[..., None]
        return (h00 * self.points[i] + h10 * hh * self.t_right[i]
                + h01 * self.points[i + 1] + h11 * hh * self.t_left[i + 1])

    def chord_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)


@dataclass(frozen=True)
class PolygonalCurve:
    """Inscribed polygon with its discrete curvature and torsion angles."""

    vertices: np.ndarray
    turning_angles: np.ndarray
    torsion_angles: np.ndarray
    modulus: float
    skipped_torsion: tuple = ()

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)))

    @property
    def total_curvature(self) -> float:
        """``K(p)``, the sum of turning angles."""
        return float(np.sum(self.turning_angles))

    @property
    def total_torsion(self) -> float:
        """Sum of the torsion angles ``psi_i``."""
        return float(np.sum(self.torsion_angles))


@dataclass
class GeomSummary:
    """Total curvature / absolute torsion from the datum and from a polygon.

    ``tat_projective`` replaces each binormal jump angle ``beta`` by
    ``pi - beta`` when ``d^2 + tau^2 cos r < 0`` (unoriented osculating
    planes); it is reported alongside ``tat_exact``, not instead of it.
    ``tat_corner_planes`` is the value inscribed polygons converge to: at a
    corner they pass through the plane spanned by ``t-`` and ``t+`` (see
    :func:`corner_plane_angle`).
    """

    tc_exact: float
    tat_exact: float
    length: float
    diffuse_tc_mass: float
    diffuse_tat_mass: float
    jump_tc_sum: float
    jump_tat_sum: float
    tc_bound: float
    tat_bound: float
    tat_projective: float
    tat_corner_planes: float
    tc_polygonal: float | None = None
    tat_polygonal: float | None = None
    polygon_segments: int | None = None
    polygon_length: float | None = None
    polygon_modulus: float | None = None
    skipped_torsion: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# ----------------------------------------------------------------------------
# reconstruction


def integrate_tangent(path: FramePath, theta_increasing: bool) -> Curve:
    """``gamma(s) = int_0^s t`` by the trapezoid rule, ``gamma(0) = 0``.

    Across a jump the left tangent closes the interval before it and the
    right tangent opens the one after, so the curve is continuous with a
    corner.

    Raises
    ------
    CurveRefused
        If ``theta_increasing`` is false; the curve is then not determined
        by the frame.
    """
    if not theta_increasing:
        raise CurveRefused(
            "theta is not strictly increasing, so the curve is not determined by the frame; "
            "the frame path is still available",
            path,
        )
    s = path.s
    t = path.tangent
    h = np.diff(s)
    steps = 0.5 * h[:, None] * (t[:-1] + t[1:])
    pts = np.vstack([np.zeros((1, t.shape[1])), np.cumsum(steps, axis=0)])
    # collapse duplicated jump nodes: first copy gives the left tangent
    first = np.concatenate([[True], h > 0])
    last = np.concatenate([h > 0, [True]])
    return Curve(s[first].copy(), pts[first], t[first].copy(), t[last].copy(), path)


# ----------------------------------------------------------------------------
# jump geometry


def _check_jump(d, tau):
    r = math.hypot(d, tau)
    if not 0.0 < r < math.pi:
        raise ValueError(f"jump magnitude sqrt(d^2 + tau^2) = {r!r} must lie in (0, pi)")
    return r


def jump_angles(d: float, tau: float):
    """Angles between the one-sided tangents, normals and binormals at a jump.

    Returns ``(angle_t, angle_n, angle_b)`` with ``angle_n = r = sqrt(d^2 + tau^2)``.
    Evaluated as ``2 arcsin(|d| sin(r/2) / r)``, which equals
    ``arccos((tau^2 + d^2 cos r) / r^2)`` without its loss of precision near 0.
    """
    r = _check_jump(d, tau)
    half = math.sin(0.5 * r) / r
    angle_t = 2.0 * math.asin(min(1.0, abs(d) * half))
    angle_b = 2.0 * math.asin(min(1.0, abs(tau) * half))
    return angle_t, r, angle_b


def jump_angles_arccos(d: float, tau: float):
    """Same triple via the arccos expressions (reference form)."""
    r = _check_jump(d, tau)
    r2 = r * r
    c = math.cos(r)
    angle_t = math.acos(max(-1.0, min(1.0, (tau * tau + d * d * c) / r2)))
    angle_b = math.acos(max(-1.0, min(1.0, (d * d + tau * tau * c) / r2)))
    return angle_t, r, angle_b


def corner_plane_angle(left, right) -> float:
    """Polygonal torsion picked up at a jump between frames ``left`` and ``right``.

    Fine inscribed polygons turn from the osculating plane ``b-`` to the
    corner plane ``span(t-, t+)`` and then to ``b+``; angles are between
    unoriented planes.  Without a corner (``t- = t+``) this is the angle
    between ``b-`` and ``b+``.
    """
    left, right = np.asarray(left, dtype=float), np.asarray(right, dtype=float)

    def plane_angle(u, v):
        a = float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))
        return min(a, math.pi - a)

    m = np.cross(left[:, 0], right[:, 0])
    if np.linalg.norm(m) < ALIGNED_TOL:
        return plane_angle(left[:, 2], right[:, 2])
    return plane_angle(left[:, 2], m) + plane_angle(m, right[:, 2])


def _jump_list(path: FramePath, omega: SkewPath):
    jumps = omega.jumps
    recs = path.jump_records
    if len(recs) != len(jumps):
        raise ValueError(f"path has {len(recs)} jump records but the datum has {len(jumps)} jumps")
    for r, j in zip(recs, jumps):
        if abs(r.location - j.location) > 1e-12 or abs(r.d - j.d) > 1e-12 or abs(r.tau - j.tau) > 1e-12:
            raise ValueError(f"jump record at s={r.location!r} does not match the datum")
    return jumps


def invariants_exact(path: FramePath, omega: SkewPath) -> GeomSummary:
    """TC and TAT from the datum: diffuse masses plus jump angles."""
    jumps = _jump_list(path, omega)
    diffuse_tc = omega.theta.diffuse_mass()
    diffuse_tat = omega.phi.diffuse_mass() if omega.n == 3 else 0.0
    jt = jb = jb_proj = jr = jc = 0.0
    for rec, j in zip(path.jump_records, jumps):
        if omega.n == 2:
            a_t, r, a_b = abs(j.d), abs(j.d), 0.0
        else:
            a_t, r, a_b = jump_angles(j.d, j.tau)
        jt += a_t
        jb += a_b
        jr += r
        flipped = j.d * j.d + j.tau * j.tau * math.cos(r) < 0.0
        jb_proj += (math.pi - a_b) if flipped else a_b
        if omega.n == 3:
            jc += corner_plane_angle(rec.left, rec.right)
    out = GeomSummary(
        tc_exact=diffuse_tc + jt,
        tat_exact=diffuse_tat + jb,
        length=path.length,
        diffuse_tc_mass=diffuse_tc,
        diffuse_tat_mass=diffuse_tat,
        jump_tc_sum=jt,
        jump_tat_sum=jb,
        # 2^{-1/2} |D^J Omega|(I) = sum of jump magnitudes
        tc_bound=diffuse_tc + jr,
        tat_bound=diffuse_tat + jr,
        tat_projective=diffuse_tat + jb_proj,
        tat_corner_planes=diffuse_tat + jc,
    )
    return out


# ----------------------------------------------------------------------------
# polygons


def _angles(u, v):
    if u.shape[-1] == 2:
        cn = np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    else:
        cn = np.linalg.norm(np.cross(u, v), axis=-1)
    return np.arctan2(cn, np.sum(u * v, axis=-1))


def _modulus(curve: Curve, knots: np.ndarray, vertices: np.ndarray) -> float:
    best = 0.0
    idx = np.searchsorted(curve.s, knots)
    for k in range(knots.size - 1):
        inner = curve.points[idx[k]:idx[k + 1]]
        arc = np.vstack([vertices[k:k + 1], inner, vertices[k + 1:k + 2]])
        best = max(best, float(np.max(pdist(arc))))
    return best


def inscribe(curve: Curve, k: int) -> PolygonalCurve:
    """Polygon with vertices ``gamma(n L / k)``, ``n = 0..k``.

    Torsion angles are the unoriented angles between consecutive normals
    ``sigma_i x sigma_{i+1}``; where two chords are (nearly) aligned the
    normal is undefined and the affected angles are skipped and listed.
    """
    k = int(k)
    if k < 3:
        raise ValueError("need at least 3 segments")
    knots = curve.s[0] + curve.length * np.arange(k + 1) / k
    vertices = curve.at(knots)
    sig = np.diff(vertices, axis=0)
    lens = np.linalg.norm(sig, axis=1)
    if np.any(lens <= 0):
        raise ValueError("inscribed polygon has a degenerate segment")
    turning = _angles(sig[:-1], sig[1:])
    if curve.dim == 2:
        torsion = np.zeros(0)
        skipped = ()
    else:
        normals = np.cross(sig[:-1], sig[1:])
        nn = np.linalg.norm(normals, axis=1)
        ok = nn >= ALIGNED_TOL * lens[:-1] * lens[1:]
        pair_ok = ok[:-1] & ok[1:]
        a = _angles(normals[:-1], normals[1:])
        psi = np.minimum(a, np.pi - a)
        torsion = psi[pair_ok]
        skipped = tuple(int(i) for i in np.flatnonzero(~pair_ok))
    return PolygonalCurve(vertices, turning, torsion, _modulus(curve, knots, vertices), skipped)


def tantrix_variation(path: FramePath):
    """``(Var_{S^2}(t), |Dt|(I))``.

    Smooth stretches contribute the angles between consecutive tangents to
    both; a jump contributes its geodesic angle to the first and its chord
    to the second.
    """
    t = path.tangent
    h = np.diff(path.s)
    ang = _angles(t[:-1], t[1:])
    smooth = h > 0
    var = float(np.sum(ang[smooth]))
    dt = var
    chords = np.linalg.norm(t[1:] - t[:-1], axis=1)
    var += float(np.sum(ang[~smooth]))
    dt += float(np.sum(chords[~smooth]))
    if not (2.0 / np.pi * var <= dt * (1 + 1e-12) + 1e-15 and dt <= var * (1 + 1e-12) + 1e-15):
        raise RuntimeError(f"tantrix variation bounds violated: Var={var!r}, |Dt|={dt!r}")
    return var, dt


# ----------------------------------------------------------------------------
# Frechet distance


@numba.njit(cache=True)
def _dfd(p, q):
    n, m = p.shape[0], q.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for c in range(p.shape[1]):
                diff = p[i, c] - q[j, c]
                acc += diff * diff
            d = math.sqrt(acc)
            if i == 0 and j == 0:
                v = d
            elif i == 0:
                v = max(cur[j - 1], d)
            elif j == 0:
                v = max(prev[0], d)
            else:
                v = max(min(prev[j], min(prev[j - 1], cur[j - 1])), d)
            cur[j] = v
        prev, cur = cur, prev
    return prev[m - 1]


def _as_points(c) -> np.ndarray:
    pts = c.points if isinstance(c, Curve) else c
    pts = np.ascontiguousarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ValueError("cannot compare an empty curve")
    return pts


def discrete_frechet(a, b) -> float:
    """Discrete Frechet distance between two sample sequences.

    Runs in ``O(n m)`` time and ``O(m)`` memory; accepts :class:`Curve`
    objects or ``(n, dim)`` arrays.
    """
    p, q = _as_points(a), _as_points(b)
    if p.shape[1] != q.shape[1]:
        raise ValueError("curves live in different dimensions")
    return float(_dfd(p, q))


def summarize(path: FramePath, omega: SkewPath, segments: int | None = None,
              curve: Curve | None = None) -> GeomSummary:
    """Exact invariants plus, if ``segments`` is given, polygonal estimates."""
    out = invariants_exact(path, omega)
    if segments:
        if curve is None:
            curve = integrate_tangent(path, omega.theta.is_strictly_increasing())
        poly = inscribe(curve, segments)
        out.tc_polygonal = poly.total_curvature
        out.tat_polygonal = poly.total_torsion if curve.dim == 3 else 0.0
        out.polygon_segments = int(segments)
        out.polygon_length = poly.length
        out.polygon_modulus = poly.modulus
        out.skipped_torsion = len(poly.skipped_torsion)
    return out

"""Scalar BV functions on ``(0, L)`` and the Sk(N)-valued datum built from them.

A :class:`BVScalar` is stored as its continuous (diffuse) part, a chain of
continuous pieces covering ``[0, L]``, plus an explicit list of jump atoms::

    u(s) = c(s) + sum_{s_k < s} [u](s_k)

with right-minus-left jump values.  The pointwise value at a jump is the
precise representative (mean of the one-sided limits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.integrate


__all__ = [
    "Affine",
    "Sampled",
    "Smooth",
    "Jump",
    "BVScalar",
    "DerivativeDecomposition",
    "SkewJump",
    "SkewPath",
    "GeometricJumpFamily",
    "CountableSkewPath",
    "JumpReport",
    "decompose",
    "one_sided_limits",
    "total_variation",
    "mollify",
    "truncate_jumps",
    "validate_jumps",
    "evaluation_grid",
    "bump_kernel",
]

DEFAULT_GRID = 4096
CONTINUITY_TOL = 1e-9
JUMP_CAP_MARGIN = 1e-9


# ----------------------------------------------------------------------------
# pieces of the continuous part


@dataclass(frozen=True)
class Affine:
    """``u(s) = intercept + slope * s`` on ``[start, end]`` (absolute ``s``)."""

    start: float
    end: float
    slope: float
    intercept: float = 0.0

    def value(self, s):
        return self.intercept + self.slope * np.asarray(s, dtype=float)

    def derivative(self, s):
        return np.full(np.shape(s), float(self.slope))

    def integral(self, x):
        # int_start^x u
        x = np.asarray(x, dtype=float)
        return self.intercept * (x - self.start) + 0.5 * self.slope * (x * x - self.start**2)

    def variation(self) -> float:
        return abs(self.slope) * (self.end - self.start)

    def kinks(self) -> tuple:
        return ()

    def min_rate(self) -> float:
        return float(self.slope)


@dataclass(frozen=True)
class Sampled:
    """Uniform samples on ``[start, end]``, linearly interpolated."""

    start: float
    end: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("sampled piece needs at least two values")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled piece contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.start, self.end, self.values.size)

    @property
    def step(self) -> float:
        return (self.end - self.start) / (self.values.size - 1)

    def _cell(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.floor((s - self.start) / self.step).astype(int)
        return s, np.clip(idx, 0, self.values.size - 2)

    def value(self, s):
        return np.interp(s, self.nodes, self.values)

    def derivative(self, s):
        _, idx = self._cell(s)
        return (self.values[idx + 1] - self.values[idx]) / self.step

    def integral(self, x):
        s, idx = self._cell(x)
        v = self.values
        cell_areas = 0.5 * (v[1:] + v[:-1]) * self.step
        cum = np.concatenate([[0.0], np.cumsum(cell_areas)])
        left = self.start + idx * self.step
        frac = s - left
        slope = (v[idx + 1] - v[idx]) / self.step
        return cum[idx] + v[idx] * frac + 0.5 * slope * frac * frac

    def variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values))))

    def kinks(self) -> tuple:
        return tuple(self.nodes[1:-1])

    def min_rate(self) -> float:
        return float(np.min(np.diff(self.values)) / self.step)


@dataclass(frozen=True, eq=False)
class Smooth:
    """A callable piece on ``[start, end]``.

    ``deriv`` and ``antiderivative`` are optional; when absent they are
    approximated by central differences and adaptive quadrature.
    ``kinks`` lists interior points where the derivative may jump.
    """

    start: float
    end: float
    func: Callable
    deriv: Callable | None = None
    antiderivative: Callable | None = None
    kinks_: tuple = ()

    def value(self, s):
        return np.asarray(np.vectorize(self.func, otypes=[float])(s), dtype=float)

    def derivative(self, s):
        if self.deriv is not None:
            return np.asarray(np.vectorize(self.deriv, otypes=[float])(s), dtype=float)
        h = 1e-6 * max(1.0, self.end - self.start)
        s = np.asarray(s, dtype=float)
        lo = np.maximum(s - h, self.start)
        hi = np.minimum(s + h, self.end)
        return (self.value(hi) - self.value(lo)) / (hi - lo)

    def integral(self, x):
        if self.antiderivative is not None:
            x = np.asarray(x, dtype=float)
            return np.asarray(self.antiderivative(x), dtype=float) - float(self.antiderivative(self.start))

        def one(xx):
            pts = [k for k in self.kinks_ if self.start < k < xx] or None
            return scipy.integrate.quad(self.func, self.start, xx, points=pts, limit=200)[0]

        return np.vectorize(one, otypes=[float])(x)

    def variation(self) -> float:
        pts = list(self.kinks_) or None
        return scipy.integrate.quad(
            lambda s: abs(float(self.derivative(s))), self.start, self.end, points=pts, limit=400
        )[0]

    def kinks(self) -> tuple:
        return tuple(self.kinks_)

    def min_rate(self) -> float:
        grid = np.linspace(self.start, self.end, 257)
        return float(np.min(self.derivative(grid)))


Piece = Affine | Sampled | Smooth


@dataclass(frozen=True)
class Jump:
    """Jump atom ``[u](location) = value`` (right minus left)."""

    location: float
    value: float


# ----------------------------------------------------------------------------
# scalar BV functions


class BVScalar:
    """Scalar function of bounded variation on ``(0, length)``.

    Parameters
    ----------
    length : float
        Domain length ``L > 0``.
    pieces : sequence of Affine, Sampled or Smooth
        Contiguous pieces covering ``[0, L]``; together they form the
        continuous part and must agree at shared breakpoints.
    jumps : iterable of Jump or (location, value) pairs
        Jump atoms in ``(0, L)``; zero values are dropped.
    increasing : bool
        Declare the function strictly increasing; checked on construction.
    """

    def __init__(self, length: float, pieces: Sequence[Piece], jumps: Iterable = (), increasing: bool = False):
        length = float(length)
        if not length > 0:
            raise ValueError("domain length must be positive")
        pieces = tuple(pieces)
        if not pieces:
            raise ValueError("at least one piece is required")
        if abs(pieces[0].start) > 1e-12 or abs(pieces[-1].end - length) > 1e-12 * max(1.0, length):
            raise ValueError("pieces must cover [0, L]")
        for a, b in zip(pieces[:-1], pieces[1:]):
            if abs(a.end - b.start) > 1e-12 * max(1.0, length):
                raise ValueError(f"pieces are not contiguous at {a.end!r} / {b.start!r}")
            va, vb = float(a.value(a.end)), float(b.value(b.start))
            if abs(va - vb) > CONTINUITY_TOL * max(1.0, abs(va)):
                raise ValueError(
                    f"continuous part is discontinuous at s={a.end!r} ({va!r} vs {vb!r}); "
                    "declare the difference as a jump instead"
                )
        for p in pieces:
            if not p.end > p.start:
                raise ValueError("pieces must have positive length")

        parsed = []
        for j in jumps:
            j = j if isinstance(j, Jump) else Jump(*j)
            j = Jump(float(j.location), float(j.value))
            if j.value == 0.0:
                continue
            if not 0.0 < j.location < length:
                raise ValueError(f"jump location {j.location!r} outside (0, {length!r})")
            parsed.append(j)
        parsed.sort(key=lambda j: j.location)
        locs = [j.location for j in parsed]
        if any(b <= a for a, b in zip(locs[:-1], locs[1:])):
            raise ValueError("jump locations must be pairwise distinct")

        self.length = length
        self.pieces = pieces
        self.jumps = tuple(parsed)
        self.increasing = bool(increasing)
        self._piece_ends = np.array([p.end for p in pieces])
        self._piece_offsets = None
        if increasing:
            if any(p.min_rate() < 1e-12 for p in pieces):
                raise ValueError("declared increasing, but a piece has slope < 1e-12")
            if any(j.value <= 0 for j in self.jumps):
                raise ValueError("declared increasing, but a jump is not positive")

    # -- constructors ------------------------------------------------------

    @classmethod
    def affine(cls, length, slope, intercept=0.0, jumps=(), increasing=False) -> "BVScalar":
        return cls(length, [Affine(0.0, length, slope, intercept)], jumps, increasing)

    @classmethod
    def constant(cls, length, value=0.0, jumps=()) -> "BVScalar":
        return cls(length, [Affine(0.0, length, 0.0, value)], jumps)

    @classmethod
    def from_function(cls, length, func, deriv=None, antiderivative=None, jumps=(), increasing=False):
        return cls(length, [Smooth(0.0, length, func, deriv, antiderivative)], jumps, increasing)

    @classmethod
    def build(cls, length, value, specs, jumps=(), increasing=False) -> "BVScalar":
        """Assemble a continuous part by continuation.

        ``specs`` is a sequence of ``("slope", end, slope)`` or
        ``("samples", end, values)`` tuples; each piece starts where the
        previous one ended and is shifted so the continuous part has no
        jumps.  ``value`` is the value at ``s = 0``.
        """
        pieces = []
        start, level = 0.0, float(value)
        for kind, end, payload in specs:
            end = float(end)
            if kind == "slope":
                slope = float(payload)
                pieces.append(Affine(start, end, slope, level - slope * start))
                level += slope * (end - start)
            elif kind == "samples":
                v = np.asarray(payload, dtype=float)
                v = v - v[0] + level
                pieces.append(Sampled(start, end, v))
                level = float(v[-1])
            else:
                raise ValueError(f"unknown piece kind {kind!r}")
            start = end
        return cls(length, pieces, jumps, increasing)

    def with_jumps(self, jumps) -> "BVScalar":
        return BVScalar(self.length, self.pieces, jumps, self.increasing)

    def continuous_part(self) -> "BVScalar":
        return BVScalar(self.length, self.pieces, (), self.increasing)

    # -- evaluation ---------------------------------------------------------

    def _piece_index(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self._piece_ends, s, side="left")
        return np.clip(idx, 0, len(self.pieces) - 1)

    def _by_piece(self, s, method):
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape)
        idx = self._piece_index(s)
        for i, p in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = getattr(p, method)(s[mask])
        return out

    def diffuse(self, s):
        """Continuous part ``c(s)``."""
        return self._by_piece(s, "value")

    def derivative(self, s):
        """Density of the absolutely continuous part (defined a.e.)."""
        return self._by_piece(s, "derivative")

    def jump_part(self, s, side: str = "precise"):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        for j in self.jumps:
            if side == "left":
                out += j.value * (s > j.location)
            elif side == "right":
                out += j.value * (s >= j.location)
            elif side == "precise":
                out += j.value * ((s > j.location) + 0.5 * (s == j.location))
            else:
                raise ValueError(f"side must be 'left', 'right' or 'precise', got {side!r}")
        return out

    def __call__(self, s, side: str = "precise"):
        s = np.asarray(s, dtype=float)
        return self.diffuse(s) + self.jump_part(s, side)

    def _offsets(self):
        if self._piece_offsets is None:
            acc, out = 0.0, []
            for p in self.pieces:
                out.append(acc)
                acc += float(p.integral(p.end))
            self._piece_offsets = np.array(out)
        return self._piece_offsets

    def antiderivative(self, x):
        """``int_0^x u`` with ``u`` extended constantly outside ``[0, L]``."""
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, self.length)
        idx = self._piece_index(xc)
        out = np.empty(x.shape)
        offs = self._offsets()
        for i, p in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = offs[i] + p.integral(xc[mask])
        for j in self.jumps:
            out += j.value * np.maximum(xc - j.location, 0.0)
        out += np.where(x < 0, x * self.value_at_start(), 0.0)
        out += np.where(x > self.length, (x - self.length) * self.value_at_end(), 0.0)
        return out

    def value_at_start(self) -> float:
        return float(self.diffuse(0.0))

    def value_at_end(self) -> float:
        return float(self.diffuse(self.length)) + sum(j.value for j in self.jumps)

    # -- structure ----------------------------------------------------------

    @property
    def breakpoints(self) -> np.ndarray:
        """Piece boundaries, piece kinks and jump locations inside ``(0, L)``."""
        pts = {p.end for p in self.pieces[:-1]}
        for p in self.pieces:
            pts.update(p.kinks())
        pts.update(j.location for j in self.jumps)
        return np.array(sorted(x for x in pts if 0.0 < x < self.length))

    @property
    def jump_locations(self) -> np.ndarray:
        return np.array([j.location for j in self.jumps])

    def diffuse_mass(self) -> float:
        """``|D^a u|(I)``, exact for affine and sampled pieces."""
        return float(sum(p.variation() for p in self.pieces))

    def jump_mass(self) -> float:
        return float(sum(abs(j.value) for j in self.jumps))

    def is_strictly_increasing(self) -> bool:
        """Declared increasing, or every piece rate and every jump is positive."""
        if self.increasing:
            return True
        return all(p.min_rate() >= 1e-12 for p in self.pieces) and all(j.value > 0 for j in self.jumps)

    def diffuse_increment(self) -> float:
        """``c(L) - c(0)`` (equals ``D̄u(I)``)."""
        return float(self.diffuse(self.length) - self.diffuse(0.0))

    def __repr__(self):
        return (
            f"BVScalar(length={self.length!r}, pieces={len(self.pieces)}, "
            f"jumps={[(j.location, j.value) for j in self.jumps]!r})"
        )


@dataclass(frozen=True)
class DerivativeDecomposition:
    """Split of ``Du`` into an absolutely continuous density and jump atoms."""

    grid: np.ndarray
    ac_density: np.ndarray
    jump_atoms: tuple
    ac_mass: float
    jump_mass: float

    @property
    def total(self) -> float:
        return self.ac_mass + self.jump_mass


def evaluation_grid(length: float, breakpoints=(), size: int = DEFAULT_GRID) -> np.ndarray:
    """Uniform grid with ``size`` intervals merged with ``breakpoints``."""
    base = np.linspace(0.0, length, int(size) + 1)
    pts = np.union1d(base, np.asarray(breakpoints, dtype=float))
    return pts[(pts >= 0.0) & (pts <= length)]


def decompose(u: BVScalar, grid=None) -> DerivativeDecomposition:
    """Derivative decomposition of ``u`` sampled on ``grid``.

    Cantor-like behaviour must be encoded as fine sampled pieces and is
    reported as absolutely continuous.
    """
    if grid is None:
        grid = evaluation_grid(u.length, u.breakpoints)
    grid = np.asarray(grid, dtype=float)
    atoms = tuple((j.location, j.value) for j in u.jumps)
    return DerivativeDecomposition(
        grid=grid,
        ac_density=u.derivative(grid),
        jump_atoms=atoms,
        ac_mass=u.diffuse_mass(),
        jump_mass=u.jump_mass(),
    )


def one_sided_limits(u: BVScalar, s: float):
    """``(u(s-), u(s+), (u(s-) + u(s+)) / 2)``; endpoints use ``u(0+)``, ``u(L-)``."""
    s = float(s)
    if s <= 0.0:
        v = u.value_at_start()
        return v, v, v
    if s >= u.length:
        v = u.value_at_end()
        return v, v, v
    left = float(u(s, side="left"))
    right = float(u(s, side="right"))
    return left, right, 0.5 * (left + right)


def total_variation(u: BVScalar) -> float:
    """``|Du|(I) = |D^a u|(I) + |D^J u|(I)``."""
    d = decompose(u, grid=np.array([0.0, u.length]))
    return d.ac_mass + d.jump_mass


# ----------------------------------------------------------------------------
# mollification


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


_BUMP_NODES, _BUMP_WEIGHTS = np.polynomial.legendre.leggauss(96)
_BUMP_NORM = float(np.sum(_BUMP_WEIGHTS * _bump(_BUMP_NODES)))


def bump_kernel(x):
    """Smooth even mollifier supported in ``(-1, 1)`` with unit integral."""
    return _bump(x) / _BUMP_NORM


def _bump_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    half = 0.5 * (x + 1.0)
    # int_{-1}^{x} rho = half-width-scaled Gauss-Legendre on [-1, x]
    nodes = -1.0 + half[..., None] * (_BUMP_NODES + 1.0)
    return np.sum(_BUMP_WEIGHTS * bump_kernel(nodes), axis=-1) * half


def _check_eps(u: BVScalar, eps: float):
    if not eps > 0:
        raise ValueError("eps must be positive")
    locs = [0.0] + [j.location for j in u.jumps] + [u.length]
    gap = min(b - a for a, b in zip(locs[:-1], locs[1:])) if u.jumps else math.inf
    if eps >= gap:
        raise ValueError(f"eps={eps!r} is not smaller than the jump spacing {gap!r}")


def mollify(u: BVScalar, eps: float, kernel: str = "box") -> BVScalar:
    """Lipschitz approximation of ``u`` by averaging over ``[s - eps, s + eps]``.

    ``kernel="box"`` is the plain running mean, evaluated exactly through
    the antiderivative; ``kernel="bump"`` convolves with a smooth mollifier.
    ``u`` is extended by its boundary values outside ``(0, L)``.
    """
    eps = float(eps)
    _check_eps(u, eps)
    length = u.length
    cont = u.continuous_part()
    kinks = set()
    edges = [p.end for p in u.pieces[:-1]] + [j.location for j in u.jumps] + [0.0, length]
    for p in u.pieces:
        if isinstance(p, Smooth):
            edges.extend(p.kinks())
    for b in edges:
        kinks.update((b - eps, b + eps))

    if kernel == "box":

        def func(s):
            return (u.antiderivative(s + eps) - u.antiderivative(s - eps)) / (2.0 * eps)

        def deriv(s):
            hi = np.minimum(np.asarray(s, dtype=float) + eps, length)
            lo = np.maximum(np.asarray(s, dtype=float) - eps, 0.0)
            return (u(hi) - u(lo)) / (2.0 * eps)

    elif kernel == "bump":
        nodes, weights = np.polynomial.legendre.leggauss(64)
        c0, c1 = cont.value_at_start(), cont.value_at_end()

        def _window(s):
            # kernel nodes restricted to the x with s - eps x inside [0, L]
            s = np.asarray(s, dtype=float)
            a = np.clip((s - length) / eps, -1.0, 1.0)[..., None]
            b = np.clip(s / eps, -1.0, 1.0)[..., None]
            x = a + 0.5 * (b - a) * (nodes + 1.0)
            return s, x, 0.5 * (b - a) * weights * bump_kernel(x)

        def func(s):
            s, x, w = _window(s)
            out = np.sum(w * cont.diffuse(s[..., None] - eps * x), axis=-1)
            out = out + c0 * (1.0 - _bump_cdf(s / eps)) + c1 * _bump_cdf((s - length) / eps)
            for j in u.jumps:
                out = out + j.value * _bump_cdf((s - j.location) / eps)
            return out

        def deriv(s):
            s, x, w = _window(s)
            out = np.sum(w * cont.derivative(s[..., None] - eps * x), axis=-1)
            for j in u.jumps:
                out = out + j.value * bump_kernel((s - j.location) / eps) / eps
            return out

    else:
        raise ValueError(f"kernel must be 'box' or 'bump', got {kernel!r}")

    cuts = sorted(k for k in kinks if 0.0 < k < length)
    edges = [0.0] + cuts + [length]
    pieces = [
        Smooth(a, b, lambda s, f=func: float(f(s)), lambda s, d=deriv: float(d(s)), None)
        for a, b in zip(edges[:-1], edges[1:])
    ]
    out = _VectorBV(length, pieces, func, deriv, increasing=False)
    out.increasing = u.increasing
    return out


class _VectorBV(BVScalar):
    """BVScalar whose continuous part is one vectorised callable.

    The per-piece split only records breakpoints; evaluation bypasses it.
    """

    def __init__(self, length, pieces, func, deriv, increasing=False):
        self._func = func
        self._deriv = deriv
        super().__init__(length, pieces, (), increasing)

    def diffuse(self, s):
        return np.asarray(self._func(np.asarray(s, dtype=float)), dtype=float)

    def derivative(self, s):
        return np.asarray(self._deriv(np.asarray(s, dtype=float)), dtype=float)

    def diffuse_mass(self) -> float:
        # composite 24-point Gauss-Legendre, 32 panels per piece
        x, w = np.polynomial.legendre.leggauss(24)
        total = 0.0
        for p in self.pieces:
            edges = np.linspace(p.start, p.end, 33)
            half = 0.5 * np.diff(edges)[:, None]
            t = half * (x + 1.0) + edges[:-1, None]
            total += float(np.sum(half * w * np.abs(self.derivative(t))))
        return total

    def with_jumps(self, jumps):
        raise TypeError("mollified functions carry no jumps")

    def continuous_part(self):
        return self


# ----------------------------------------------------------------------------
# the Sk(N)-valued datum


@dataclass(frozen=True)
class SkewJump:
    """Jump of the datum at ``location``: curvature jump ``d``, torsion jump ``tau``."""

    location: float
    d: float
    tau: float = 0.0

    @property
    def magnitude(self) -> float:
        """``sqrt(d^2 + tau^2)``, the rotation angle of the jump."""
        return math.hypot(self.d, self.tau)

    @property
    def mass(self) -> float:
        """``|D^J Omega|({s})`` in Frobenius norm."""
        return math.sqrt(2.0) * self.magnitude


class SkewPath:
    """Continuous-or-BV path of skew matrices ``Omega(s)``.

    ``entries`` maps upper-triangular index pairs ``(i, j)`` (0-based) to
    scalar BV functions; ``Omega[i, j] = u`` and ``Omega[j, i] = -u``.
    In dimension 3 the Frenet datum uses ``(0, 1) -> theta`` and
    ``(1, 2) -> phi``, i.e. ``Omega = -theta J3 - phi J1``.
    """

    def __init__(self, n: int, entries: dict):
        n = int(n)
        if n < 2:
            raise ValueError("dimension must be at least 2")
        lengths = set()
        clean = {}
        for (i, j), u in entries.items():
            if not 0 <= i < j < n:
                raise ValueError(f"entry index {(i, j)!r} must satisfy 0 <= i < j < {n}")
            lengths.add(u.length)
            clean[(int(i), int(j))] = u
        if not clean:
            raise ValueError("at least one entry is required")
        if len(lengths) != 1:
            raise ValueError("all entries must share the same domain length")
        self.n = n
        self.entries = clean
        self.length = lengths.pop()
        if n > 3 and any(u.jumps for u in clean.values()):
            raise ValueError("jumps are only supported in dimensions 2 and 3")
        if n == 3 and set(clean) - {(0, 1), (1, 2)} and any(u.jumps for u in clean.values()):
            raise ValueError("jumps in dimension 3 are supported only for the (theta, phi) datum")

    @classmethod
    def frenet(cls, theta: BVScalar, phi: BVScalar | None = None) -> "SkewPath":
        if phi is None:
            phi = BVScalar.constant(theta.length)
        return cls(3, {(0, 1): theta, (1, 2): phi})

    @classmethod
    def planar(cls, theta: BVScalar) -> "SkewPath":
        return cls(2, {(0, 1): theta})

    @property
    def theta(self) -> BVScalar:
        return self.entries[(0, 1)]

    @property
    def phi(self) -> BVScalar:
        return self.entries.get((1, 2)) or BVScalar.constant(self.length)

    @property
    def is_frenet(self) -> bool:
        return self.n == 3 and set(self.entries) <= {(0, 1), (1, 2)}

    def _assemble(self, s, getter):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape + (self.n, self.n))
        for (i, j), u in self.entries.items():
            v = getter(u, s)
            out[..., i, j] = v
            out[..., j, i] = -v
        return out

    def __call__(self, s, side: str = "precise"):
        return self._assemble(s, lambda u, x: u(x, side=side))

    def diffuse(self, s):
        """Continuous part ``Omega_bar(s)`` (jumps removed)."""
        return self._assemble(s, lambda u, x: u.diffuse(x))

    def derivative(self, s):
        return self._assemble(s, lambda u, x: u.derivative(x))

    @property
    def breakpoints(self) -> np.ndarray:
        pts = [u.breakpoints for u in self.entries.values()]
        return np.unique(np.concatenate(pts)) if pts else np.array([])

    @property
    def jumps(self) -> tuple:
        """Jumps as :class:`SkewJump` records, ordered by location."""
        if self.n == 2:
            return tuple(SkewJump(j.location, j.value, 0.0) for j in self.theta.jumps)
        th = {j.location: j.value for j in self.theta.jumps}
        ph = {j.location: j.value for j in self.phi.jumps} if (1, 2) in self.entries else {}
        return tuple(SkewJump(s, th.get(s, 0.0), ph.get(s, 0.0)) for s in sorted(set(th) | set(ph)))

    def jump_mass(self) -> float:
        """``|D^J Omega|(I)`` in Frobenius norm."""
        return float(sum(j.mass for j in self.jumps))

    def continuous_part(self) -> "SkewPath":
        return SkewPath(self.n, {k: u.continuous_part() for k, u in self.entries.items()})

    def with_jumps(self, jumps: Iterable[SkewJump]) -> "SkewPath":
        """Replace the jump set, keeping the continuous part."""
        jumps = list(jumps)
        entries = dict(self.entries)
        entries[(0, 1)] = self.theta.with_jumps([(j.location, j.d) for j in jumps])
        if self.n == 3:
            entries[(1, 2)] = self.phi.with_jumps([(j.location, j.tau) for j in jumps])
        elif any(j.tau for j in jumps):
            raise ValueError("planar data cannot carry torsion jumps")
        return SkewPath(self.n, entries)

    def mollify(self, eps: float, kernel: str = "box") -> "SkewPath":
        return SkewPath(self.n, {k: mollify(u, eps, kernel) for k, u in self.entries.items()})

    def __repr__(self):
        return f"SkewPath(n={self.n}, length={self.length!r}, jumps={len(self.jumps)})"


@dataclass(frozen=True)
class GeometricJumpFamily:
    """Countable jump family ``d_k = d0 * ratio**k``, ``tau_k = tau0 * ratio**k``.

    Jumps sit at ``s_k = L * (1 - 2**-k)`` for ``k >= k_start`` unless
    ``location`` is given.  ``ratio`` must lie in ``(0, 1)``.
    """

    d0: float
    tau0: float = 0.0
    ratio: float = 0.8
    k_start: int = 1
    location: Callable[[int, float], float] | None = None

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"jump ratio {self.ratio!r} gives a non-summable tail")
        if self.d0 < 0:
            raise ValueError("curvature jumps must be non-negative")

    def jump(self, k: int, length: float) -> SkewJump:
        scale = self.ratio**k
        loc = self.location(k, length) if self.location else length * (1.0 - 2.0**-k)
        return SkewJump(loc, self.d0 * scale, self.tau0 * scale)

    @property
    def unit_mass(self) -> float:
        return math.sqrt(2.0) * math.hypot(self.d0, self.tau0)

    def mass(self, k: int) -> float:
        return self.unit_mass * self.ratio**k

    def tail_mass(self, k_last: int) -> float:
        """``sum_{k > k_last} mass(k)``."""
        first = max(k_last + 1, self.k_start)
        return self.unit_mass * self.ratio**first / (1.0 - self.ratio)

    def total_mass(self) -> float:
        return self.tail_mass(self.k_start - 1)

    def count_above(self, threshold: float) -> int:
        """Largest ``k`` with ``mass(k) > threshold`` (``k_start - 1`` if none)."""
        if self.unit_mass == 0.0:
            return self.k_start - 1
        k = math.floor(math.log(threshold / self.unit_mass) / math.log(self.ratio))
        while self.mass(k) <= threshold:
            k -= 1
        while self.mass(k + 1) > threshold:
            k += 1
        return max(k, self.k_start - 1)


@dataclass(frozen=True)
class CountableSkewPath:
    """Jump-free Frenet datum plus a countable jump family."""

    base: SkewPath
    family: GeometricJumpFamily

    def __post_init__(self):
        if not self.base.is_frenet:
            raise ValueError("countable jump families need a 3D (theta, phi) datum")
        if self.base.jumps:
            raise ValueError("the base datum must be jump-free")

    @property
    def length(self) -> float:
        return self.base.length

    def jumps_up_to(self, k_last: int) -> list:
        return [self.family.jump(k, self.length) for k in range(self.family.k_start, k_last + 1)]

    def level_last_index(self, n: int) -> int:
        return self.family.count_above(1.0 / n)

    def jump_mass(self) -> float:
        return self.family.total_mass()


@dataclass
class JumpReport:
    """Outcome of :func:`validate_jumps`."""

    ok: bool
    violations: list = field(default_factory=list)
    checked: int = 0

    def __bool__(self):
        return self.ok


def truncate_jumps(omega, n: int) -> SkewPath:
    """Keep only the jumps with ``|D^J Omega|({s}) > 1/n``."""
    n = int(n)
    if n < 1:
        raise ValueError("truncation level must be >= 1")
    if isinstance(omega, CountableSkewPath):
        return omega.base.with_jumps(omega.jumps_up_to(omega.level_last_index(n)))
    kept = [j for j in omega.jumps if j.mass > 1.0 / n]
    return omega.with_jumps(kept)


def validate_jumps(omega: SkewPath, cap: float = math.pi - JUMP_CAP_MARGIN) -> JumpReport:
    """Check ``0 < sqrt(d^2 + tau^2) < pi`` at every jump.

    In dimension 2 the curvature jump must also be positive.
    """
    if omega.n not in (2, 3):
        raise ValueError("jump validation is defined for dimensions 2 and 3")
    report = JumpReport(ok=True)
    for j in omega.jumps:
        report.checked += 1
        r = j.magnitude
        reason = None
        if not r > 0:
            reason = "zero jump"
        elif r >= cap:
            reason = f"jump magnitude {r:.12g} is not below pi"
        elif omega.n == 2 and j.d <= 0:
            reason = f"planar jump {j.d:.12g} is not positive"
        if reason:
            report.ok = False
            report.violations.append({"location": j.location, "d": j.d, "tau": j.tau, "reason": reason})
    return report

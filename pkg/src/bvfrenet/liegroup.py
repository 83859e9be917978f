"""Small dense matrix primitives on Sk(N) and SO(N).

Skew-symmetric and rotation matrices are plain ``numpy`` arrays; the
``as_skew`` / ``as_rotation`` helpers validate them on entry.  Axis-angle
pairs are carried by :class:`AxisAngle`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "AxisAngle",
    "ScalarPath",
    "as_skew",
    "as_rotation",
    "hat",
    "vee",
    "generator",
    "rodrigues_exp",
    "rotation",
    "expm_skew",
    "log_rotation",
    "cayley",
    "inverse_cayley",
    "atomic_skew",
    "exp_path_derivative",
]

SKEW_TOL = 1e-12
ORTHO_TOL = 1e-10
UNIT_TOL = 1e-12
PI_MARGIN = 1e-9
CAYLEY_DET_TOL = 1e-12

_GENERATORS = {
    1: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
    2: np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]),
    3: np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
}


@dataclass(frozen=True)
class AxisAngle:
    """Rotation of ``angle`` radians about the unit vector ``axis``."""

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
            raise ValueError(f"axis must be a unit vector, got norm {np.linalg.norm(axis)!r}")
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "angle", float(self.angle))


class ScalarPath(NamedTuple):
    """A smooth scalar function of arc length with its derivative."""

    func: Callable[[float], float]
    deriv: Callable[[float], float]


def as_skew(a, tol: float = SKEW_TOL) -> np.ndarray:
    """Return ``a`` as a float array after checking ``a == -a.T``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise ValueError(f"expected a square matrix of order >= 2, got shape {a.shape}")
    err = np.max(np.abs(a + a.T))
    if err > tol:
        raise ValueError(f"matrix is not skew-symmetric (max |A + A^T| = {err:.3e})")
    return a


def as_rotation(r, tol: float = ORTHO_TOL) -> np.ndarray:
    """Return ``r`` as a float array after checking it lies in SO(N)."""
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 2:
        raise ValueError(f"expected a square matrix of order >= 2, got shape {r.shape}")
    err = np.linalg.norm(r.T @ r - np.eye(r.shape[0]))
    if err > tol:
        raise ValueError(f"matrix is not orthogonal (||R^T R - I||_F = {err:.3e})")
    if np.linalg.det(r) <= 0:
        raise ValueError("matrix has non-positive determinant")
    return r


def hat(v) -> np.ndarray:
    """Skew matrix ``K`` with ``K @ w == np.cross(v, w)``; batches over leading axes."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def vee(k) -> np.ndarray:
    """Inverse of :func:`hat` (axial vector of a 3x3 skew matrix)."""
    k = np.asarray(k, dtype=float)
    return np.stack([k[..., 2, 1], k[..., 0, 2], k[..., 1, 0]], axis=-1)


def generator(index: int) -> np.ndarray:
    """Canonical generator ``J_index`` of Sk(3), ``index`` in {1, 2, 3}.

    ``J_l @ v == np.cross(e_l, v)``.
    """
    try:
        return _GENERATORS[int(index)].copy()
    except KeyError:
        raise ValueError(f"generator index must be 1, 2 or 3, got {index!r}") from None


def rodrigues_exp(ax: AxisAngle) -> np.ndarray:
    """``I + sin(a) J + (1 - cos(a)) J^2`` with ``J = hat(axis)``."""
    j = hat(ax.axis)
    return np.eye(3) + np.sin(ax.angle) * j + (1.0 - np.cos(ax.angle)) * (j @ j)


def rotation(axis, angle: float) -> np.ndarray:
    """Rotation by ``angle`` about ``axis`` (normalised here)."""
    axis = np.asarray(axis, dtype=float)
    return rodrigues_exp(AxisAngle(axis / np.linalg.norm(axis), angle))


def _expm_skew3(b: np.ndarray) -> np.ndarray:
    # Batched Rodrigues; series branch keeps full precision for tiny angles.
    w = vee(b)
    theta = np.linalg.norm(w, axis=-1)
    small = theta < 1e-4
    t2 = theta * theta
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(theta) / theta)
        c = np.where(small, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, (1.0 - np.cos(theta)) / t2)
    b2 = b @ b
    return np.eye(3) + a[..., None, None] * b + c[..., None, None] * b2


def _expm_skew2(b: np.ndarray) -> np.ndarray:
    # exp(x * [[0, 1], [-1, 0]]) = [[cos x, sin x], [-sin x, cos x]]
    x = b[..., 0, 1]
    c, s = np.cos(x), np.sin(x)
    out = np.empty(b.shape)
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def expm_skew(b) -> np.ndarray:
    """Matrix exponential of skew matrices, batched over leading axes.

    Closed forms for N = 2 and N = 3; ``scipy.linalg.expm`` otherwise.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    if n == 2:
        return _expm_skew2(b)
    if n == 3:
        return _expm_skew3(b)
    flat = b.reshape(-1, n, n)
    return np.stack([scipy.linalg.expm(m) for m in flat]).reshape(b.shape)


def log_rotation(r) -> AxisAngle:
    """Axis-angle of a 3x3 rotation with angle in ``[0, pi)``.

    Raises
    ------
    ValueError
        If the rotation angle is within ``1e-9`` of pi, where the axis is
        ambiguous.
    """
    r = as_rotation(r)
    if r.shape != (3, 3):
        raise ValueError("log_rotation is defined for 3x3 rotations only")
    cos_a = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    w = 0.5 * vee(r - r.T)  # sin(a) * axis
    sin_a = np.linalg.norm(w)
    angle = float(np.arctan2(sin_a, cos_a))
    if angle > np.pi - PI_MARGIN:
        raise ValueError("rotation angle is pi (or too close to it); axis is ambiguous")
    if sin_a < 1e-12:
        return AxisAngle(np.array([1.0, 0.0, 0.0]), 0.0)
    if cos_a > -0.5:
        return AxisAngle(w / sin_a, angle)
    # Near pi the antisymmetric part loses precision; read the axis off
    # the symmetric part (R + R^T)/2 = cos(a) I + (1 - cos(a)) u u^T.
    sym = 0.5 * (r + r.T) - cos_a * np.eye(3)
    i = int(np.argmax(np.diag(sym)))
    u = sym[:, i] / np.sqrt(sym[i, i])
    if np.dot(u, w) < 0:
        u = -u
    return AxisAngle(u / np.linalg.norm(u), angle)


def cayley(a) -> np.ndarray:
    """Cayley transform ``(A + I)^{-1} (A - I)`` of a rotation.

    Raises
    ------
    ValueError
        If ``|det(A + I)| <= 1e-12``, i.e. ``A`` has eigenvalue -1.
    """
    a = as_rotation(a)
    eye = np.eye(a.shape[0])
    det = np.linalg.det(a + eye)
    if abs(det) <= CAYLEY_DET_TOL:
        raise ValueError(f"A + I is singular (det = {det:.3e}); A has eigenvalue -1")
    return np.linalg.solve(a + eye, a - eye)


def inverse_cayley(b) -> np.ndarray:
    """Inverse of :func:`cayley`: ``(I + B)(I - B)^{-1}``."""
    b = as_skew(b, tol=1e-10)
    eye = np.eye(b.shape[0])
    # (I + B)(I - B)^{-1} = ((I - B)^{-T} (I + B)^T)^T = solve(I + B, I - B)^T
    return np.linalg.solve((eye - b).T, (eye + b).T).T


def atomic_skew(a) -> np.ndarray:
    """Skew part ``(A^T - A) / 2`` of the jump rotation ``A``."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a.T - a)


def exp_path_derivative(f: ScalarPath, g: ScalarPath, h: ScalarPath, s: float) -> np.ndarray:
    """Left-trivialised derivative of ``s -> exp(X(s))``.

    ``X = [[0, f, h], [-f, 0, g], [-h, -g, 0]]``; returns the skew matrix
    ``B`` with ``d/ds exp(X) = exp(X) B``, assembled from ``rho = |(f, g, h)|``
    and the supplied derivatives.

    Raises
    ------
    ValueError
        If ``rho(s) <= 1e-12``.
    """
    fv, gv, hv = float(f.func(s)), float(g.func(s)), float(h.func(s))
    df, dg, dh = float(f.deriv(s)), float(g.deriv(s)), float(h.deriv(s))
    rho = np.sqrt(fv * fv + gv * gv + hv * hv)
    if rho <= 1e-12:
        raise ValueError(f"|X(s)| vanishes at s={s!r}; derivative formula is singular there")
    drho = (fv * df + gv * dg + hv * dh) / rho
    sn = np.sin(rho)
    cross = (1.0 - np.cos(rho)) / (rho * rho)

    def unit_rate(u, du):
        return (du * rho - u * drho) / (rho * rho)

    b12 = sn * unit_rate(fv, df) + fv / rho * drho + cross * (dg * hv - gv * dh)
    b13 = sn * unit_rate(hv, dh) + hv / rho * drho + cross * (gv * df - dg * fv)
    b23 = sn * unit_rate(gv, dg) + gv / rho * drho + cross * (fv * dh - df * hv)
    return np.array([[0.0, b12, b13], [-b12, 0.0, b23], [-b13, -b23, 0.0]])

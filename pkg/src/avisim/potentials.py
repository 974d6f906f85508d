"""Energy formulas and analytic gradients for every potential kind.

The ``_*`` kernels are numba-compiled and operate on raw arrays so the event
loop in :mod:`avisim.integrators` can call them without Python overhead. The
public functions wrap them with the typed parameter records used by
:class:`avisim.core.PotentialTerm`.

Kernels that can hit degenerate geometry return a status code next to their
result: ``OK``, ``WARN_COINCIDENT`` (coincident penalty points, zero gradient
returned) or ``ERR_DEGENERATE`` (hinge triangle with vanishing area).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

OK = 0
WARN_COINCIDENT = 1
ERR_DEGENERATE = 2

# triangle area below this fraction of squared hinge edge length is degenerate
DEGENERATE_AREA_RATIO = 1e-12


class DegenerateGeometryError(ValueError):
    """Raised when a potential cannot be evaluated on the given geometry."""


@dataclass(frozen=True)
class SpringParams:
    stiffness: float
    rest_length: float

    def __post_init__(self):
        if not self.stiffness >= 0:
            raise ValueError(f"spring stiffness must be >= 0, got {self.stiffness}")
        if not self.rest_length > 0:
            raise ValueError(f"spring rest_length must be > 0, got {self.rest_length}")


@dataclass(frozen=True)
class HingeParams:
    stiffness: float
    rest_angle: float

    def __post_init__(self):
        if not self.stiffness >= 0:
            raise ValueError(f"hinge stiffness must be >= 0, got {self.stiffness}")
        if not -math.pi < self.rest_angle < math.pi:
            raise ValueError(f"hinge rest_angle must lie in (-pi, pi), got {self.rest_angle}")


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty contact parameters.

    ``point`` and ``normal`` are only used by the point-plane kind; the normal
    must have unit length.
    """

    stiffness: float
    thickness: float
    point: tuple[float, ...] | None = None
    normal: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.stiffness >= 0:
            raise ValueError(f"penalty stiffness must be >= 0, got {self.stiffness}")
        if not self.thickness > 0:
            raise ValueError(f"penalty thickness must be > 0, got {self.thickness}")
        if (self.point is None) != (self.normal is None):
            raise ValueError("penalty plane needs both point and normal")
        if self.normal is not None:
            if len(self.point) != len(self.normal):
                raise ValueError("plane point and normal differ in dimension")
            norm = math.sqrt(sum(c * c for c in self.normal))
            if abs(norm - 1.0) > 1e-9:
                raise ValueError(f"plane normal must have unit length, got |n|={norm!r}")


@dataclass(frozen=True)
class GravityParams:
    """Uniform gravity field ``g`` acting on the stencil vertices.

    ``masses`` lists one mass per stencil vertex, in stencil order.
    """

    g: tuple[float, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        if any(not m > 0 for m in self.masses):
            raise ValueError("gravity masses must be strictly positive")


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _dist2(X, a, b):
    s = 0.0
    for j in range(X.shape[1]):
        r = X[a, j] - X[b, j]
        s += r * r
    return s


@njit(cache=True)
def _spring_energy(k, rest, X, a, b):
    stretch = math.sqrt(_dist2(X, a, b)) - rest
    return 0.5 * k * stretch * stretch


@njit(cache=True)
def _spring_gradient(k, rest, X, a, b, G, ra, rb):
    """Write the gradient rows of vertices ``a``, ``b`` into ``G[ra]``, ``G[rb]``."""
    length = math.sqrt(_dist2(X, a, b))
    # direction undefined at zero length
    c = 0.0 if length == 0.0 else k * (length - rest) / length
    for j in range(X.shape[1]):
        g = c * (X[a, j] - X[b, j])
        G[ra, j] = g
        G[rb, j] = -g


@njit(cache=True)
def _penalty_pp_energy(k, eta, X, a, b):
    overlap = eta - math.sqrt(_dist2(X, a, b))
    if overlap <= 0.0:
        return 0.0
    return 0.5 * k * overlap * overlap


@njit(cache=True)
def _penalty_pp_gradient(k, eta, X, a, b, G, ra, rb):
    length = math.sqrt(_dist2(X, a, b))
    overlap = eta - length
    status = OK
    c = 0.0
    if overlap > 0.0:
        if length == 0.0:
            status = WARN_COINCIDENT
        else:
            c = -k * overlap / length
    for j in range(X.shape[1]):
        g = c * (X[a, j] - X[b, j])
        G[ra, j] = g
        G[rb, j] = -g
    return status


@njit(cache=True)
def _plane_overlap(eta, P, po, no, X, a):
    # plane point P[po:po+d] and unit normal P[no:no+d]
    s = 0.0
    for j in range(X.shape[1]):
        s += (X[a, j] - P[po + j]) * P[no + j]
    return eta - s


@njit(cache=True)
def _penalty_plane_energy(k, eta, P, po, no, X, a):
    overlap = _plane_overlap(eta, P, po, no, X, a)
    if overlap <= 0.0:
        return 0.0
    return 0.5 * k * overlap * overlap


@njit(cache=True)
def _penalty_plane_gradient(k, eta, P, po, no, X, a, G, ra):
    overlap = max(_plane_overlap(eta, P, po, no, X, a), 0.0)
    for j in range(X.shape[1]):
        G[ra, j] = -k * overlap * P[no + j]


@njit(cache=True)
def _hinge_frame(X, i0, i1, i2, i3):
    """Shared edge ``e`` and face normals of the hinge, as scalars.

    Face 1 is (x0, x1, x2), face 2 is (x1, x0, x3); both normals are
    unnormalized cross products of the face edges. Returns
    ``(theta, status, e, n1, n2)`` with the vectors as 3-tuples.
    """
    ex, ey, ez = X[i1, 0] - X[i0, 0], X[i1, 1] - X[i0, 1], X[i1, 2] - X[i0, 2]
    ax, ay, az = X[i2, 0] - X[i0, 0], X[i2, 1] - X[i0, 1], X[i2, 2] - X[i0, 2]
    bx, by, bz = X[i3, 0] - X[i0, 0], X[i3, 1] - X[i0, 1], X[i3, 2] - X[i0, 2]
    # n1 = e x a, n2 = b x e
    n1 = (ey * az - ez * ay, ez * ax - ex * az, ex * ay - ey * ax)
    n2 = (by * ez - bz * ey, bz * ex - bx * ez, bx * ey - by * ex)
    e = (ex, ey, ez)
    e2 = ex * ex + ey * ey + ez * ez
    area1 = 0.5 * math.sqrt(n1[0] * n1[0] + n1[1] * n1[1] + n1[2] * n1[2])
    area2 = 0.5 * math.sqrt(n2[0] * n2[0] + n2[1] * n2[1] + n2[2] * n2[2])
    if e2 == 0.0 or area1 < DEGENERATE_AREA_RATIO * e2 or area2 < DEGENERATE_AREA_RATIO * e2:
        return 0.0, ERR_DEGENERATE, e, n1, n2
    cx = n1[1] * n2[2] - n1[2] * n2[1]
    cy = n1[2] * n2[0] - n1[0] * n2[2]
    cz = n1[0] * n2[1] - n1[1] * n2[0]
    sin_term = (cx * ex + cy * ey + cz * ez) / math.sqrt(e2)
    cos_term = n1[0] * n2[0] + n1[1] * n2[1] + n1[2] * n2[2]
    return math.atan2(sin_term, cos_term), OK, e, n1, n2


@njit(cache=True)
def _hinge_energy(k, rest, X, i0, i1, i2, i3):
    theta, status, _, _, _ = _hinge_frame(X, i0, i1, i2, i3)
    if status != OK:
        return 0.0, status
    dtheta = theta - rest
    return 0.5 * k * dtheta * dtheta, OK


@njit(cache=True)
def _hinge_gradient(k, rest, X, i0, i1, i2, i3, G, r0, r1, r2, r3):
    theta, status, e, n1, n2 = _hinge_frame(X, i0, i1, i2, i3)
    if status != OK:
        for j in range(3):
            G[r0, j] = 0.0
            G[r1, j] = 0.0
            G[r2, j] = 0.0
            G[r3, j] = 0.0
        return status
    n1sq = n1[0] * n1[0] + n1[1] * n1[1] + n1[2] * n1[2]
    n2sq = n2[0] * n2[0] + n2[1] * n2[1] + n2[2] * n2[2]
    len_e = math.sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2])
    # projections of the wing vertices onto the shared edge
    t2_from0 = 0.0
    t3_from0 = 0.0
    t2_from1 = 0.0
    t3_from1 = 0.0
    for j in range(3):
        t2_from0 += (X[i2, j] - X[i0, j]) * e[j]
        t3_from0 += (X[i3, j] - X[i0, j]) * e[j]
        t2_from1 += (X[i2, j] - X[i1, j]) * e[j]
        t3_from1 += (X[i3, j] - X[i1, j]) * e[j]
    inv_e = 1.0 / len_e
    c = k * (theta - rest)
    for j in range(3):
        u1 = n1[j] / n1sq
        u2 = n2[j] / n2sq
        G[r0, j] = -c * (t2_from1 * inv_e * u1 + t3_from1 * inv_e * u2)
        G[r1, j] = c * (t2_from0 * inv_e * u1 + t3_from0 * inv_e * u2)
        G[r2, j] = -c * len_e * u1
        G[r3, j] = -c * len_e * u2
    return OK


@njit(cache=True)
def _gravity_energy(P, po, X, sidx, s0, s1):
    """``-sum m_a g.x_a`` with ``g = P[po:po+d]`` and masses following it."""
    d = X.shape[1]
    total = 0.0
    for r in range(s1 - s0):
        a = sidx[s0 + r]
        s = 0.0
        for j in range(d):
            s += P[po + j] * X[a, j]
        total -= P[po + d + r] * s
    return total


# ---------------------------------------------------------------------------
# public, typed API
# ---------------------------------------------------------------------------


def _vec(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _pair(x_a, x_b):
    X = np.ascontiguousarray(np.stack([_vec(x_a), _vec(x_b)]))
    if X.ndim != 2:
        raise ValueError("points must be 1-D vectors")
    return X


def _hinge_points(x0, x1, x2, x3):
    X = np.ascontiguousarray(np.stack([_vec(x) for x in (x0, x1, x2, x3)]))
    if X.shape != (4, 3):
        raise ValueError(f"hinge points must be 3-vectors, got shape {X.shape[1:]}")
    return X


def spring_energy(params: SpringParams, x_a, x_b) -> float:
    """Return ``0.5 * k * (|x_a - x_b| - L)**2``."""
    return float(_spring_energy(params.stiffness, params.rest_length, _pair(x_a, x_b), 0, 1))


def spring_gradient(params: SpringParams, x_a, x_b) -> np.ndarray:
    X = _pair(x_a, x_b)
    out = np.empty_like(X)
    _spring_gradient(params.stiffness, params.rest_length, X, 0, 1, out, 0, 1)
    return out


def dihedral_angle(x0, x1, x2, x3) -> float:
    """Signed dihedral angle across edge (x0, x1) of faces (x0,x1,x2), (x1,x0,x3).

    Zero when the two faces are coplanar and unfolded; positive when the
    normals rotate in the positive sense about ``x1 - x0``.
    """
    theta, status, _, _, _ = _hinge_frame(_hinge_points(x0, x1, x2, x3), 0, 1, 2, 3)
    if status != OK:
        raise DegenerateGeometryError("hinge has a degenerate triangle")
    return float(theta)


def hinge_energy(params: HingeParams, x0, x1, x2, x3) -> float:
    """Return ``0.5 * k_b * (theta - rest_angle)**2`` for the dihedral ``theta``."""
    energy, status = _hinge_energy(params.stiffness, params.rest_angle,
                                   _hinge_points(x0, x1, x2, x3), 0, 1, 2, 3)
    if status != OK:
        raise DegenerateGeometryError("hinge has a degenerate triangle")
    return float(energy)


def hinge_gradient(params: HingeParams, x0, x1, x2, x3) -> np.ndarray:
    out = np.empty((4, 3))
    status = _hinge_gradient(params.stiffness, params.rest_angle,
                             _hinge_points(x0, x1, x2, x3), 0, 1, 2, 3, out, 0, 1, 2, 3)
    if status != OK:
        raise DegenerateGeometryError("hinge has a degenerate triangle")
    return out


def penalty_point_point_energy(params: PenaltyParams, x_a, x_b) -> float:
    """Return ``0.5 * k_c * max(0, eta - |x_a - x_b|)**2``."""
    return float(_penalty_pp_energy(params.stiffness, params.thickness, _pair(x_a, x_b), 0, 1))


def penalty_point_point_gradient(params: PenaltyParams, x_a, x_b) -> np.ndarray:
    """Gradient rows for ``x_a`` and ``x_b``; zero for coincident points."""
    X = _pair(x_a, x_b)
    out = np.empty_like(X)
    _penalty_pp_gradient(params.stiffness, params.thickness, X, 0, 1, out, 0, 1)
    return out


def _plane_args(params: PenaltyParams, x):
    if params.normal is None:
        raise ValueError("point-plane penalty needs a plane point and normal")
    X = np.atleast_2d(_vec(x))
    P = np.concatenate([_vec(params.point), _vec(params.normal)])
    if X.shape != (1, P.shape[0] // 2):
        raise ValueError(f"point has shape {np.shape(x)}, plane is {P.shape[0] // 2}-D")
    return P, X


def penalty_point_plane_energy(params: PenaltyParams, x) -> float:
    """Return ``0.5 * k_c * max(0, eta - (x - p).n)**2``."""
    P, X = _plane_args(params, x)
    d = X.shape[1]
    return float(_penalty_plane_energy(params.stiffness, params.thickness, P, 0, d, X, 0))


def penalty_point_plane_gradient(params: PenaltyParams, x) -> np.ndarray:
    P, X = _plane_args(params, x)
    d = X.shape[1]
    out = np.empty((1, d))
    _penalty_plane_gradient(params.stiffness, params.thickness, P, 0, d, X, 0, out, 0)
    return out[0]


def gravity_energy(g, masses, q) -> float:
    """Return ``-sum_a m_a g.x_a``; unbounded below.

    ``q`` holds one row per mass.
    """
    q = np.atleast_2d(_vec(q))
    masses = _vec(masses)
    if masses.shape[0] != q.shape[0]:
        raise ValueError(f"{masses.shape[0]} masses for {q.shape[0]} vertices")
    P = np.concatenate([_vec(g), masses])
    n = q.shape[0]
    return float(_gravity_energy(P, 0, q, np.arange(n), 0, n))


def gravity_gradient(g, masses) -> np.ndarray:
    """Constant gradient ``-m_a g`` for each vertex."""
    return -np.outer(_vec(masses), _vec(g))

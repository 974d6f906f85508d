"""Domain types and energy / gradient evaluation shared by all integrators.

Configurations and velocities are ``(N, d)`` float arrays (one row per
vertex, ``d`` in {2, 3}); ``as_flat`` / ``as_rows`` convert to and from the
flat ``d*N`` layout.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .potentials import (
    ERR_DEGENERATE,
    OK,
    WARN_COINCIDENT,
    DegenerateGeometryError,
    GravityParams,
    HingeParams,
    PenaltyParams,
    SpringParams,
    _gravity_energy,
    _hinge_energy,
    _hinge_gradient,
    _penalty_plane_energy,
    _penalty_plane_gradient,
    _penalty_pp_energy,
    _penalty_pp_gradient,
    _spring_energy,
    _spring_gradient,
)


class ContractError(ValueError):
    """Inputs violate a documented precondition (sizes, ranges, finiteness)."""


class DegenerateGeometryWarning(UserWarning):
    pass


SPRING, HINGE, GRAVITY, PENALTY_PP, PENALTY_PLANE = range(5)


class Kind(enum.Enum):
    SPRING = "Spring"
    HINGE_BEND = "HingeBend"
    GRAVITY = "Gravity"
    PENALTY_POINT_POINT = "PenaltyPointPoint"
    PENALTY_POINT_PLANE = "PenaltyPointPlane"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]


_KIND_CODES = {
    Kind.SPRING: SPRING,
    Kind.HINGE_BEND: HINGE,
    Kind.GRAVITY: GRAVITY,
    Kind.PENALTY_POINT_POINT: PENALTY_PP,
    Kind.PENALTY_POINT_PLANE: PENALTY_PLANE,
}

# None means "any size >= 1"
_STENCIL_SIZE = {
    Kind.SPRING: 2,
    Kind.HINGE_BEND: 4,
    Kind.GRAVITY: None,
    Kind.PENALTY_POINT_POINT: 2,
    Kind.PENALTY_POINT_PLANE: 1,
}

_PARAM_TYPE = {
    Kind.SPRING: SpringParams,
    Kind.HINGE_BEND: HingeParams,
    Kind.GRAVITY: GravityParams,
    Kind.PENALTY_POINT_POINT: PenaltyParams,
    Kind.PENALTY_POINT_PLANE: PenaltyParams,
}

TRANSLATION_INVARIANT = frozenset({Kind.SPRING, Kind.HINGE_BEND, Kind.PENALTY_POINT_POINT})


def as_rows(coords, dim: int) -> np.ndarray:
    """Reshape a flat ``d*N`` coordinate sequence into ``(N, d)`` rows."""
    flat = np.asarray(coords, dtype=np.float64).ravel()
    if flat.size % dim:
        raise ContractError(f"length {flat.size} is not a multiple of dimension {dim}")
    return flat.reshape(-1, dim)


def as_flat(rows) -> np.ndarray:
    return np.asarray(rows, dtype=np.float64).ravel()


def _check_rows(name, x, n=None, dim=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] not in (2, 3):
        raise ContractError(f"{name} must have shape (N, d) with d in {{2, 3}}, got {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ContractError(f"{name} has {x.shape[0]} vertices, expected {n}")
    if dim is not None and x.shape[1] != dim:
        raise ContractError(f"{name} has dimension {x.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ContractError(f"{name} contains non-finite entries")
    return x


@dataclass(frozen=True)
class MassModel:
    """Lumped (diagonal) vertex masses."""

    masses: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=np.float64).ravel()
        if m.size == 0:
            raise ContractError("mass model needs at least one vertex")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ContractError("every mass must be finite and strictly positive")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    def __len__(self):
        return self.masses.size

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 / self.masses


@dataclass(frozen=True)
class PotentialTerm:
    """One potential ``V^i`` acting on ``stencil`` with its own time step.

    ``step_ticks`` is the elemental step expressed in integer base ticks.
    """

    kind: Kind
    stencil: tuple[int, ...]
    params: SpringParams | HingeParams | GravityParams | PenaltyParams
    step_ticks: int = 1

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "stencil", tuple(int(i) for i in self.stencil))
        if not isinstance(self.params, _PARAM_TYPE[kind]):
            raise ContractError(f"{kind.value} expects {_PARAM_TYPE[kind].__name__}, "
                                f"got {type(self.params).__name__}")
        size = _STENCIL_SIZE[kind]
        if size is None:
            if len(self.stencil) < 1:
                raise ContractError(f"{kind.value} stencil must not be empty")
        elif len(self.stencil) != size:
            raise ContractError(f"{kind.value} stencil needs {size} vertices, "
                                f"got {len(self.stencil)}")
        if len(set(self.stencil)) != len(self.stencil):
            raise ContractError(f"stencil indices must be distinct: {self.stencil}")
        if isinstance(self.step_ticks, bool) or int(self.step_ticks) != self.step_ticks \
                or self.step_ticks < 1:
            raise ContractError(f"step_ticks must be a positive integer, got {self.step_ticks!r}")
        object.__setattr__(self, "step_ticks", int(self.step_ticks))
        if kind is Kind.GRAVITY and len(self.params.masses) != len(self.stencil):
            raise ContractError("gravity needs one mass per stencil vertex")
        if kind is Kind.PENALTY_POINT_PLANE and self.params.normal is None:
            raise ContractError("PenaltyPointPlane needs a plane point and normal")

    def validate(self, n_vertices: int, dim: int) -> None:
        """Check the stencil and parameter dimensions against a system size."""
        for i in self.stencil:
            if not 0 <= i < n_vertices:
                raise ContractError(f"stencil index {i} outside [0, {n_vertices})")
        if self.kind is Kind.HINGE_BEND and dim != 3:
            raise ContractError("HingeBend requires dimension 3")
        if self.kind is Kind.GRAVITY and len(self.params.g) != dim:
            raise ContractError(f"gravity vector has {len(self.params.g)} components, expected {dim}")
        if self.kind is Kind.PENALTY_POINT_PLANE and len(self.params.normal) != dim:
            raise ContractError(f"plane normal has {len(self.params.normal)} components, "
                                f"expected {dim}")

    def packed_params(self) -> list[float]:
        p = self.params
        if self.kind is Kind.SPRING:
            return [p.stiffness, p.rest_length]
        if self.kind is Kind.HINGE_BEND:
            return [p.stiffness, p.rest_angle]
        if self.kind is Kind.GRAVITY:
            return [*p.g, *p.masses]
        if self.kind is Kind.PENALTY_POINT_POINT:
            return [p.stiffness, p.thickness]
        return [p.stiffness, p.thickness, *p.point, *p.normal]


@dataclass
class SystemState:
    """Positions, velocities and the current tick of every vertex."""

    q: np.ndarray
    v: np.ndarray
    tick: int = 0
    tick_duration: float = 1.0

    def __post_init__(self):
        self.q = np.array(_check_rows("q", self.q), dtype=np.float64, order="C")
        self.v = np.array(_check_rows("v", self.v, *self.q.shape), dtype=np.float64, order="C")
        if int(self.tick) != self.tick or self.tick < 0:
            raise ContractError(f"tick must be a nonnegative integer, got {self.tick!r}")
        self.tick = int(self.tick)
        if not (self.tick_duration > 0 and math.isfinite(self.tick_duration)):
            raise ContractError(f"tick_duration must be positive, got {self.tick_duration!r}")

    @property
    def time(self) -> float:
        return self.tick * self.tick_duration

    @property
    def dim(self) -> int:
        return self.q.shape[1]

    def copy(self) -> "SystemState":
        return SystemState(self.q.copy(), self.v.copy(), self.tick, self.tick_duration)


@dataclass(frozen=True)
class TermTable:
    """Terms packed into flat arrays (CSR layout) for the compiled kernels."""

    kinds: np.ndarray
    stencil_ptr: np.ndarray
    stencil_idx: np.ndarray
    param_ptr: np.ndarray
    param_vals: np.ndarray
    steps: np.ndarray
    max_stencil: int = field(default=1)

    @classmethod
    def from_terms(cls, terms) -> "TermTable":
        terms = list(terms)
        stencils = [t.stencil for t in terms]
        params = [t.packed_params() for t in terms]
        return cls(
            kinds=np.array([t.kind.code for t in terms], dtype=np.int64),
            stencil_ptr=np.cumsum([0] + [len(s) for s in stencils], dtype=np.int64),
            stencil_idx=np.array([i for s in stencils for i in s], dtype=np.int64),
            param_ptr=np.cumsum([0] + [len(p) for p in params], dtype=np.int64),
            param_vals=np.array([x for p in params for x in p], dtype=np.float64),
            steps=np.array([t.step_ticks for t in terms], dtype=np.int64),
            max_stencil=max([len(s) for s in stencils], default=1),
        )

    def __len__(self):
        return self.kinds.shape[0]

    def args(self):
        return self.kinds, self.stencil_ptr, self.stencil_idx, self.param_ptr, self.param_vals


# ---------------------------------------------------------------------------
# compiled dispatch
# ---------------------------------------------------------------------------


@njit(cache=True)
def _term_energy(kind, sidx, s0, s1, P, p0, X):
    """Energy of the term with stencil ``sidx[s0:s1]`` and params from ``P[p0]``."""
    d = X.shape[1]
    if kind == SPRING:
        return _spring_energy(P[p0], P[p0 + 1], X, sidx[s0], sidx[s0 + 1]), OK
    if kind == HINGE:
        return _hinge_energy(P[p0], P[p0 + 1], X, sidx[s0], sidx[s0 + 1],
                             sidx[s0 + 2], sidx[s0 + 3])
    if kind == GRAVITY:
        return _gravity_energy(P, p0, X, sidx, s0, s1), OK
    if kind == PENALTY_PP:
        return _penalty_pp_energy(P[p0], P[p0 + 1], X, sidx[s0], sidx[s0 + 1]), OK
    return _penalty_plane_energy(P[p0], P[p0 + 1], P, p0 + 2, p0 + 2 + d, X, sidx[s0]), OK


@njit(cache=True)
def _term_gradient(kind, sidx, s0, s1, P, p0, X, out):
    """Write the stencil-local gradient rows into ``out``; return a status."""
    d = X.shape[1]
    if kind == SPRING:
        _spring_gradient(P[p0], P[p0 + 1], X, sidx[s0], sidx[s0 + 1], out, 0, 1)
        return OK
    if kind == HINGE:
        return _hinge_gradient(P[p0], P[p0 + 1], X, sidx[s0], sidx[s0 + 1],
                               sidx[s0 + 2], sidx[s0 + 3], out, 0, 1, 2, 3)
    if kind == GRAVITY:
        for r in range(s1 - s0):
            for j in range(d):
                out[r, j] = -P[p0 + d + r] * P[p0 + j]
        return OK
    if kind == PENALTY_PP:
        return _penalty_pp_gradient(P[p0], P[p0 + 1], X, sidx[s0], sidx[s0 + 1], out, 0, 1)
    _penalty_plane_gradient(P[p0], P[p0 + 1], P, p0 + 2, p0 + 2 + d, X, sidx[s0], out, 0)
    return OK


@njit(cache=True)
def _total_potential(kinds, sptr, sidx, pptr, pvals, X):
    total = 0.0
    for i in range(kinds.shape[0]):
        e, status = _term_energy(kinds[i], sidx, sptr[i], sptr[i + 1], pvals, pptr[i], X)
        if status == ERR_DEGENERATE:
            return 0.0, i
        total += e
    return total, -1


@njit(cache=True)
def _assemble_gradient(kinds, sptr, sidx, pptr, pvals, X, G, scratch):
    """Sum all term gradients into ``G``; return (error term, first warned term)."""
    G[:] = 0.0
    warned = -1
    for i in range(kinds.shape[0]):
        s0 = sptr[i]
        s1 = sptr[i + 1]
        status = _term_gradient(kinds[i], sidx, s0, s1, pvals, pptr[i], X, scratch)
        if status == ERR_DEGENERATE:
            return i, warned
        if status == WARN_COINCIDENT and warned < 0:
            warned = i
        for r in range(s1 - s0):
            a = sidx[s0 + r]
            for j in range(X.shape[1]):
                G[a, j] += scratch[r, j]
    return -1, warned


class GradientAssembler:
    """Reusable evaluator of the global gradient for a fixed term list."""

    def __init__(self, terms, n_vertices: int, dim: int):
        self.table = TermTable.from_terms(terms)
        self.n_vertices = n_vertices
        self.dim = dim
        self._scratch = np.empty((self.table.max_stencil, dim))

    def gradient(self, q: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty((self.n_vertices, self.dim))
        err, warned = _assemble_gradient(*self.table.args(), q, out, self._scratch)
        if err >= 0:
            raise DegenerateGeometryError(f"term {err}: degenerate hinge triangle")
        if warned >= 0:
            warnings.warn(f"term {warned}: coincident penalty points, zero force applied",
                          DegenerateGeometryWarning, stacklevel=2)
        return out

    def potential(self, q: np.ndarray) -> float:
        total, err = _total_potential(*self.table.args(), q)
        if err >= 0:
            raise DegenerateGeometryError(f"term {err}: degenerate hinge triangle")
        return total


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def kinetic_energy(mass: MassModel, v) -> float:
    """Return ``0.5 * sum_a m_a |v_a|^2``."""
    v = _check_rows("v", v, len(mass))
    return float(0.5 * np.dot(mass.masses, np.einsum("ij,ij->i", v, v)))


def _single(term: PotentialTerm, q):
    q = np.ascontiguousarray(_check_rows("q", q), dtype=np.float64)
    term.validate(q.shape[0], q.shape[1])
    st = np.array(term.stencil, dtype=np.int64)
    pr = np.array(term.packed_params(), dtype=np.float64)
    return q, st, pr


def potential_energy(term: PotentialTerm, q) -> float:
    q, st, pr = _single(term, q)
    energy, status = _term_energy(term.kind.code, st, 0, st.size, pr, 0, q)
    if status == ERR_DEGENERATE:
        raise DegenerateGeometryError(f"{term.kind.value} on {term.stencil}: degenerate triangle")
    return float(energy)


def potential_gradient(term: PotentialTerm, q) -> np.ndarray:
    """Gradient of one term, one row per stencil vertex (zero elsewhere)."""
    q, st, pr = _single(term, q)
    out = np.zeros((st.size, q.shape[1]))
    status = _term_gradient(term.kind.code, st, 0, st.size, pr, 0, q, out)
    if status == ERR_DEGENERATE:
        raise DegenerateGeometryError(f"{term.kind.value} on {term.stencil}: degenerate triangle")
    if status == WARN_COINCIDENT:
        warnings.warn(f"{term.kind.value} on {term.stencil}: coincident points, zero force",
                      DegenerateGeometryWarning, stacklevel=2)
    return out


def total_potential(terms, q) -> float:
    q = np.ascontiguousarray(_check_rows("q", q))
    for t in terms:
        t.validate(*q.shape)
    return GradientAssembler(terms, *q.shape).potential(q)


def total_energy(state: SystemState, mass: MassModel, terms) -> float:
    return kinetic_energy(mass, state.v) + total_potential(terms, state.q)


def linear_momentum(mass: MassModel, v) -> np.ndarray:
    v = _check_rows("v", v, len(mass))
    return mass.masses @ v


def angular_momentum(mass: MassModel, q, v):
    """``sum_a m_a x_a x v_a``: a 3-vector in 3D, a float in 2D."""
    q = _check_rows("q", q, len(mass))
    v = _check_rows("v", v, len(mass), q.shape[1])
    if q.shape[1] == 2:
        return float(mass.masses @ (q[:, 0] * v[:, 1] - q[:, 1] * v[:, 0]))
    return mass.masses @ np.cross(q, v)

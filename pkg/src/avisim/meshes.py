"""Desk-scale mesh builders: spring chains, triangulated plates, icospheres.

Rest lengths and rest angles are read off the built geometry, so every mesh
starts with zero elastic energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Kind, PotentialTerm
from .potentials import HingeParams, SpringParams, dihedral_angle

MESH_TYPES = ("Chain", "GridPlate", "ShellSphere")


@dataclass(frozen=True)
class MeshBuilderSpec:
    """What to build and with which material.

    ``counts`` is ``(n,)`` for Chain, ``(nx, ny)`` for GridPlate and
    ``(subdivisions,)`` for ShellSphere. ``size`` is the vertex spacing
    (Chain, GridPlate) or the radius (ShellSphere). ``boundary_mass``, when
    given, replaces the mass of GridPlate border vertices (heavy borders act
    as a clamp).
    """

    type: str
    counts: tuple[int, ...]
    size: float
    center: tuple[float, ...] = (0.0, 0.0, 0.0)
    velocity: tuple[float, ...] | None = None
    mass: float = 1.0
    spring_stiffness: float = 1.0
    hinge_stiffness: float = 0.0
    spring_step_ticks: int = 1
    hinge_step_ticks: int = 1
    boundary_mass: float | None = None
    dimension: int = 3

    def __post_init__(self):
        if self.type not in MESH_TYPES:
            raise ValueError(f"unknown mesh type {self.type!r}; expected one of {MESH_TYPES}")
        expected = {"Chain": 1, "GridPlate": 2, "ShellSphere": 1}[self.type]
        if len(self.counts) != expected:
            raise ValueError(f"{self.type} needs {expected} count(s), got {len(self.counts)}")
        low = 0 if self.type == "ShellSphere" else 1
        if any(int(c) != c or c < low for c in self.counts):
            raise ValueError(f"{self.type} counts must be integers >= {low}, got {self.counts}")
        if not self.size > 0:
            raise ValueError(f"{self.type} size must be positive, got {self.size}")
        if not self.mass > 0 or (self.boundary_mass is not None and not self.boundary_mass > 0):
            raise ValueError("mesh masses must be positive")
        if self.dimension not in (2, 3) or (self.type != "Chain" and self.dimension != 3):
            raise ValueError(f"{self.type} cannot be built in dimension {self.dimension}")
        if len(self.center) != self.dimension:
            raise ValueError(f"center has {len(self.center)} components, expected {self.dimension}")
        if self.velocity is not None and len(self.velocity) != self.dimension:
            raise ValueError(f"velocity has {len(self.velocity)} components, "
                             f"expected {self.dimension}")


@dataclass
class Mesh:
    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray
    springs: list[PotentialTerm] = field(default_factory=list)
    hinges: list[PotentialTerm] = field(default_factory=list)
    faces: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))

    @property
    def terms(self) -> list[PotentialTerm]:
        return self.springs + self.hinges

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [t.stencil for t in self.springs]


def _chain(n: int, spacing: float, dim: int):
    pos = np.zeros((n, dim))
    pos[:, 0] = spacing * (np.arange(n) - (n - 1) / 2)
    return pos, np.zeros((0, 3), dtype=np.int64), [(i, i + 1) for i in range(n - 1)]


def _grid(nx: int, ny: int, spacing: float):
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    pos = np.stack([(ii.ravel() - (nx - 1) / 2) * spacing,
                    (jj.ravel() - (ny - 1) / 2) * spacing,
                    np.zeros(nx * ny)], axis=1)

    def vid(i, j):
        return i * ny + j

    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces += [(a, b, c), (a, c, d)]
    return pos, np.array(faces, dtype=np.int64).reshape(-1, 3)


def _icosahedron():
    # poles on the z axis, two staggered rings of five
    z = 1 / math.sqrt(5)
    r = 2 / math.sqrt(5)
    verts = [(0.0, 0.0, 1.0)]
    verts += [(r * math.cos(2 * math.pi * k / 5), r * math.sin(2 * math.pi * k / 5), z)
              for k in range(5)]
    verts += [(r * math.cos(2 * math.pi * k / 5 + math.pi / 5),
               r * math.sin(2 * math.pi * k / 5 + math.pi / 5), -z) for k in range(5)]
    verts.append((0.0, 0.0, -1.0))
    faces = []
    for k in range(5):
        u0, u1 = 1 + k, 1 + (k + 1) % 5
        l0, l1 = 6 + k, 6 + (k + 1) % 5
        faces += [(0, u0, u1), (u0, l0, u1), (u1, l0, l1), (11, l1, l0)]
    return np.array(verts), faces


def _orient_outward(pos, faces):
    out = []
    for f in faces:
        a, b, c = (pos[i] for i in f)
        if np.dot(np.cross(b - a, c - a), a + b + c) < 0:
            f = (f[0], f[2], f[1])
        out.append(tuple(f))
    return out


def _icosphere(subdivisions: int):
    pos, faces = _icosahedron()
    verts = [tuple(p) for p in pos]
    for _ in range(subdivisions):
        midpoint = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                m = (np.array(verts[a]) + np.array(verts[b])) / 2
                verts.append(tuple(m / np.linalg.norm(m)))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    pos = np.array(verts)
    return pos, np.array(_orient_outward(pos, faces), dtype=np.int64)


def _edges_and_hinges(faces):
    """Unique edges in first-seen order, and (a, b, c, d) hinge stencils.

    A hinge over edge (a, b) has face (a, b, c) and face (b, a, d), both in
    the mesh's consistent winding.
    """
    directed = {}
    edges = []
    for f in faces:
        for r in range(3):
            a, b, c = int(f[r]), int(f[(r + 1) % 3]), int(f[(r + 2) % 3])
            directed[(a, b)] = c
            if (b, a) not in directed:
                edges.append((a, b))
    hinges = [(a, b, directed[(a, b)], directed[(b, a)])
              for a, b in edges if (b, a) in directed]
    return edges, hinges


def build_mesh(spec: MeshBuilderSpec, offset: int = 0) -> Mesh:
    """Build vertices, springs along edges and hinges across interior edges.

    Stencil indices are shifted by ``offset`` so the mesh can be appended to
    an existing vertex list.
    """
    if spec.type == "Chain":
        pos, faces, edges = _chain(spec.counts[0], spec.size, spec.dimension)
        hinges = []
    else:
        if spec.type == "GridPlate":
            pos, faces = _grid(spec.counts[0], spec.counts[1], spec.size)
        else:
            pos, faces = _icosphere(spec.counts[0])
            pos = pos * spec.size
        edges, hinges = _edges_and_hinges(faces)
    pos = pos + np.asarray(spec.center, dtype=np.float64)

    masses = np.full(len(pos), float(spec.mass))
    if spec.type == "GridPlate" and spec.boundary_mass is not None:
        nx, ny = spec.counts
        ii, jj = np.divmod(np.arange(len(pos)), ny)
        border = (ii == 0) | (ii == nx - 1) | (jj == 0) | (jj == ny - 1)
        masses[border] = spec.boundary_mass
    vel = np.zeros_like(pos)
    if spec.velocity is not None:
        vel[:] = spec.velocity

    springs = [
        PotentialTerm(Kind.SPRING, (a + offset, b + offset),
                      SpringParams(spec.spring_stiffness, float(np.linalg.norm(pos[a] - pos[b]))),
                      spec.spring_step_ticks)
        for a, b in edges
    ]
    hinge_terms = [
        PotentialTerm(Kind.HINGE_BEND, tuple(i + offset for i in h),
                      HingeParams(spec.hinge_stiffness, dihedral_angle(*pos[list(h)])),
                      spec.hinge_step_ticks)
        for h in hinges
    ]
    return Mesh(pos, vel, masses, springs, hinge_terms, faces + offset)

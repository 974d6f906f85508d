import numpy as np
import pytest

from avisim import Kind, total_potential
from avisim.meshes import MeshBuilderSpec, build_mesh


def _energy(mesh):
    return total_potential(mesh.terms, mesh.positions)


def test_chain_of_two():
    mesh = build_mesh(MeshBuilderSpec("Chain", (2,), 0.7, center=(0.0, 0.0), dimension=2))
    assert mesh.positions.shape == (2, 2)
    assert len(mesh.springs) == 1 and not mesh.hinges
    assert mesh.springs[0].params.rest_length == pytest.approx(0.7)
    assert _energy(mesh) == 0.0


def test_chain_counts():
    mesh = build_mesh(MeshBuilderSpec("Chain", (7,), 1.0))
    assert len(mesh.positions) == 7 and len(mesh.springs) == 6


def test_grid_plate_2x2():
    mesh = build_mesh(MeshBuilderSpec("GridPlate", (2, 2), 1.0))
    assert len(mesh.positions) == 4
    assert len(mesh.springs) == 5
    assert len(mesh.hinges) == 1  # the diagonal is the only interior edge
    assert len(mesh.faces) == 2


@pytest.mark.parametrize("nx, ny", [(3, 4), (5, 5)])
def test_grid_plate_counts(nx, ny):
    mesh = build_mesh(MeshBuilderSpec("GridPlate", (nx, ny), 0.5, hinge_stiffness=1.0))
    cells = (nx - 1) * (ny - 1)
    axis_edges = nx * (ny - 1) + ny * (nx - 1)
    assert len(mesh.springs) == axis_edges + cells
    interior = len(mesh.springs) - 2 * ((nx - 1) + (ny - 1))
    assert len(mesh.hinges) == interior
    assert np.allclose(mesh.positions.mean(axis=0), 0.0)
    assert _energy(mesh) == pytest.approx(0.0, abs=1e-20)


def test_grid_plate_boundary_mass():
    mesh = build_mesh(MeshBuilderSpec("GridPlate", (4, 3), 1.0, mass=0.5, boundary_mass=9.0))
    heavy = mesh.masses == 9.0
    assert heavy.sum() == 4 * 3 - 2 * 1
    assert np.all(mesh.masses[~heavy] == 0.5)


@pytest.mark.parametrize("s, verts, edges, faces", [(0, 12, 30, 20), (1, 42, 120, 80),
                                                    (2, 162, 480, 320)])
def test_shell_sphere_counts_and_euler(s, verts, edges, faces):
    mesh = build_mesh(MeshBuilderSpec("ShellSphere", (s,), 0.125, hinge_stiffness=1.0))
    assert (len(mesh.positions), len(mesh.springs), len(mesh.faces)) == (verts, edges, faces)
    assert len(mesh.positions) - len(mesh.springs) + len(mesh.faces) == 2
    assert len(mesh.hinges) == edges  # closed surface: every edge is interior
    assert np.allclose(np.linalg.norm(mesh.positions, axis=1), 0.125)


def test_shell_sphere_faces_point_outward_and_energy_vanishes():
    mesh = build_mesh(MeshBuilderSpec("ShellSphere", (1,), 2.0, center=(1, 2, 3),
                                      spring_stiffness=5.0, hinge_stiffness=3.0))
    p = mesh.positions
    c = np.array([1.0, 2, 3])
    for a, b, d in mesh.faces:
        normal = np.cross(p[b] - p[a], p[d] - p[a])
        assert normal @ ((p[a] + p[b] + p[d]) / 3 - c) > 0
    assert abs(_energy(mesh)) <= 1e-10 * 5.0


def test_offset_and_velocity():
    mesh = build_mesh(MeshBuilderSpec("Chain", (3,), 1.0, velocity=(0, 0, -2)), offset=10)
    assert [t.stencil for t in mesh.springs] == [(10, 11), (11, 12)]
    assert np.all(mesh.velocities == [0, 0, -2])
    assert all(t.kind is Kind.SPRING for t in mesh.terms)


@pytest.mark.parametrize("kwargs", [
    dict(type="Torus", counts=(1,), size=1.0),
    dict(type="Chain", counts=(0,), size=1.0),
    dict(type="GridPlate", counts=(2,), size=1.0),
    dict(type="ShellSphere", counts=(-1,), size=1.0),
    dict(type="Chain", counts=(3,), size=0.0),
    dict(type="Chain", counts=(3,), size=1.0, mass=0.0),
    dict(type="GridPlate", counts=(2, 2), size=1.0, dimension=2, center=(0, 0)),
    dict(type="Chain", counts=(3,), size=1.0, center=(0, 0)),
])
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValueError):
        MeshBuilderSpec(**kwargs)

"""JSON scenario documents: schema, validation, mesh expansion and round-trip.

All times in a document are integer tick counts plus one ``tick_duration``.
Optional ``mesh`` blocks are expanded into vertices and terms at load time
(appended after the explicit ``vertices``), and ``contacts`` blocks declare
penalty pairs between named mesh groups. :func:`dump_scenario` always writes
the expanded form.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .core import ContractError, Kind, MassModel, PotentialTerm, SystemState
from .integrators import AviRunner
from .meshes import MESH_TYPES, MeshBuilderSpec, build_mesh
from .potentials import GravityParams, HingeParams, PenaltyParams, SpringParams
from .schedule import MAX_TICKS, build_schedule

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 3}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "required": ["dimension", "tick_duration", "duration_ticks"],
    "additionalProperties": False,
    "properties": {
        "dimension": {"enum": [2, 3]},
        "tick_duration": _NUM,
        "duration_ticks": _POS_INT,
        "diagnostics_stride": _POS_INT,
        "output": {"type": "string"},
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["pos", "mass"],
                "additionalProperties": False,
                "properties": {"pos": _VEC, "vel": _VEC, "mass": _NUM},
            },
        },
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "stencil", "params"],
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": [k.value for k in Kind]},
                    "stencil": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                    "step_ticks": _POS_INT,
                    "params": {"type": "object"},
                },
            },
        },
        "mesh": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "type", "size"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "type": {"enum": list(MESH_TYPES)},
                    "n": {"type": "integer"},
                    "nx": {"type": "integer"},
                    "ny": {"type": "integer"},
                    "subdivisions": {"type": "integer"},
                    "size": _NUM,
                    "center": _VEC,
                    "velocity": _VEC,
                    "mass": _NUM,
                    "boundary_mass": _NUM,
                    "spring_stiffness": _NUM,
                    "hinge_stiffness": _NUM,
                    "spring_step_ticks": _POS_INT,
                    "hinge_step_ticks": _POS_INT,
                },
            },
        },
        "contacts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["between", "params"],
                "additionalProperties": False,
                "properties": {
                    "between": {"type": "array", "items": {"type": "string"},
                                "minItems": 2, "maxItems": 2},
                    "step_ticks": _POS_INT,
                    "params": {"type": "object"},
                },
            },
        },
    },
}

# kind -> (required keys, optional keys)
_PARAM_KEYS = {
    Kind.SPRING: ({"stiffness", "rest_length"}, set()),
    Kind.HINGE_BEND: ({"stiffness", "rest_angle"}, set()),
    Kind.GRAVITY: ({"g"}, {"masses"}),
    Kind.PENALTY_POINT_POINT: ({"stiffness", "thickness"}, set()),
    Kind.PENALTY_POINT_PLANE: ({"stiffness", "thickness", "point", "normal"}, set()),
}


class ScenarioError(ValueError):
    """Invalid scenario document; the message names the offending location."""


@dataclass
class Scenario:
    dimension: int
    tick_duration: float
    duration_ticks: int
    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray
    terms: list[PotentialTerm] = field(default_factory=list)
    diagnostics_stride: int = 100
    output: str | None = None
    # vertex index ranges of named mesh blocks, informational only
    groups: dict[str, tuple[int, int]] = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return self.positions.shape[0]

    def mass_model(self) -> MassModel:
        return MassModel(self.masses)

    def initial_state(self) -> SystemState:
        return SystemState(self.positions.copy(), self.velocities.copy(), 0, self.tick_duration)

    def runner(self, duration_ticks: int | None = None, stride: int | None = None,
               hook=None) -> AviRunner:
        duration = self.duration_ticks if duration_ticks is None else duration_ticks
        if not self.terms:
            raise ScenarioError("terms: a run needs at least one term to define time steps")
        return AviRunner(self.mass_model(), self.terms, self.initial_state(),
                         schedule=build_schedule(self.terms, duration),
                         stride=self.diagnostics_stride if stride is None else stride,
                         hook=hook)

    def to_dict(self) -> dict:
        doc = {
            "dimension": self.dimension,
            "tick_duration": self.tick_duration,
            "duration_ticks": self.duration_ticks,
            "diagnostics_stride": self.diagnostics_stride,
            "vertices": [{"pos": p.tolist(), "vel": v.tolist(), "mass": float(m)}
                         for p, v, m in zip(self.positions, self.velocities, self.masses)],
            "terms": [_term_to_dict(t) for t in self.terms],
        }
        if self.output is not None:
            doc["output"] = self.output
        return doc


def _term_to_dict(term: PotentialTerm) -> dict:
    p = term.params
    if term.kind is Kind.SPRING:
        params = {"stiffness": p.stiffness, "rest_length": p.rest_length}
    elif term.kind is Kind.HINGE_BEND:
        params = {"stiffness": p.stiffness, "rest_angle": p.rest_angle}
    elif term.kind is Kind.GRAVITY:
        params = {"g": list(p.g), "masses": list(p.masses)}
    elif term.kind is Kind.PENALTY_POINT_POINT:
        params = {"stiffness": p.stiffness, "thickness": p.thickness}
    else:
        params = {"stiffness": p.stiffness, "thickness": p.thickness,
                  "point": list(p.point), "normal": list(p.normal)}
    return {"kind": term.kind.value, "stencil": list(term.stencil),
            "step_ticks": term.step_ticks, "params": params}


def _where(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<document>"


def _make_params(kind: Kind, raw: dict, masses, where: str):
    required, optional = _PARAM_KEYS[kind]
    missing = required - raw.keys()
    if missing:
        raise ScenarioError(f"{where}.params: missing {sorted(missing)} for {kind.value}")
    extra = raw.keys() - required - optional
    if extra:
        raise ScenarioError(f"{where}.params: unexpected {sorted(extra)} for {kind.value}")
    try:
        if kind is Kind.SPRING:
            return SpringParams(float(raw["stiffness"]), float(raw["rest_length"]))
        if kind is Kind.HINGE_BEND:
            return HingeParams(float(raw["stiffness"]), float(raw["rest_angle"]))
        if kind is Kind.GRAVITY:
            g = tuple(float(x) for x in raw["g"])
            m = raw.get("masses")
            return GravityParams(g, tuple(float(x) for x in (m if m is not None else masses)))
        if kind is Kind.PENALTY_POINT_POINT:
            return PenaltyParams(float(raw["stiffness"]), float(raw["thickness"]))
        return PenaltyParams(float(raw["stiffness"]), float(raw["thickness"]),
                             tuple(float(x) for x in raw["point"]),
                             tuple(float(x) for x in raw["normal"]))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}.params: {exc}") from exc


def _mesh_spec(block: dict, dim: int, where: str) -> MeshBuilderSpec:
    kind = block["type"]
    keys = {"Chain": ("n",), "GridPlate": ("nx", "ny"), "ShellSphere": ("subdivisions",)}[kind]
    for key in keys:
        if key not in block:
            raise ScenarioError(f"{where}.{key}: required for {kind}")
    try:
        return MeshBuilderSpec(
            type=kind,
            counts=tuple(block[k] for k in keys),
            size=float(block["size"]),
            center=tuple(block.get("center", [0.0] * dim)),
            velocity=tuple(block["velocity"]) if "velocity" in block else None,
            mass=float(block.get("mass", 1.0)),
            spring_stiffness=float(block.get("spring_stiffness", 1.0)),
            hinge_stiffness=float(block.get("hinge_stiffness", 0.0)),
            spring_step_ticks=int(block.get("spring_step_ticks", 1)),
            hinge_step_ticks=int(block.get("hinge_step_ticks", 1)),
            boundary_mass=block.get("boundary_mass"),
            dimension=dim,
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def parse_scenario(doc: dict) -> Scenario:
    """Validate a decoded document and expand it into a :class:`Scenario`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ScenarioError(f"{_where(err.absolute_path)}: {err.message}")

    dim = doc["dimension"]
    tick_duration = float(doc["tick_duration"])
    if not (tick_duration > 0 and math.isfinite(tick_duration)):
        raise ScenarioError(f"tick_duration: must be positive, got {doc['tick_duration']}")
    duration = doc["duration_ticks"]

    pos, vel, mass = [], [], []
    for i, v in enumerate(doc.get("vertices", [])):
        where = f"vertices[{i}]"
        if len(v["pos"]) != dim:
            raise ScenarioError(f"{where}.pos: expected {dim} components, got {len(v['pos'])}")
        vv = v.get("vel", [0.0] * dim)
        if len(vv) != dim:
            raise ScenarioError(f"{where}.vel: expected {dim} components, got {len(vv)}")
        if not v["mass"] > 0:
            raise ScenarioError(f"{where}.mass: must be positive, got {v['mass']}")
        pos.append([float(x) for x in v["pos"]])
        vel.append([float(x) for x in vv])
        mass.append(float(v["mass"]))

    groups = {}
    mesh_terms = []
    for i, block in enumerate(doc.get("mesh", [])):
        where = f"mesh[{i}]"
        name = block["name"]
        if name in groups:
            raise ScenarioError(f"{where}.name: duplicate mesh name {name!r}")
        mesh = build_mesh(_mesh_spec(block, dim, where), offset=len(pos))
        groups[name] = (len(pos), len(pos) + len(mesh.positions))
        pos.extend(mesh.positions.tolist())
        vel.extend(mesh.velocities.tolist())
        mass.extend(mesh.masses.tolist())
        mesh_terms.extend(mesh.terms)

    terms = []
    for i, t in enumerate(doc.get("terms", [])):
        where = f"terms[{i}]"
        kind = Kind(t["kind"])
        for r, idx in enumerate(t["stencil"]):
            if not 0 <= idx < len(pos):
                raise ScenarioError(f"{where}.stencil[{r}]: vertex index {idx} outside "
                                    f"[0, {len(pos)})")
        params = _make_params(kind, t["params"], [mass[j] for j in t["stencil"]], where)
        terms.append(_make_term(kind, t["stencil"], params, t.get("step_ticks", 1), where))
    terms.extend(mesh_terms)

    for i, c in enumerate(doc.get("contacts", [])):
        where = f"contacts[{i}]"
        for r, name in enumerate(c["between"]):
            if name not in groups:
                raise ScenarioError(f"{where}.between[{r}]: unknown mesh {name!r}")
        (a0, a1), (b0, b1) = (groups[n] for n in c["between"])
        if a0 < b1 and b0 < a1:
            raise ScenarioError(f"{where}.between: groups overlap")
        params = _make_params(Kind.PENALTY_POINT_POINT, c["params"], None, where)
        step = c.get("step_ticks", 1)
        for a in range(a0, a1):
            for b in range(b0, b1):
                terms.append(_make_term(Kind.PENALTY_POINT_POINT, (a, b), params, step, where))

    if not pos:
        raise ScenarioError("vertices: scenario has no vertices")
    positions = np.array(pos, dtype=np.float64).reshape(-1, dim)
    for i, term in enumerate(terms):
        where = f"terms[{i}]" if i < len(doc.get("terms", [])) else f"expanded term {i}"
        try:
            term.validate(len(positions), dim)
        except ContractError as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
        if term.step_ticks > duration:
            raise ScenarioError(f"{where}.step_ticks: {term.step_ticks} exceeds "
                                f"duration_ticks {duration}")
    if duration >= MAX_TICKS:
        raise ScenarioError(f"duration_ticks: {duration} risks integer overflow")

    return Scenario(
        dimension=dim,
        tick_duration=tick_duration,
        duration_ticks=duration,
        positions=positions,
        velocities=np.array(vel, dtype=np.float64).reshape(-1, dim),
        masses=np.array(mass, dtype=np.float64),
        terms=terms,
        diagnostics_stride=doc.get("diagnostics_stride", 100),
        output=doc.get("output"),
        groups=groups,
    )


def _make_term(kind, stencil, params, step, where) -> PotentialTerm:
    try:
        return PotentialTerm(kind, tuple(stencil), params, step)
    except ContractError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document given as JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_scenario(doc)


def load_scenario_file(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return load_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def dump_scenario(scenario: Scenario) -> str:
    """Serialize to the expanded JSON form accepted by :func:`load_scenario`."""
    return json.dumps(scenario.to_dict(), indent=1)


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``"oscillator.json"``."""
    path = resources.files("avisim") / "scenarios" / name
    if not path.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return Path(str(path))

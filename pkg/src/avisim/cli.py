"""Command-line driver: ``avi-sim simulate|oracle|check``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .diagnostics import DiagnosticsRecord, Sample, analyze, write_csv
from .core import GradientAssembler
from .integrators import oracle_run
from .potentials import DegenerateGeometryError
from .scenario import ScenarioError, bundled_scenario, load_scenario_file
from .schedule import ScheduleError


def _resolve(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    try:
        return bundled_scenario(path.name)
    except ScenarioError:
        return path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avi-sim",
        description="Asynchronous variational integration of scenario files.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the asynchronous integrator")
    sim.add_argument("scenario")
    sim.add_argument("--out", help="diagnostics CSV destination")
    sim.add_argument("--duration-ticks", type=int, help="override the scenario duration")
    sim.add_argument("--stride", type=int, help="sample every K events")

    ora = sub.add_parser("oracle", help="run the RK4 reference integrator")
    ora.add_argument("scenario")
    ora.add_argument("--h", type=float, required=True, help="oracle time step")
    ora.add_argument("--out", help="diagnostics CSV destination")

    chk = sub.add_parser("check", help="validate a scenario without running it")
    chk.add_argument("scenario")
    return parser


def _simulate(args) -> int:
    scenario = load_scenario_file(_resolve(args.scenario))
    if args.stride is not None and args.stride < 1:
        raise ScenarioError("--stride must be >= 1")
    runner = scenario.runner(duration_ticks=args.duration_ticks, stride=args.stride)
    record, state = runner.run()
    out = args.out or scenario.output
    if out:
        write_csv(record, out)
    print(f"events {len(runner.schedule)}  final time {state.time:.9g}  "
          f"samples {len(record)}" + (f"  csv {out}" if out else ""))
    if len(record) >= 2:
        print(analyze(record).summary())
    for tag, t, detail in record.warnings[:10]:
        print(f"warning: {tag} at t={t:.9g} (term {detail})", file=sys.stderr)
    return 0


def _oracle(args) -> int:
    scenario = load_scenario_file(_resolve(args.scenario))
    t_final = scenario.duration_ticks * scenario.tick_duration
    mass = scenario.mass_model()
    traj = oracle_run(mass, scenario.terms, scenario.positions, scenario.velocities,
                      t_final, args.h, record_every=scenario.diagnostics_stride)
    assembler = GradientAssembler(scenario.terms, scenario.n_vertices, scenario.dimension)
    record = DiagnosticsRecord()
    for t, q, v in zip(traj.times, traj.q, traj.v):
        record.samples.append(Sample.from_state(mass, q, v, t, assembler.potential(q)))
    if args.out:
        write_csv(record, args.out)
    print(f"oracle t_final {t_final:.9g}  h {args.h:g}  samples {len(record)}"
          + (f"  csv {args.out}" if args.out else ""))
    if len(record) >= 2:
        print(analyze(record).summary())
    return 0


def _check(args) -> int:
    scenario = load_scenario_file(_resolve(args.scenario))
    print(f"ok: dimension {scenario.dimension}, {scenario.n_vertices} vertices, "
          f"{len(scenario.terms)} terms, {scenario.duration_ticks} ticks of "
          f"{scenario.tick_duration:g} s")
    return 0


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = {"simulate": _simulate, "oracle": _oracle, "check": _check}[args.command]
    try:
        return handler(args)
    except (ScenarioError, ScheduleError, DegenerateGeometryError, OSError, ValueError) as exc:
        print(f"avi-sim {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

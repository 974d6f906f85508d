import math

import numpy as np
import pytest

from avisim import (
    AviRunner,
    DegenerateGeometryError,
    GravityParams,
    HingeParams,
    Kind,
    MassModel,
    PenaltyParams,
    PotentialTerm,
    ScheduleError,
    SpringParams,
    SyncStepper,
    analyze,
    avi_run,
    linear_momentum,
    oracle_run,
    stable_step_estimate,
    sync_run,
    sync_step,
)
from avisim.core import GradientAssembler

from _support import OSC_REST, oscillator, state, stretch, three_mass_chain


def _free(n=2, dim=3):
    mass = MassModel(np.ones(n))
    idle = [PotentialTerm(Kind.SPRING, (0, 1), SpringParams(0.0, 1.0))]
    return mass, idle


def test_sync_step_free_flight():
    mass, idle = _free()
    stepper = SyncStepper(mass, idle, 0.3)
    q_prev = np.array([[0.0, 0, 0], [1, 1, 1]])
    q_cur = np.array([[0.5, 0, 0], [1, 2, 1]])
    assert np.array_equal(sync_step(stepper, q_prev, q_cur), 2 * q_cur - q_prev)


def test_sync_step_oscillator_example():
    mass, terms, q, _ = oscillator(q0=1.0)
    q_next = sync_step(SyncStepper(mass, terms, 0.1), q, q)
    assert stretch(q_next) == pytest.approx(0.99, abs=1e-13)


def test_sync_run_seeding_without_force_is_q0_plus_h_v0():
    mass, idle = _free()
    q0 = np.array([[0.0, 0, 0], [1, 0, 0]])
    v0 = np.array([[1.0, 2, 3], [0, 0, -1]])
    out = sync_run(SyncStepper(mass, idle, 0.25), q0, v0, 1)
    assert out.shape == (2, 2, 3)
    assert np.array_equal(out[0], q0) and np.array_equal(out[1], q0 + 0.25 * v0)


def test_sync_run_seeding_with_force_uses_half_kick():
    mass, terms, q0, v0 = oscillator(q0=1.0, v0=0.3)
    h = 0.1
    out = sync_run(SyncStepper(mass, terms, h), q0, v0, 1)
    # q1 = q0 + h v0 - h^2/2 * s0 in the oscillator coordinate
    assert stretch(out[1]) == pytest.approx(1.0 + h * 0.3 - 0.5 * h * h, abs=1e-14)


def test_sync_run_at_rest_without_force_stays_put():
    mass, idle = _free()
    q0 = np.array([[0.0, 0, 0], [1, 0, 0]])
    out = sync_run(SyncStepper(mass, idle, 0.1), q0, np.zeros_like(q0), 50)
    assert np.all(out == q0)


def test_sync_run_is_the_two_step_recursion():
    mass, terms, q0, v0 = three_mass_chain()
    stepper = SyncStepper(mass, terms, 0.05)
    out = stepper.run(q0, v0, 200)
    for i in range(1, 200):
        assert np.allclose(stepper.step(out[i - 1], out[i]), out[i + 1], rtol=0, atol=1e-12)


def test_sync_converges_to_cos_with_order_two():
    errors = []
    for h in (0.04, 0.02, 0.01):
        mass, terms, q0, v0 = oscillator()
        out = sync_run(SyncStepper(mass, terms, h), q0, v0, round(1 / h))
        errors.append(abs(stretch(out[-1]) - math.cos(1.0)))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(np.abs(orders - 2) < 0.05)


def test_sync_stepper_rejects_bad_input():
    mass, terms, q0, _ = oscillator()
    with pytest.raises(ValueError):
        SyncStepper(mass, terms, 0.0)
    with pytest.raises(ValueError):
        SyncStepper(mass, terms, 0.1).run(q0, q0, 0)
    with pytest.raises(ValueError):
        SyncStepper(mass, terms, 0.1).step(np.zeros((3, 2)), np.zeros((3, 2)))


def test_avi_uniform_steps_equal_sync():
    mass, terms, q0, v0 = three_mass_chain()
    h, n = 0.01, 1000
    expected = SyncStepper(mass, terms, h).run(q0, v0, n)
    runner = AviRunner(mass, terms, state(q0, v0, h), duration_ticks=n)
    got = [runner.state.q.copy()]
    for _ in range(n):
        runner.step()
        got.append(runner.state.q.copy())
    assert np.abs(np.array(got) - expected).max() <= 1e-12 * np.abs(expected).max()


def test_avi_first_event_is_pure_drift_when_forces_vanish():
    # springs at rest length exert no force, so event 0 only drifts
    mass = MassModel([1.0, 2.0])
    terms = [PotentialTerm(Kind.SPRING, (0, 1), SpringParams(5.0, 1.0), 3)]
    q0 = np.array([[0.0, 0.0], [1.0, 0.0]])
    v0 = np.array([[0.1, 0.2], [-0.3, 0.4]])
    runner = AviRunner(mass, terms, state(q0, v0, 0.5), duration_ticks=9)
    runner.step()
    assert runner.state.tick == 3
    assert np.array_equal(runner.state.q, q0 + (3 * 0.5) * v0)


def test_avi_first_event_applies_half_impulse():
    mass, terms, q0, v0 = oscillator(q0=1.0, v0=0.0, step_ticks=2)
    runner = AviRunner(mass, terms, state(q0, v0, 0.05), duration_ticks=10)
    runner.step()
    # each mass gets -1/2 * (2 * 0.05) * grad / m, then drifts for 2 ticks
    h = 2 * 0.05
    assert stretch(runner.state.q) == pytest.approx(1.0 - 0.5 * h * h, abs=1e-14)


def test_avi_momentum_with_step_ratio_two_to_three():
    mass, terms, q0, v0 = three_mass_chain(2, 3)
    p0 = linear_momentum(mass, v0)
    record, final = avi_run(mass, terms, state(q0, v0, 0.01), 30000, stride=500)
    p = record.momenta()
    assert np.abs(p - p0).max() <= 1e-12 * np.linalg.norm(p0)
    assert np.abs(linear_momentum(mass, final.v) - p0).max() <= 1e-12 * np.linalg.norm(p0)


def test_zero_potential_motion_is_uniform_and_energy_exact():
    mass, idle = _free()
    q0 = np.array([[0.0, 0, 0], [1, 0, 0]])
    v0 = np.array([[1.0, 2, 3], [-1, 0.5, 0]])
    record, final = avi_run(mass, idle, state(q0, v0, 0.5), 40, stride=7)
    assert np.allclose(final.q, q0 + 20.0 * v0, rtol=1e-15, atol=1e-13)
    assert np.array_equal(final.v, v0)
    assert np.all(record.total == record.total[0])


def test_point_bouncing_on_plane_keeps_energy_bounded():
    mass = MassModel([1.0])
    terms = [
        PotentialTerm(Kind.GRAVITY, (0,), GravityParams((0.0, -9.81), (1.0,)), 10),
        PotentialTerm(Kind.PENALTY_POINT_PLANE, (0,),
                      PenaltyParams(1e4, 0.05, (0.0, 0.0), (0.0, 1.0)), 1),
    ]
    q0 = np.array([[0.0, 1.0]])
    v0 = np.array([[0.5, 0.0]])
    assert 1e-4 < stable_step_estimate(terms[1], mass)
    heights, vys = [], []
    record, final = avi_run(mass, terms, state(q0, v0, 1e-4), 100000, stride=50,
                            hook=lambda k, s, st: (heights.append(st.q[0, 1]),
                                                   vys.append(st.v[0, 1])))
    report = analyze(record)
    assert report.relative_band_halfwidth < 1e-3
    assert abs(report.least_squares_slope * report.duration) < 1e-4 * report.initial_energy
    # several bounces, none tunnelling through the plane
    assert np.sum(np.diff(np.sign(vys)) > 0) >= 3
    assert min(heights) > 0.0


def test_runner_step_then_run_matches_plain_run():
    mass, terms, q0, v0 = three_mass_chain(2, 5)
    _, plain = avi_run(mass, terms, state(q0, v0, 0.01), 997, stride=13)
    runner = AviRunner(mass, terms, state(q0, v0, 0.01), duration_ticks=997, stride=13)
    for _ in range(17):
        runner.step()
    _, mixed = runner.run()
    assert np.array_equal(plain.q, mixed.q) and np.array_equal(plain.v, mixed.v)


def test_runner_is_deterministic():
    mass, terms, q0, v0 = three_mass_chain(3, 7)
    a, sa = avi_run(mass, terms, state(q0, v0, 0.01), 5000, stride=10)
    b, sb = avi_run(mass, terms, state(q0, v0, 0.01), 5000, stride=10)
    assert [s.row() for s in a.samples] == [s.row() for s in b.samples]
    assert np.array_equal(sa.q, sb.q)


def test_sampling_stride_and_hook():
    mass, terms, q0, v0 = three_mass_chain(2, 3)
    seen = []
    runner = AviRunner(mass, terms, state(q0, v0, 0.01), duration_ticks=30, stride=4,
                       hook=lambda k, sample, st: seen.append((k, sample.time, st.tick)))
    record, final = runner.run()
    n_events = len(runner.schedule)
    assert [k for k, _, _ in seen] == list(range(0, n_events - 1, 4)) + [n_events - 1]
    assert all(math.isclose(t, tick * 0.01) for _, t, tick in seen)
    assert len(record) == len(seen) and final.tick == 30
    with pytest.raises(ScheduleError):
        runner.step()


def test_runner_validation():
    mass, terms, q0, v0 = three_mass_chain()
    with pytest.raises(ValueError):
        AviRunner(MassModel([1.0, 1.0]), terms, state(q0, v0, 0.1), duration_ticks=5)
    with pytest.raises(ValueError):
        AviRunner(mass, terms, state(q0, v0, 0.1))
    with pytest.raises(ValueError):
        AviRunner(mass, terms, state(q0, v0, 0.1), duration_ticks=5, stride=0)
    s = state(q0, v0, 0.1)
    s.tick = 3
    with pytest.raises(ValueError):
        AviRunner(mass, terms, s, duration_ticks=5)


def test_degenerate_hinge_during_run_raises():
    mass = MassModel(np.ones(4))
    terms = [PotentialTerm(Kind.HINGE_BEND, (0, 1, 2, 3), HingeParams(1.0, 0.0))]
    q0 = np.array([[0.0, 0, 0], [1, 0, 0], [0.5, 1, 0], [0.5, -1, 0]])
    v0 = np.zeros_like(q0)
    v0[2] = [0.0, -1.0, 0.0]  # wing vertex collapses onto the hinge edge at t=1
    with pytest.raises(DegenerateGeometryError):
        avi_run(mass, terms, state(q0, v0, 0.01), 200)


def test_coincident_penalty_points_are_recorded_as_warnings():
    mass = MassModel([1.0, 1.0])
    terms = [PotentialTerm(Kind.PENALTY_POINT_POINT, (0, 1), PenaltyParams(1.0, 1.0))]
    q0 = np.zeros((2, 3))
    record, _ = avi_run(mass, terms, state(q0, np.zeros_like(q0), 0.1), 5)
    assert record.warnings and record.warnings[0][0] == "coincident_penalty_points"


def test_oracle_matches_cos_at_one():
    mass, terms, q0, v0 = oscillator()
    traj = oracle_run(mass, terms, q0, v0, 1.0, 1e-4)
    assert traj.times[-1] == 1.0
    assert abs(stretch(traj.q[-1]) - math.cos(1.0)) <= 1e-8


def test_oracle_free_particle_is_linear():
    mass, idle = _free()
    q0 = np.array([[0.0, 0, 0], [1, 0, 0]])
    v0 = np.array([[1.0, -2, 0.5], [0, 0, 0]])
    traj = oracle_run(mass, idle, q0, v0, 2.0, 0.3, record_every=2)
    assert traj.times[-1] == 2.0 and traj.times[0] == 0.0
    for t, q in zip(traj.times, traj.q):
        assert np.allclose(q, q0 + t * v0, rtol=0, atol=1e-14)


def test_sync_approaches_oracle_at_second_order():
    mass, terms, q0, v0 = three_mass_chain()
    ref = oracle_run(mass, terms, q0, v0, 1.0, 1e-3).q[-1]
    errs = []
    for h in (0.02, 0.01):
        out = SyncStepper(mass, terms, h).run(q0, v0, round(1 / h))
        errs.append(np.abs(out[-1] - ref).max())
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.1)


def test_stable_step_examples():
    two = MassModel([1.0, 1.0])
    spring = PotentialTerm(Kind.SPRING, (0, 1), SpringParams(1.0, 1.0))
    assert stable_step_estimate(spring, two) == pytest.approx(2 / math.sqrt(2))
    slack = PotentialTerm(Kind.SPRING, (0, 1), SpringParams(0.0, 1.0))
    assert stable_step_estimate(slack, two) == math.inf
    plane = PotentialTerm(Kind.PENALTY_POINT_PLANE, (0,),
                          PenaltyParams(100.0, 1.0, (0, 0, 0), (0, 0, 1)))
    assert stable_step_estimate(plane, MassModel([1.0])) == pytest.approx(0.2)
    hinge = PotentialTerm(Kind.HINGE_BEND, (0, 1, 2, 3), HingeParams(1.0, 0.0))
    assert stable_step_estimate(hinge, MassModel(np.ones(4))) is None


def test_assembler_agrees_with_oscillator_force():
    mass, terms, q0, _ = oscillator(q0=0.7)
    g = GradientAssembler(terms, 2, 2).gradient(q0)
    assert g[1, 0] == pytest.approx(0.7) and g[0, 0] == pytest.approx(-0.7)
    assert OSC_REST == terms[0].params.rest_length

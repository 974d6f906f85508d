"""Synchronous and asynchronous variational integrators, plus an RK4 reference.

Both variational integrators are explicit because the mass matrix is
diagonal. Initial conditions are ``(q(0), v(0))``; the first half-step
velocity is ``v(0) - (h/2) M^-1 grad V(q(0))`` (each term contributing with
its own step in the asynchronous case), which keeps the trajectory
second-order accurate. Energy samples use the event velocity
``(v_{k-1/2} + v_{k+1/2}) / 2``.
"""
from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    Kind,
    MassModel,
    PotentialTerm,
    SystemState,
    TermTable,
    GradientAssembler,
    _term_gradient,
    _total_potential,
)
from .diagnostics import DiagnosticsRecord, Sample
from .potentials import ERR_DEGENERATE, WARN_COINCIDENT, DegenerateGeometryError
from .schedule import EventSchedule, ScheduleError, build_schedule

# warnings beyond this count are counted but not itemized
WARNING_CAPACITY = 1000


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    v: np.ndarray | None = None


# ---------------------------------------------------------------------------
# synchronous integrator
# ---------------------------------------------------------------------------


@dataclass
class SyncStepper:
    """Fixed-step variational integrator over the summed potential.

    Term ``step_ticks`` are ignored; every term acts at every step ``h``.
    """

    mass: MassModel
    terms: list[PotentialTerm]
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step h must be positive, got {self.h}")
        self.terms = list(self.terms)
        self._assemblers = {}

    def _grad(self, q):
        key = q.shape
        if key not in self._assemblers:
            for t in self.terms:
                t.validate(*q.shape)
            self._assemblers[key] = GradientAssembler(self.terms, *q.shape)
        return self._assemblers[key].gradient(q)

    def _check(self, q):
        q = np.ascontiguousarray(q, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != len(self.mass):
            raise ValueError(f"configuration shape {q.shape} does not match "
                             f"{len(self.mass)} masses")
        return q

    def step(self, q_prev, q_cur) -> np.ndarray:
        """Solve the discrete Euler-Lagrange equation for ``q_next``.

        ``m_a (q_next - 2 q_cur + q_prev) / h^2 = -grad_a V(q_cur)``.
        """
        q_prev, q_cur = self._check(q_prev), self._check(q_cur)
        accel = self._grad(q_cur) / self.mass.masses[:, None]
        return 2.0 * q_cur - q_prev - self.h * self.h * accel

    def seed(self, q0, v0) -> np.ndarray:
        """Second configuration ``q_1 = q_0 + h v_0 - (h^2/2) M^-1 grad V(q_0)``."""
        q0 = self._check(q0)
        v0 = np.asarray(v0, dtype=np.float64)
        accel = self._grad(q0) / self.mass.masses[:, None]
        return q0 + self.h * (v0 - 0.5 * self.h * accel)

    def run(self, q0, v0, n_steps: int) -> np.ndarray:
        """All configurations ``q_0 .. q_{n_steps}`` as an ``(n_steps+1, N, d)`` array.

        The recursion is carried in its equivalent one-step form
        ``v += -h M^-1 grad V(q); q += h v`` with ``v = (q_next - q_cur) / h``,
        which avoids the cancellation in ``q_cur - q_prev`` over long runs.
        """
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        q0 = self._check(q0)
        out = np.empty((n_steps + 1,) + q0.shape)
        out[0] = q0
        hm = self.h / self.mass.masses[:, None]
        v = np.array(v0, dtype=np.float64) - 0.5 * hm * self._grad(q0)
        q = q0.copy()
        q += self.h * v
        out[1] = q
        for i in range(1, n_steps):
            v -= hm * self._grad(q)
            q += self.h * v
            out[i + 1] = q
        return out


def sync_step(stepper: SyncStepper, q_prev, q_cur) -> np.ndarray:
    return stepper.step(q_prev, q_cur)


def sync_run(stepper: SyncStepper, q0, v0, n_steps: int) -> np.ndarray:
    return stepper.run(q0, v0, n_steps)


# ---------------------------------------------------------------------------
# asynchronous integrator
# ---------------------------------------------------------------------------


@njit(cache=True)
def _kick(X, V, invm, tick, scale, dt, steps, kinds, sptr, sidx, pptr, pvals,
          scratch, warn_buf, warn_n, k):
    """Apply the impulses of every term whose step divides ``tick``.

    Each impulse is ``scale * h^i * grad V^i``; ``scale`` is 1 for a full
    kick and 0.5 for the starting half kick. Returns the failing term index
    or -1.
    """
    d = X.shape[1]
    for i in range(kinds.shape[0]):
        if tick % steps[i] != 0:
            continue
        s0 = sptr[i]
        s1 = sptr[i + 1]
        status = _term_gradient(kinds[i], sidx, s0, s1, pvals, pptr[i], X, scratch)
        if status == ERR_DEGENERATE:
            return i
        if status == WARN_COINCIDENT:
            n = warn_n[0]
            if n < warn_buf.shape[0]:
                warn_buf[n, 0] = k
                warn_buf[n, 1] = i
            warn_n[0] = n + 1
        c = scale * steps[i] * dt
        for r in range(s1 - s0):
            a = sidx[s0 + r]
            w = c * invm[a]
            for j in range(d):
                V[a, j] -= w * scratch[r, j]
    return -1


@njit(cache=True)
def _advance(X, V, invm, events, k_from, k_to, skip_first_kick, dt, steps, kinds,
             sptr, sidx, pptr, pvals, scratch, warn_buf, warn_n):
    """Kick then drift for events ``k_from .. k_to - 1``; returns (event, term) on error."""
    d = X.shape[1]
    for k in range(k_from, k_to):
        if k > 0 and not (skip_first_kick and k == k_from):
            bad = _kick(X, V, invm, events[k], 1.0, dt, steps, kinds, sptr, sidx, pptr,
                        pvals, scratch, warn_buf, warn_n, k)
            if bad >= 0:
                return k, bad
        h = (events[k + 1] - events[k]) * dt
        for a in range(X.shape[0]):
            for j in range(d):
                X[a, j] += h * V[a, j]
    return -1, -1


class AviRunner:
    """Event-driven asynchronous integrator over a fixed schedule.

    ``state`` is advanced in place. ``hook(k, sample, state)`` is called after
    every recorded sample and must treat ``state`` as read-only.
    """

    def __init__(self, mass: MassModel, terms, state: SystemState,
                 schedule: EventSchedule | None = None, duration_ticks: int | None = None,
                 stride: int = 100, hook: Callable | None = None):
        self.mass = mass
        self.terms = list(terms)
        if len(mass) != state.q.shape[0]:
            raise ValueError(f"{len(mass)} masses for {state.q.shape[0]} vertices")
        for t in self.terms:
            t.validate(*state.q.shape)
        if schedule is None:
            if duration_ticks is None:
                raise ValueError("need a schedule or a duration")
            schedule = build_schedule(self.terms, duration_ticks)
        if not np.array_equal(schedule.steps, [t.step_ticks for t in self.terms]):
            raise ValueError("schedule steps do not match the terms")
        if state.tick != 0:
            raise ValueError("runner must start at tick 0")
        if int(stride) < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.schedule = schedule
        self.state = state
        self.stride = int(stride)
        self.hook = hook
        self.record = DiagnosticsRecord()
        self.k = 0
        self._kicked = False
        self._table = TermTable.from_terms(self.terms)
        self._invm = mass.inverse
        self._scratch = np.empty((self._table.max_stencil, state.dim))
        self._warn_buf = np.zeros((WARNING_CAPACITY, 2), dtype=np.int64)
        self._warn_n = np.zeros(1, dtype=np.int64)
        self._warn_seen = 0
        self._sampled = -1

    @property
    def n_events(self) -> int:
        return len(self.schedule)

    @property
    def dt(self) -> float:
        return self.state.tick_duration

    def _kick_now(self, scale=1.0):
        s = self.state
        tick = int(self.schedule.events[self.k])
        bad = _kick(s.q, s.v, self._invm, tick, scale, self.dt, self._table.steps,
                    *self._table.args(), self._scratch, self._warn_buf, self._warn_n, self.k)
        self._collect_warnings()
        if bad >= 0:
            raise DegenerateGeometryError(f"term {bad} at event {self.k}: degenerate hinge triangle")

    def _collect_warnings(self):
        n = int(self._warn_n[0])
        for w in range(self._warn_seen, min(n, WARNING_CAPACITY)):
            k, i = self._warn_buf[w]
            self.record.warnings.append(
                ("coincident_penalty_points", float(self.schedule.events[k] * self.dt), int(i)))
        if n > WARNING_CAPACITY and self._warn_seen <= WARNING_CAPACITY:
            self.record.warnings.append(("warnings_truncated", math.nan, n - WARNING_CAPACITY))
        self._warn_seen = max(n, self._warn_seen)

    def _start(self):
        # event 0: the half impulse turns v(0) into the first half-step velocity
        if not self._kicked and self.k == 0:
            v0 = self.state.v.copy()
            self._kick_now(scale=0.5)
            self._kicked = True
            self._sample(v0)

    def _sample(self, v_event):
        if self._sampled == self.k:
            return
        s = self.state
        potential, bad = _total_potential(*self._table.args(), s.q)
        if bad >= 0:
            raise DegenerateGeometryError(f"term {bad}: degenerate hinge triangle")
        sample = Sample.from_state(self.mass, s.q, v_event, s.tick * self.dt, potential)
        self.record.samples.append(sample)
        self._sampled = self.k
        if self.hook is not None:
            self.hook(self.k, sample, s)

    def _finish_event(self):
        """Apply the pending kick at the current event and record a sample."""
        v_pre = self.state.v.copy()
        self._kick_now()
        self._kicked = True
        self._sample(0.5 * (v_pre + self.state.v))

    def step(self) -> None:
        """Advance from event ``k`` to event ``k + 1`` (kick, then drift)."""
        if self.k >= self.n_events - 1:
            raise ScheduleError("schedule exhausted")
        self._start()
        s = self.state
        self._run_kernel(self.k, self.k + 1, self._kicked)
        self.k += 1
        self._kicked = False
        s.tick = int(self.schedule.events[self.k])

    def _run_kernel(self, k_from, k_to, skip_first):
        s = self.state
        k_err, bad = _advance(s.q, s.v, self._invm, self.schedule.events, k_from, k_to,
                              skip_first, self.dt, self._table.steps, *self._table.args(),
                              self._scratch, self._warn_buf, self._warn_n)
        self._collect_warnings()
        if k_err >= 0:
            raise DegenerateGeometryError(f"term {bad} at event {k_err}: degenerate hinge triangle")

    def run(self) -> tuple[DiagnosticsRecord, SystemState]:
        """Integrate through every remaining event, sampling every ``stride`` events.

        The last event receives its impulses too, and is always sampled.
        Returns the diagnostics record and the final state.
        """
        self._start()
        last = self.n_events - 1
        while self.k < last:
            target = min((self.k // self.stride + 1) * self.stride, last)
            self._run_kernel(self.k, target, self._kicked)
            self.k = target
            self.state.tick = int(self.schedule.events[target])
            self._kicked = False
            self._finish_event()
        if not self._kicked:
            self._finish_event()
        return self.record, self.state


def avi_run(mass: MassModel, terms, state: SystemState, duration_ticks: int,
            stride: int = 100, hook: Callable | None = None):
    """Build a runner and integrate ``duration_ticks``; returns (record, final state)."""
    return AviRunner(mass, terms, state, duration_ticks=duration_ticks,
                     stride=stride, hook=hook).run()


# ---------------------------------------------------------------------------
# continuous reference
# ---------------------------------------------------------------------------


def oracle_run(mass: MassModel, terms, q0, v0, t_final: float, h_oracle: float,
               record_every: int = 1) -> Trajectory:
    """Integrate ``q'' = -M^-1 grad V(q)`` with classical RK4 at a fixed step.

    The step is shrunk to ``t_final / ceil(t_final / h_oracle)`` so the run
    lands on ``t_final`` exactly. Every ``record_every``-th step is kept,
    plus the final one.
    """
    if not (t_final > 0 and h_oracle > 0):
        raise ValueError("t_final and h_oracle must be positive")
    q = np.array(q0, dtype=np.float64)
    v = np.array(v0, dtype=np.float64)
    n_steps = max(1, math.ceil(t_final / h_oracle - 1e-9))
    h = t_final / n_steps
    for t in terms:
        t.validate(*q.shape)
    assembler = GradientAssembler(terms, *q.shape)
    invm = mass.inverse[:, None]

    def accel(x):
        return -assembler.gradient(x) * invm

    keep = list(range(0, n_steps + 1, record_every))
    if keep[-1] != n_steps:
        keep.append(n_steps)
    times = np.array(keep, dtype=np.float64) * h
    qs = np.empty((len(keep),) + q.shape)
    vs = np.empty_like(qs)
    slot = 0
    for i in range(n_steps + 1):
        if slot < len(keep) and keep[slot] == i:
            qs[slot], vs[slot] = q, v
            slot += 1
        if i == n_steps:
            break
        k1q, k1v = v, accel(q)
        k2q, k2v = v + 0.5 * h * k1v, accel(q + 0.5 * h * k1q)
        k3q, k3v = v + 0.5 * h * k2v, accel(q + 0.5 * h * k2q)
        k4q, k4v = v + h * k3v, accel(q + h * k3q)
        q = q + (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return Trajectory(times, qs, vs)


def stable_step_estimate(term: PotentialTerm, mass: MassModel) -> float | None:
    """Advisory stable step ``2 / omega_max`` for linearizable pairwise kinds.

    Returns ``inf`` for zero stiffness and ``None`` for kinds without an
    estimate (hinges, gravity).
    """
    if term.kind in (Kind.SPRING, Kind.PENALTY_POINT_POINT):
        a, b = term.stencil
        inv = 1.0 / mass.masses[a] + 1.0 / mass.masses[b]
    elif term.kind is Kind.PENALTY_POINT_PLANE:
        inv = 1.0 / mass.masses[term.stencil[0]]
    else:
        return None
    k = term.params.stiffness
    if k == 0:
        return math.inf
    return 2.0 / math.sqrt(k * inv)

"""The asynchronous event set on an integer tick lattice.

Every event is an integer multiple of some term's step, expressed in base
ticks. Keeping times as integers makes "step h divides time t" an exact
modulo test.
"""
from __future__ import annotations

import heapq
from collections.abc import Iterator, Sequence

import numpy as np

# product j*h never exceeds duration, so staying below 2**62 leaves headroom
MAX_TICKS = 2**62


class ScheduleError(ValueError):
    pass


class EventSchedule:
    """Sorted union of the multiples ``j * step`` of every term step up to a duration.

    ``steps[i]`` is the step (in ticks) of term ``i``; ``events`` is the
    strictly increasing array of event ticks, starting at 0. The last event
    is the largest multiple not exceeding ``duration``.
    """

    def __init__(self, steps: Sequence[int], duration: int):
        steps = np.asarray(steps, dtype=np.int64)
        if steps.ndim != 1 or steps.size == 0:
            raise ScheduleError("cannot build a schedule without terms")
        if np.any(steps < 1):
            raise ScheduleError(f"every step must be >= 1 tick, got {steps.min()}")
        if int(duration) != duration or duration < 1:
            raise ScheduleError(f"duration must be a positive integer tick count, got {duration!r}")
        duration = int(duration)
        if duration >= MAX_TICKS:
            raise ScheduleError(f"duration {duration} ticks risks integer overflow")
        self.steps = steps
        self.steps.setflags(write=False)
        self.duration = duration
        unique = np.unique(steps)
        events = np.unique(np.concatenate([np.arange(0, duration + 1, h, dtype=np.int64)
                                           for h in unique]))
        self.events = events
        self.events.setflags(write=False)

    def __len__(self):
        return self.events.size

    def __iter__(self):
        return iter(self.events.tolist())

    def xi(self, k: int) -> int:
        """Tick of the ``k``-th event (0-based)."""
        if not 0 <= k < self.events.size:
            raise IndexError(f"event index {k} outside [0, {self.events.size})")
        return int(self.events[k])

    def index_of(self, tick: int) -> int:
        k = int(np.searchsorted(self.events, tick))
        if k == self.events.size or self.events[k] != tick:
            raise ScheduleError(f"tick {tick} is not an event")
        return k

    def due_terms(self, k: int) -> list[int]:
        """Indices of the terms whose step divides the tick of event ``k``, ascending.

        Event 0 carries no impulses and is rejected.
        """
        if k == 0:
            raise ScheduleError("no terms are due at event 0")
        tick = self.xi(k)
        return np.flatnonzero(tick % self.steps == 0).tolist()

    def omega(self, term_index: int, j: int) -> int:
        """Event index of the ``j``-th multiple of term ``term_index``'s step."""
        if not 0 <= term_index < self.steps.size:
            raise IndexError(f"term index {term_index} outside [0, {self.steps.size})")
        if j < 0:
            raise ScheduleError(f"local step index must be >= 0, got {j}")
        tick = j * int(self.steps[term_index])
        if tick > self.duration:
            raise ScheduleError(f"{j} * {self.steps[term_index]} exceeds duration {self.duration}")
        return self.index_of(tick)


def build_schedule(terms, duration_ticks: int) -> EventSchedule:
    """Build the event schedule for ``terms`` (anything with ``step_ticks``)."""
    return EventSchedule([t.step_ticks for t in terms], duration_ticks)


def iter_events(steps: Sequence[int], duration: int) -> Iterator[tuple[int, list[int]]]:
    """Lazily yield ``(tick, due term indices)`` in time order with a heap.

    Produces the same sequence as :class:`EventSchedule` without storing it;
    the due list at tick 0 is empty.
    """
    steps = [int(h) for h in steps]
    if not steps:
        raise ScheduleError("cannot build a schedule without terms")
    if min(steps) < 1:
        raise ScheduleError(f"every step must be >= 1 tick, got {min(steps)}")
    if int(duration) != duration or duration < 1:
        raise ScheduleError(f"duration must be a positive integer tick count, got {duration!r}")
    heap = [(0, i) for i in range(len(steps))]
    heapq.heapify(heap)
    while heap:
        tick = heap[0][0]
        due = []
        while heap and heap[0][0] == tick:
            _, i = heapq.heappop(heap)
            due.append(i)
            if tick + steps[i] <= duration:
                heapq.heappush(heap, (tick + steps[i], i))
        yield tick, (sorted(due) if tick else [])

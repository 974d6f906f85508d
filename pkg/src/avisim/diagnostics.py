"""Conserved-quantity sampling, drift statistics and the CSV record format."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = ("time", "total", "kinetic", "potential", "px", "py", "pz", "lx", "ly", "lz")


@dataclass(frozen=True)
class Sample:
    """Energies and momenta at one instant.

    Momenta are always stored as 3-vectors: in 2D the linear momentum has a
    zero ``z`` component and the (scalar) angular momentum sits in ``z``.
    """

    time: float
    total: float
    kinetic: float
    potential: float
    momentum: tuple[float, float, float]
    angular_momentum: tuple[float, float, float]

    @classmethod
    def from_state(cls, mass, q, v, time, potential) -> "Sample":
        m = mass.masses
        kinetic = 0.5 * float(m @ np.einsum("ij,ij->i", v, v))
        p = m @ v
        if q.shape[1] == 2:
            lz = float(m @ (q[:, 0] * v[:, 1] - q[:, 1] * v[:, 0]))
            p3 = (float(p[0]), float(p[1]), 0.0)
            l3 = (0.0, 0.0, lz)
        else:
            L = m @ np.cross(q, v)
            p3 = tuple(float(c) for c in p)
            l3 = tuple(float(c) for c in L)
        return cls(float(time), kinetic + float(potential), kinetic, float(potential), p3, l3)

    def row(self) -> tuple[float, ...]:
        return (self.time, self.total, self.kinetic, self.potential,
                *self.momentum, *self.angular_momentum)


@dataclass
class DiagnosticsRecord:
    samples: list[Sample] = field(default_factory=list)
    # (tag, time, detail) tuples, e.g. ("coincident_penalty_points", t, term index)
    warnings: list[tuple] = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    def column(self, name: str) -> np.ndarray:
        i = CSV_HEADER.index(name)
        return np.array([s.row()[i] for s in self.samples], dtype=np.float64)

    @property
    def times(self) -> np.ndarray:
        return self.column("time")

    @property
    def total(self) -> np.ndarray:
        return self.column("total")

    def momenta(self) -> np.ndarray:
        return np.array([s.momentum for s in self.samples], dtype=np.float64).reshape(-1, 3)

    def angular_momenta(self) -> np.ndarray:
        return np.array([s.angular_momentum for s in self.samples],
                        dtype=np.float64).reshape(-1, 3)


@dataclass(frozen=True)
class DriftReport:
    initial_energy: float
    max_abs_deviation: float
    relative_band_halfwidth: float
    least_squares_slope: float
    momentum_max_deviation: float
    angular_momentum_max_deviation: float
    duration: float

    def summary(self) -> str:
        return "\n".join([
            f"initial energy          {self.initial_energy:.10g}",
            f"max |E - E0|            {self.max_abs_deviation:.4e}",
            f"energy band halfwidth   {self.relative_band_halfwidth:.4e}",
            f"drift slope (E/time)    {self.least_squares_slope:.4e}",
            f"drift over run          {self.least_squares_slope * self.duration:.4e}",
            f"momentum deviation      {self.momentum_max_deviation:.4e}",
            f"ang. momentum deviation {self.angular_momentum_max_deviation:.4e}",
        ])


def _max_relative_deviation(x: np.ndarray) -> float:
    x0 = x[0]
    return float(np.max(np.linalg.norm(x - x0, axis=1)) / max(1.0, np.linalg.norm(x0)))


def analyze(record: DiagnosticsRecord) -> DriftReport:
    """Drift statistics of a record with at least two samples.

    The band is ``max|E - E0| / |E0|`` (absolute when ``E0 == 0``); the slope
    is the ordinary least-squares trend of energy against time. Momentum
    deviations are ``max|p - p0| / max(1, |p0|)``.
    """
    if len(record) < 2:
        raise ValueError(f"need at least 2 samples, got {len(record)}")
    t = record.times
    energy = record.total
    e0 = energy[0]
    dev = float(np.max(np.abs(energy - e0)))
    band = dev / abs(e0) if e0 != 0 else dev
    tc = t - t.mean()
    denom = float(tc @ tc)
    slope = float(tc @ (energy - energy.mean()) / denom) if denom > 0 else 0.0
    return DriftReport(
        initial_energy=float(e0),
        max_abs_deviation=dev,
        relative_band_halfwidth=band,
        least_squares_slope=slope,
        momentum_max_deviation=_max_relative_deviation(record.momenta()),
        angular_momentum_max_deviation=_max_relative_deviation(record.angular_momenta()),
        duration=float(t[-1] - t[0]),
    )


def format_csv(record: DiagnosticsRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in record.samples:
        writer.writerow(["%.17g" % x for x in s.row()])
    return buf.getvalue()


def write_csv(record: DiagnosticsRecord, destination) -> None:
    """Write the record as CSV with 17 significant digits per value."""
    text = format_csv(record)
    try:
        with open(destination, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write diagnostics to {os.fspath(destination)!r}: "
                      f"{exc.strerror or exc}") from exc


def read_csv(source) -> DiagnosticsRecord:
    """Parse a file written by :func:`write_csv`."""
    with open(source, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{os.fspath(source)!r}: unexpected header {rows[:1]}")
    record = DiagnosticsRecord()
    for row in rows[1:]:
        x = [float(c) for c in row]
        record.samples.append(Sample(x[0], x[1], x[2], x[3], tuple(x[4:7]), tuple(x[7:10])))
    return record

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avisim import DiagnosticsRecord, MassModel, Sample, analyze, read_csv, write_csv
from avisim.diagnostics import CSV_HEADER, format_csv


def _record(times, energies):
    rec = DiagnosticsRecord()
    for t, e in zip(times, energies):
        rec.samples.append(Sample(float(t), float(e), float(e), 0.0, (1.0, 0.0, 0.0), (0.0, 0.0, 2.0)))
    return rec


def test_constant_energy_has_zero_slope_and_band():
    report = analyze(_record(np.linspace(0, 10, 50), np.full(50, 3.0)))
    assert report.least_squares_slope == 0.0
    assert report.relative_band_halfwidth == 0.0
    assert report.momentum_max_deviation == 0.0


def test_oscillating_series():
    t = np.linspace(0, 200 * math.pi, 20001)
    report = analyze(_record(t, 1 + 0.01 * np.sin(t)))
    assert report.relative_band_halfwidth == pytest.approx(0.01, rel=1e-6)
    assert abs(report.least_squares_slope) <= 1e-4


def test_linear_series():
    t = np.linspace(0, 50, 501)
    report = analyze(_record(t, 1 + 1e-3 * t))
    assert report.least_squares_slope == pytest.approx(1e-3, rel=1e-9)
    assert report.duration == 50.0


def test_fewer_than_two_samples_rejected():
    with pytest.raises(ValueError):
        analyze(_record([0.0], [1.0]))


def test_zero_initial_energy_band_is_absolute():
    report = analyze(_record([0, 1, 2], [0.0, 0.5, -0.25]))
    assert report.relative_band_halfwidth == 0.5


def test_time_shift_invariance():
    rng = np.random.default_rng(3)
    t = np.sort(rng.uniform(0, 10, 300))
    e = 2 + 0.1 * np.sin(3 * t) + 1e-3 * t
    a = analyze(_record(t, e))
    b = analyze(_record(t + 1234.5, e))
    assert b.least_squares_slope == pytest.approx(a.least_squares_slope, rel=1e-12, abs=1e-12)
    assert b.relative_band_halfwidth == pytest.approx(a.relative_band_halfwidth, rel=1e-12)


def test_sample_from_state_in_2d_and_3d():
    mass = MassModel([1.0, 2.0])
    s2 = Sample.from_state(mass, np.array([[1.0, 0], [0, 1]]), np.array([[0, 1.0], [1, 0]]), 0.5, 3.0)
    assert s2.kinetic == 1.5 and s2.total == 4.5
    assert s2.momentum == (2.0, 1.0, 0.0)
    assert s2.angular_momentum == (0.0, 0.0, 1.0 - 2.0)
    s3 = Sample.from_state(MassModel([1.0]), np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]), 0, 0)
    assert s3.angular_momentum == (0.0, 0.0, 1.0)


def test_csv_header_only_and_line_counts(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(DiagnosticsRecord(), path)
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"
    write_csv(_record([0.0], [1.0]), path)
    assert len(path.read_text().splitlines()) == 2


def test_csv_write_error_names_the_path(tmp_path):
    target = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        write_csv(_record([0.0], [1.0]), target)


def test_read_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(path)


_finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(*[_finite] * 10), max_size=8))
def test_csv_round_trip_is_bit_exact(tmp_path_factory, rows):
    rec = DiagnosticsRecord()
    for r in rows:
        rec.samples.append(Sample(r[0], r[1], r[2], r[3], tuple(r[4:7]), tuple(r[7:10])))
    path = tmp_path_factory.mktemp("csv") / "r.csv"
    write_csv(rec, path)
    back = read_csv(path)
    assert len(back) == len(rec)
    for a, b in zip(rec.samples, back.samples):
        assert all(x == y and math.copysign(1, x) == math.copysign(1, y)
                   for x, y in zip(a.row(), b.row()))
    assert format_csv(back) == format_csv(rec)

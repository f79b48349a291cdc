import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swa_ltv.analysis import (MeasurementError, arrival_peaks, case_velocities, delay_report,
                              doppler_frequency, first_arrival, los_delay, time_shift, verify_grid)
from swa_ltv.ltv_core import CirKind, GreensFunction, LtvCirGrid, cir_grid
from swa_ltv.scenarios import CaseSpec, UnsupportedRegime, build

C, V = 1500.0, 51.2


def test_los_examples():
    assert los_delay("MovingTx", 100, C, V) == pytest.approx(0.066666667, abs=1e-9)
    assert los_delay("MovingRx", 100, C, V) == pytest.approx(0.069022, abs=1e-6)
    assert los_delay("MovingRx", 101, C, V) == pytest.approx(0.069712, abs=1e-6)
    assert los_delay("Static", 100, C, V) == los_delay("MovingTx", 100, C, V)
    assert los_delay("CoMoving", 100, C, V) == los_delay("MovingRx", 100, C, V)


def test_los_type1_rows():
    assert los_delay("MovingRx", 100, C, V, CirKind.TYPE1) == 100 / C
    assert los_delay("MovingTx", 100, C, V, CirKind.TYPE1) == pytest.approx(100 / (C + V))


def test_time_shift_examples():
    assert time_shift(100, V, C) == pytest.approx(2.35597e-3, abs=1e-8)
    assert time_shift(101, V, C) == pytest.approx(2.37953e-3, abs=1e-8)
    with pytest.raises(UnsupportedRegime):
        time_shift(100, C, C)


def test_doppler_examples():
    assert doppler_frequency(1.0, V, 0.0, C) == pytest.approx(0.966993, abs=1e-6)
    assert doppler_frequency(1.0, 0.0, V, C) == pytest.approx(0.965867, abs=1e-6)
    assert doppler_frequency(1e3, 0.0, 0.0, C) == 1e3
    with pytest.raises(UnsupportedRegime):
        doppler_frequency(1.0, 0.0, -C, C)


speeds = st.floats(0.0, 1400.0)


@settings(max_examples=100)
@given(st.floats(1.0, 1e4), speeds)
def test_shift_is_los_difference(d, v):
    diff = los_delay("MovingRx", d, C, v) - los_delay("MovingTx", d, C, v)
    assert diff == pytest.approx(time_shift(d, v, C), rel=1e-9, abs=1e-15)


@settings(max_examples=100)
@given(speeds, speeds, st.floats(0.1, 100.0))
def test_doppler_monotone(v1, v2, dv):
    f = lambda a, b: doppler_frequency(1.0, a, b, C)
    if v1 + dv < C:
        assert f(v1 + dv, v2) < f(v1, v2)
    if v2 + dv < C:
        assert f(v1, v2 + dv) < f(v1, v2)


@settings(max_examples=100)
@given(st.floats(1e-3, 1499.0))
def test_doppler_asymmetry(v):
    assert doppler_frequency(1.0, v, 0.0, C) != doppler_frequency(1.0, 0.0, v, C)


def test_report_extras():
    rep = delay_report("MovingRx", 100.0, C, V)
    assert rep.time_shift_vs_movingTx == pytest.approx(time_shift(100, V, C))
    assert rep.doppler_factor == pytest.approx(0.965867, abs=1e-6)
    ratio = doppler_frequency(1.0, V, 0.0, C) / doppler_frequency(1.0, 0.0, V, C)
    assert rep.extras["doppler_ratio_movingTx_over_movingRx"] == pytest.approx(ratio)
    assert rep.extras["factor_(c+v)/(c-v)"] == pytest.approx((C + V) / (C - V))
    assert delay_report("MovingTx", 100.0, C, V).time_shift_vs_movingTx == 0.0
    assert case_velocities("CoMoving", V) == (-V, V)
    assert delay_report("CoMoving", 100.0, C, V).doppler_factor == pytest.approx(1.0)


def test_first_arrival_single_tap_exact():
    row = np.zeros(50)
    row[7] = 0.4
    assert first_arrival(row) == 7.0
    with pytest.raises(MeasurementError):
        first_arrival(np.zeros(5))


def test_first_arrival_ignores_weak_precursors():
    row = np.zeros(100)
    row[10] = 0.05  # -26 dB
    row[40] = 1.0
    row[70] = 0.5
    assert first_arrival(row) == 40.0
    assert arrival_peaks(row) == [40.0, 70.0]


def test_single_tap_grid_check():
    g = GreensFunction(lambda n, m: np.where(n - m == 7, 1.0, 0.0), max_lag=16, fs=1e3)
    grid = cir_grid(g, CirKind.TYPE2, [0])
    assert grid.lag_start + first_arrival(grid.row(0)) == 7


@pytest.fixture(scope="module")
def rx_grid():
    scn = build(CaseSpec("MovingRx"))
    return cir_grid(scn, CirKind.TYPE2, [0, 2500, 5000])


def test_verify_grid_at_sweep_end(rx_grid):
    rep = delay_report("MovingRx", 101.0, C, V)
    chk = verify_grid(rx_grid, rep)
    assert chk.passed and chk.row_n == 5000
    assert chk.measured == pytest.approx(0.06971, abs=1 / 256e3)
    assert all(abs(r) <= 1 / 256e3 for r in chk.row_residuals)


def test_verify_grid_detects_wrong_case(rx_grid):
    chk = verify_grid(rx_grid, delay_report("MovingTx", 100.0, C, V))
    assert not chk.passed
    assert chk.residual == pytest.approx(time_shift(100, V, C), abs=2 / 256e3)


def test_verify_grid_rejects_empty():
    grid = LtvCirGrid(CirKind.TYPE2, [0], np.zeros((1, 10)), 0, 1e3)
    with pytest.raises(MeasurementError):
        verify_grid(grid, delay_report("Static", 1.0, C, 0.0))

"""Closed-form delay and Doppler predictions, and checks of simulated grids against them.

Velocities use the away-positive convention: a positive speed increases
the transmitter-receiver distance.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .ltv_core import CirKind, LtvCirGrid
from .scenarios import CaseKind, UnsupportedRegime


def _check_speed(v, c):
    if not abs(v) < c:
        raise UnsupportedRegime(f"speed {v} m/s is not below c = {c} m/s")


def los_delay(kind, d: float, c: float, v: float, cir_type=CirKind.TYPE2) -> float:
    """Line-of-sight arrival lag in seconds seen in a row of the given CIR type.

    For type II rows (the default) MovingTx and Static arrive at ``d/c``
    and MovingRx and CoMoving at ``d/(c - v)``. Type I rows of a moving
    receiver are static snapshots (``d/c``), and those of a moving
    transmitter arrive at ``d/(c + v)``.
    """
    kind = CaseKind(kind)
    _check_speed(v, c)
    if not d > 0:
        raise ValueError("distance must be positive")
    if kind is CaseKind.STATIC:
        return d / c
    if kind is CaseKind.CO_MOVING:
        return d / (c - v)
    if CirKind(cir_type) is CirKind.TYPE2:
        return d / (c - v) if kind is CaseKind.MOVING_RX else d / c
    return d / c if kind is CaseKind.MOVING_RX else d / (c + v)


def time_shift(d: float, v: float, c: float) -> float:
    """Extra lag of the moving-receiver arrivals over the moving-transmitter ones: ``d v / (c (c - v))``."""
    if not 0 <= v < c:
        raise UnsupportedRegime(f"need 0 <= v < c, got v = {v}")
    return d * v / (c * (c - v))


def doppler_frequency(f0, v_tx: float, v_rx: float, c: float):
    """Received frequency ``f0 (c - v_rx) / (c + v_tx)``."""
    _check_speed(v_tx, c)
    _check_speed(v_rx, c)
    return f0 * (c - v_rx) / (c + v_tx)


def case_velocities(kind, v: float) -> tuple[float, float]:
    """Away-positive (v_tx, v_rx) of a case; in CoMoving the transmitter chases the receiver."""
    return {
        CaseKind.MOVING_RX: (0.0, v),
        CaseKind.MOVING_TX: (v, 0.0),
        CaseKind.STATIC: (0.0, 0.0),
        CaseKind.CO_MOVING: (-v, v),
    }[CaseKind(kind)]


@dataclass
class DelayReport:
    kind: str
    d: float
    los_delay: float
    time_shift_vs_movingTx: float
    doppler_factor: float
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def delay_report(kind, d: float, c: float, v: float) -> DelayReport:
    kind = CaseKind(kind)
    shift = time_shift(d, v, c) if kind in (CaseKind.MOVING_RX, CaseKind.CO_MOVING) else 0.0
    v_tx, v_rx = case_velocities(kind, v)
    rx_factor = doppler_frequency(1.0, 0.0, v, c)
    tx_factor = doppler_frequency(1.0, v, 0.0, c)
    extras = {
        "c": c, "v": v,
        "v_tx_away_positive": v_tx, "v_rx_away_positive": v_rx,
        # the two moving-one-end cases compared through the general Doppler equation
        "doppler_ratio_movingTx_over_movingRx": tx_factor / rx_factor,
        "factor_(c+v)/(c-v)": (c + v) / (c - v),
    }
    return DelayReport(kind.value, d, los_delay(kind, d, c, v), shift,
                       doppler_frequency(1.0, v_tx, v_rx, c), extras)


# first-arrival measurement --------------------------------------------------

class MeasurementError(ValueError):
    pass


def _refine_peak(mag: np.ndarray, j: int) -> float:
    if 0 < j < len(mag) - 1:
        a, b, c = mag[j - 1], mag[j], mag[j + 1]
        den = a - 2 * b + c
        if den < 0:
            return j + 0.5 * (a - c) / den
    return float(j)


def arrival_peaks(row: np.ndarray, threshold_db: float = -20.0) -> list[float]:
    """Fractional sample positions of every local maximum of ``|row|`` above the threshold.

    The threshold is relative to the row peak. Each maximum is refined by a
    parabola through its two neighbours.
    """
    mag = np.abs(np.asarray(row, dtype=float))
    if not mag.size or mag.max() == 0:
        raise MeasurementError("empty row")
    thr = mag.max() * 10 ** (threshold_db / 20)
    inner = (mag[1:-1] >= mag[:-2]) & (mag[1:-1] > mag[2:]) & (mag[1:-1] >= thr)
    idx = np.flatnonzero(inner) + 1
    if mag[0] >= thr and (len(mag) == 1 or mag[0] > mag[1]):
        idx = np.concatenate([[0], idx])
    if mag[-1] >= thr and len(mag) > 1 and mag[-1] > mag[-2]:
        idx = np.concatenate([idx, [len(mag) - 1]])
    return [_refine_peak(mag, int(j)) for j in idx]


def first_arrival(row: np.ndarray, threshold_db: float = -20.0) -> float:
    """Fractional sample index of the first arrival in ``row``.

    The leading edge is the first sample whose magnitude reaches
    ``threshold_db`` below the row peak. Because a band-limited arrival has
    sinc-like precursors, the edge is then followed up to the main lobe of
    that arrival and the lobe peak is refined by a parabola.
    """
    mag = np.abs(np.asarray(row, dtype=float))
    if not mag.size or mag.max() == 0:
        raise MeasurementError("empty row")
    thr = mag.max() * 10 ** (threshold_db / 20)
    j = int(np.argmax(mag >= thr))
    while j + 1 < len(mag) and mag[j + 1] > mag[j]:
        j += 1
    return _refine_peak(mag, j)


def first_arrival_s(grid: LtvCirGrid, n: int, threshold_db: float = -20.0) -> float:
    return (grid.lag_start + first_arrival(grid.row(n), threshold_db)) / grid.fs


@dataclass
class GridCheck:
    passed: bool
    row_n: int
    measured: float
    predicted: float
    residual: float
    tolerance: float
    row_residuals: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def verify_grid(grid: LtvCirGrid, report: DelayReport, tol: float | None = None,
                threshold_db: float = -20.0) -> GridCheck:
    """Compare measured first arrivals with ``los_delay`` row by row.

    The pass/fail decision uses the row whose separation is closest to
    ``report.d``; ``tol`` defaults to one sample period.
    """
    if tol is None:
        tol = 1.0 / grid.fs
    if grid.taps.size == 0 or not np.any(grid.taps):
        raise MeasurementError("grid has no nonzero taps")
    c, v = report.extras["c"], report.extras["v"]
    dist = grid.row_distance
    if dist is None:
        dist = np.full(len(grid.n_values), report.d)
    residuals = []
    for i, n in enumerate(grid.n_values):
        meas = (grid.lag_start + first_arrival(grid.taps[i], threshold_db)) / grid.fs
        pred = los_delay(report.kind, float(dist[i]), c, v, grid.kind)
        residuals.append(meas - pred)
    i = int(np.argmin(np.abs(dist - report.d)))
    pred = los_delay(report.kind, float(dist[i]), c, v, grid.kind)
    res = residuals[i]
    return GridCheck(bool(abs(res) <= tol), int(grid.n_values[i]), pred + res, pred, res, tol,
                     [float(r) for r in residuals])

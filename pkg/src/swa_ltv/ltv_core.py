"""Green's function, type I / type II LTV impulse responses and the two filter structures.

Conventions used throughout (all indices are integer samples):

* ``g(n, m)``: response at time ``n`` to an impulse applied at time ``m``;
  zero for ``n < m``.
* type I, ``p_n(m) = g(n, n - m)``: response at ``n`` to an impulse applied
  ``m`` samples earlier. Filtering with it switches the *output* between
  LTI systems.
* type II, ``r_n(m) = g(n + m, n)``: response ``m`` samples after an impulse
  applied at ``n``. Filtering with it switches the *input*.

A :class:`DynamicScenario` realises ``g`` from the static channel sampled
along the transmitter and receiver trajectories: the static response
between the transmitter position at the emission time and the receiver
position at the reception time, read at the lag between the two.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

from .geometry import GeometryError, ImageSet, Trajectory, Waveguide, image_set
from .static_channel import fractional_delay_kernel, get_absorption, path_gains_at

log = logging.getLogger(__name__)

_BLOCK = 1024


class CirKind(str, Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"

    @property
    def other(self) -> "CirKind":
        return CirKind.TYPE2 if self is CirKind.TYPE1 else CirKind.TYPE1


class CoverageError(ValueError):
    """A conversion needs grid rows that are not present."""

    def __init__(self, missing):
        self.missing = sorted(int(n) for n in missing)
        shown = self.missing[:20]
        more = "" if len(self.missing) <= 20 else f" ... ({len(self.missing)} total)"
        super().__init__(f"missing rows n = {shown}{more}")


@dataclass
class SignalBuffer:
    samples: np.ndarray
    fs: float
    start: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("signal contains non-finite samples")

    def __len__(self):
        return len(self.samples)


@dataclass
class LtvCirGrid:
    """Family of CIR rows indexed by ``n``.

    ``taps[i, j]`` is the row for ``n_values[i]`` at lag ``lag_start + j``;
    lags outside the stored window are zero.
    """

    kind: CirKind
    n_values: np.ndarray
    taps: np.ndarray
    lag_start: int
    fs: float
    row_distance: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = CirKind(self.kind)
        self.n_values = np.asarray(self.n_values, dtype=np.int64)
        self.taps = np.atleast_2d(np.asarray(self.taps, dtype=float))
        if self.taps.shape[0] != len(self.n_values):
            raise ValueError("row count must equal the number of n values")

    @property
    def lags(self) -> np.ndarray:
        return self.lag_start + np.arange(self.taps.shape[1])

    @property
    def lags_s(self) -> np.ndarray:
        return self.lags / self.fs

    def row_index(self, n: int) -> int:
        hits = np.flatnonzero(self.n_values == n)
        if not len(hits):
            raise KeyError(f"no row for n = {n}")
        return int(hits[0])

    def row(self, n: int) -> np.ndarray:
        return self.taps[self.row_index(n)]


# systems ----------------------------------------------------------------------

class LtvSystem:
    """Anything that can report ``g(n, m)`` and the supports of its CIR rows.

    Subclasses provide :meth:`green` and :meth:`max_lag`; the default row
    supports are dense in lag. ``fs`` must be set by the subclass.
    """

    def green(self, n, m) -> np.ndarray:
        raise NotImplementedError

    def max_lag(self, n_first: int, n_last: int) -> int:
        raise NotImplementedError

    def type1_support(self, n: np.ndarray):
        """Lags ``(R, W)`` and values ``(R, W)`` of ``p_n`` for each ``n``."""
        n = np.asarray(n, dtype=np.int64)[:, None]
        lags = np.arange(self.max_lag(int(n.min()), int(n.max())) + 1)[None, :]
        lags = np.broadcast_to(lags, (n.shape[0], lags.shape[1]))
        return lags, self.green(n, n - lags)

    def type2_support(self, n: np.ndarray):
        n = np.asarray(n, dtype=np.int64)[:, None]
        lags = np.arange(self.max_lag(int(n.min()), int(n.max())) + 1)[None, :]
        lags = np.broadcast_to(lags, (n.shape[0], lags.shape[1]))
        return lags, self.green(n + lags, n)

    def support(self, kind: CirKind, n):
        kind = CirKind(kind)
        return self.type1_support(n) if kind is CirKind.TYPE1 else self.type2_support(n)


class GreensFunction(LtvSystem):
    """Green's function given by a vectorised evaluator ``g(n, m)``.

    ``n_range`` and ``m_range`` (inclusive) bound the indices the evaluator
    may be asked for; requests outside raise ``IndexError``. Causality is
    enforced here: ``g(n, m) = 0`` whenever ``n < m``.
    """

    def __init__(self, evaluator: Callable, max_lag: int, fs: float = 1.0,
                 n_range: tuple[int, int] | None = None, m_range: tuple[int, int] | None = None):
        self._evaluator = evaluator
        self._max_lag = int(max_lag)
        self.fs = fs
        self.n_range = n_range
        self.m_range = m_range

    @classmethod
    def from_table(cls, table, fs: float = 1.0) -> "GreensFunction":
        """``table[n, m]`` for ``0 <= n, m < N``; zero outside. Entries with ``n < m`` are ignored."""
        table = np.tril(np.asarray(table, dtype=float))
        N = table.shape[0]

        def evaluator(n, m):
            n, m = np.broadcast_arrays(n, m)
            ok = (n >= 0) & (n < N) & (m >= 0) & (m < table.shape[1])
            out = np.zeros(n.shape)
            out[ok] = table[n[ok], m[ok]]
            return out

        return cls(evaluator, max_lag=N - 1, fs=fs)

    def __call__(self, n, m):
        return self.green(n, m)

    def green(self, n, m):
        n, m = np.broadcast_arrays(np.asarray(n, dtype=np.int64), np.asarray(m, dtype=np.int64))
        for idx, rng, name in ((n, self.n_range, "n"), (m, self.m_range, "m")):
            if rng is not None and idx.size and (idx.min() < rng[0] or idx.max() > rng[1]):
                raise IndexError(f"{name} outside [{rng[0]}, {rng[1]}]")
        causal = n >= m
        out = np.zeros(n.shape)
        if causal.any():
            out[causal] = self._evaluator(n[causal], m[causal])
        return out

    def max_lag(self, n_first: int, n_last: int) -> int:
        return self._max_lag


@dataclass(frozen=True)
class SynthesisOptions:
    kernel_halfwidth: int = 32
    reference_frequency: float | None = None  # None: fs / 4, the middle of the band
    energy_floor_db: float = -60.0
    absorption: str = "thorp"

    def __post_init__(self):
        if self.kernel_halfwidth < 1:
            raise ValueError("kernel_halfwidth must be >= 1")
        get_absorption(self.absorption)


@dataclass(frozen=True)
class DynamicScenario(LtvSystem):
    wg: Waveguide
    tx_traj: Trajectory
    rx_traj: Trajectory
    fs: float
    duration_samples: int
    options: SynthesisOptions = SynthesisOptions()

    def __post_init__(self):
        Ts = 1.0 / self.fs
        for traj in (self.tx_traj, self.rx_traj):
            if not math.isclose(traj.sample_period_Ts, Ts, rel_tol=1e-12):
                raise ValueError("trajectories must be sampled at 1/fs")
            if abs(traj.velocity_x) >= self.wg.sound_speed_c:
                raise ValueError("mobile speeds must stay below the sound speed")
            self.wg.check_height(traj.start.height_above_bottom)
        if abs(self.tx_traj.start.x - self.rx_traj.start.x) == 0:
            raise GeometryError("zero horizontal separation at n = 0")

    # -- static model pieces ------------------------------------------------
    @property
    def reference_frequency(self) -> float:
        f = self.options.reference_frequency
        return self.fs / 4 if f is None else f

    @cached_property
    def _absorption(self):
        return get_absorption(self.options.absorption)

    @cached_property
    def images(self) -> ImageSet:
        """Image set retained after the residual-energy floor, judged at ``n = 0``."""
        imgs = image_set(self.wg, self.tx_traj.start.height_above_bottom,
                         self.rx_traj.start.height_above_bottom)
        d0 = abs(self.tx_traj.start.x - self.rx_traj.start.x)
        gain, length = path_gains_at(self.wg, d0, imgs.offset, imgs.n_surface, imgs.n_bottom,
                                     self.reference_frequency, self._absorption)
        order = np.argsort(length, kind="stable")
        energy = gain[order] ** 2
        residual = np.concatenate([np.cumsum(energy[::-1])[::-1][1:], [0.0]])
        floor = 10 ** (self.options.energy_floor_db / 10) * energy.max()
        last = int(np.argmax(residual <= floor))
        keep = np.zeros(len(imgs), dtype=bool)
        keep[order[: last + 1]] = True
        return imgs.subset(keep)

    @property
    def max_speed(self) -> float:
        return max(abs(self.tx_traj.velocity_x), abs(self.rx_traj.velocity_x))

    def distance(self, n_tx, n_rx):
        return np.abs(self.tx_traj.x_at(n_tx) - self.rx_traj.x_at(n_rx))

    def row_distance(self, n):
        """Transceiver separation at time ``n`` (both positions at ``n``)."""
        return self.distance(n, n)

    def _evaluate(self, n_tx, n_rx, lag):
        """Static response between ``a(n_tx)`` and ``b(n_rx)`` read at ``lag``; paths on a new last axis."""
        im = self.images
        d = self.distance(n_tx, n_rx)[..., None]
        lag = np.asarray(lag, dtype=float)[..., None]
        gain, length = path_gains_at(self.wg, d, im.offset, im.n_surface, im.n_bottom,
                                     self.reference_frequency, self._absorption)
        u = lag - self.fs * length / self.wg.sound_speed_c
        val = gain * fractional_delay_kernel(u, self.options.kernel_halfwidth)
        return np.where(lag >= 0, val, 0.0)

    def green(self, n, m):
        n, m = np.broadcast_arrays(np.asarray(n), np.asarray(m))
        return self._evaluate(m, n, n - m).sum(axis=-1)

    # -- sparse row supports ------------------------------------------------
    def _arrival_lags(self, kind: CirKind, n):
        """Per-path arrival lag (fractional) for rows ``n``: fixed point of ``m = fs * l(d(m)) / c``."""
        im = self.images
        n = np.asarray(n, dtype=float)[:, None]
        k = self.fs / self.wg.sound_speed_c
        m = k * np.hypot(self.distance(n, n), im.offset)
        for _ in range(200):
            if kind is CirKind.TYPE1:
                d = self.distance(n - m, n)
            else:
                d = self.distance(n, n + m)
            m_new = k * np.hypot(d, im.offset)
            done = np.max(np.abs(m_new - m), initial=0.0) < 1e-9
            m = m_new
            if done:
                break
        return m

    def _windows(self, kind: CirKind, n):
        kind = CirKind(kind)
        n = np.asarray(n, dtype=np.int64)
        K = self.options.kernel_halfwidth
        half = math.ceil(K / (1.0 - self.max_speed / self.wg.sound_speed_c)) + 1
        m_star = self._arrival_lags(kind, n)
        base = np.floor(m_star).astype(np.int64)
        lags = base[:, :, None] + np.arange(-half, half + 2)[None, None, :]
        nn = n[:, None, None]
        if kind is CirKind.TYPE1:
            n_tx, n_rx = nn - lags, np.broadcast_to(nn, lags.shape)
        else:
            n_tx, n_rx = np.broadcast_to(nn, lags.shape), nn + lags
        im = self.images
        d = self.distance(n_tx, n_rx)
        P = len(im)
        gain, length = path_gains_at(self.wg, d, im.offset.reshape(1, P, 1),
                                     im.n_surface.reshape(1, P, 1), im.n_bottom.reshape(1, P, 1),
                                     self.reference_frequency, self._absorption)
        u = lags - self.fs * length / self.wg.sound_speed_c
        vals = np.where(lags >= 0, gain * fractional_delay_kernel(u, K), 0.0)
        extrap = (vals != 0) & ~(self.tx_traj.in_range(n_tx) & self.rx_traj.in_range(n_rx))
        R = len(n)
        return lags.reshape(R, -1), vals.reshape(R, -1), int(extrap.sum())

    def type1_support(self, n):
        lags, vals, _ = self._windows(CirKind.TYPE1, n)
        return lags, vals

    def type2_support(self, n):
        lags, vals, _ = self._windows(CirKind.TYPE2, n)
        return lags, vals

    def max_lag(self, n_first: int, n_last: int) -> int:
        lags, vals, _ = self._windows(CirKind.TYPE2, np.array([n_first, n_last]))
        return int(lags[vals != 0].max(initial=0))


def green_from_scenario(s: DynamicScenario) -> GreensFunction:
    return GreensFunction(s.green, max_lag=s.max_lag(0, s.duration_samples), fs=s.fs,
                          n_range=(0, s.duration_samples), m_range=(0, s.duration_samples))


# rows and grids -------------------------------------------------------------

def _dense_rows(lags, vals, lag_start: int, width: int):
    R = lags.shape[0]
    keep = (vals != 0) & (lags >= lag_start) & (lags < lag_start + width)
    rows = np.broadcast_to(np.arange(R)[:, None], lags.shape)[keep]
    flat = rows * width + (lags[keep] - lag_start)
    return np.bincount(flat, weights=vals[keep], minlength=R * width).reshape(R, width)


def _cir_row(system: LtvSystem, kind: CirKind, n: int) -> np.ndarray:
    lags, vals = system.support(kind, np.array([n]))
    used = lags[vals != 0]
    width = int(used.max()) + 1 if used.size else 1
    return _dense_rows(lags, vals, 0, width)[0]


def type1_cir(s: LtvSystem, n: int) -> np.ndarray:
    """``p_n(m)`` for ``m = 0 .. last nonzero lag``."""
    return _cir_row(s, CirKind.TYPE1, n)


def type2_cir(s: LtvSystem, n: int) -> np.ndarray:
    """``r_n(m)`` for ``m = 0 .. last nonzero lag``."""
    return _cir_row(s, CirKind.TYPE2, n)


def cir_grid(s: LtvSystem, kind: CirKind, n_values, workers: int = 1,
             lag_window: tuple[int, int] | None = None) -> LtvCirGrid:
    """Rows of ``kind`` for every ``n`` in ``n_values``.

    The stored lag window is the union of the nonzero supports unless
    ``lag_window`` (inclusive) is given.
    """
    kind = CirKind(kind)
    n_values = np.asarray(n_values, dtype=np.int64)
    blocks = [n_values[i:i + 256] for i in range(0, len(n_values), 256)]

    def work(block):
        if isinstance(s, DynamicScenario):
            return s._windows(kind, block)
        lags, vals = s.support(kind, block)
        return lags, vals, 0

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]

    if lag_window is None:
        used = [p[0][(p[1] != 0)] for p in parts]
        used = np.concatenate(used) if used else np.zeros(0, dtype=np.int64)
        lo, hi = (int(used.min()), int(used.max())) if used.size else (0, 0)
    else:
        lo, hi = lag_window
    width = hi - lo + 1
    taps = np.vstack([_dense_rows(p[0], p[1], lo, width) for p in parts])
    meta = {"extrapolated_evaluations": sum(p[2] for p in parts), "time_axis": "t = n / fs"}
    dist = None
    if isinstance(s, DynamicScenario):
        dist = s.row_distance(n_values)
        meta.update(retained_paths=len(s.images), kernel_halfwidth=s.options.kernel_halfwidth,
                    energy_floor_db=s.options.energy_floor_db,
                    reference_frequency_hz=s.reference_frequency)
        if meta["extrapolated_evaluations"]:
            log.info("%d tap evaluations used trajectories extrapolated beyond [0, %d]",
                        meta["extrapolated_evaluations"], s.duration_samples)
    return LtvCirGrid(kind, n_values, taps, lo, s.fs, dist, meta)


# conversions ----------------------------------------------------------------

def _convert(grid: LtvCirGrid, n_out=None) -> LtvCirGrid:
    # type I -> II reads row n + m; type II -> I reads row n - m
    sign = 1 if grid.kind is CirKind.TYPE1 else -1
    lags = grid.lags
    avail = grid.n_values
    if n_out is None:
        span = np.arange(avail.min() - abs(lags).max() - 1, avail.max() + abs(lags).max() + 2)
        need = span[:, None] + sign * lags[None, :]
        ok = np.isin(need, avail).all(axis=1)
        n_out = span[ok]
        if not len(n_out):
            raise CoverageError(np.setdiff1d(need.ravel(), avail))
    n_out = np.asarray(n_out, dtype=np.int64)
    need = n_out[:, None] + sign * lags[None, :]
    present = np.isin(need, avail)
    if not present.all():
        raise CoverageError(np.unique(need[~present]))
    pos = {int(n): i for i, n in enumerate(avail)}
    idx = np.vectorize(pos.__getitem__, otypes=[np.int64])(need)
    taps = grid.taps[idx, np.arange(len(lags))[None, :]]
    dist = None
    if grid.row_distance is not None:
        dist = np.array([grid.row_distance[pos[int(n)]] if int(n) in pos else np.nan for n in n_out])
    meta = dict(grid.meta, converted_from=grid.kind.value)
    return LtvCirGrid(grid.kind.other, n_out, taps, grid.lag_start, grid.fs, dist, meta)


def convert_type1_to_type2(grid: LtvCirGrid, n_out=None) -> LtvCirGrid:
    """``r_n(m) = p_{n+m}(m)``."""
    if grid.kind is not CirKind.TYPE1:
        raise ValueError("expected a type I grid")
    return _convert(grid, n_out)


def convert_type2_to_type1(grid: LtvCirGrid, n_out=None) -> LtvCirGrid:
    """``p_n(m) = r_{n-m}(m)``."""
    if grid.kind is not CirKind.TYPE2:
        raise ValueError("expected a type II grid")
    return _convert(grid, n_out)


# filtering ------------------------------------------------------------------

def _output_length(x: SignalBuffer, system: LtvSystem, n_out):
    if n_out is not None:
        return int(n_out)
    if not len(x):
        return 0
    return len(x) + system.max_lag(x.start, x.start + len(x) - 1)


def filter_type1(x: SignalBuffer, system: LtvSystem, n_out: int | None = None) -> SignalBuffer:
    """Output-switched structure: ``y(n) = sum_m p_n(m) x(n - m)``.

    ``y`` covers ``n = x.start .. x.start + n_out - 1``; by default long
    enough to hold the whole response to ``x``.
    """
    N = _output_length(x, system, n_out)
    y = np.zeros(N)
    extrap = 0
    for i in range(0, N, _BLOCK):
        n = x.start + np.arange(i, min(i + _BLOCK, N))
        if isinstance(system, DynamicScenario):
            lags, vals, e = system._windows(CirKind.TYPE1, n)
            extrap += e
        else:
            lags, vals = system.type1_support(n)
        src = n[:, None] - lags - x.start
        ok = (src >= 0) & (src < len(x)) & (vals != 0)
        contrib = np.where(ok, vals, 0.0) * x.samples[np.clip(src, 0, max(len(x) - 1, 0))]
        y[i:i + len(n)] = contrib.sum(axis=1)
    meta = {"structure": "type1", "extrapolated_evaluations": extrap}
    return SignalBuffer(y, system.fs, x.start, meta)


def filter_type2(x: SignalBuffer, system: LtvSystem, n_out: int | None = None) -> SignalBuffer:
    """Input-switched structure: ``y(n) = sum_m r_m(n - m) x(m)``, built as a superposition."""
    N = _output_length(x, system, n_out)
    y = np.zeros(N)
    extrap = 0
    for i in range(0, len(x), _BLOCK):
        seg = x.samples[i:i + _BLOCK]
        m = x.start + np.arange(i, i + len(seg))
        if isinstance(system, DynamicScenario):
            lags, vals, e = system._windows(CirKind.TYPE2, m)
            extrap += e
        else:
            lags, vals = system.type2_support(m)
        dst = m[:, None] + lags - x.start
        ok = (dst >= 0) & (dst < N) & (vals != 0)
        w = (vals * seg[:, None])[ok]
        y += np.bincount(dst[ok], weights=w, minlength=N)[:N]
    meta = {"structure": "type2", "extrapolated_evaluations": extrap}
    return SignalBuffer(y, system.fs, x.start, meta)


def filter_green(x: SignalBuffer, system: LtvSystem, n_out: int | None = None) -> SignalBuffer:
    """Direct superposition ``y(n) = sum_m g(n, m) x(m)`` over the full (n, m) grid."""
    N = _output_length(x, system, n_out)
    n = x.start + np.arange(N)[:, None]
    m = x.start + np.arange(len(x))[None, :]
    y = (system.green(n, m) * x.samples[None, :]).sum(axis=1)
    return SignalBuffer(y, system.fs, x.start, {"structure": "green"})

"""Static (LTI) channel between two fixed points.

Each eigenpath contributes a low-pass response: spreading and Thorp
absorption set its magnitude, the surface flips its sign and the fluid
seabed scales it by the two-fluid reflection coefficient. The dense route
sums the paths in frequency and inverts with a real inverse FFT; the sparse
route keeps one band-limited fractional-delay kernel per path.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Eigenpath, GeometryError, Position, Waveguide, enumerate_eigenpaths


def absorption_db_per_km(f):
    """Thorp absorption in dB/km for frequency ``f`` in Hz (scalar or array)."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("absorption is undefined for negative frequency")
    F2 = (f / 1e3) ** 2
    out = 0.11 * F2 / (1 + F2) + 44.0 * F2 / (4100 + F2) + 2.75e-4 * F2 + 0.003
    return out if out.ndim else float(out)


def no_absorption_db_per_km(f):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("absorption is undefined for negative frequency")
    out = np.zeros_like(f)
    return out if out.ndim else 0.0


ABSORPTION_MODELS: dict[str, Callable] = {
    "thorp": absorption_db_per_km,
    "none": no_absorption_db_per_km,
}


def get_absorption(name: str) -> Callable:
    try:
        return ABSORPTION_MODELS[name]
    except KeyError:
        raise ValueError(f"unknown absorption model {name!r}; "
                         f"choose from {sorted(ABSORPTION_MODELS)}") from None


def bottom_reflection(wg: Waveguide, grazing):
    """Rayleigh reflection coefficient of a fluid half-space at grazing angle ``grazing``.

    Real-valued. Where the bottom is faster than the water and the ray is
    beyond the critical angle the magnitude is 1 and 1.0 is returned.
    """
    theta = np.asarray(grazing, dtype=float)
    if np.any((theta <= 0) | (theta > math.pi / 2 + 1e-12)):
        raise ValueError("grazing angle must lie in (0, pi/2]")
    m = wg.bottom_density_rho_b / wg.water_density_rho
    n2 = (wg.sound_speed_c / wg.bottom_speed_cb) ** 2
    cos2 = np.cos(theta) ** 2
    sin = np.sin(theta)
    root = np.sqrt(np.maximum(n2 - cos2, 0.0))
    out = np.where(n2 >= cos2, (m * sin - root) / (m * sin + root), 1.0)
    return out if out.ndim else float(out)


def _bottom_reflection_unchecked(wg: Waveguide, theta):
    # theta may be 0 (direct path at equal heights); the limit there is -1
    m = wg.bottom_density_rho_b / wg.water_density_rho
    n2 = (wg.sound_speed_c / wg.bottom_speed_cb) ** 2
    cos2 = np.cos(theta) ** 2
    sin = np.sin(theta)
    root = np.sqrt(np.maximum(n2 - cos2, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (m * sin - root) / (m * sin + root)
    r = np.where(n2 >= cos2, r, 1.0)
    return np.where((m * sin + root) == 0, 1.0, r)


def spreading_absorption_gain(wg: Waveguide, length, f, absorption: Callable = absorption_db_per_km):
    """Amplitude factor ``1 / sqrt(l^k a(f)^l)`` with ``l`` in metres."""
    length = np.asarray(length, dtype=float)
    if np.any(length <= 0):
        raise GeometryError("path length must be positive")
    alpha = absorption(f)  # dB/km
    db = 10 * wg.spreading_exponent_k * np.log10(length) + alpha * length / 1e3
    return 10.0 ** (-db / 20.0)


def path_gain(wg: Waveguide, path: Eigenpath, f, absorption: Callable = absorption_db_per_km):
    return path.cum_reflection * spreading_absorption_gain(wg, path.length_lp, f, absorption)


def path_gains_at(wg: Waveguide, d, offset, n_surface, n_bottom, f,
                  absorption: Callable = absorption_db_per_km):
    """Vectorised path gains for horizontal distance(s) ``d`` and image offsets.

    Returns ``(gain, length)`` broadcast over the inputs.
    """
    d = np.asarray(d, dtype=float)
    length = np.hypot(d, offset)
    theta = np.arctan2(offset, d)
    coeff = np.where(n_surface % 2, -1.0, 1.0)
    coeff = coeff * np.where(n_bottom > 0, _bottom_reflection_unchecked(wg, theta) ** n_bottom, 1.0)
    return coeff * spreading_absorption_gain(wg, length, f, absorption), length


@dataclass(frozen=True)
class FrequencyGrid:
    f_max: float = 128e3
    n_bins: int = 2 ** 17 + 1

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError("a frequency grid needs at least two bins")
        if not self.f_max > 0:
            raise ValueError("f_max must be positive")

    @property
    def spacing(self) -> float:
        return self.f_max / (self.n_bins - 1)

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(0.0, self.f_max, self.n_bins)

    @property
    def sample_rate(self) -> float:
        return 2.0 * self.f_max

    @property
    def n_taps(self) -> int:
        return 2 * (self.n_bins - 1)


@dataclass
class StaticCFR:
    grid: FrequencyGrid
    values: np.ndarray
    endpoints: tuple[Position, Position] | None = None


@dataclass
class StaticCIR:
    sample_rate_fs: float
    taps: np.ndarray

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    @property
    def lags_s(self) -> np.ndarray:
        return np.arange(self.n_taps) / self.sample_rate_fs


def static_cfr(wg: Waveguide, tx: Position, rx: Position, grid: FrequencyGrid,
               absorption: Callable = absorption_db_per_km) -> StaticCFR:
    f = grid.frequencies
    H = np.zeros(grid.n_bins, dtype=complex)
    for p in enumerate_eigenpaths(wg, tx, rx):
        H += path_gain(wg, p, f, absorption) * np.exp(-2j * np.pi * f * p.delay_tau_p)
    return StaticCFR(grid, H, (tx, rx))


def hermitian_spectrum(cfr: StaticCFR) -> np.ndarray:
    """One-sided spectrum made consistent with a real signal (real DC and Nyquist bins)."""
    H = cfr.values.copy()
    H[0] = H[0].real
    H[-1] = H[-1].real
    return H


def static_cir(cfr: StaticCFR) -> StaticCIR:
    H = hermitian_spectrum(cfr)
    taps = np.fft.irfft(H, n=cfr.grid.n_taps)
    return StaticCIR(cfr.grid.sample_rate, taps)


# sparse form ---------------------------------------------------------------

def fractional_delay_kernel(u, halfwidth: int):
    """Hann-windowed sinc, zero for ``|u| >= halfwidth``."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < halfwidth
    win = 0.5 * (1.0 + np.cos(np.pi * u / halfwidth))
    return np.where(inside, np.sinc(u) * win, 0.0)


@dataclass(frozen=True)
class SparseTap:
    delay_tau_p: float
    gain: float
    cum_reflection: float
    length_lp: float
    gain_curve: Callable = field(compare=False, repr=False)


@dataclass(frozen=True)
class SparseTapList:
    taps: tuple[SparseTap, ...]
    sample_rate_fs: float
    kernel_halfwidth: int

    def synthesize(self, lag):
        """Summed amplitude at integer or fractional lag(s) in samples."""
        lag = np.asarray(lag, dtype=float)
        out = np.zeros(lag.shape)
        for t in self.taps:
            out = out + t.gain * fractional_delay_kernel(lag - t.delay_tau_p * self.sample_rate_fs,
                                                         self.kernel_halfwidth)
        return out if out.ndim else float(out)


def synthesize(taps: SparseTapList, lag):
    return taps.synthesize(lag)


def sparse_cir(wg: Waveguide, tx: Position, rx: Position, fs: float, kernel_halfwidth: int = 32,
               reference_frequency: float | None = None,
               absorption: Callable = absorption_db_per_km) -> SparseTapList:
    """One windowed-sinc kernel per eigenpath, scaled by its gain at ``reference_frequency``.

    ``reference_frequency`` defaults to ``fs / 4`` (the middle of the band
    ``[0, fs/2]``).
    """
    if kernel_halfwidth < 1:
        raise ValueError("kernel_halfwidth must be >= 1")
    fref = fs / 4 if reference_frequency is None else reference_frequency
    taps = []
    for p in enumerate_eigenpaths(wg, tx, rx):
        curve = (lambda f, p=p: path_gain(wg, p, f, absorption))
        taps.append(SparseTap(p.delay_tau_p, float(curve(fref)), p.cum_reflection, p.length_lp, curve))
    return SparseTapList(tuple(taps), fs, kernel_halfwidth)


# distance-keyed cache ------------------------------------------------------

class DistanceCache:
    """Responses keyed by horizontal distance quantised to ``quantum`` metres.

    Readers never block each other. Two workers may compute the same key
    concurrently; the first insertion wins and both return that value.
    """

    def __init__(self, quantum: float = 0.01):
        if not quantum > 0:
            raise ValueError("cache quantum must be positive")
        self.quantum = quantum
        self._store: dict[int, object] = {}
        self._lock = threading.Lock()
        self.computations = 0

    def key(self, d: float) -> int:
        return int(round(d / self.quantum))

    def quantize(self, d: float) -> float:
        return self.key(d) * self.quantum

    def get(self, d: float, compute: Callable[[float], object]):
        k = self.key(d)
        try:
            return self._store[k]
        except KeyError:
            pass
        value = compute(k * self.quantum)
        with self._lock:
            self.computations += 1
            return self._store.setdefault(k, value)

    def __len__(self):
        return len(self._store)


def static_cir_at_distance(wg: Waveguide, d: float, height_tx: float, height_rx: float,
                           grid: FrequencyGrid, cache: DistanceCache | None = None,
                           absorption: Callable = absorption_db_per_km) -> StaticCIR:
    """Dense CIR at horizontal separation ``d``, through ``cache`` when one is given."""

    def compute(dist):
        cfr = static_cfr(wg, Position(0.0, height_tx), Position(dist, height_rx), grid, absorption)
        return static_cir(cfr)

    if cache is None:
        return compute(d)
    return cache.get(d, compute)

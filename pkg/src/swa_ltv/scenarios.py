"""Builders for the constant-velocity example cases.

Velocities are magnitudes; every case is laid out along +x with the
transmitter at ``a0`` and the receiver at ``a0 + d0`` at ``n = 0``:

========  ======================  ===========================
kind      a_x(n)                  b_x(n)
========  ======================  ===========================
MovingRx  a0                      a0 + d0 + v n Ts
MovingTx  a0 - v n Ts             a0 + d0
Static    a0                      a0 + d0
CoMoving  a0 + v n Ts             a0 + d0 + v n Ts
========  ======================  ===========================
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .geometry import Position, Trajectory, Waveguide
from .ltv_core import DynamicScenario, SynthesisOptions
from .static_channel import fractional_delay_kernel, get_absorption, path_gains_at


class CaseKind(str, Enum):
    MOVING_RX = "MovingRx"
    MOVING_TX = "MovingTx"
    STATIC = "Static"
    CO_MOVING = "CoMoving"


class UnsupportedRegime(ValueError):
    """Mobile speed at or above the sound speed."""


@dataclass(frozen=True)
class CaseSpec:
    kind: CaseKind
    d0: float = 100.0
    v: float = 51.2
    wg: Waveguide = Waveguide()
    height_tx: float = 12.0
    height_rx: float = 12.0
    fs: float = 256e3
    duration: int | None = None  # samples; None sweeps d0 -> d0 + 1 m
    a0: float = 0.0
    options: SynthesisOptions = SynthesisOptions()

    def __post_init__(self):
        object.__setattr__(self, "kind", CaseKind(self.kind))
        if not self.d0 > 0:
            raise ValueError("d0 must be positive")
        if self.v < 0:
            raise ValueError("v is a speed magnitude and must be >= 0")
        if self.v >= self.wg.sound_speed_c:
            raise UnsupportedRegime(f"v = {self.v} m/s is not below c = {self.wg.sound_speed_c} m/s")
        if self.v > 0.1 * self.wg.sound_speed_c:
            warnings.warn(f"v = {self.v} m/s exceeds 10% of the sound speed", stacklevel=3)

    @property
    def duration_samples(self) -> int:
        if self.duration is not None:
            return int(self.duration)
        if self.v == 0:
            return 0
        return int(round(self.fs / self.v))  # 1 m of travel

    def distance(self, n):
        """Closed-form separation ``d(n)``."""
        n = np.asarray(n, dtype=float)
        if self.kind in (CaseKind.MOVING_RX, CaseKind.MOVING_TX):
            return self.d0 + self.v * (n / self.fs)
        return np.full(n.shape, self.d0) if n.ndim else self.d0


def build(case: CaseSpec) -> DynamicScenario:
    Ts = 1.0 / case.fs
    v = case.v
    vel = {
        CaseKind.MOVING_RX: (0.0, v),
        CaseKind.MOVING_TX: (-v, 0.0),
        CaseKind.STATIC: (0.0, 0.0),
        CaseKind.CO_MOVING: (v, v),
    }[case.kind]
    N = case.duration_samples
    tx = Trajectory(Position(case.a0, case.height_tx), vel[0], Ts, N)
    rx = Trajectory(Position(case.a0 + case.d0, case.height_rx), vel[1], Ts, N)
    return DynamicScenario(case.wg, tx, rx, case.fs, N, case.options)


def static_counterpart(case: CaseSpec) -> CaseSpec:
    return replace(case, kind=CaseKind.STATIC)


def dynamic_lti_response(case: CaseSpec, max_lag: int | None = None) -> np.ndarray:
    """Co-moving LTI response ``h(m)`` = lag-``m`` tap of the static channel at ``d0 + v m Ts``.

    Evaluated by sweeping every lag directly (no arrival-lag search), so it
    is an independent route to the rows produced by :mod:`ltv_core`.
    """
    if case.kind is not CaseKind.CO_MOVING:
        raise ValueError("dynamic_lti_response needs a CoMoving case")
    scn = build(case)  # for the retained image set and options
    im = scn.images
    K = scn.options.kernel_halfwidth
    c = case.wg.sound_speed_c
    if max_lag is None:
        far = np.hypot(case.d0, im.offset).max()
        max_lag = int(np.ceil(case.fs * far / (c - case.v))) + 2 * K + 2
    m = np.arange(max_lag + 1, dtype=float)[:, None]
    d = case.d0 + case.v * (m / case.fs)
    gain, length = path_gains_at(case.wg, d, im.offset, im.n_surface, im.n_bottom,
                                 scn.reference_frequency, get_absorption(scn.options.absorption))
    u = m - case.fs * length / c
    return (gain * fractional_delay_kernel(u, K)).sum(axis=1)

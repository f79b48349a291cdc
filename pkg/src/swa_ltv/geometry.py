"""Two-dimensional shallow-water waveguide and image-method eigenpaths.

The water column is bounded by a flat pressure-release surface and a flat
fluid seabed, parallel to each other. Positions are given as a horizontal
coordinate ``x`` and a height above the seabed; internally the image
construction works with depth below the surface (``depth_w - height``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    """Degenerate or out-of-range geometry."""


@dataclass(frozen=True)
class Waveguide:
    depth_w: float = 18.0
    sound_speed_c: float = 1500.0
    bottom_speed_cb: float = 1300.0
    bottom_density_rho_b: float = 1800.0
    water_density_rho: float = 1000.0
    spreading_exponent_k: float = 1.5
    max_reflections_pmax: int = 10

    def __post_init__(self):
        for name in ("depth_w", "sound_speed_c", "bottom_speed_cb",
                     "bottom_density_rho_b", "water_density_rho"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be positive, got {getattr(self, name)}")
        if self.spreading_exponent_k < 1:
            raise GeometryError("spreading_exponent_k must be >= 1")
        if int(self.max_reflections_pmax) != self.max_reflections_pmax or self.max_reflections_pmax < 0:
            raise GeometryError("max_reflections_pmax must be a non-negative integer")

    def check_height(self, height: float) -> None:
        if not 0.0 <= height <= self.depth_w:
            raise GeometryError(
                f"height {height} m is outside the water column [0, {self.depth_w}]")


@dataclass(frozen=True)
class Position:
    x: float
    height_above_bottom: float


@dataclass(frozen=True)
class Trajectory:
    """Straight, horizontal, constant-speed motion sampled every ``sample_period_Ts``."""

    start: Position
    velocity_x: float
    sample_period_Ts: float
    duration_samples: int

    def __post_init__(self):
        if not self.sample_period_Ts > 0:
            raise GeometryError("sample_period_Ts must be positive")
        if self.duration_samples < 0:
            raise GeometryError("duration_samples must be non-negative")

    def x_at(self, n):
        """Horizontal coordinate at (possibly fractional, possibly out-of-range) sample ``n``.

        Linear extrapolation outside ``[0, duration_samples]``; callers that
        must not extrapolate use :func:`position_at`.
        """
        return self.start.x + self.velocity_x * (np.asarray(n, dtype=float) * self.sample_period_Ts)

    def in_range(self, n):
        n = np.asarray(n)
        return (n >= 0) & (n <= self.duration_samples)


def position_at(traj: Trajectory, n: int) -> Position:
    if not 0 <= n <= traj.duration_samples:
        raise IndexError(f"sample {n} outside trajectory [0, {traj.duration_samples}]")
    return Position(float(traj.x_at(n)), traj.start.height_above_bottom)


@dataclass(frozen=True)
class Eigenpath:
    n_surface: int
    n_bottom: int
    length_lp: float
    delay_tau_p: float
    grazing_angle: float
    cum_reflection: float
    image_offset: float  # vertical distance between receiver and source image, m


@dataclass(frozen=True)
class ImageSet:
    """Vertical image offsets and reflection counts for a fixed pair of heights.

    For horizontal-only motion these do not change with time, so they are
    computed once per scenario and reused for every distance.
    """

    offset: np.ndarray
    n_surface: np.ndarray
    n_bottom: np.ndarray

    def __len__(self):
        return len(self.offset)

    def subset(self, mask) -> "ImageSet":
        return ImageSet(self.offset[mask], self.n_surface[mask], self.n_bottom[mask])


def image_set(wg: Waveguide, height_tx: float, height_rx: float) -> ImageSet:
    """Source images of the flat parallel waveguide, limited to ``pmax`` bounces per boundary.

    With depths ``zs``, ``zr`` below the surface the images sit at
    ``2 j w + zs`` and ``2 j w - zs``. Counting the surface planes
    (even multiples of ``w``) and bottom planes (odd multiples) crossed on
    the way to the receiver gives, for ``j >= 1``:

    * ``+``, ``+j`` and ``-j``: ``j`` surface and ``j`` bottom bounces
      (two distinct rays, bottom-first and surface-first),
    * ``-``, ``j``: ``j-1`` surface, ``j`` bottom,
    * ``-``, ``1-j``: ``j`` surface, ``j-1`` bottom,

    plus the direct ray.
    """
    wg.check_height(height_tx)
    wg.check_height(height_rx)
    w = wg.depth_w
    zs = w - height_tx
    zr = w - height_rx
    pmax = int(wg.max_reflections_pmax)
    offs, ns, nb = [abs(zs - zr)], [0], [0]
    for j in range(1, pmax + 1):
        offs += [abs(2 * j * w + zs - zr), abs(-2 * j * w + zs - zr),
                 abs(2 * j * w - zs - zr), abs(2 * (1 - j) * w - zs - zr)]
        ns += [j, j, j - 1, j]
        nb += [j, j, j, j - 1]
    return ImageSet(np.array(offs, dtype=float), np.array(ns, dtype=int), np.array(nb, dtype=int))


def enumerate_eigenpaths(wg: Waveguide, tx: Position, rx: Position) -> list[Eigenpath]:
    """All eigenpaths between two fixed points, sorted by ascending delay."""
    from .static_channel import bottom_reflection

    d = abs(tx.x - rx.x)
    if d == 0:
        raise GeometryError("zero horizontal separation: the model is distance-based")
    imgs = image_set(wg, tx.height_above_bottom, rx.height_above_bottom)
    paths = []
    for z, ns, nb in zip(imgs.offset, imgs.n_surface, imgs.n_bottom):
        length = math.hypot(d, z)
        theta = math.atan2(z, d)
        coeff = (-1.0) ** int(ns)
        if nb:
            coeff *= bottom_reflection(wg, theta) ** int(nb)
        paths.append(Eigenpath(int(ns), int(nb), length, length / wg.sound_speed_c,
                               theta, coeff, float(z)))
    paths.sort(key=lambda p: (p.delay_tau_p, p.n_surface, p.n_bottom))
    return paths

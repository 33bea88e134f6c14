"""Beam geometry: idealized sector beams and uniform linear array patterns.

Two transmit models share one coverage interface. The sector model trades
the omnidirectional disk of radius r for a circular sector of length
``BL = m*r`` and width ``BW = 2*pi/m**2`` (same coverage area, pi*r^2).
The ULA model derives an angular gain pattern from the interference of m
isotropic elements and maps gain to range through the path-loss exponent,
so its coverage area is also conserved at pi*r^2 for free-space loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class AntennaConfig:
    max_elements: int = 6
    frequency: float = 2.4e9
    element_spacing: float | None = None  # metres; None = half wavelength
    path_loss_exponent: float = 2.0

    def __post_init__(self):
        if self.max_elements < 2:
            raise ValueError("need at least 2 antenna elements to beamform")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.element_spacing is not None and self.element_spacing <= 0:
            raise ValueError("element spacing must be positive")
        if self.path_loss_exponent <= 0:
            raise ValueError("path loss exponent must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def spacing_wavelengths(self) -> float:
        """Element spacing in wavelengths (0.5 unless overridden)."""
        if self.element_spacing is None:
            return 0.5
        return self.element_spacing / self.wavelength


@dataclass(frozen=True, eq=False)
class Beam:
    """A node's transmission shape for one time step."""

    kind: str  # "omni" | "sector" | "ula"
    origin: tuple[float, float]
    boresight: float = 0.0
    m: int = 1
    base_radius: float = 0.0
    width: float = 0.0  # sector only

    def __post_init__(self):
        if self.kind not in ("omni", "sector", "ula"):
            raise ValueError(f"unknown beam kind {self.kind!r}")
        if (self.kind == "omni") != (self.m == 1):
            raise ValueError("omni beams use exactly one element, directional >= 2")
        if self.base_radius <= 0:
            raise ValueError("base radius must be positive")
        if self.kind == "sector" and not 0.0 < self.width <= 2.0 * math.pi:
            raise ValueError("sector width must lie in (0, 2*pi]")


def sector_geometry(m: int, r: float) -> tuple[float, float]:
    """Beam length and width of the sector model: BL = m*r, BW = 2*pi*r^2/BL^2."""
    if m < 2:
        raise ValueError("beamforming requires at least 2 elements")
    if r <= 0:
        raise ValueError("radius must be positive")
    bl = m * r
    bw = 2.0 * math.pi * r * r / (bl * bl)
    return bl, bw


def sector_count(m: int) -> int:
    """Number of sectors tiling the circle: ceil(2*pi / BW), i.e. m**2."""
    if m < 2:
        raise ValueError("beamforming requires at least 2 elements")
    return m * m


def _array_intensity(psi, m: int):
    """|array factor|^2 / m^2 for m elements at inter-element phase psi."""
    psi = np.asarray(psi, dtype=float)
    half = 0.5 * psi
    sin_half = np.sin(half)
    coherent = np.abs(sin_half) < 1e-12  # psi = 0 mod 2*pi: fully coherent sum
    den = np.where(coherent, 1.0, m * sin_half)
    af = np.where(coherent, 1.0, np.sin(m * half) / den)
    return af * af


@lru_cache(maxsize=None)
def _mean_intensity(m: int, spacing_wl: float) -> float:
    # Circular average of _array_intensity(2*pi*s*sin(phi), m); the cross
    # terms integrate to Bessel J0 values, giving a closed form.
    if m == 1:
        return 1.0
    z = 2.0 * math.pi * spacing_wl
    total = m + 2.0 * sum((m - d) * special.j0(z * d) for d in range(1, m))
    return total / (m * m)


def ula_gain(phi, m: int, spacing_wl: float = 0.5):
    """Normalized ULA gain at angular offset phi from the boresight.

    The pattern is the broadside slice of an m-element array of isotropic
    radiators, normalized so its circular average is 1 (power conservation).
    m = 1 degenerates to the omnidirectional unit gain.
    """
    if m < 1:
        raise ValueError("element count must be >= 1")
    arr = np.asarray(phi, dtype=float)
    if m == 1:
        out = np.ones_like(arr)
        return out if out.ndim else 1.0
    psi = 2.0 * math.pi * spacing_wl * np.sin(arr)
    out = _array_intensity(psi, m) / _mean_intensity(m, spacing_wl)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _steered_mean_intensity(m: int, spacing_wl: float, boresight: float) -> float:
    if m == 1:
        return 1.0
    z = 2.0 * math.pi * spacing_wl
    cb = math.cos(boresight)
    total = m + 2.0 * sum(
        (m - d) * special.j0(z * d) * math.cos(z * d * cb) for d in range(1, m)
    )
    return total / (m * m)


def ula_gain_steered(phi, m: int, boresight: float, spacing_wl: float = 0.5):
    """Physically steered ULA pattern (array on the x-axis, progressive phase).

    Unlike :func:`ula_gain` this reproduces the pattern-shape dependence on
    the steering direction (mirror lobes at +/- boresight); it is meant for
    pattern-table exports, not for coverage queries.
    """
    if m < 1:
        raise ValueError("element count must be >= 1")
    arr = np.asarray(phi, dtype=float)
    if m == 1:
        out = np.ones_like(arr)
        return out if out.ndim else 1.0
    psi = 2.0 * math.pi * spacing_wl * (np.cos(arr) - math.cos(boresight))
    out = _array_intensity(psi, m) / _steered_mean_intensity(m, spacing_wl, boresight)
    return out if out.ndim else float(out)


def wrap_angle(phi):
    """Wrap angles to (-pi, pi]."""
    arr = np.asarray(phi, dtype=float)
    out = np.mod(arr + np.pi, 2.0 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _gain_curve(m: int, spacing_wl: float, n_points: int = 4096):
    # Gain vs |offset| on [0, pi]; the pattern is even in the offset.
    phi = np.linspace(0.0, np.pi, n_points)
    return phi, ula_gain(phi, m, spacing_wl)


def reach(beam: Beam, phi: float, cfg: AntennaConfig):
    """Transmission range of the beam in direction phi (absolute bearing)."""
    offset = wrap_angle(np.asarray(phi, dtype=float) - beam.boresight)
    if beam.kind == "omni":
        out = np.full_like(offset, beam.base_radius, dtype=float)
    elif beam.kind == "sector":
        bl = beam.m * beam.base_radius
        out = np.where(np.abs(offset) <= 0.5 * beam.width + 1e-9, bl, 0.0)
    else:
        g = ula_gain(offset, beam.m, cfg.spacing_wavelengths)
        out = beam.base_radius * np.asarray(g) ** (1.0 / cfg.path_loss_exponent)
    return out if out.ndim else float(out)


def covers(beam: Beam, target, cfg: AntennaConfig) -> bool:
    """True iff the target point lies within the beam's reach."""
    dx = target[0] - beam.origin[0]
    dy = target[1] - beam.origin[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return False
    bearing = math.atan2(dy, dx)
    return dist <= reach(beam, bearing, cfg)


def covered_indices(beam: Beam, positions, cfg: AntennaConfig) -> np.ndarray:
    """Indices of all positions covered by the beam (self excluded by distance)."""
    pos = np.asarray(positions, dtype=float)
    delta = pos - np.asarray(beam.origin, dtype=float)
    dist = np.hypot(delta[:, 0], delta[:, 1])
    bearing = np.arctan2(delta[:, 1], delta[:, 0])
    offset = wrap_angle(bearing - beam.boresight)
    if beam.kind == "omni":
        limit = beam.base_radius
        mask = (dist > 0.0) & (dist <= limit)
    elif beam.kind == "sector":
        bl = beam.m * beam.base_radius
        mask = (dist > 0.0) & (dist <= bl) & \
            (np.abs(offset) <= 0.5 * beam.width + 1e-9)
    else:
        knots, gains = _gain_curve(beam.m, cfg.spacing_wavelengths)
        g = np.interp(np.abs(offset), knots, gains)
        limit = beam.base_radius * g ** (1.0 / cfg.path_loss_exponent)
        mask = (dist > 0.0) & (dist <= limit)
    return np.nonzero(mask)[0]


def pattern_rows(m: int, kind: str, r: float, cfg: AntennaConfig,
                 n_points: int = 720, boresight: float | None = None) -> np.ndarray:
    """(phi, gain, reach) table for pattern plots.

    For the ULA a steering angle may be given to export the physically
    steered pattern; otherwise the canonical offset pattern is used.
    """
    phi = np.linspace(0.0, 2.0 * np.pi, n_points, endpoint=False)
    if kind == "ula":
        if boresight is not None:
            g = ula_gain_steered(phi, m, boresight, cfg.spacing_wavelengths)
        else:
            g = ula_gain(phi, m, cfg.spacing_wavelengths)
        rch = r * np.asarray(g) ** (1.0 / cfg.path_loss_exponent)
    elif kind == "sector":
        if m < 2:
            raise ValueError("sector pattern needs m >= 2")
        bl, bw = sector_geometry(m, r)
        centered = wrap_angle(phi - (boresight or 0.0))
        inside = np.abs(centered) <= 0.5 * bw
        g = np.where(inside, (bl / r) ** cfg.path_loss_exponent, 0.0)
        rch = np.where(inside, bl, 0.0)
    else:
        raise ValueError(f"unknown antenna kind {kind!r}")
    return np.column_stack([phi, g, rch])

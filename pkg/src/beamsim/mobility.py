"""Truncated power-law jump mobility inside a rectangular arena.

Jump lengths follow a power law with an exponential cutoff,
``p(x) ~ x^(-alpha) * exp(-x/beta)`` on the support ``[1, x_max]`` metres.
Each node makes one jump per discrete time step in a uniformly random
direction and is specularly reflected at the arena boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class MobilityConfig:
    """Jump-length law parameters plus the arena they apply to.

    alpha is the power-law decay exponent (> 1), beta the exponential
    cutoff in metres, x_max the hard truncation of the sampler's support.
    """

    alpha: float
    beta: float
    x_max: float
    area_width: float
    area_height: float

    def __post_init__(self):
        if self.alpha <= 1.0:
            raise ValueError(f"alpha must be > 1 (normalization), got {self.alpha}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.x_max < 1.0:
            raise ValueError(f"x_max must be >= 1, got {self.x_max}")
        if self.area_width <= 0.0 or self.area_height <= 0.0:
            raise ValueError("arena dimensions must be positive")

    @classmethod
    def from_arena(cls, alpha, beta, area_width, area_height, x_max=None):
        """Build a config with the default truncation
        ``x_max = min(10*beta, arena diagonal)``."""
        if x_max is None:
            x_max = min(10.0 * beta, math.hypot(area_width, area_height))
        return cls(alpha, beta, x_max, area_width, area_height)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.area_width, self.area_height)


@lru_cache(maxsize=None)
def normalization_constant(cfg: MobilityConfig) -> float:
    """1 / integral of x^(-alpha) exp(-x/beta) over [1, x_max].

    Computed numerically; the closed form via the upper incomplete gamma
    function is ill-conditioned for alpha > 1.
    """
    alpha, beta = cfg.alpha, cfg.beta
    val, _ = integrate.quad(
        lambda x: x ** (-alpha) * math.exp(-x / beta), 1.0, cfg.x_max, limit=200
    )
    return 1.0 / val


def jump_pdf(x, cfg: MobilityConfig):
    """Normalized jump-length density at x metres.

    Zero beyond x_max; below 1 m the density is held at its value at 1 m
    (the sampler never draws there, the support starts at 1 m).
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("jump length must be >= 0")
    c = normalization_constant(cfg)
    clamped = np.maximum(arr, 1.0)
    out = c * clamped ** (-cfg.alpha) * np.exp(-clamped / cfg.beta)
    out = np.where(arr > cfg.x_max, 0.0, out)
    return out if out.ndim else float(out)


def jump_cdf(x, cfg: MobilityConfig):
    """CDF of the jump law by numeric integration (diagnostic/oracle use)."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    for i, xi in enumerate(arr):
        if xi <= 1.0:
            out[i] = 0.0
        else:
            hi = min(xi, cfg.x_max)
            val, _ = integrate.quad(lambda t: jump_pdf(t, cfg), 1.0, hi, limit=200)
            out[i] = min(val, 1.0)
    return out if np.asarray(x).ndim else float(out[0])


class JumpSampler:
    """Inverse-CDF jump sampler over a precomputed log-spaced table."""

    def __init__(self, cfg: MobilityConfig, table_size: int = 8192):
        if table_size < 4096:
            raise ValueError("table_size must be >= 4096 knots")
        grid = np.geomspace(1.0, cfg.x_max, table_size)
        pdf = jump_pdf(grid, cfg)
        cdf = integrate.cumulative_trapezoid(pdf, grid, initial=0.0)
        cdf /= cdf[-1]
        self.cfg = cfg
        self._grid = grid
        self._cdf = cdf

    def sample(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        return np.interp(u, self._cdf, self._grid)


@lru_cache(maxsize=None)
def _sampler_for(cfg: MobilityConfig) -> JumpSampler:
    return JumpSampler(cfg)


def sample_jump(rng: np.random.Generator, cfg: MobilityConfig, size=None):
    """Draw jump lengths in [1, x_max] distributed per jump_pdf."""
    return _sampler_for(cfg).sample(rng, size)


def _reflect(coord: np.ndarray, size: float) -> np.ndarray:
    # Specular reflection onto [0, size]; the modular form handles any
    # number of bounces in one jump.
    period = 2.0 * size
    y = np.mod(coord, period)
    return np.where(y > size, period - y, y)


def apply_jumps(positions, lengths, angles, cfg: MobilityConfig) -> np.ndarray:
    """Displace positions by the given polar jumps and reflect into the arena."""
    pos = np.asarray(positions, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    angles = np.asarray(angles, dtype=float)
    raw_x = pos[:, 0] + lengths * np.cos(angles)
    raw_y = pos[:, 1] + lengths * np.sin(angles)
    out = np.empty_like(pos)
    out[:, 0] = _reflect(raw_x, cfg.area_width)
    out[:, 1] = _reflect(raw_y, cfg.area_height)
    return out


def step(positions, rng: np.random.Generator, cfg: MobilityConfig) -> np.ndarray:
    """Advance every node by one independent jump (uniform direction)."""
    pos = np.asarray(positions, dtype=float)
    if np.any(pos[:, 0] < 0) or np.any(pos[:, 0] > cfg.area_width) or \
            np.any(pos[:, 1] < 0) or np.any(pos[:, 1] > cfg.area_height):
        raise ValueError("positions must start inside the arena")
    n = len(pos)
    lengths = sample_jump(rng, cfg, size=n)
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return apply_jumps(pos, lengths, angles, cfg)


def scatter(rng: np.random.Generator, n: int, cfg: MobilityConfig) -> np.ndarray:
    """Place n nodes uniformly at random in the arena."""
    x = rng.uniform(0.0, cfg.area_width, size=n)
    y = rng.uniform(0.0, cfg.area_height, size=n)
    return np.column_stack([x, y])

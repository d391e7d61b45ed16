"""Periodic 1D lattice, state containers and point-source initial states.

Units are fixed by hbar = 1.  All containers are frozen; sample arrays are
copied on construction and marked read-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

MIN_POINTS = 8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid ``x_j = x_min + j*dx``, ``j = 0..n-1``.

    ``x_max`` is identified with ``x_min``.  The momentum lattice is the DFT
    dual ``p_k = 2*pi*k/(n*dx)`` in numpy FFT order (``p`` property) or sorted
    ascending (``p_sorted``).
    """

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise ValueError(f"n must be an integer >= {MIN_POINTS}, got {self.n}")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return _frozen(self.x_min + self.dx * np.arange(self.n))

    @cached_property
    def p(self) -> np.ndarray:
        return _frozen(2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx))

    @cached_property
    def p_sorted(self) -> np.ndarray:
        return _frozen(np.fft.fftshift(self.p))

    @property
    def dp(self) -> float:
        return 2.0 * np.pi / (self.n * self.dx)

    @property
    def center(self) -> float:
        return 0.5 * (self.x_min + self.x_max)

    def displacement(self, x0: float) -> np.ndarray:
        """Minimum-image displacement ``x_j - x0`` on the periodic domain."""
        L = self.length
        return np.mod(self.x - x0 + 0.5 * L, L) - 0.5 * L

    def contains(self, x0: float) -> bool:
        return self.x_min < x0 < self.x_max


def make_grid(x_min: float, x_max: float, n: int) -> Grid:
    return Grid(float(x_min), float(x_max), int(n))


@dataclass(frozen=True)
class FuzzyState:
    """Complex amplitude ``g(x_j)`` at time ``t``."""

    grid: Grid
    samples: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.samples, dtype=complex)
        if g.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("state samples must be finite")
        object.__setattr__(self, "samples", _frozen(g))
        object.__setattr__(self, "t", float(self.t))

    def replace(self, samples: np.ndarray, t: Optional[float] = None) -> "FuzzyState":
        return FuzzyState(self.grid, samples, self.t if t is None else t)

    @property
    def phase(self) -> np.ndarray:
        """Local phase ``arg g(x)``."""
        return np.angle(self.samples)

    def to_columns(self, path) -> None:
        """Write ``x, Re g, Im g`` as comma-separated text."""
        data = np.column_stack([self.grid.x, self.samples.real, self.samples.imag])
        np.savetxt(Path(path), data, delimiter=",", fmt="%.17g",
                   header="x,re_g,im_g", comments="")


@dataclass(frozen=True)
class Density:
    """Nonnegative real field ``w(x_j)``."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.samples, dtype=float)
        if w.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("density samples must be finite")
        if np.any(w < 0):
            raise ValueError("density must be nonnegative; use SignedField")
        object.__setattr__(self, "samples", _frozen(w))

    @property
    def norm(self) -> float:
        return float(np.sum(self.samples) * self.grid.dx)


@dataclass(frozen=True)
class SignedField:
    """Real field with no sign constraint (the interference term)."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.samples, dtype=float)
        if w.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {w.shape}")
        object.__setattr__(self, "samples", _frozen(w))

    @property
    def integral(self) -> float:
        return float(np.sum(self.samples) * self.grid.dx)


@dataclass(frozen=True)
class PointSource:
    x: float
    w0: float
    alpha: float = 0.0


@dataclass(frozen=True)
class SourceSpec:
    """Weighted, phased point sources regularized to Gaussians of width ``sigma_reg``."""

    sources: tuple
    sigma_reg: float

    def __post_init__(self):
        srcs = tuple(s if isinstance(s, PointSource) else PointSource(*s) for s in self.sources)
        object.__setattr__(self, "sources", srcs)
        if not srcs:
            raise ValueError("at least one source is required")
        if any(s.w0 < 0 for s in srcs):
            raise ValueError("source weights must be nonnegative")
        total = math.fsum(s.w0 for s in srcs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"source weights must sum to 1, got {total!r}")
        if not self.sigma_reg > 0:
            raise ValueError("sigma_reg must be positive")

    @classmethod
    def from_points(cls, xs: Sequence[float], w0: Optional[Sequence[float]] = None,
                    alpha: Optional[Sequence[float]] = None, sigma_reg: float = 0.5) -> "SourceSpec":
        k = len(xs)
        w0 = [1.0 / k] * k if w0 is None else list(w0)
        alpha = [0.0] * k if alpha is None else list(alpha)
        return cls(tuple(PointSource(float(a), float(b), float(c))
                         for a, b, c in zip(xs, w0, alpha)), float(sigma_reg))

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.x for s in self.sources])

    def validate(self, grid: Grid) -> None:
        for s in self.sources:
            if not grid.contains(s.x):
                raise ValueError(f"source at x={s.x} lies outside ({grid.x_min}, {grid.x_max})")
        if self.sigma_reg < 2.0 * grid.dx:
            raise ValueError(
                f"sigma_reg={self.sigma_reg} is below 2*dx={2.0 * grid.dx}; not resolvable")

    def single(self, i: int) -> "SourceSpec":
        """The i-th source alone, at unit weight."""
        s = self.sources[i]
        return SourceSpec((PointSource(s.x, 1.0, s.alpha),), self.sigma_reg)


@dataclass(frozen=True)
class EvolutionSpec:
    s: int = 2
    m0: float = 1.0
    t_final: float = 0.0
    dt: Optional[float] = None
    potential: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 2 or self.s % 2:
            raise ValueError(f"exponent s must be an even integer >= 2, got {self.s}")
        object.__setattr__(self, "s", int(self.s))
        if not self.m0 > 0:
            raise ValueError("m0 must be positive")
        if not self.t_final >= 0:
            raise ValueError("t_final must be nonnegative")
        if self.potential is not None:
            v = np.asarray(self.potential, dtype=float)
            if not np.all(np.isfinite(v)):
                raise ValueError("potential samples must be finite")
            object.__setattr__(self, "potential", _frozen(v))
            if self.dt is None or not self.dt > 0:
                raise ValueError("dt > 0 is required when a potential is present")
        elif self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class EnsembleSpec:
    """Probabilistic mixture of source specifications."""

    members: tuple

    def __post_init__(self):
        members = tuple((float(P), spec) for P, spec in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        if any(P < 0 for P, _ in members):
            raise ValueError("member probabilities must be nonnegative")
        total = math.fsum(P for P, _ in members)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"member probabilities must sum to 1, got {total!r}")


def norm2(state: FuzzyState) -> float:
    """``sum |g_j|^2 dx``; the midpoint rule on the periodic grid."""
    g = state.samples
    return float(np.sum(g.real ** 2 + g.imag ** 2) * state.grid.dx)


def normalize(state: FuzzyState) -> FuzzyState:
    n = norm2(state)
    if not n > 0:
        raise ValueError("cannot normalize a zero-norm state")
    return state.replace(state.samples / math.sqrt(n))


def build_source_state(grid: Grid, spec: SourceSpec) -> FuzzyState:
    """Normalized superposition of Gaussian-regularized point sources at t = 0.

    Each source contributes ``sqrt(w0) * exp(-(x - x_i)^2 / (2 sigma^2)) * exp(i alpha)``
    with periodic (minimum-image) distance.
    """
    spec.validate(grid)
    g = np.zeros(grid.n, dtype=complex)
    for s in spec.sources:
        if s.w0 == 0:
            continue
        d = grid.displacement(s.x)
        g += math.sqrt(s.w0) * np.exp(-d ** 2 / (2.0 * spec.sigma_reg ** 2)) * np.exp(1j * s.alpha)
    return normalize(FuzzyState(grid, g, 0.0))


def build_member_states(grid: Grid, spec: SourceSpec) -> list:
    """Per-source states, each normalized then scaled to norm ``w0_i``."""
    return [
        FuzzyState(grid, math.sqrt(s.w0) * build_source_state(grid, spec.single(i)).samples, 0.0)
        for i, s in enumerate(spec.sources)
    ]

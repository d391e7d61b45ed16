"""Densities, interference decomposition and the diagnostics built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import (Density, EnsembleSpec, EvolutionSpec, FuzzyState, Grid, SignedField,
                   build_source_state)
from .spectral import evolve


def density(state: FuzzyState) -> Density:
    g = state.samples
    return Density(state.grid, g.real ** 2 + g.imag ** 2)


def mixed_density(grid: Grid, ensemble: EnsembleSpec, evolution: EvolutionSpec) -> Density:
    """``sum_i P_i w_i(x, t)`` with every member evolved on its own."""
    total = np.zeros(grid.n)
    for P, spec in ensemble.members:
        w = density(evolve(build_source_state(grid, spec), evolution)).samples
        total = total + P * w
    return Density(grid, total)


@dataclass(frozen=True)
class DecompositionResult:
    """``w_s = w_m + l_g * w_n`` for a pure state and its separately evolved members."""

    w_s: Density
    w_m: Density
    w_n: SignedField
    members: tuple
    l_g: int = 1

    @property
    def w_n_integral(self) -> float:
        return self.w_n.integral

    @property
    def w_n_min(self) -> float:
        return float(self.w_n.samples.min())

    @property
    def cross_bound(self) -> np.ndarray:
        """Pointwise Cauchy-Schwarz bound ``sum_{i<j} 2 sqrt(w_i w_j)``."""
        ws = [m.samples for m in self.members]
        b = np.zeros_like(ws[0])
        for i in range(len(ws)):
            for j in range(i + 1, len(ws)):
                b += 2.0 * np.sqrt(ws[i] * ws[j])
        return b

    @property
    def bound_excess(self) -> float:
        """``max(|w_n| - bound)``; nonpositive when the bound holds."""
        return float(np.max(np.abs(self.w_n.samples) - self.cross_bound))

    @property
    def projection_coeff(self) -> float:
        """Relative L2 size of the least-squares projection of w_n onto span{w_i}."""
        wn = self.w_n.samples
        size = np.linalg.norm(wn)
        if size == 0:
            return 0.0
        A = np.column_stack([m.samples for m in self.members])
        coef, *_ = np.linalg.lstsq(A, wn, rcond=None)
        return float(np.linalg.norm(A @ coef) / size)

    def to_dict(self) -> dict:
        return {
            "l_g": self.l_g,
            "w_n_integral": self.w_n_integral,
            "w_n_min": self.w_n_min,
            "bound_excess": self.bound_excess,
            "projection_coeff": self.projection_coeff,
        }


def decompose(pure: FuzzyState, members: Sequence[FuzzyState]) -> DecompositionResult:
    """Split the pure-state density into the member sum and the interference term.

    Member weights are carried by the member norms.
    """
    if not members:
        raise ValueError("need at least one member state")
    for m in members:
        if m.grid != pure.grid:
            raise ValueError("member state lives on a different grid")
        if abs(m.t - pure.t) > 1e-12 * max(1.0, abs(pure.t)):
            raise ValueError(f"timestamp mismatch: {m.t} vs {pure.t}")
    ws = density(pure)
    parts = tuple(density(m) for m in members)
    wm = np.zeros(pure.grid.n)
    for d in parts:
        wm = wm + d.samples
    return DecompositionResult(ws, Density(pure.grid, wm),
                               SignedField(pure.grid, ws.samples - wm), parts)


def overlap_measure(w1: Density, w2: Density, norm_tol: float = 1e-6) -> float:
    """``R_w = int sqrt(w1 w2) dx`` for unit-norm densities; lies in [0, 1]."""
    if w1.grid != w2.grid:
        raise ValueError("densities live on different grids")
    for w in (w1, w2):
        if abs(w.norm - 1.0) > norm_tol:
            raise ValueError(f"overlap needs normalized densities, got norm {w.norm:.12g}")
    return float(np.sum(np.sqrt(w1.samples * w2.samples)) * w1.grid.dx)


def fringe_spacing(m0: float, L: float, t: float) -> float:
    """Two-source fringe period ``2 pi t / (m0 L)``."""
    if not (m0 > 0 and L > 0 and t > 0):
        raise ValueError("fringe spacing needs m0, L, t > 0")
    return 2.0 * math.pi * t / (m0 * L)


def _window(grid: Grid, center: float, halfwidth: float) -> np.ndarray:
    return np.abs(grid.x - center) <= halfwidth


def fringe_peaks(w: Density, center: float, halfwidth: float) -> np.ndarray:
    """Sub-grid positions of local maxima of w within ``center +/- halfwidth``.

    Each maximum is refined by the vertex of the parabola through it and its
    two neighbours.
    """
    y = w.samples
    x = w.grid.x
    idx = np.flatnonzero(_window(w.grid, center, halfwidth))
    idx = idx[(idx > 0) & (idx < w.grid.n - 1)]
    peaks = []
    for i in idx:
        a, b, c = y[i - 1], y[i], y[i + 1]
        if b > a and b >= c:
            den = a - 2.0 * b + c
            off = 0.5 * (a - c) / den if den != 0 else 0.0
            peaks.append(x[i] + off * w.grid.dx)
    return np.array(peaks)


def measure_fringe_period(w: Density, center: float, halfwidth: float) -> float:
    """Least-squares spacing of consecutive fringe maxima."""
    peaks = fringe_peaks(w, center, halfwidth)
    if len(peaks) < 3:
        raise ValueError(f"only {len(peaks)} fringe maxima in window; widen it")
    return float(np.polyfit(np.arange(len(peaks)), peaks, 1)[0])


def fringe_shift(w_a: Density, w_b: Density, center: float, halfwidth: float,
                 period: float) -> float:
    """Displacement of b's fringes relative to a's, as a fraction of ``period`` in [0, 1).

    Peak positions are reduced to phases modulo the period and averaged on the
    circle, so individual peak jitter does not accumulate.
    """
    def mean_phase(w):
        peaks = fringe_peaks(w, center, halfwidth)
        if len(peaks) == 0:
            raise ValueError("no fringe maxima in window")
        return np.angle(np.mean(np.exp(2j * np.pi * peaks / period)))

    d = (mean_phase(w_b) - mean_phase(w_a)) / (2 * np.pi)
    return float(d % 1.0)


def fringe_visibility(w: Density, center: float, halfwidth: float) -> float:
    """``(max - min) / (max + min)`` of w over ``center +/- halfwidth``."""
    y = w.samples[_window(w.grid, center, halfwidth)]
    hi, lo = float(y.max()), float(y.min())
    return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


@dataclass(frozen=True)
class TailFit:
    exponent: float
    window: tuple
    residual: float
    n_points: int
    envelope: str
    intercept: float = 0.0

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "window": list(self.window),
                "residual": self.residual, "n_points": self.n_points,
                "envelope": self.envelope, "intercept": self.intercept}


def predicted_tail_exponent(s: int) -> float:
    """Large-|x| power of |g| for ``F0 = p^s/(2 m0)``: ``-(s-2)/(2(s-1))``."""
    return -(s - 2) / (2.0 * (s - 1))


MIN_ENVELOPE_PEAKS = 16
SMOOTH_LOG_RESIDUAL = 1e-3


def tail_envelope(state: FuzzyState, window: tuple, origin: float = 0.0) -> tuple:
    """Envelope samples ``(x - origin, |g|, kind)`` over ``x_lo <= x - origin <= x_hi``.

    Uses |g| directly when log|g| is already close to a straight line in log x
    (the modulus carries no phase), otherwise the local maxima of |g| provided
    they cover the window.
    """
    x_lo, x_hi = window
    x = state.grid.x - origin
    a = np.abs(state.samples)
    m = np.flatnonzero((x >= x_lo) & (x <= x_hi))
    m = m[(m > 0) & (m < state.grid.n - 1)]
    if len(m) >= 3 and np.all(a[m] > 0):
        lx, la = np.log(x[m]), np.log(a[m])
        if np.std(la - np.polyval(np.polyfit(lx, la, 1), lx)) <= SMOOTH_LOG_RESIDUAL:
            return x[m], a[m], "modulus"
    peaks = m[(a[m] > a[m - 1]) & (a[m] >= a[m + 1])]
    if len(peaks) >= MIN_ENVELOPE_PEAKS and x[peaks[0]] < x_lo * 1.5 and x[peaks[-1]] > x_hi / 1.5:
        return x[peaks], a[peaks], "local_maxima"
    return x[m], a[m], "modulus"


def fit_tail_exponent(state: FuzzyState, window: tuple,
                      packet_scale: Optional[float] = None,
                      floor: float = 1e-12, origin: float = 0.0) -> TailFit:
    """Log-log slope of the |g| envelope against distance from ``origin``.

    The window ``(x_lo, x_hi)`` is in distance units and must span a decade.
    """
    x_lo, x_hi = map(float, window)
    if not 0 < x_lo < x_hi:
        raise ValueError("window must satisfy 0 < x_lo < x_hi")
    if x_hi / x_lo < 10.0 * (1 - 1e-12):
        raise ValueError(f"window spans {x_hi / x_lo:.3g}x; at least one decade required")
    g = state.grid
    if origin + x_hi >= g.x[-1] or origin + x_lo <= g.x_min:
        raise ValueError("window must lie inside the grid")
    if packet_scale is not None and x_lo <= 3.0 * packet_scale:
        raise ValueError(f"x_lo={x_lo} is not in the asymptotic regime (> 3 x {packet_scale})")
    xe, ae, kind = tail_envelope(state, (x_lo, x_hi), origin)
    if len(xe) < 3:
        raise ValueError("too few samples in the fit window")
    if np.any(ae < floor):
        raise ValueError(f"|g| drops below {floor} inside the window")
    lx, la = np.log(xe), np.log(ae)
    coef = np.polyfit(lx, la, 1)
    resid = float(np.sqrt(np.mean((la - np.polyval(coef, lx)) ** 2)))
    return TailFit(float(coef[0]), (x_lo, x_hi), resid, len(xe), kind, float(coef[1]))


@dataclass(frozen=True)
class TestFunction:
    """Fixed test-function families with ``chi(center) = 1``.

    ``gaussian``: ``exp(-(x-c)^2/(2 w^2))``.
    ``bump``: ``e * exp(-1/(1-((x-c)/w)^2))`` on ``|x-c| < w``, else 0.
    """

    __test__ = False

    family: str
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "bump"):
            raise ValueError(f"unknown test-function family {self.family!r}")
        if not self.width > 0:
            raise ValueError("test-function width must be positive")

    @property
    def half_support(self) -> float:
        return 8.0 * self.width if self.family == "gaussian" else self.width

    def __call__(self, x) -> np.ndarray:
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        if self.family == "gaussian":
            return np.exp(-0.5 * u * u)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out


def delta_functional(state: FuzzyState, chi: TestFunction, mass_normalize: bool = False) -> complex:
    """``I(chi) = sum_j chi(x_j) g(x_j) dx``.

    With ``mass_normalize`` the result is divided by ``sum_j g(x_j) dx``, the
    normalization under which a point-source state approximates a delta
    (``int g dx`` is conserved by free evolution since ``F0(0) = 0``).
    """
    grid = state.grid
    if chi.center - chi.half_support < grid.x_min or chi.center + chi.half_support > grid.x[-1]:
        raise ValueError("test-function support exceeds the grid")
    I = complex(np.sum(chi(grid.x) * state.samples) * grid.dx)
    if mass_normalize:
        mass = complex(np.sum(state.samples) * grid.dx)
        if abs(mass) <= 1e-12 * np.sum(np.abs(state.samples)) * grid.dx:
            raise ValueError("state has zero integral")
        I /= mass
    return I


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    undefined_flag: bool
    inner: tuple
    outer: tuple

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance,
                "undefined_flag": self.undefined_flag,
                "central50": list(self.inner), "central90": list(self.outer)}


def _moments(x: np.ndarray, w: np.ndarray) -> tuple:
    mass = w.sum()
    if mass <= 0:
        return (float("nan"), float("nan"))
    mean = float(np.sum(x * w) / mass)
    return mean, float(np.sum((x - mean) ** 2 * w) / mass)


def moments(d: Density, rel_tol: float = 0.05) -> MomentReport:
    """Grid mean and variance with a truncation-stability flag.

    Moments are recomputed on the central 50% and 90% of the grid; if they
    differ by more than ``rel_tol`` (variance relative, mean relative to the
    standard deviation) the moments are flagged undefined.
    """
    g = d.grid
    x, w = g.x, d.samples
    mean, var = _moments(x, w)
    off = np.abs(x - g.center)
    inner = _moments(x[off <= 0.25 * g.length], w[off <= 0.25 * g.length])
    outer = _moments(x[off <= 0.45 * g.length], w[off <= 0.45 * g.length])
    stable = (np.isfinite(inner[1]) and np.isfinite(outer[1]) and outer[1] > 0
              and abs(inner[1] - outer[1]) <= rel_tol * outer[1]
              and abs(inner[0] - outer[0]) <= rel_tol * math.sqrt(outer[1]))
    return MomentReport(mean, var, not stable, inner, outer)


def spawn_seeds(seed: int, k: int) -> list:
    """Stream-splitting rule for parallel sampling: chunk i uses child i of ``SeedSequence(seed)``."""
    return np.random.SeedSequence(seed).spawn(k)


def sample_positions(d: Density, count: int, seed, norm_tol: float = 1e-6) -> np.ndarray:
    """Draw ``count`` positions from w by inverse CDF over grid cells.

    Cell j is ``[x_j - dx/2, x_j + dx/2)``; positions are uniform within the
    chosen cell.  The generator is PCG64 seeded by ``seed`` (int or SeedSequence).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if abs(d.norm - 1.0) > norm_tol:
        raise ValueError(f"density must be normalized, got norm {d.norm:.12g}")
    rng = np.random.Generator(np.random.PCG64(seed))
    cdf = np.cumsum(d.samples)
    cdf /= cdf[-1]
    cells = np.searchsorted(cdf, rng.random(count), side="right")
    cells = np.minimum(cells, d.grid.n - 1)
    return d.grid.x[cells] + (rng.random(count) - 0.5) * d.grid.dx

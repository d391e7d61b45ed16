"""Momentum-space evolution under ``F0(p) = p^s / (2 m0)`` and Strang split-step.

Convention: ``g(x) = sum_k phi_k exp(i p_k x)`` (numpy FFT pair), evolution
symbol ``exp(-i F0(p) t)``.  A packet with positive carrier momentum drifts
toward +x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .grid import EvolutionSpec, FuzzyState, Grid, SourceSpec, build_source_state


def _check_exponent(s) -> int:
    if int(s) != s or s < 2 or s % 2:
        raise ValueError(f"exponent s must be an even integer >= 2, got {s}")
    return int(s)


def free_symbol(p: np.ndarray, s: int, m0: float) -> np.ndarray:
    """``F0(p) = p^s / (2 m0)``."""
    return p ** s / (2.0 * m0)


@dataclass
class SpectralPlan:
    """Cached unit-modulus phase tables ``exp(-i F0(p_k) t)`` for one grid/s/m0."""

    grid: Grid
    s: int = 2
    m0: float = 1.0
    _tables: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.s = _check_exponent(self.s)
        if not self.m0 > 0:
            raise ValueError("m0 must be positive")
        self.energy = free_symbol(self.grid.p, self.s, self.m0)

    def phase(self, t: float) -> np.ndarray:
        table = self._tables.get(t)
        if table is None:
            table = np.exp(-1j * self.energy * t)
            self._tables[t] = table
        return table

    def apply(self, samples: np.ndarray, t: float) -> np.ndarray:
        return np.fft.ifft(np.fft.fft(samples) * self.phase(t))


def evolve_spectral(state: FuzzyState, s: int, m0: float, t: float,
                    plan: Optional[SpectralPlan] = None) -> FuzzyState:
    """Exact (to round-off) free evolution on the periodic grid for ``t >= 0``."""
    s = _check_exponent(s)
    if not t >= 0:
        raise ValueError("evolve_spectral requires t >= 0; use reverse_spectral")
    if t == 0:
        return state
    plan = plan or SpectralPlan(state.grid, s, m0)
    return state.replace(plan.apply(state.samples, t), state.t + t)


def reverse_spectral(state: FuzzyState, s: int, m0: float, t: float) -> FuzzyState:
    """Undo ``evolve_spectral`` by ``t`` using the conjugate symbol."""
    s = _check_exponent(s)
    if not t >= 0:
        raise ValueError("reversal time must be nonnegative")
    energy = free_symbol(state.grid.p, s, m0)
    out = np.fft.ifft(np.fft.fft(state.samples) * np.exp(1j * energy * t))
    return state.replace(out, state.t - t)


def _step_count(spec: EvolutionSpec) -> int:
    if spec.dt is None or not spec.dt > 0:
        raise ValueError("split-step evolution needs dt > 0")
    steps = round(spec.t_final / spec.dt)
    if abs(steps * spec.dt - spec.t_final) > 1e-9 * max(1.0, spec.t_final):
        raise ValueError(f"dt={spec.dt} does not divide t_final={spec.t_final}")
    return steps


def iter_split_step(state: FuzzyState, spec: EvolutionSpec) -> Iterator[FuzzyState]:
    """Yield the state after each Strang step ``e^{-iV dt/2} e^{-iH0 dt} e^{-iV dt/2}``."""
    steps = _step_count(spec)
    dt = spec.dt
    v = np.zeros(state.grid.n) if spec.potential is None else spec.potential
    if v.shape != (state.grid.n,):
        raise ValueError("potential must be sampled on the state's grid")
    half = np.exp(-0.5j * v * dt)
    kinetic = np.exp(-1j * free_symbol(state.grid.p, spec.s, spec.m0) * dt)
    g = np.array(state.samples)
    t0 = state.t
    for i in range(1, steps + 1):
        g = half * np.fft.ifft(kinetic * np.fft.fft(half * g))
        yield FuzzyState(state.grid, g, t0 + i * dt)


def evolve_split_step(state: FuzzyState, spec: EvolutionSpec) -> FuzzyState:
    """Evolve to ``t_final`` with a potential by Strang splitting; O(dt^2) global error."""
    out = state
    for out in iter_split_step(state, spec):
        pass
    return out


def momentum_operator_apply(state: FuzzyState) -> FuzzyState:
    """Spectral momentum: multiplies each mode ``exp(i p_k x)`` by ``p_k``."""
    return state.replace(np.fft.ifft(state.grid.p * np.fft.fft(state.samples)))


def expectation_momentum(state: FuzzyState) -> float:
    """``<g| p |g> / <g|g>``."""
    pg = momentum_operator_apply(state).samples
    num = np.vdot(state.samples, pg).real
    return float(num / np.vdot(state.samples, state.samples).real)


@dataclass(frozen=True)
class FirstOrderTable:
    times: np.ndarray
    residuals: np.ndarray
    slope: float
    p_window: float

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "residuals": self.residuals.tolist(),
                "slope": self.slope, "p_window": self.p_window}


def first_order_check(grid: Grid, spec: SourceSpec, s: int, m0: float,
                      times: Sequence[float], p_window: Optional[float] = None,
                      max_phase: float = 0.1) -> FirstOrderTable:
    """Compare the evolved transform with its first-order expansion ``1 - i F0(p) t``.

    The source's own transform is divided out so the comparison is against the
    point-source limit.  The residual is the max over ``|p| <= p_window`` and
    must scale as t^2; ``slope`` is the least-squares log-log slope over t > 0.
    """
    s = _check_exponent(s)
    state = build_source_state(grid, spec)
    if p_window is None:
        p_window = min(3.0 / spec.sigma_reg, 0.5 * math.pi / grid.dx)
    p = grid.p
    win = np.abs(p) <= p_window
    f0 = free_symbol(p[win], s, m0)
    fmax = float(f0.max())
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    if np.any(fmax * times > max_phase):
        raise ValueError(
            f"F0(p_max)*t = {fmax * times.max():.3g} exceeds {max_phase}; outside the expansion regime")
    phi0 = np.fft.fft(state.samples)[win]
    plan = SpectralPlan(grid, s, m0)
    res = []
    for t in times:
        phi = np.fft.fft(evolve_spectral(state, s, m0, t, plan).samples)[win] / phi0
        res.append(float(np.max(np.abs(phi - (1.0 - 1j * f0 * t)))))
    res = np.array(res)
    pos = times > 0
    slope = float("nan")
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log(times[pos]), np.log(res[pos]), 1)[0])
    return FirstOrderTable(times, res, slope, float(p_window))


def evolve(state: FuzzyState, evolution: EvolutionSpec) -> FuzzyState:
    """Evolve to ``evolution.t_final``: spectral when free, split-step with a potential."""
    if evolution.potential is None:
        return evolve_spectral(state, evolution.s, evolution.m0, evolution.t_final)
    return evolve_split_step(state, evolution)

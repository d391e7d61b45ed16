"""Closed-form kernels and direct-quadrature free evolution.

The propagator branch is ``sqrt(m0 / (2*pi*i*t))``, i.e. a constant phase of
``-pi/4``.  That is the branch for which convolution reproduces the momentum
space symbol ``exp(-i p^2 t / (2 m0))`` and for which the continuation
``m0 -> i/(2 k^2)`` lands on the normalized heat kernel.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .grid import FuzzyState, Grid


class ResolutionError(ValueError):
    """The Fresnel kernel would be under-sampled on the grid."""


def propagator(m0: float, x, t: float):
    """Free propagator ``G(x, t) = sqrt(m0/(2 pi i t)) exp(i m0 x^2 / (2 t))``.

    Accepts scalar or array ``x``; ``|G| = sqrt(m0/(2 pi t))`` for every x.
    """
    if not t > 0:
        raise ValueError(f"propagator requires t > 0, got {t}")
    if not m0 > 0:
        raise ValueError(f"propagator requires m0 > 0, got {m0}")
    x = np.asarray(x, dtype=float)
    pref = np.sqrt(m0 / (2j * np.pi * t))
    return pref * np.exp(1j * (m0 / (2.0 * t)) * x * x)


def effective_support(state: FuzzyState, rel_tol: float = 1e-10) -> np.ndarray:
    """Boolean mask of samples with ``|g| >= rel_tol * max|g|``."""
    amp = np.abs(state.samples)
    top = amp.max()
    if top == 0:
        return np.zeros(amp.shape, dtype=bool)
    return amp >= rel_tol * top


def resolution_ratio(state: FuzzyState, m0: float, t: float, rel_tol: float = 1e-10) -> float:
    """``m0 * R * dx / t`` with R the largest output-to-support distance.

    The kernel phase advances by this much per sample at the worst output
    point; values above pi alias.
    """
    grid = state.grid
    keep = effective_support(state, rel_tol)
    if not keep.any():
        return 0.0
    xs = grid.x[keep]
    reach = max(grid.x[-1] - xs.min(), xs.max() - grid.x[0])
    return m0 * reach * grid.dx / t


def evolve_convolution(state: FuzzyState, m0: float, t: float, *,
                       block: int = 256, rel_tol: float = 1e-10) -> FuzzyState:
    """Evolve by direct quadrature ``g(x', t) = sum_j G(x' - x_j, t) g0(x_j) dx``.

    O(n * support) work.  Displacements are free-space (not periodic): the
    state must sit well away from the grid edges.  Samples with
    ``|g0| < rel_tol * max|g0|`` are dropped from the sum.
    """
    if not t > 0:
        raise ValueError(f"convolution evolution requires t > 0, got {t}")
    grid = state.grid
    keep = effective_support(state, rel_tol)
    out = np.zeros(grid.n, dtype=complex)
    if not keep.any():
        return state.replace(out, state.t + t)
    ratio = resolution_ratio(state, m0, t, rel_tol)
    if ratio > math.pi:
        raise ResolutionError(
            f"kernel under-resolved: m0*R*dx/t = {ratio:.3f} > pi "
            f"(m0={m0}, t={t}, dx={grid.dx}); use larger t or finer grid")
    xs = grid.x[keep]
    gs = state.samples[keep]
    c = m0 / (2.0 * t)
    for start in range(0, grid.n, block):
        d = grid.x[start:start + block, None] - xs[None, :]
        # fixed pairwise summation order per output point
        out[start:start + block] = (np.exp(1j * c * d * d) * gs).sum(axis=1)
    out *= np.sqrt(m0 / (2j * np.pi * t)) * grid.dx
    return state.replace(out, state.t + t)


def gaussian_free_closed_form(sigma0: float, x0: float, p0: float, m0: float, t: float,
                              grid: Grid) -> FuzzyState:
    """Exact free evolution of ``(pi sigma0^2)^(-1/4) exp(-(x-x0)^2/(2 sigma0^2) + i p0 (x-x0))``.

    Density centre ``x0 + p0 t / m0``, density variance
    ``sigma0^2/2 * (1 + t^2/(m0^2 sigma0^4))``.
    """
    if not sigma0 > 0 or not m0 > 0 or not t >= 0:
        raise ValueError("need sigma0 > 0, m0 > 0, t >= 0")
    x = grid.x
    a = sigma0 * sigma0
    z = 1.0 + 1j * t / (m0 * a)
    u = x - x0 - p0 * t / m0
    g = ((np.pi * a) ** -0.25 / np.sqrt(z)
         * np.exp(-u * u / (2.0 * a * z) + 1j * p0 * (x - x0) - 0.5j * p0 * p0 * t / m0))
    return FuzzyState(grid, g, t)


def diffusion_kernel(k: float, x, t: float):
    """Normalized heat kernel ``exp(-x^2/(4 k^2 t)) / (2 k sqrt(pi t))``; variance ``2 k^2 t``."""
    if not t > 0 or not k > 0:
        raise ValueError("diffusion kernel requires k > 0 and t > 0")
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (4.0 * k * k * t)) / (2.0 * k * math.sqrt(math.pi * t))


@lru_cache(maxsize=1)
def _continued_propagator():
    import sympy as sp

    m0, x, t, k = sp.symbols("m0 x t k", positive=True)
    G = sp.sqrt(m0 / (2 * sp.pi * sp.I * t)) * sp.exp(sp.I * m0 * x ** 2 / (2 * t))
    # expand_complex resolves the principal-branch product sqrt(i)*sqrt(-i) = 1
    continued = sp.simplify(sp.expand_complex(G.subs(m0, sp.I / (2 * k ** 2))))
    return continued, sp.lambdify((k, x, t), continued, "numpy")


def continued_propagator_expr():
    """The propagator with ``m0 -> i/(2 k^2)`` substituted, as a sympy expression."""
    return _continued_propagator()[0]


def diffusion_correspondence_residual(k: float, t: float, grid: Grid) -> float:
    """Max |continued propagator - heat kernel| over the grid.

    The continuation ``m0 -> i/(2 k^2)`` is done symbolically, never by feeding
    an imaginary mass through the unitary evolvers.
    """
    f = _continued_propagator()[1]
    cont = np.asarray(f(k, grid.x, t), dtype=complex) * np.ones(grid.n)
    return float(np.max(np.abs(cont - diffusion_kernel(k, grid.x, t))))


def diffusion_semigroup_residual(k: float, t1: float, t2: float, grid: Grid) -> float:
    """Max |(w_D(t1) * w_D(t2))(x) - w_D(x, t1 + t2)| with the convolution by grid quadrature."""
    x = grid.x
    w2 = diffusion_kernel(k, x, t2)
    conv = np.array([np.sum(diffusion_kernel(k, xi - x, t1) * w2) for xi in x]) * grid.dx
    return float(np.max(np.abs(conv - diffusion_kernel(k, x, t1 + t2))))

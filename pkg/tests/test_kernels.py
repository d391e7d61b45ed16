import math

import numpy as np
import pytest
import sympy as sp

from fuzzymech import (SourceSpec, build_source_state, gaussian_free_closed_form, make_grid, norm2,
                       propagator)
from fuzzymech.analysis import density, fringe_spacing, measure_fringe_period, moments
from fuzzymech.kernels import (ResolutionError, continued_propagator_expr, diffusion_correspondence_residual,
                               diffusion_kernel, diffusion_semigroup_residual, evolve_convolution)


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_propagator_at_origin():
    # |sqrt(1/(2 pi i))| = 1/sqrt(2 pi); arg = -pi/4 on the principal branch
    G = complex(propagator(1.0, 0.0, 1.0))
    assert abs(G) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert abs(G) == pytest.approx(0.398942280401, rel=1e-11)
    assert np.angle(G) == pytest.approx(-math.pi / 4, abs=1e-15)


def test_propagator_phase_substitution():
    G = complex(propagator(2.0, 1.0, 0.5))
    expect = -math.pi / 4 + 2.0 * 1.0 ** 2 / (2 * 0.5)
    assert np.angle(G * np.exp(-1j * expect)) == pytest.approx(0.0, abs=1e-14)
    assert abs(G) == pytest.approx(math.sqrt(2.0 / (2 * math.pi * 0.5)), rel=1e-15)


@pytest.mark.parametrize("m0,t", [(1.0, 1.0), (0.3, 0.2), (5.0, 7.0)])
def test_propagator_constant_modulus(wide_grid, m0, t):
    G = propagator(m0, wide_grid.x, t)
    assert np.max(np.abs(np.abs(G) - math.sqrt(m0 / (2 * math.pi * t)))) <= 1e-14


def test_propagator_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        propagator(1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        propagator(1.0, 0.0, -1.0)


def test_closed_form_solves_free_equation():
    # i dg/dt = -(1/(2 m0)) d2g/dx2 checked by central differences
    g = make_grid(-10, 10, 64)
    xs = np.array([-1.3, 0.2, 0.9, 2.4])
    sigma0, x0, p0, m0, t = 0.8, 0.3, 1.1, 1.7, 0.6
    h, k = 1e-3, 1e-4

    def at(x, tt):
        st = gaussian_free_closed_form(sigma0, x0, p0, m0, tt,
                                       make_grid(x - 16 * h, x + 16 * h, 32))
        return st.samples[16]

    for x in xs:
        dt = (at(x, t + k) - at(x, t - k)) / (2 * k)
        dxx = (at(x + h, t) - 2 * at(x, t) + at(x - h, t)) / h ** 2
        assert abs(1j * dt + dxx / (2 * m0)) < 1e-5
    assert g.n == 64


def test_closed_form_at_t0_is_initial_gaussian(wide_grid):
    st = gaussian_free_closed_form(1.5, 2.0, 0.7, 1.0, 0.0, wide_grid)
    x = wide_grid.x
    expect = (np.pi * 1.5 ** 2) ** -0.25 * np.exp(-(x - 2) ** 2 / (2 * 1.5 ** 2) + 0.7j * (x - 2))
    np.testing.assert_allclose(st.samples, expect, atol=1e-15)


def test_closed_form_variance_doubles(wide_grid):
    sigma0, m0 = 1.3, 0.8
    v0 = moments(density(gaussian_free_closed_form(sigma0, 0, 0, m0, 0.0, wide_grid))).variance
    v1 = moments(density(gaussian_free_closed_form(sigma0, 0, 0, m0, m0 * sigma0 ** 2,
                                                   wide_grid))).variance
    assert v0 == pytest.approx(sigma0 ** 2 / 2, rel=1e-12)
    assert v1 / v0 == pytest.approx(2.0, rel=1e-12)


def test_closed_form_drift(wide_grid):
    st = gaussian_free_closed_form(1.0, -4.0, 1.0, 1.0, 3.0, wide_grid)
    assert moments(density(st)).mean == pytest.approx(-1.0, abs=1e-10)


@pytest.mark.parametrize("sigma0", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_convolution_matches_closed_form(wide_grid, sigma0, t):
    st0 = gaussian_free_closed_form(sigma0, 0.0, 0.0, 1.0, 0.0, wide_grid)
    if t == 0.1:
        # default domain under-resolves the kernel here; the guard must refuse
        with pytest.raises(ResolutionError):
            evolve_convolution(st0, 1.0, t)
        return
    out = evolve_convolution(st0, 1.0, t)
    exact = gaussian_free_closed_form(sigma0, 0.0, 0.0, 1.0, t, wide_grid)
    assert rel_l2(out.samples, exact.samples) <= 1e-6
    assert abs(norm2(out) - 1.0) <= 1e-6
    assert out.t == t


def test_convolution_short_times_on_fine_grid():
    g = make_grid(-10, 10, 4096)
    st0 = gaussian_free_closed_form(1.0, 0.0, 0.0, 1.0, 0.0, g)
    out = evolve_convolution(st0, 1.0, 0.1)
    exact = gaussian_free_closed_form(1.0, 0.0, 0.0, 1.0, 0.1, g)
    assert rel_l2(out.samples, exact.samples) <= 1e-6


def test_convolution_identity_limit():
    g = make_grid(-10, 10, 4096)
    st0 = gaussian_free_closed_form(1.0, 0.5, 0.3, 1.0, 0.0, g)
    dists = [np.linalg.norm(evolve_convolution(st0, 1.0, t).samples - st0.samples) * math.sqrt(g.dx)
             for t in (0.4, 0.2, 0.1, 0.05)]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 0.05


def test_convolution_semigroup(wide_grid):
    st0 = gaussian_free_closed_form(1.0, 0.0, 0.5, 1.0, 0.0, wide_grid)
    two = evolve_convolution(evolve_convolution(st0, 1.0, 1.0), 1.0, 1.5)
    one = evolve_convolution(st0, 1.0, 2.5)
    assert rel_l2(two.samples, one.samples) <= 1e-6
    assert two.t == pytest.approx(2.5)


def test_convolution_two_source_fringes(wide_grid):
    spec = SourceSpec.from_points([-5, 5], sigma_reg=0.3)
    out = evolve_convolution(build_source_state(wide_grid, spec), 1.0, 2.0)
    P = fringe_spacing(1.0, 10.0, 2.0)
    assert measure_fringe_period(density(out), 0.0, 3 * P) == pytest.approx(P, rel=0.01)


def test_convolution_rejects_nonpositive_time(wide_grid):
    st0 = gaussian_free_closed_form(1.0, 0.0, 0.0, 1.0, 0.0, wide_grid)
    with pytest.raises(ValueError):
        evolve_convolution(st0, 1.0, 0.0)


def test_diffusion_kernel_values(wide_grid):
    assert float(diffusion_kernel(1.0, 0.0, 1.0)) == pytest.approx(0.28209479177387814, rel=1e-15)
    for k, t in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)]:
        w = diffusion_kernel(k, wide_grid.x, t)
        assert np.sum(w) * wide_grid.dx == pytest.approx(1.0, abs=1e-10)
        assert np.sum(wide_grid.x ** 2 * w) * wide_grid.dx == pytest.approx(2 * k * k * t, rel=1e-10)
    with pytest.raises(ValueError):
        diffusion_kernel(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        diffusion_kernel(1.0, 0.0, 0.0)


def test_diffusion_chapman_kolmogorov():
    g = make_grid(-30, 30, 1024)
    assert diffusion_semigroup_residual(1.0, 0.4, 0.9, g) <= 1e-10


def test_continued_propagator_is_heat_kernel_symbolically():
    k, x, t = sp.symbols("k x t", positive=True)
    heat = sp.exp(-x ** 2 / (4 * k ** 2 * t)) / (2 * k * sp.sqrt(sp.pi * t))
    assert sp.simplify(continued_propagator_expr() - heat) == 0


@pytest.mark.parametrize("k,t", [(1.0, 1.0), (0.5, 2.0)])
@pytest.mark.parametrize("n", [256, 1024, 4096])
def test_diffusion_correspondence(k, t, n):
    assert diffusion_correspondence_residual(k, t, make_grid(-40, 40, n)) <= 1e-12

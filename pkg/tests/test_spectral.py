import math

import numpy as np
import pytest

from fuzzymech import (EvolutionSpec, SourceSpec, build_source_state, evolve, evolve_spectral,
                       evolve_split_step, first_order_check, gaussian_free_closed_form,
                       make_grid, norm2, reverse_spectral)
from fuzzymech.analysis import density, moments
from fuzzymech.grid import FuzzyState
from fuzzymech.scenarios import harmonic_center
from fuzzymech.spectral import (SpectralPlan, expectation_momentum, free_symbol, iter_split_step,
                                momentum_operator_apply)


def two_source(grid, alpha=(0.0, 0.0)):
    return build_source_state(grid, SourceSpec.from_points([-5, 5], alpha=list(alpha), sigma_reg=0.5))


@pytest.mark.parametrize("s", [2, 4, 6])
@pytest.mark.parametrize("t", [0.01, 1.0, 10.0])
def test_spectral_unitary(wide_grid, s, t):
    st = two_source(wide_grid)
    assert abs(norm2(evolve_spectral(st, s, 1.0, t)) - norm2(st)) <= 1e-12


def test_spectral_zero_time_identity(wide_grid):
    st = two_source(wide_grid)
    assert evolve_spectral(st, 2, 1.0, 0.0) is st


def test_spectral_matches_closed_form(wide_grid):
    st0 = gaussian_free_closed_form(1.0, -3.0, 1.5, 2.0, 0.0, wide_grid)
    out = evolve_spectral(st0, 2, 2.0, 4.0)
    exact = gaussian_free_closed_form(1.0, -3.0, 1.5, 2.0, 4.0, wide_grid)
    assert np.linalg.norm(out.samples - exact.samples) / np.linalg.norm(exact.samples) <= 1e-10
    assert out.t == 4.0


def test_plane_wave_phase():
    g = make_grid(0, 2 * np.pi, 64)
    k, m0, t = 3, 0.7, 1.3
    st = FuzzyState(g, np.exp(1j * k * g.x))
    out = evolve_spectral(st, 4, m0, t)
    np.testing.assert_allclose(out.samples, st.samples * np.exp(-1j * k ** 4 * t / (2 * m0)),
                               atol=1e-12)


def test_momentum_eigenvalue_sign():
    g = make_grid(0, 2 * np.pi, 64)
    st = FuzzyState(g, np.exp(2j * g.x))
    np.testing.assert_allclose(momentum_operator_apply(st).samples, 2 * st.samples, atol=1e-12)


def test_positive_momentum_moves_right(wide_grid):
    st0 = gaussian_free_closed_form(1.0, 0.0, 2.0, 1.0, 0.0, wide_grid)
    assert moments(density(evolve_spectral(st0, 2, 1.0, 3.0))).mean == pytest.approx(6.0, abs=1e-8)


@pytest.mark.parametrize("p0", [0.0, 1.25, -0.8])
def test_expectation_momentum(wide_grid, p0):
    st = gaussian_free_closed_form(1.0, 2.0, p0, 1.0, 0.0, wide_grid)
    assert expectation_momentum(st) == pytest.approx(p0, abs=1e-8)
    # conserved by free evolution
    assert expectation_momentum(evolve_spectral(st, 4, 1.0, 2.0)) == pytest.approx(p0, abs=1e-8)


def test_plan_caches_phase_table(small_grid):
    plan = SpectralPlan(small_grid, 2, 1.0)
    assert plan.phase(0.5) is plan.phase(0.5)
    np.testing.assert_allclose(np.abs(plan.phase(0.5)), 1.0, atol=1e-15)
    np.testing.assert_allclose(free_symbol(np.array([2.0]), 4, 2.0), [4.0])


def test_time_reversal(wide_grid):
    st = two_source(wide_grid, alpha=(0.0, 1.0))
    back = reverse_spectral(evolve_spectral(st, 4, 1.0, 2.5), 4, 1.0, 2.5)
    np.testing.assert_allclose(back.samples, st.samples, atol=1e-12)
    assert back.t == pytest.approx(0.0)


def test_shift_commutes_with_evolution(wide_grid):
    st = two_source(wide_grid)
    k = 37
    a = np.roll(evolve_spectral(st, 2, 1.0, 1.7).samples, k)
    b = evolve_spectral(st.replace(np.roll(st.samples, k)), 2, 1.0, 1.7).samples
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_semigroup(wide_grid):
    st = two_source(wide_grid)
    a = evolve_spectral(evolve_spectral(st, 6, 1.0, 0.3), 6, 1.0, 0.9)
    b = evolve_spectral(st, 6, 1.0, 1.2)
    np.testing.assert_allclose(a.samples, b.samples, atol=1e-12)


@pytest.mark.parametrize("s", [3, 1, 0, 2.5])
def test_odd_or_invalid_exponent_rejected(small_grid, s):
    st = two_source(small_grid)
    with pytest.raises(ValueError):
        evolve_spectral(st, s, 1.0, 1.0)
    with pytest.raises(ValueError):
        SpectralPlan(small_grid, s, 1.0)


def test_negative_time_rejected(small_grid):
    with pytest.raises(ValueError):
        evolve_spectral(two_source(small_grid), 2, 1.0, -1.0)


def test_split_step_without_potential_matches_spectral(wide_grid):
    st = two_source(wide_grid)
    ev = EvolutionSpec(2, 1.0, 2.0, dt=0.1, potential=np.zeros(wide_grid.n))
    a = evolve_split_step(st, ev)
    b = evolve_spectral(st, 2, 1.0, 2.0)
    assert np.max(np.abs(a.samples - b.samples)) <= 1e-12
    assert a.t == pytest.approx(2.0)


def test_split_step_yields_each_step(small_grid):
    st = two_source(small_grid)
    ev = EvolutionSpec(2, 1.0, 0.5, dt=0.1, potential=np.zeros(small_grid.n))
    times = [s.t for s in iter_split_step(st, ev)]
    np.testing.assert_allclose(times, [0.1, 0.2, 0.3, 0.4, 0.5])


def test_split_step_dt_must_divide(small_grid):
    ev = EvolutionSpec(2, 1.0, 1.0, dt=0.3, potential=np.zeros(small_grid.n))
    with pytest.raises(ValueError, match="divide"):
        evolve_split_step(two_source(small_grid), ev)


def harmonic_setup(dt):
    g = make_grid(-16, 16, 512)
    omega = 1.0
    v = 0.5 * omega ** 2 * g.x ** 2
    st = gaussian_free_closed_form(1.0, 2.0, 0.0, 1.0, 0.0, g)
    return g, st, EvolutionSpec(2, 1.0, 3.0, dt=dt, potential=v)


def test_harmonic_center_follows_classical_orbit():
    g, st, ev = harmonic_setup(0.001)
    worst = 0.0
    for out in iter_split_step(st, ev):
        if round(out.t / ev.dt) % 100:
            continue
        mean = float(np.sum(g.x * np.abs(out.samples) ** 2) * g.dx)
        worst = max(worst, abs(mean - harmonic_center(2.0, 0.0, 1.0, 1.0, 0.0, out.t)))
    assert worst <= 1e-4


def test_harmonic_coherent_state_is_stationary_in_shape():
    # sigma0 = 1/sqrt(m0 omega) is the ground-state width; variance stays 1/2
    g, st, ev = harmonic_setup(0.01)
    assert moments(density(evolve_split_step(st, ev))).variance == pytest.approx(0.5, abs=1e-4)


def test_strang_second_order():
    _, st, _ = harmonic_setup(0.1)
    ref = evolve_split_step(st, harmonic_setup(0.1 / 16)[2]).samples
    errs = [np.linalg.norm(evolve_split_step(st, harmonic_setup(dt)[2]).samples - ref)
            for dt in (0.1, 0.05, 0.025)]
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(abs(r - 2.0) < 0.3 for r in rates)


def test_evolve_dispatch(small_grid):
    st = two_source(small_grid)
    free = evolve(st, EvolutionSpec(2, 1.0, 1.0))
    np.testing.assert_allclose(free.samples, evolve_spectral(st, 2, 1.0, 1.0).samples, atol=1e-14)
    pot = evolve(st, EvolutionSpec(2, 1.0, 1.0, dt=0.1, potential=np.zeros(small_grid.n)))
    np.testing.assert_allclose(pot.samples, free.samples, atol=1e-12)


class TestFirstOrder:
    grid = make_grid(-20, 20, 2048)
    spec = SourceSpec.from_points([0.0], sigma_reg=0.2)

    def test_residual_quadratic_in_time(self):
        times = [0.0, 1e-5, 2e-5, 4e-5, 8e-5]
        tab = first_order_check(self.grid, self.spec, 2, 1.0, times)
        assert tab.residuals[0] <= 1e-15
        assert tab.slope == pytest.approx(2.0, abs=0.05)
        assert tab.to_dict()["p_window"] == pytest.approx(15.0)

    def test_exact_second_order_coefficient(self):
        # 1 - e^{-i a} - i a ~ a^2 / 2 at the window edge
        t = 1e-4
        tab = first_order_check(self.grid, self.spec, 2, 1.0, [t])
        a = 15.0 ** 2 / 2 * t
        assert tab.residuals[0] == pytest.approx(a * a / 2, rel=0.05)

    def test_higher_exponent(self):
        tab = first_order_check(self.grid, self.spec, 4, 1.0, [1e-7, 2e-7, 4e-7])
        assert tab.slope == pytest.approx(2.0, abs=0.05)

    def test_rejects_times_outside_expansion(self):
        with pytest.raises(ValueError, match="expansion"):
            first_order_check(self.grid, self.spec, 2, 1.0, [1.0])

    def test_rejects_negative_times(self):
        with pytest.raises(ValueError):
            first_order_check(self.grid, self.spec, 2, 1.0, [-1e-6])

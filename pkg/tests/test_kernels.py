import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special, stats

from hdwj.kernels import (
    CompoundPoisson,
    CustomDensity,
    NoJumps,
    SymmetricStable,
    UnsupportedError,
    VarianceGamma,
    cogarch_cutoff_radius,
    stable_constant,
)
from hdwj.quadrature import IntegrabilityError
from hdwj.symbol import CutoffFunction, eval_jump_integral

# trapezoid rule, 1e7 mirror-symmetric nodes on [-50, 50], C = 2, xi = 1
VG_TRAPEZOID_XI1 = -3.2188758248478354


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.5, 1.9])
def test_stable_constant_normalises_symbol(alpha):
    # 2 c int_0^inf (1 - cos y) y^{-1-alpha} dy = 1, the integral via the reflection formula
    integral = -special.gamma(-alpha) * math.cos(math.pi * alpha / 2)
    assert 2 * stable_constant(alpha) * integral == pytest.approx(1.0, rel=1e-13)


def test_stable_quadrature_matches_closed_form_one_dim():
    k = SymmetricStable(1.5)
    xi = np.array([[0.01], [0.5], [1.0], [3.0], [40.0]])
    q = k.jump_integral(xi, method="quadrature")
    np.testing.assert_allclose(q.real, -np.abs(xi[:, 0]) ** 1.5, rtol=1e-6)
    np.testing.assert_allclose(q.imag, 0, atol=1e-8)


def test_cauchy_example():
    v = complex(eval_jump_integral(SymmetricStable(1.0), [2.0], method="quadrature"))
    assert v == pytest.approx(-2.0, abs=1e-8)


def test_stable_radial_quadrature_three_dim():
    c = stable_constant(1.2, 3)
    k = CustomDensity(lambda r: c * r ** -4.2, dim=3, singularity=1.2)
    xi = np.array([[0.3, 0.0, 0.4], [1.0, -2.0, 2.0]])
    q = k.jump_integral(xi)
    np.testing.assert_allclose(q.real, -np.linalg.norm(xi, axis=1) ** 1.2, rtol=1e-6)


def test_vg_closed_form_and_quadrature():
    k = VarianceGamma(2.0)
    xi = np.array([[0.1], [1.0], [7.0]])
    exact = -2.0 * np.log1p(4.0 * xi[:, 0] ** 2)
    np.testing.assert_allclose(k.jump_integral(xi).real, exact, rtol=1e-14)
    np.testing.assert_allclose(k.jump_integral(xi, method="quadrature").real, exact, rtol=1e-8)


def test_vg_matches_brute_force_trapezoid():
    v = complex(eval_jump_integral(VarianceGamma(2.0), [1.0], method="quadrature"))
    assert abs(v - VG_TRAPEZOID_XI1) < 1e-5


def test_vg_moments_and_tail():
    k = VarianceGamma(2.0)
    # N(|y| > r) = 2 C E1(r / sqrt(2C)); int_{|y|<r} y^2 N = 2 C (1 - e^{-x}(1+x)) / rate^2
    assert k.tail_mass(3.0) == pytest.approx(4.0 * special.exp1(1.5), rel=1e-14)
    x = 0.5 * 1.0
    assert k.moment2(1.0) == pytest.approx(4.0 * (1 - math.exp(-x) * (1 + x)) / 0.25, rel=1e-12)
    assert k.tail_mass(k.support_radius(1e-9)) == pytest.approx(1e-9, rel=1e-6)


def test_compound_poisson_matches_characteristic_function():
    mu, sig, lam = 0.4, 0.8, 3.0
    k = CompoundPoisson(lam, stats.norm(mu, sig))
    assert not k.symmetric
    a, b = (-1 - mu) / sig, (1 - mu) / sig
    trunc_mean = mu * (stats.norm.cdf(b) - stats.norm.cdf(a)) - sig * (stats.norm.pdf(b)
                                                                       - stats.norm.pdf(a))
    for xi in (0.3, 1.0, 4.0):
        cf = np.exp(1j * mu * xi - 0.5 * (sig * xi) ** 2)
        exact = lam * (cf - 1) - 1j * xi * lam * trunc_mean
        got = complex(eval_jump_integral(k, [xi]))
        assert abs(got - exact) < 1e-8


def test_one_sided_tempered_stable_against_gamma_formula():
    a, c = 0.6, 1.3

    def dens(y):
        return np.where(y > 0, c * np.exp(-np.abs(y)) * np.abs(y) ** (-1 - a), 0.0)

    k = CustomDensity(dens, symmetric=False, singularity=a)
    small_mean = c * special.gammainc(1 - a, 1.0) * special.gamma(1 - a)
    for xi in (0.5, 2.0, 10.0):
        exact = c * special.gamma(-a) * ((1 - 1j * xi) ** a - 1) - 1j * xi * small_mean
        got = complex(eval_jump_integral(k, [xi]))
        assert abs(got - exact) < 1e-7


def test_cutoff_radius_changes_only_the_drift_term():
    k = CompoundPoisson(2.0, stats.norm(0.5, 1.0))
    v1 = complex(eval_jump_integral(k, [1.5], CutoffFunction(1.0)))
    v2 = complex(eval_jump_integral(k, [1.5], CutoffFunction(2.0)))
    assert v1.real == pytest.approx(v2.real, abs=1e-9)
    shift = k.first_moment(1.0, 2.0)
    assert v1.imag - v2.imag == pytest.approx(1.5 * shift, abs=1e-9)


def test_non_integrable_custom_densities_are_rejected():
    with pytest.raises(IntegrabilityError):
        CustomDensity(lambda y: np.abs(y) ** -3.2)
    with pytest.raises(IntegrabilityError):
        CustomDensity(lambda y: np.where(np.abs(y) > 1, 1.0 / np.abs(y), 0.0))


def test_no_jumps_is_zero_and_samples_zero():
    k = NoJumps(2)
    assert np.all(k.jump_integral(np.ones((3, 2))) == 0)
    from hdwj._backend import kernels
    assert not k.sample(kernels, 1, 0, 0, 4, 0, 5, 0.1).any()


def test_custom_density_cannot_be_sampled():
    k = CustomDensity(lambda y: np.exp(-np.abs(y)))
    from hdwj._backend import kernels
    with pytest.raises(UnsupportedError):
        k.sample(kernels, 1, 0, 0, 4, 0, 5, 0.1)


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=0, max_value=5))
def test_cogarch_cutoff_radius_is_the_exit_radius(logv, k):
    a = math.exp(logv)
    r = cogarch_cutoff_radius(a, k, 1.0, "max")
    assert max(a * r, math.log1p(k * r * r)) == pytest.approx(1.0, rel=1e-12)
    re = cogarch_cutoff_radius(a, k, 1.0, "euclidean")
    assert math.hypot(a * re, math.log1p(k * re * re)) == pytest.approx(1.0, rel=1e-9)

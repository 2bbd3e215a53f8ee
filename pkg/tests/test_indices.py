import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdwj.grids import BallOptimizerConfig, epsilon_grid
from hdwj.indices import (
    DomainRequired,
    H_global,
    H_local,
    SectorViolation,
    anchored_exponents,
    check_local_growth,
    default_R_grid,
    estimate_indices,
    estimate_indices_infinity,
    estimate_indices_origin,
    estimate_sector_constant,
    exponent_extremes,
    h_global,
    h_local,
    kappa,
    lambda_scan_index,
)
from hdwj.kernels import NoJumps, SymmetricStable, VarianceGamma
from hdwj.symbol import (
    CogarchModel,
    LevyModel,
    LevyTriplet,
    SdeComposedModel,
    StableLikeModel,
    brownian_motion,
    stable_levy,
)

KAPPA0 = 1.0 / (2.0 * math.pi)


def stable_like():
    return StableLikeModel(lambda x: 0.3 + 0.4 * (1 + np.sin(x[0])) / 2, 0.3, 0.7)


def cauchy_with_drift(b):
    return LevyModel(LevyTriplet([b], [[0.0]], SymmetricStable(1.0)))


# --- kappa and the sector condition ---------------------------------------------------------

def test_kappa_limit_and_formula():
    assert kappa(0.0) == 1.0 / (2.0 * math.pi)
    assert kappa(0.5) == pytest.approx(1.0 / (4.0 * math.atan(1.0)), rel=1e-15)
    assert kappa(1e-300) == pytest.approx(kappa(0.0), rel=1e-12)
    with pytest.raises(ValueError):
        kappa(-1.0)


@given(st.floats(min_value=0.0, max_value=1e6), st.floats(min_value=1e-9, max_value=1e6))
def test_kappa_increasing(c, dc):
    assert kappa(c + dc) > kappa(c) or kappa(c + dc) == pytest.approx(kappa(c), rel=1e-12)


def test_sector_examples():
    s = estimate_sector_constant(stable_levy(1.5), np.zeros((1, 1)))
    assert s.satisfied and s.c0 == 0.0 and s.kappa == KAPPA0
    s = estimate_sector_constant(cauchy_with_drift(-0.4), np.zeros((1, 1)))
    assert s.satisfied and s.c0 == pytest.approx(0.4, rel=1e-12)
    s = estimate_sector_constant(LevyModel(LevyTriplet([1.0], [[0.0]], NoJumps(1))),
                                 np.zeros((1, 1)))
    assert not s.satisfied


# --- H and h --------------------------------------------------------------------------------

@pytest.mark.parametrize("R", [1e-3, 0.5, 1.0, 7.0, 1e4])
def test_H_closed_forms(R):
    assert H_local(stable_levy(1.5), [0.3], R) == pytest.approx(R ** -1.5, rel=1e-13)
    assert H_local(brownian_motion(), [0.0], R) == pytest.approx(0.5 / R ** 2, rel=1e-13)
    assert H_global(stable_levy(1.5), R) == pytest.approx(R ** -1.5, rel=1e-13)


@pytest.mark.parametrize("R", [0.01, 0.3, 2.0, 100.0])
def test_h_closed_forms(R):
    s = estimate_sector_constant(stable_levy(1.5), np.zeros((1, 1)))
    assert h_local(stable_levy(1.5), [0.0], R, s) == pytest.approx((4 * KAPPA0 * R) ** -1.5,
                                                                   rel=1e-13)
    sb = estimate_sector_constant(brownian_motion(), np.zeros((1, 1)))
    assert h_local(brownian_motion(), [0.0], R, sb) == pytest.approx(
        0.5 * (4 * KAPPA0 * R) ** -2, rel=1e-13)
    assert h_global(stable_levy(1.5), R, s) == h_local(stable_levy(1.5), [0.0], R, s)


def test_h_ignores_the_imaginary_part():
    m = cauchy_with_drift(0.8)
    s = estimate_sector_constant(m, np.zeros((1, 1)))
    for R in (0.1, 1.0, 10.0):
        assert h_local(m, [0.0], R, s) == pytest.approx(h_local(cauchy_with_drift(0.0), [0.0], R, s),
                                                        rel=1e-14)
        assert h_local(m, [0.0], R, s) == pytest.approx(1.0 / (4 * s.kappa * R), rel=1e-13)


def test_stable_like_local_H_brute_force():
    m = stable_like()
    for x, R in [(0.0, 0.5), (2.0, 0.2), (-1.0, 0.9)]:
        ys = np.linspace(x - 2 * R, x + 2 * R, 200001)
        a_max = np.max(0.3 + 0.4 * (1 + np.sin(ys)) / 2)
        assert H_local(m, [x], R) == pytest.approx(R ** -a_max, rel=1e-6)


def test_stable_like_global_functionals():
    m = stable_like()
    s = estimate_sector_constant(m, np.zeros((1, 1)))
    for R in (2.0, 50.0):
        assert H_global(m, R) == pytest.approx(R ** -0.3, rel=1e-14)
        assert h_global(m, R, s) == pytest.approx((4 * KAPPA0 * R) ** -0.7, rel=1e-14)
    # brute force over a grid of states confirms the envelope
    ys = np.linspace(-4, 4, 2001)
    R = 10.0
    inf_re = min(float(abs(1.0 / (4 * KAPPA0 * R)) ** m.alpha([y])) for y in ys)
    assert h_global(m, R, s) == pytest.approx(inf_re, rel=1e-6)


def test_sector_violation_raises():
    m = LevyModel(LevyTriplet([1.0], [[0.0]], NoJumps(1)))
    s = estimate_sector_constant(m, np.zeros((1, 1)))
    with pytest.raises(SectorViolation):
        h_global(m, 1.0, s)
    with pytest.raises(SectorViolation):
        h_local(m, [0.0], 1.0, s)


def test_cogarch_needs_domain():
    m = CogarchModel(LevyTriplet([0.0], [[0.0]], VarianceGamma(2.0)), 2.0, 0.5, 10.0)
    with pytest.raises(DomainRequired):
        H_global(m, 1.0)
    cfg = BallOptimizerConfig(n_y=16, refine_passes=0)
    assert math.isfinite(H_global(m, 4.0, ([-5.0, -5.0], [5.0, 5.0]), cfg))


def test_grid_sup_is_monotone_under_subsets():
    cfg = BallOptimizerConfig(refine_passes=0)
    m = stable_like()
    eps, _ = epsilon_grid(1, cfg)
    full = H_local(m, [0.4], 0.3, cfg, eps=eps)
    sub = H_local(m, [0.4], 0.3, cfg, eps=eps[::3])
    assert sub <= full


def test_local_growth_constants():
    cfg = BallOptimizerConfig(n_y=8)
    c = check_local_growth(brownian_motion(), [-1.0], [1.0], cfg, xi_max=1e6)
    assert c == pytest.approx(0.5, rel=1e-6)
    assert check_local_growth(stable_levy(1.5), [-1.0], [1.0], cfg) <= 1.0
    assert math.isfinite(check_local_growth(stable_like(), [-1.0], [1.0], cfg))


# --- indices --------------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_stable_indices_exact(alpha):
    rep = estimate_indices(stable_levy(alpha), [0.0])
    for v in rep.indices().values():
        assert v == pytest.approx(alpha, abs=0.02)
    assert rep.check_order() and not rep.domain_restricted


def test_bm_indices_exact():
    rep = estimate_indices(brownian_motion(), [0.0])
    for v in rep.indices().values():
        assert v == pytest.approx(2.0, abs=0.01)


def test_stable_like_origin_indices():
    rep = estimate_indices_origin(stable_like())
    assert rep.beta0 == pytest.approx(0.3, abs=0.05)
    assert rep.beta0_lower == pytest.approx(0.3, abs=0.05)
    assert rep.delta0 == pytest.approx(0.7, abs=0.05)
    assert rep.delta0_upper == pytest.approx(0.7, abs=0.05)
    assert rep.check_order() and not rep.domain_restricted


def test_sde_composed_infinity_index():
    drv = LevyTriplet([0.0], [[0.0]], SymmetricStable(1.5))
    m = SdeComposedModel(drv, lambda x: np.array([[2.0 + np.sin(x[0])]]), 1)
    rep = estimate_indices_infinity(m, [0.4])
    assert rep.beta_inf == pytest.approx(1.5, abs=0.05)
    assert rep.check_order()


def test_refined_grid_gives_same_indices():
    R = default_R_grid("origin")
    fine = np.sort(np.concatenate([R, np.sqrt(R[1:] * R[:-1])]))
    for m, a in [(stable_levy(1.2), 1.2), (brownian_motion(), 2.0)]:
        coarse = estimate_indices_origin(m, R, window=6)
        refined = estimate_indices_origin(m, fine, window=11)
        for k in ("beta0", "beta0_lower", "delta0", "delta0_upper"):
            assert getattr(refined, k) == pytest.approx(getattr(coarse, k), abs=0.02)


def test_grid_direction_validated():
    with pytest.raises(ValueError):
        estimate_indices_origin(stable_levy(1.0), default_R_grid("infinity"))
    with pytest.raises(ValueError):
        estimate_indices_infinity(stable_levy(1.0), [0.0], default_R_grid("origin"))


def test_report_serialises():
    d = estimate_indices(stable_levy(1.5), [0.0]).to_dict()
    assert set(d) >= {"beta0", "delta_inf", "origin", "infinity", "domain_restricted"}
    assert isinstance(d["origin"]["R"], list)


def test_cogarch_index_requires_domain():
    m = CogarchModel(LevyTriplet([0.0], [[0.0]], VarianceGamma(2.0)), 2.0, 0.5, 10.0)
    with pytest.raises(DomainRequired):
        estimate_indices_origin(m)


# --- exponent identities -------------------------------------------------------------------

L = np.linspace(1.0, 450.0, 4000)  # keeps exp(-1.5 L) a normal float
LAMBDAS = np.linspace(0.0, 2.0, 2001)
SLACK = 10.0 / L[int(len(L) * 2 / 3)] + 2e-3


@given(st.floats(min_value=0.05, max_value=1.5))
def test_lambda_scan_matches_exponents_for_monomials(a):
    R, F = np.exp(L), np.exp(-a * L)
    lo, hi = exponent_extremes(F, R)
    assert lo == pytest.approx(a, rel=1e-9) and hi == pytest.approx(a, rel=1e-9)
    assert abs(lambda_scan_index(F, R, LAMBDAS, "limsup") - lo) <= SLACK
    assert abs(lambda_scan_index(F, R, LAMBDAS, "liminf") - hi) <= SLACK


@given(st.floats(min_value=0.05, max_value=0.3))
def test_lambda_scan_matches_exponents_for_oscillating_functions(a):
    R, F = np.exp(L), np.exp(-a * (2 + np.sin(L)) * L)
    lo, hi = exponent_extremes(F, R)
    assert lo == pytest.approx(a, abs=1e-5) and hi == pytest.approx(3 * a, abs=1e-5)
    assert abs(lambda_scan_index(F, R, LAMBDAS, "limsup") - lo) <= SLACK
    assert abs(lambda_scan_index(F, R, LAMBDAS, "liminf") - hi) <= SLACK


def test_anchored_exponents_exact_for_power_laws():
    R = 2.0 ** np.arange(25)
    g = anchored_exponents(3.0 * R ** -0.8, R, 6)
    np.testing.assert_allclose(g, 0.8, rtol=1e-13)
    with pytest.raises(ValueError):
        anchored_exponents(R, R, 1)

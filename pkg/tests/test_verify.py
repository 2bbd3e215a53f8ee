import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from hdwj.grids import BallOptimizerConfig
from hdwj.indices import SectorViolation
from hdwj.kernels import NoJumps, SymmetricStable
from hdwj.rng import RngSpec
from hdwj.symbol import LevyModel, LevyTriplet, SdeComposedModel, brownian_motion, stable_levy
from hdwj.verify import (
    bound_constants,
    check_lower_bound,
    check_upper_bound,
    empirical_symbol,
    scaling_diagnostic,
    wilson_interval,
)

RNG = RngSpec(20240601)
CFG = BallOptimizerConfig(n_y=8)


def test_bound_constants():
    c = -1.0 / math.expm1(-0.5)
    for d in (1, 2, 5):
        got = bound_constants(d)
        assert got[0] == pytest.approx(c, rel=1e-15)
        assert got[1] == pytest.approx(2 * c * (d + 1), rel=1e-15)
        assert got[2] == pytest.approx(4 * d + 32 * c * (d + 1), rel=1e-15)
    assert bound_constants(1)[2] == pytest.approx(166.65562128235508, rel=1e-14)
    with pytest.raises(ValueError):
        bound_constants(0)


@given(st.floats(min_value=0.0, max_value=1e3))
def test_truncated_square_sandwich(z):
    c = bound_constants(1)[0]
    mid = c * -math.expm1(-z * z / 2)
    low = min(z * z, 1.0)
    assert low <= mid * (1 + 1e-14) + 1e-300
    assert mid <= c * low * (1 + 1e-14)


@given(st.integers(min_value=0, max_value=500), st.integers(min_value=1, max_value=500))
def test_wilson_matches_score_equation(k, extra):
    n = k + extra
    lo, hi = wilson_interval(k, n)
    z = stats.norm.ppf(0.995)
    # roots of (k/n - p)^2 = z^2 p (1 - p) / n
    ph = k / n
    a, b, cc = 1 + z * z / n, -(2 * ph + z * z / n), ph * ph
    r = np.sort(np.real(np.roots([a, b, cc])))
    assert float(lo) == pytest.approx(max(r[0], 0.0), abs=1e-12)
    assert float(hi) == pytest.approx(min(r[1], 1.0), abs=1e-12)
    assert 0.0 <= lo <= ph <= hi <= 1.0


def test_upper_bound_holds_for_stable_and_bm():
    for m in (stable_levy(1.5), brownian_motion()):
        rep = check_upper_bound(m, [0.0], [0.01, 0.1, 1.0], [0.1, 1.0, 10.0], RNG, M=20_000,
                                n_min_steps=4, cfg=CFG)
        assert rep.all_passed
        assert np.all(rep.ci_low <= rep.p_hat) and np.all(rep.p_hat <= rep.ci_high)
        assert rep.to_dict()["constants"]["d"] == 1


def test_lower_bound_constant_is_flat_for_stable():
    rep = check_lower_bound(stable_levy(1.5), [0.0], [0.01, 0.1, 1.0], rng=RNG, M=5000,
                            n_min_steps=8, cfg=CFG)
    assert rep.verdict == "bounded" and abs(rep.slope) <= 0.2
    assert rep.c_hat > 0
    one = check_lower_bound(stable_levy(1.5), [0.0], [0.1], rng=RNG, M=500, n_min_steps=8,
                            cfg=CFG)
    assert one.verdict == "inconclusive"


def test_lower_bound_refuses_without_sector():
    drift = LevyModel(LevyTriplet([1.0], [[0.0]], NoJumps(1)))
    with pytest.raises(SectorViolation):
        check_lower_bound(drift, [0.0], [0.1, 1.0], rng=RNG, M=10, cfg=CFG)


def test_exploding_paths_raise():
    m = SdeComposedModel(LevyTriplet([1.0], [[0.0]], NoJumps(1)), lambda x: np.array([[x[0] ** 3]]),
                         1)
    with pytest.raises(FloatingPointError):
        check_upper_bound(m, [1.0], [2.0], [1.0], RNG, M=10, n_steps=400, cfg=CFG)


@pytest.mark.parametrize("lam,verdict", [(1.0, "tends-to-inf"), (3.0, "tends-to-0")])
def test_scaling_verdicts_bm(lam, verdict):
    rep = scaling_diagnostic(brownian_motion(), [0.0], lam, "zero", RNG, M=400, n_steps=64,
                             cfg=CFG)
    assert rep.verdict == verdict and rep.levels_used == 13


def test_scaling_infinity_direction_stable():
    m = stable_levy(1.5)
    assert scaling_diagnostic(m, [0.0], 1.0, "infinity", RNG, M=400, n_steps=64,
                              cfg=CFG).verdict == "tends-to-0"
    assert scaling_diagnostic(m, [0.0], 2.0, "infinity", RNG, M=400, n_steps=64,
                              cfg=CFG).verdict == "tends-to-inf"


def test_scaling_at_critical_exponent():
    with pytest.raises(ValueError):
        scaling_diagnostic(brownian_motion(), [0.0], 2.05, "zero", RNG, M=10, cfg=CFG)
    rep = scaling_diagnostic(brownian_motion(), [0.0], 2.0, "zero", RNG, M=400, n_steps=64,
                             indices={})
    assert rep.verdict == "inconclusive"


def test_empirical_symbol_bm():
    rep = empirical_symbol(brownian_motion(), [0.0], [2.0], [0.1, 0.01], K_radius=1.0, rng=RNG,
                           M=50_000, n_steps=20)
    assert abs(rep.estimate_re[-1] - 2.0) < 4 * rep.se_re[-1] + 0.02
    assert abs(rep.estimate_im[-1]) < 4 * rep.se_im[-1]
    assert rep.exit_fraction[-1] < rep.exit_fraction[0]
    with pytest.raises(ValueError):
        empirical_symbol(brownian_motion(), [0.0], [1.0], [0.01, 0.1])


def test_empirical_symbol_sees_the_drift():
    m = LevyModel(LevyTriplet([0.5], [[0.0]], SymmetricStable(1.5)))
    rep = empirical_symbol(m, [0.0], [1.0], [0.01], K_radius=1.0, rng=RNG, M=100_000,
                           n_steps=20)
    assert abs(rep.estimate_re[0] - 1.0) < 4 * rep.se_re[0] + 0.05
    assert abs(rep.estimate_im[0] + 0.5) < 4 * rep.se_im[0] + 0.02

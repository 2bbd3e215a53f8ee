import math

import numpy as np
import pytest
from scipy import stats

from hdwj import _backend
from hdwj.kernels import CompoundPoisson, NoJumps, UnsupportedError, VarianceGamma
from hdwj.paths import (
    PathGrid,
    deterministic_example,
    figure_eight_curve,
    figure_eight_phase,
    levy_increments,
    max_process,
    simulate_cogarch,
    simulate_levy,
    simulate_model,
    simulate_sde,
)
from hdwj.rng import RngSpec
from hdwj.symbol import (
    CogarchModel,
    CustomTripletModel,
    DeterministicFigureEightModel,
    LevyModel,
    LevyTriplet,
    SumIndependentModel,
    brownian_motion,
    eval_symbol,
    stable_levy,
)

RNG = RngSpec(20240601)


def _ecf_check(triplet, dt, xis, M=200_000):
    inc = levy_increments(triplet, dt, RNG, 0, M, 0, 1)[:, 0, 0]
    model = LevyModel(triplet)
    for xi in xis:
        e = np.exp(1j * xi * inc)
        target = np.exp(-dt * complex(eval_symbol(model, [0.0], [xi])))
        se_re = e.real.std() / math.sqrt(M)
        se_im = e.imag.std() / math.sqrt(M)
        assert abs(e.real.mean() - target.real) < 3.5 * se_re + 1e-12
        assert abs(e.imag.mean() - target.imag) < 3.5 * se_im + 1e-12


def test_bm_increments_moments():
    inc = levy_increments(brownian_motion().triplet(), 0.01, RNG, 0, 400_000, 0, 1)[:, 0, 0]
    se = 0.01 * math.sqrt(2 / inc.size)
    assert abs(inc.mean()) < 4 * math.sqrt(0.01 / inc.size)
    assert abs(inc.var() - 0.01) < 4 * se


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
def test_stable_increments_ecf(alpha):
    _ecf_check(stable_levy(alpha).triplet(), 0.05, [0.5, 2.0, 7.0])


def test_vg_and_poisson_increments_ecf():
    _ecf_check(LevyTriplet([0.0], [[0.0]], VarianceGamma(2.0)), 0.1, [0.5, 3.0])
    cp = CompoundPoisson(3.0, stats.norm(0.5, 1.0))
    _ecf_check(LevyTriplet([0.2], [[0.5]], cp), 0.1, [0.7, 2.0])


def test_sde_identity_coefficient_variance():
    grid = PathGrid(1.0, 50)
    ens = simulate_sde(lambda X: np.ones((X.shape[0], 1, 1)), brownian_motion().triplet(),
                       [0.3], grid, RNG, M=40_000)
    xT = ens.states[:, -1, 0]
    assert abs(xT.mean() - 0.3) < 4 * math.sqrt(1 / xT.size)
    assert abs(xT.var() - 1.0) < 4 * math.sqrt(2 / xT.size)


def test_euler_exact_second_moment_linear_sde():
    # X_{k+1} = X_k (1 + dB_k) gives E X_n^2 = x0^2 (1 + dt)^n exactly
    grid = PathGrid(0.5, 20)
    ens = simulate_sde(lambda X: X[:, :, None], brownian_motion().triplet(), [1.0], grid, RNG,
                       M=100_000)
    x2 = ens.states[:, -1, 0] ** 2
    assert abs(x2.mean() - (1 + grid.dt) ** 20) < 4 * x2.std() / math.sqrt(x2.size)


def test_euler_self_convergence():
    # pure drift driver: the Euler scheme for x' = sin x converges at first order
    drift = LevyTriplet([1.0], [[0.0]], NoJumps(1))
    ends = []
    for n in (50, 100, 200, 400):
        ens = simulate_sde(lambda X: np.sin(X)[:, :, None], drift, [1.0], PathGrid(1.0, n),
                           RNG, M=1)
        ends.append(ens.states[0, -1, 0])
    e1, e2 = abs(ends[1] - ends[0]), abs(ends[2] - ends[1])
    e3 = abs(ends[3] - ends[2])
    assert e2 / e1 < 0.8 and e3 / e2 < 0.8
    exact = 2 * math.atan(math.tan(0.5) * math.e)
    assert abs(ends[3] - exact) < 2e-3


def test_zero_coefficient_freezes_paths():
    ens = simulate_sde(lambda X: np.zeros((X.shape[0], 1, 1)), stable_levy(1.2).triplet(),
                       [0.7], PathGrid(1.0, 30), RNG, M=100)
    assert np.all(ens.states == 0.7) and np.all(ens.running_max == 0.0)


def test_cogarch_without_jumps_follows_the_ode():
    beta, delta = 0.3, 0.6
    model = CogarchModel(brownian_motion().triplet(), 1.0, delta, beta)
    grid = PathGrid(1.0, 10_000)
    ens = simulate_cogarch(model, (0.0, 0.5), grid, RNG, M=2)
    ld = math.log(delta)
    t = ens.times
    exact = -beta / ld + (0.25 + beta / ld) * np.exp(ld * t)
    np.testing.assert_allclose(ens.extra["S2"][0], exact, rtol=1e-3)
    np.testing.assert_allclose(np.exp(ens.states[0, :, 1]), exact, rtol=1e-3)


def test_cogarch_with_zero_driver_keeps_G_constant():
    model = CogarchModel(LevyTriplet([0.0], [[0.0]], NoJumps(1)), 1.0, 0.5, 1.0)
    ens = simulate_model(model, [0.4, 0.0], PathGrid(1.0, 100), RNG, M=5)
    assert np.all(ens.states[:, :, 0] == 0.4)


def test_cogarch_step_must_resolve_decay():
    model = CogarchModel(brownian_motion().triplet(), 1.0, 0.01, 1.0)
    with pytest.raises(ValueError):
        simulate_cogarch(model, (0.0, 1.0), PathGrid(1.0, 2), RNG, M=2)


def test_deterministic_figure_eight():
    t = np.linspace(0, 20, 401)
    np.testing.assert_allclose(deterministic_example([0.0, 0.0], t), figure_eight_curve(t),
                               atol=1e-15)
    # the lower circle is run clockwise: (sin t, cos t - 1)
    assert figure_eight_phase([0.0, -2.0]) == pytest.approx(3 * math.pi)
    np.testing.assert_allclose(deterministic_example([0.0, -2.0], [math.pi / 2]),
                               [[-1.0, -1.0]], atol=1e-14)
    off = deterministic_example([3.0, 3.0], t)
    assert np.all(off == 3.0)
    ens = simulate_model(DeterministicFigureEightModel(), [0.0, 0.0], PathGrid(4 * math.pi, 400),
                         M=3)
    np.testing.assert_allclose(max_process(ens, 4 * math.pi), 2.0, atol=1e-3)


def test_running_max_is_monotone_and_matches_states():
    ens = simulate_levy(stable_levy(1.3).triplet(), [0.0], PathGrid(1.0, 64), RNG, M=500)
    assert np.all(np.diff(ens.running_max, axis=1) >= 0)
    direct = np.maximum.accumulate(np.abs(ens.states[:, :, 0]), axis=1)
    np.testing.assert_array_equal(ens.running_max, direct)
    np.testing.assert_array_equal(max_process(ens, 0.5), direct[:, 32])
    with pytest.raises(ValueError):
        max_process(ens, 0.51)


def test_bm_marginal_is_normal():
    ens = simulate_levy(brownian_motion().triplet(), [0.0], PathGrid(2.0, 16), RNG, M=20_000,
                        record_steps=[16])
    assert stats.kstest(ens.states[:, -1, 0] / math.sqrt(2.0), "norm").pvalue > 1e-3


def test_stable_self_similarity():
    a = 1.5
    ens = simulate_levy(stable_levy(a).triplet(), [0.0], PathGrid(1.0, 64), RNG, M=20_000,
                        record_steps=[4, 64])
    small = ens.states[:, 1, 0] / (1 / 16) ** (1 / a)
    large = ens.states[:, 2, 0]
    assert stats.ks_2samp(small, large).pvalue > 1e-3


def test_sum_model_components_are_independent_copies():
    m = SumIndependentModel([brownian_motion(), stable_levy(1.2)])
    ens = simulate_model(m, [0.0, 0.0], PathGrid(1.0, 20), RNG, M=20_000)
    x = ens.states[:, -1, :]
    assert abs(np.corrcoef(x[:, 0], np.clip(x[:, 1], -5, 5))[0, 1]) < 4 / math.sqrt(x.shape[0])


def test_custom_family_is_not_simulable():
    m = CustomTripletModel(lambda x: LevyTriplet([0.0], [[1.0]], NoJumps(1)), dim=1)
    with pytest.raises(UnsupportedError):
        simulate_model(m, [0.0], PathGrid(1.0, 4), RNG, M=2)


# --- reproducibility ------------------------------------------------------------------------

def _zoo():
    yield "bm", lambda r, **kw: simulate_model(brownian_motion(2), [0.0, 0.0], PathGrid(1, 16), r,
                                                M=300, **kw)
    yield "stable", lambda r, **kw: simulate_model(stable_levy(0.8), [0.0], PathGrid(1, 16), r,
                                                    M=300, **kw)
    cp = CompoundPoisson(2.0, stats.norm(0.0, 1.0))
    yield "poisson", lambda r, **kw: simulate_model(LevyModel(LevyTriplet([0.0], [[0.0]], cp)),
                                                     [0.0], PathGrid(1, 16), r, M=300, **kw)
    cg = CogarchModel(LevyTriplet([0.0], [[0.0]], VarianceGamma(2.0)), 1.0, 0.5, 1.0)
    yield "cogarch", lambda r, **kw: simulate_model(cg, [0.0, 0.0], PathGrid(1, 16), r, M=300,
                                                     **kw)


@pytest.mark.parametrize("name,fn", list(_zoo()))
def test_thread_count_and_chunking_do_not_change_results(name, fn):
    base = fn(RngSpec(7, 1))
    for threads in (4, 8):
        np.testing.assert_array_equal(fn(RngSpec(7, threads)).states, base.states)
    np.testing.assert_array_equal(fn(RngSpec(7, 1), chunk=7).states, base.states)
    assert not np.array_equal(fn(RngSpec(8, 1)).states, base.states)


@pytest.mark.skipif(_backend.compiled_kernels is None, reason="compiled kernels not built")
@pytest.mark.parametrize("name,fn", list(_zoo()))
def test_backends_agree(name, fn, monkeypatch):
    a = fn(RngSpec(11))
    monkeypatch.setattr(_backend, "kernels", _backend.python_kernels)
    b = fn(RngSpec(11))
    np.testing.assert_allclose(a.states, b.states, rtol=1e-12, atol=1e-14)

"""Battery of worked examples with known answers (closed forms, hand arithmetic, brute force)."""

from dataclasses import dataclass, asdict
import math
import time

import numpy as np

from .grids import BallOptimizerConfig
from .indices import (
    SectorViolation,
    DomainRequired,
    H_global,
    H_local,
    estimate_indices,
    estimate_indices_infinity,
    estimate_sector_constant,
    h_global,
    h_local,
    kappa,
)
from .kernels import NoJumps, SymmetricStable, VarianceGamma
from .paths import PathGrid, deterministic_example, sample_levy_increments, simulate_model
from .rng import RngSpec
from .symbol import (
    CogarchModel,
    LevyModel,
    LevyTriplet,
    SdeComposedModel,
    StableLikeModel,
    brownian_motion,
    differential_characteristics,
    eval_jump_integral,
    eval_symbol,
    stable_levy,
    sum_symbol,
)
from .kernels import CustomDensity, stable_constant
from .verify import bound_constants, check_upper_bound, empirical_symbol, scaling_diagnostic


@dataclass
class CheckResult:
    name: str
    tag: str
    passed: bool
    value: str
    expected: str
    seconds: float


_CHECKS = []


def _check(name, tag):
    def deco(fn):
        _CHECKS.append((name, tag, fn))
        return fn
    return deco


def _fmt(v):
    if isinstance(v, complex):
        return f"{v.real:.12g}{v.imag:+.12g}j"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _symmetric_nodes(W, n):
    """Nonzero nodes of an n-point uniform grid on [-W, W], exactly mirror symmetric."""
    half = (n - 1) // 2
    h = W / half
    pos = h * np.arange(1, half + 1)
    return np.concatenate([-pos[::-1], pos]), h


def vg_trapezoid(C, xi, n=10_000_001, W=50.0):
    """int (e^{iy xi} - 1 - i y xi 1{|y|<=1}) N(dy) for VG(C) by a plain trapezoid rule."""
    y, h = _symmetric_nodes(W, n)
    N = C / np.abs(y) * np.exp(-np.abs(y) / math.sqrt(2.0 * C))
    f = (np.expm1(1j * y * xi) - 1j * y * xi * (np.abs(y) <= 1.0)) * N
    return complex(np.sum(f) * h)


def cogarch_trapezoid(C, lam, delta, beta, state, xi, ell=0.0, q=0.0, n=10_000_001, W=60.0):
    """COGARCH symbol from its four printed terms with VG(C) driver, trapezoid over w."""
    _, v = state
    x1, x2 = xi
    w, h = _symmetric_nodes(W, n)
    N = C / np.abs(w) * np.exp(-np.abs(w) / math.sqrt(2.0 * C))
    a = math.exp(v / 2.0)
    z1 = a * w
    z2 = np.log1p(lam / delta * w * w)
    inside = (np.abs(z1) <= 1.0) & (np.abs(z2) <= 1.0)
    l1 = a * (ell + np.sum(w * (inside * 1.0 - (np.abs(w) <= 1.0)) * N) * h)
    l2 = beta * math.exp(-v) + math.log(delta) + np.sum(z2 * inside * N) * h
    s = z1 * x1 + z2 * x2
    J = np.sum((np.expm1(1j * s) - 1j * s * inside) * N) * h
    return complex(-1j * x1 * l1 - 1j * x2 * l2 + 0.5 * x1 * x1 * math.exp(v) * q - J)


# --- symbol-core -------------------------------------------------------------------------

@_check("BM symbol xi^2/2", "TRIVIAL")
def _bm_symbol():
    m = brownian_motion()
    vals = [complex(eval_symbol(m, [x], [xi])) for x, xi in [(0, 1), (3, -2), (-1, 0.5)]]
    exp = [0.5, 2.0, 0.125]
    return vals, exp, all(abs(a - b) < 1e-14 for a, b in zip(vals, exp))


@_check("1.5-stable symbol |xi|^1.5", "PAPER")
def _stable_symbol():
    v = complex(eval_symbol(stable_levy(1.5), [1.0], [2.0]))
    return v, 2 ** 1.5, abs(v - 2 ** 1.5) < 1e-12


@_check("p(x, 0) = 0 for every family", "TRIVIAL")
def _zero():
    vg = LevyTriplet([0.3], [[0.5]], VarianceGamma(2.0))
    models = [(brownian_motion(2), [0, 0]), (stable_levy(0.7), [1.0]),
              (LevyModel(vg), [0.0]), (CogarchModel(vg, 2.0, 0.5, 10.0), [0.0, 1.0])]
    worst = max(abs(complex(eval_symbol(m, x, np.zeros(len(x))))) for m, x in models)
    return worst, 0.0, worst == 0.0


@_check("custom density = 1.5-stable density reproduces |xi|^1.5 (rel 1e-6)", "DERIVED")
def _custom_stable():
    c = stable_constant(1.5)
    k = CustomDensity(lambda y: c * np.abs(y) ** -2.5, singularity=1.5)
    v = -complex(eval_jump_integral(k, [3.0]))
    return v, 3 ** 1.5, abs(v - 3 ** 1.5) / 3 ** 1.5 < 1e-6


@_check("jump integral of the empty measure", "TRIVIAL")
def _none():
    v = complex(eval_jump_integral(NoJumps(1), [5.0]))
    return v, 0.0, v == 0


@_check("jump integral of 1-stable at xi=2", "DERIVED")
def _cauchy():
    v = complex(eval_jump_integral(SymmetricStable(1.0), [2.0]))
    return v, -2.0, abs(v + 2.0) < 1e-8


@_check("VG(C=2) jump integral vs 1e7-node trapezoid", "DERIVED")
def _vg():
    v = complex(eval_jump_integral(VarianceGamma(2.0), [1.0]))
    o = vg_trapezoid(2.0, 1.0)
    return v, o, abs(v - o) < 1e-5


@_check("COGARCH, lambda=0, BM driver", "TRIVIAL")
def _cog_bm():
    m = CogarchModel(LevyTriplet([0.0], [[1.0]], NoJumps(1)), 0.0, 0.5, 10.0)
    g, v, x1, x2 = 0.3, 0.7, 1.3, -0.4
    val = complex(eval_symbol(m, [g, v], [x1, x2]))
    exp = -1j * x2 * (10.0 * math.exp(-v) + math.log(0.5)) + 0.5 * x1 * x1 * math.exp(v)
    return val, exp, abs(val - exp) < 1e-12


@_check("COGARCH VG driver vs trapezoid oracle at (0,0), xi=(1,0)", "DERIVED")
def _cog_vg():
    m = CogarchModel(LevyTriplet([0.0], [[0.0]], VarianceGamma(2.0)), 2.0, 0.5, 10.0)
    v = complex(eval_symbol(m, [0.0, 0.0], [1.0, 0.0]))
    o = cogarch_trapezoid(2.0, 2.0, 0.5, 10.0, (0.0, 0.0), (1.0, 0.0))
    return v, o, abs(v - o) < 1e-4


@_check("two independent BMs add", "TRIVIAL")
def _sum_bm():
    v = complex(sum_symbol([(brownian_motion(), [0.0], [1.5]), (brownian_motion(), [2.0], [-3.0])]))
    return v, 1.125 + 4.5, abs(v - 5.625) < 1e-14


@_check("stable(1.2) + stable(1.8) add", "PAPER")
def _sum_stable():
    v = complex(sum_symbol([(stable_levy(1.2), [0.0], [2.0]), (stable_levy(1.8), [0.0], [0.5])]))
    e = 2 ** 1.2 + 0.5 ** 1.8
    return v, e, abs(v - e) < 1e-12


@_check("figure-eight drift on the upper circle", "PAPER")
def _fig_drift():
    from .symbol import DeterministicFigureEightModel
    x = np.array([math.sin(1.0), 1.0 - math.cos(1.0)])
    t = differential_characteristics(DeterministicFigureEightModel(), x)
    e = np.array([1.0 - x[1], x[0]])
    return t.ell.tolist(), e.tolist(), bool(np.allclose(t.ell, e, atol=0) and not t.Q.any())


# --- indices ------------------------------------------------------------------------------

@_check("H(x,R) = R^-1.5 for 1.5-stable", "DERIVED")
def _H_stable():
    m = stable_levy(1.5)
    vals = [H_local(m, [0.0], R) for R in (0.5, 1.0, 4.0)]
    exp = [R ** -1.5 for R in (0.5, 1.0, 4.0)]
    return vals, exp, np.allclose(vals, exp, rtol=1e-12)


@_check("H(x,R) = 1/(2R^2) for BM", "TRIVIAL")
def _H_bm():
    v = H_local(brownian_motion(), [0.0], 3.0)
    return v, 1 / 18, abs(v - 1 / 18) < 1e-15


@_check("h(x,R) = (4 kappa R)^-1.5, kappa = 1/(2 pi)", "DERIVED")
def _h_stable():
    m = stable_levy(1.5)
    s = estimate_sector_constant(m, np.zeros((1, 1)))
    v = h_local(m, [0.0], 2.0, s)
    e = (4 * kappa(0.0) * 2.0) ** -1.5
    return v, e, abs(v - e) < 1e-12 * e


@_check("sector constant |b| for |xi| - i b xi", "DERIVED")
def _sector_drift():
    m = LevyModel(LevyTriplet([0.7], [[0.0]], SymmetricStable(1.0)))
    s = estimate_sector_constant(m, np.zeros((1, 1)))
    return s.c0, 0.7, s.satisfied and abs(s.c0 - 0.7) < 1e-9


@_check("pure drift violates the sector condition", "TRIVIAL")
def _sector_fail():
    m = LevyModel(LevyTriplet([1.0], [[0.0]], NoJumps(1)))
    s = estimate_sector_constant(m, np.zeros((1, 1)))
    try:
        h_global(m, 1.0, s)
        raised = False
    except SectorViolation:
        raised = True
    return (s.satisfied, raised), (False, True), (not s.satisfied) and raised


@_check("stable-like H(R) = R^-0.3 and h(R) = (4 kappa R)^-0.7 for R > 1", "PAPER")
def _stable_like_H():
    m = StableLikeModel(lambda x: 0.3 + 0.4 * (1 + np.sin(x[0])) / 2, 0.3, 0.7)
    s = estimate_sector_constant(m, np.zeros((1, 1)))
    H = H_global(m, 10.0)
    h = h_global(m, 10.0, s)
    eH, eh = 10.0 ** -0.3, (4 * kappa(0.0) * 10.0) ** -0.7
    return (H, h), (eH, eh), abs(H - eH) < 1e-9 and abs(h - eh) < 1e-9


@_check("COGARCH H(R) needs a domain, finite on [-5,5]^2", "TRIVIAL")
def _cog_domain():
    m = CogarchModel(LevyTriplet([0.0], [[0.0]], VarianceGamma(2.0)), 2.0, 0.5, 10.0)
    try:
        H_global(m, 1.0)
        raised = False
    except DomainRequired:
        raised = True
    val = H_global(m, 1.0, ([-5.0, -5.0], [5.0, 5.0]), BallOptimizerConfig(n_y=32))
    return (raised, val), (True, "finite"), raised and math.isfinite(val)


def _all_close(rep, a, tol):
    vals = list(rep.indices().values())
    return vals, all(v is not None and abs(v - a) <= tol for v in vals)


@_check("eight indices of 1.5-stable", "PAPER")
def _idx_stable():
    vals, ok = _all_close(estimate_indices(stable_levy(1.5), [0.0]), 1.5, 0.02)
    return vals, 1.5, ok


@_check("eight indices of BM", "TRIVIAL")
def _idx_bm():
    vals, ok = _all_close(estimate_indices(brownian_motion(), [0.0]), 2.0, 0.01)
    return vals, 2.0, ok


@_check("SDE with full-rank Phi keeps beta_inf of the 1.5-stable driver", "DERIVED")
def _idx_sde():
    drv = LevyTriplet([0.0], [[0.0]], SymmetricStable(1.5))
    m = SdeComposedModel(drv, lambda x: np.array([[2.0 + np.sin(x[0])]]), 1)
    r = estimate_indices_infinity(m, [0.4])
    return r.beta_inf, 1.5, abs(r.beta_inf - 1.5) <= 0.05


# --- paths --------------------------------------------------------------------------------

@_check("non-Markov witness of the figure-eight example", "PAPER")
def _witness():
    a = deterministic_example([0.0, 2.0], math.pi)
    b = deterministic_example([0.0, 2.0], 2 * math.pi)
    c = deterministic_example([0.0, -2.0], 2 * math.pi)
    d = deterministic_example([7.0, 7.0], 1.3)
    exp = [[0, 0], [0, -2], [0, 2], [7, 7]]
    got = [a, b, c, d]
    ok = all(np.max(np.abs(np.asarray(g) - e)) <= 1e-12 for g, e in zip(got, exp))
    return [np.round(g, 15).tolist() for g in got], exp, ok


@_check("BM increments: mean and variance over dt = 0.01", "TRIVIAL")
def _bm_inc():
    z = sample_levy_increments(brownian_motion().triplet(), 0.01, RngSpec(11), 100000)[:, 0]
    ok = abs(z.mean()) < 4 * 0.1 / math.sqrt(z.size) and abs(z.var() / 0.01 - 1) < 0.05
    return (float(z.mean()), float(z.var())), (0.0, 0.01), ok


@_check("Phi = 0 freezes the SDE", "TRIVIAL")
def _frozen():
    m = SdeComposedModel(brownian_motion().triplet(), lambda x: np.zeros((1, 1)), 1)
    e = simulate_model(m, [1.5], PathGrid(1.0, 50), RngSpec(3), 20)
    ok = bool(np.all(e.states == 1.5) and np.all(e.running_max == 0))
    return float(np.abs(e.running_max).max()), 0.0, ok


# --- verify -------------------------------------------------------------------------------

@_check("bound constants d = 1, 2", "DERIVED")
def _consts():
    c = 1.0 / (1.0 - math.exp(-0.5))
    got = bound_constants(1)[1:] + bound_constants(2)[1:]
    exp = (4 * c, 4 + 64 * c, 6 * c, 8 + 96 * c)
    return got, exp, np.allclose(got, exp, rtol=1e-12, atol=0)


@_check("inequality (|z|^2 ^ 1) <= c(1 - e^{-|z|^2/2}) <= c(|z|^2 ^ 1)", "PAPER")
def _sandwich():
    c = bound_constants(1)[0]
    z = np.random.default_rng(5).standard_normal((10000, 3)) * np.exp(
        np.random.default_rng(6).uniform(-5, 3, (10000, 1)))
    s = np.sum(z * z, axis=1)
    mid = c * -np.expm1(-s / 2)
    lo = np.minimum(s, 1.0)
    ok = bool(np.all(lo <= mid * (1 + 1e-12)) and np.all(mid <= c * lo * (1 + 1e-12)))
    return "10000 points", "all hold", ok


@_check("upper bound, 1.5-stable, t = 1e-3, R = 4", "DERIVED")
def _upper():
    r = check_upper_bound(stable_levy(1.5), [0.0], [1e-3], [4.0], RngSpec(1), 100000,
                          n_steps=100)
    return float(r.p_hat[0, 0]), f"<= {r.bound[0, 0]:.4g}", r.all_passed


@_check("empirical symbol of BM at xi = 1", "TRIVIAL")
def _emp_bm():
    r = empirical_symbol(brownian_motion(), [0.0], [1.0], [0.1, 0.05, 0.01], 1.0, RngSpec(2),
                         100000)
    e, se = r.estimate_re[-1], r.se_re[-1]
    return e, 0.5, abs(e - 0.5) <= 3 * se


@_check("empirical symbol of the SDE Phi(x) = x at x = 2", "PAPER")
def _emp_sde():
    m = SdeComposedModel(brownian_motion().triplet(), lambda x: np.array([[x[0]]]), 1)
    m.Phi_batch = lambda X: X[:, :, None]
    r = empirical_symbol(m, [2.0], [1.0], [0.1, 0.05, 0.01], 1.0, RngSpec(2), 100000)
    e = complex(r.estimate_re[-1], r.estimate_im[-1])
    ok = abs(e.real - 2.0) <= 3 * r.se_re[-1] and abs(e.imag) <= 3 * r.se_im[-1]
    return e, 2.0, ok


@_check("scaling verdicts for 1.5-stable and BM", "PAPER")
def _scaling():
    got = (scaling_diagnostic(stable_levy(1.5), [0.0], 2.5, "zero", RngSpec(4)).verdict,
           scaling_diagnostic(stable_levy(1.5), [0.0], 1.0, "zero", RngSpec(4)).verdict,
           scaling_diagnostic(brownian_motion(), [0.0], 1.0, "infinity", RngSpec(4)).verdict)
    exp = ("tends-to-0", "tends-to-inf", "tends-to-0")
    return got, exp, got == exp


def run_selftest(names=None):
    """Run the battery (or the named subset); returns a list of CheckResult."""
    out = []
    for name, tag, fn in _CHECKS:
        if names is not None and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            value, expected, passed = fn()
        except Exception as exc:  # a crash is a failed check, reported not raised
            value, expected, passed = f"{type(exc).__name__}: {exc}", "no error", False
        out.append(CheckResult(name, tag, bool(passed), _fmt(value), _fmt(expected),
                               time.perf_counter() - t0))
    return out


def check_names():
    return [n for n, _, _ in _CHECKS]


def results_to_dicts(results, with_time=False):
    rows = []
    for r in results:
        d = asdict(r)
        if not with_time:
            d.pop("seconds")
        rows.append(d)
    return rows

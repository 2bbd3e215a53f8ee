"""Monte Carlo checks: empirical symbol, maximal inequalities and scaling of the maximum."""

from dataclasses import dataclass, field, asdict
import math

import numpy as np
from scipy import stats

from .grids import BallOptimizerConfig
from .indices import (
    DomainRequired,
    SectorViolation,
    _jsonable,
    estimate_indices_infinity,
    estimate_indices_origin,
    estimate_sector_constant,
    H_local,
    h_local,
)
from .paths import PathGrid, simulate_model
from .rng import RngSpec
from .symbol import DEFAULT_TOL

MAX_EXPLODED_FRACTION = 1e-3
LAMBDA_MARGIN = 0.1


def bound_constants(d):
    """(c, c~_d, c_d) with c = 1/(1 - e^{-1/2}), c~_d = 2c(d+1), c_d = 4d + 16 c~_d."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    c = 1.0 / (1.0 - math.exp(-0.5))
    c_tilde = 2.0 * c * (d + 1)
    return c, c_tilde, 4.0 * d + 16.0 * c_tilde


def wilson_interval(k, n, conf=0.99):
    """Wilson score interval for a binomial proportion."""
    k = np.asarray(k, dtype=np.float64)
    if n <= 0:
        raise ValueError("need at least one trial")
    z = stats.norm.ppf(0.5 + conf / 2.0)
    p = k / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return np.maximum(centre - half, 0.0), np.minimum(centre + half, 1.0)


def _valid_maxima(ens, t):
    j = ens.step_index(t)
    return ens.running_max[~ens.exploded, j]


def _check_exploded(ens, what):
    frac = ens.n_exploded / ens.M
    if frac > MAX_EXPLODED_FRACTION:
        raise FloatingPointError(f"{what}: {ens.n_exploded} of {ens.M} paths exploded "
                                 f"({frac:.2%} > {MAX_EXPLODED_FRACTION:.1%})")


def _grid_for(t_grid, n_min_steps):
    """Uniform grid on [0, max t] containing every t (t must be dyadic/decimal multiples)."""
    t_grid = np.sort(np.asarray(t_grid, dtype=np.float64))
    T = float(t_grid[-1])
    n = n_min_steps * int(round(T / t_grid[0]))
    return PathGrid(T, max(n, 1))


# --- empirical symbol --------------------------------------------------------------------

@dataclass
class EmpiricalSymbolReport:
    x: list
    xi: list
    t: list
    estimate_re: list
    estimate_im: list
    se_re: list
    se_im: list
    exit_fraction: list
    M: int
    n_exploded: int
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable(asdict(self))


def empirical_symbol(model, x, xi, t_seq, K_radius=1.0, rng=RngSpec(), M=10000, n_steps=100,
                     target_se=None):
    """-(E exp(i (X^sigma_t - x)'xi) - 1) / t for each t, sigma the grid exit time of B(x, K).

    Each t gets its own ensemble of ``n_steps`` Euler steps.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    t_seq = np.asarray(t_seq, dtype=np.float64)
    if np.any(np.diff(t_seq) >= 0):
        raise ValueError("t_seq must be decreasing")
    if K_radius <= 0:
        raise ValueError("K_radius must be positive")
    rep = EmpiricalSymbolReport(x.tolist(), xi.tolist(), [], [], [], [], [], [], M, 0)
    for t in t_seq:
        ens = simulate_model(model, x, PathGrid(float(t), n_steps), rng.child("empirical", float(t)),
                             M)
        ok = ~ens.exploded
        rep.n_exploded += ens.n_exploded
        rm = ens.running_max[ok]
        st = ens.states[ok]
        out = rm > K_radius
        first = np.where(out.any(axis=1), np.argmax(out, axis=1), rm.shape[1] - 1)
        xs = st[np.arange(st.shape[0]), first] - x
        phase = xs @ xi
        c, s = np.cos(phase), np.sin(phase)
        m = c.size
        rep.t.append(float(t))
        rep.estimate_re.append(float((1.0 - c.mean()) / t))
        rep.estimate_im.append(float(-s.mean() / t))
        rep.se_re.append(float(c.std(ddof=1) / math.sqrt(m) / t))
        rep.se_im.append(float(s.std(ddof=1) / math.sqrt(m) / t))
        rep.exit_fraction.append(float(out.any(axis=1).mean()))
    if rep.n_exploded:
        rep.warnings.append(f"{rep.n_exploded} exploded paths excluded")
    se = max(rep.se_re[-1], rep.se_im[-1])
    mag = abs(complex(rep.estimate_re[-1], rep.estimate_im[-1]))
    if target_se is not None and se > target_se:
        rep.warnings.append(f"standard error {se:.3g} exceeds target {target_se:.3g}; increase M")
    elif target_se is None and se > 0.1 * max(mag, 1e-12):
        rep.warnings.append(f"standard error {se:.3g} is large relative to |estimate| {mag:.3g}; "
                            "increase M")
    return rep


# --- maximal inequalities ----------------------------------------------------------------

@dataclass
class BoundCheckReport:
    t_grid: list
    R_grid: list
    p_hat: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    H: np.ndarray
    bound: np.ndarray
    passed: np.ndarray
    constants: dict
    M: int
    n_exploded: int

    @property
    def all_passed(self):
        return bool(np.all(self.passed))

    def to_dict(self):
        d = asdict(self)
        d["all_passed"] = self.all_passed
        return _jsonable(d)


def check_upper_bound(model, x, t_grid, R_grid, rng=RngSpec(), M=100000, n_min_steps=1,
                      cfg=BallOptimizerConfig(), tol=DEFAULT_TOL, n_steps=None):
    """P(max_{s<=t} |X_s - x| >= R) against c_d t H(x, R) on a (t, R) grid.

    A cell passes when the Wilson 99% lower limit does not exceed the bound.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t_grid = np.sort(np.asarray(t_grid, dtype=np.float64))
    R_grid = np.asarray(R_grid, dtype=np.float64)
    grid = PathGrid(float(t_grid[-1]), n_steps) if n_steps else _grid_for(t_grid, n_min_steps)
    ens = simulate_model(model, x, grid, rng.child("upper"), M, record_times=t_grid,
                         keep_states=False)
    _check_exploded(ens, "check_upper_bound")
    c, ct, cd = bound_constants(model.dim)
    H = np.array([H_local(model, x, R, cfg, tol) for R in R_grid])
    n_ok = M - ens.n_exploded
    p = np.empty((t_grid.size, R_grid.size))
    lo = np.empty_like(p)
    hi = np.empty_like(p)
    bound = cd * t_grid[:, None] * H[None, :]
    for i, t in enumerate(t_grid):
        mx = _valid_maxima(ens, t)
        k = np.array([(mx >= R).sum() for R in R_grid])
        p[i] = k / n_ok
        lo[i], hi[i] = wilson_interval(k, n_ok)
    passed = lo <= bound
    return BoundCheckReport(t_grid.tolist(), R_grid.tolist(), p, lo, hi, H, bound, passed,
                            {"c": c, "c_tilde": ct, "c_d": cd, "d": model.dim}, M, ens.n_exploded)


def default_lower_R_grid():
    return 2.0 ** (np.arange(-24, 7) / 2.0)


@dataclass
class LowerBoundReport:
    t_grid: list
    R_grid: list
    h: np.ndarray
    p_below: np.ndarray
    c_hat_t: np.ndarray
    c_hat: float
    slope: float
    verdict: str
    sector: dict
    M: int
    n_exploded: int

    def to_dict(self):
        return _jsonable(asdict(self))


def check_lower_bound(model, x, t_grid, R_grid=None, sector=None, rng=RngSpec(), M=10000,
                      n_min_steps=32, cfg=BallOptimizerConfig(), tol=DEFAULT_TOL,
                      slope_tol=0.2):
    """Empirical constant c^(t) = max_R P(max_{s<=t}|X_s - x| < R) t h(x, R) and its trend in t.

    The verdict is 'bounded' when the least-squares slope of log c^ against
    log t lies within +-slope_tol, 'trend' otherwise, 'inconclusive' for a
    single t.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t_grid = np.sort(np.asarray(t_grid, dtype=np.float64))
    R_grid = default_lower_R_grid() if R_grid is None else np.asarray(R_grid, dtype=np.float64)
    if sector is None:
        sector = estimate_sector_constant(model, x[None, :], None, cfg, tol)
    if not sector.satisfied:
        raise SectorViolation("sector condition violated; lower bound undefined")
    h = np.array([h_local(model, x, R, sector, cfg, tol) for R in R_grid])
    grid = _grid_for(t_grid, n_min_steps)
    ens = simulate_model(model, x, grid, rng.child("lower"), M, record_times=t_grid,
                         keep_states=False)
    _check_exploded(ens, "check_lower_bound")
    n_ok = M - ens.n_exploded
    pb = np.empty((t_grid.size, R_grid.size))
    for i, t in enumerate(t_grid):
        mx = _valid_maxima(ens, t)
        pb[i] = np.array([(mx < R).sum() for R in R_grid]) / n_ok
    c_t = np.max(pb * t_grid[:, None] * h[None, :], axis=1)
    if t_grid.size < 2 or np.any(c_t <= 0):
        slope, verdict = float("nan"), "inconclusive"
    else:
        slope = float(np.polyfit(np.log(t_grid), np.log(c_t), 1)[0])
        verdict = "bounded" if abs(slope) <= slope_tol else "trend"
    return LowerBoundReport(t_grid.tolist(), R_grid.tolist(), h, pb, c_t, float(np.max(c_t)),
                            slope, verdict, sector.to_dict(), M, ens.n_exploded)


# --- scaling of the maximum ----------------------------------------------------------------

@dataclass
class ScalingReport:
    lam: float
    direction: str
    t: list
    median: list
    q90: list
    kendall_tau: float
    kendall_p: float
    log2_factor: float
    verdict: str
    levels_used: int
    indices: dict
    M: int
    n_exploded: int
    diagnostics: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable(asdict(self))


def _relevant_indices(model, x, direction, cfg):
    if direction == "zero":
        rep = estimate_indices_infinity(model, x, cfg=cfg)
        return {"beta_inf": rep.beta_inf, "delta_inf": rep.delta_inf}
    rep = estimate_indices_origin(model, cfg=cfg)
    return {"beta0": rep.beta0, "delta0": rep.delta0}


def scaling_diagnostic(model, x, lam, direction="zero", rng=RngSpec(), M=1000,
                       levels=range(2, 15), n_steps=256, factor=4.0, alpha=0.01, last=None,
                       indices=None, cfg=BallOptimizerConfig()):
    """Trend of t^{-1/lam} max_{s<=t}|X_s - x| along t = 2^{-k} ('zero') or 2^k ('infinity').

    Verdict 'tends-to-0' when the medians decrease with a significant Kendall
    trend (p < alpha) and the Theil-Sen fit over the levels used gives a total
    decrease by at least ``factor``; 'tends-to-inf' symmetrically; else
    'inconclusive'.  ``last`` restricts the verdict to the final levels.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if direction not in ("zero", "infinity"):
        raise ValueError("direction must be 'zero' or 'infinity'")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    diags = []
    if indices is None:
        try:
            indices = _relevant_indices(model, x, direction, cfg)
        except DomainRequired:
            indices = {}
            diags.append("indices unavailable without a domain; margin check skipped")
    for name, val in indices.items():
        if val is not None and abs(lam - val) < LAMBDA_MARGIN:
            raise ValueError(f"lambda = {lam} lies within {LAMBDA_MARGIN} of {name} = {val:.3f}; "
                             "the limit is not determined there")
    levels = list(levels)
    ts, med, q90 = [], [], []
    n_expl = 0
    for k in levels:
        t = 2.0 ** (-k) if direction == "zero" else 2.0 ** k
        ens = simulate_model(model, x, PathGrid(t, n_steps), rng.child("scaling", k), M,
                             record_steps=[n_steps], keep_states=False)
        _check_exploded(ens, f"scaling level t = {t:g}")
        n_expl += ens.n_exploded
        stat = t ** (-1.0 / lam) * ens.running_max[~ens.exploded, -1]
        ts.append(t)
        med.append(float(np.median(stat)))
        q90.append(float(np.quantile(stat, 0.9)))
    use = slice(-last, None) if last else slice(None)
    y = np.log2(np.maximum(np.array(med[use]), 1e-300))
    idx = np.arange(y.size, dtype=np.float64)
    tau, p = stats.kendalltau(idx, y)
    slope = stats.theilslopes(y, idx)[0]
    total = float(slope * (y.size - 1))
    need = math.log2(factor)
    if p < alpha and tau < 0 and total <= -need:
        verdict = "tends-to-0"
    elif p < alpha and tau > 0 and total >= need:
        verdict = "tends-to-inf"
    else:
        verdict = "inconclusive"
    return ScalingReport(float(lam), direction, ts, med, q90, float(tau), float(p), total, verdict,
                         int(y.size), indices, M, n_expl, diags)

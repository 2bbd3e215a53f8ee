"""Maximal/minimal symbol functionals H, h, the sector constant and the eight indices.

Indices are read off local exponents

    g(R) = -log(H(R) / H(R_a)) / log(R / R_a),

anchored at the first point R_a of a window of the R grid (largest R for the
origin indices, smallest for the ones at infinity).  The window min/max of
g stands in for lim inf / lim sup.
"""

from dataclasses import dataclass, field, asdict
import math

import numpy as np

from .grids import (
    BallOptimizerConfig,
    ball_points,
    box_points,
    epsilon_grid,
    optimize_on_grid,
    project_ball,
    project_box,
    sphere_directions,
)
from .symbol import DEFAULT_TOL, StableLikeModel

DEFAULT_WINDOW = 6


class SectorViolation(ValueError):
    """h is only defined when the sector condition holds."""


class DomainRequired(ValueError):
    """The sup/inf over all states is not computable without a bounded domain."""


def kappa(c0):
    """kappa = 1 / (4 arctan(1 / (2 c0))), with the limit 1/(2 pi) at c0 = 0."""
    if c0 < 0:
        raise ValueError("c0 must be non-negative")
    if c0 == 0:
        return 1.0 / (2.0 * math.pi)
    if not np.isfinite(c0):
        return np.inf
    return 1.0 / (4.0 * math.atan(1.0 / (2.0 * c0)))


@dataclass
class SectorEstimate:
    c0: float
    kappa: float
    satisfied: bool
    worst_point: tuple = None

    def to_dict(self):
        wp = None
        if self.worst_point is not None:
            wp = [np.asarray(p).tolist() for p in self.worst_point]
        return {"c0": self.c0, "kappa": self.kappa, "satisfied": self.satisfied,
                "worst_point": wp}


def default_xi_radii(lo=1e-9, hi=1e9, n=37):
    return np.geomspace(lo, hi, n)


def estimate_sector_constant(model, x_points, xi_radii=None, cfg=BallOptimizerConfig(),
                             tol=DEFAULT_TOL):
    """c0 = sup |Im p| / Re p over states ``x_points`` and frequencies on spheres."""
    x_points = np.atleast_2d(np.asarray(x_points, dtype=np.float64))
    radii = default_xi_radii() if xi_radii is None else np.asarray(xi_radii, dtype=np.float64)
    dirs = sphere_directions(model.dim, cfg.n_directions)
    if model.dim == 1:
        dirs = dirs[:1]     # Hermitian symmetry covers -xi
    xis = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, model.dim)
    c0, worst, satisfied = 0.0, None, True
    for x in x_points:
        p = model.symbol(x, xis, tol)
        re, im = p.real, np.abs(p.imag)
        bad = (re <= tol) & (im > tol)
        if bad.any():
            j = int(np.argmax(bad))
            return SectorEstimate(np.inf, np.inf, False, (x, xis[j]))
        use = re > tol
        if use.any():
            ratio = np.where(use, im / np.where(use, re, 1.0), 0.0)
            j = int(np.argmax(ratio))
            if ratio[j] > c0:
                c0, worst = float(ratio[j]), (x, xis[j])
    # float noise in an exactly real symbol is not a sector constant
    if c0 < 1e-12:
        c0 = 0.0
    return SectorEstimate(c0, kappa(c0), satisfied, worst)


def check_local_growth(model, box_lo, box_hi, cfg=BallOptimizerConfig(), xi_max=1e6,
                       n_radii=49, tol=DEFAULT_TOL):
    """sup over the box and frequencies up to xi_max of |p(x, xi)| / (1 + |xi|^2)."""
    xs = box_points(box_lo, box_hi, cfg.n_y)
    radii = np.geomspace(1e-3, xi_max, n_radii)
    dirs = sphere_directions(model.dim, cfg.n_directions)
    xis = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, model.dim)
    denom = 1.0 + np.sum(xis * xis, axis=1)
    best = 0.0
    for x in xs:
        best = max(best, float(np.max(np.abs(model.symbol(x, xis, tol)) / denom)))
    return best


# --- H and h ------------------------------------------------------------------------

def _sup_over_eps(model, y, scale, cfg, part, tol, eps=None):
    """sup over the unit ball of |p(y, eps * scale)| (part='abs') or Re p (part='re')."""
    d = model.dim
    if eps is None:
        eps, spacing = epsilon_grid(d, cfg)
    else:
        eps = np.atleast_2d(eps)
        spacing = 1.0 / cfg.n_radial
    fn = np.abs if part == "abs" else np.real

    def f(pts):
        return fn(model.symbol(y, pts * scale, tol))

    best, _ = optimize_on_grid(f, eps, spacing, lambda p: project_ball(p, 0.0, 1.0), cfg)
    return best


def _tol_for(scale, tol):
    # symbol values shrink like |xi|^2 at most; keep the tolerance relative
    return tol * min(1.0, scale * scale)


def _over_states(model, x, radius, inner, cfg, sense):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if model.homogeneous:
        return inner(x)
    d = model.dim
    pts = x + radius * ball_points(d, cfg.n_y)
    spacing = radius * 2.0 / max(cfg.n_y ** (1.0 / d) - 1.0, 1.0)

    def f(ys):
        return np.array([inner(y) for y in ys])

    best, _ = optimize_on_grid(f, pts, spacing, lambda p: project_ball(p, x, radius), cfg, sense)
    return best


def _over_box(model, lo, hi, inner, cfg, sense):
    pts = box_points(lo, hi, cfg.n_y)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    span = np.max(hi - lo) if np.any(hi > lo) else 0.0
    spacing = span / max(cfg.n_y ** (1.0 / max(int(np.sum(hi > lo)), 1)) - 1.0, 1.0)

    def f(ys):
        return np.array([inner(y) for y in ys])

    best, _ = optimize_on_grid(f, pts, spacing, lambda p: project_box(p, lo, hi), cfg, sense)
    return best


def H_local(model, x, R, cfg=BallOptimizerConfig(), tol=DEFAULT_TOL, eps=None):
    """sup_{|y-x| <= 2R} sup_{|eps| <= 1} |p(y, eps/R)|."""
    if R <= 0:
        raise ValueError("R must be positive")
    t = _tol_for(1.0 / R, tol)
    inner = lambda y: _sup_over_eps(model, y, 1.0 / R, cfg, "abs", t, eps)
    return float(_over_states(model, x, 2.0 * R, inner, cfg, "max"))


def h_local(model, x, R, sector, cfg=BallOptimizerConfig(), tol=DEFAULT_TOL):
    """inf_{|y-x| <= 2R} sup_{|eps| <= 1} Re p(y, eps/(4 kappa R))."""
    if not sector.satisfied:
        raise SectorViolation("sector condition violated; h is undefined")
    if R <= 0:
        raise ValueError("R must be positive")
    scale = 1.0 / (4.0 * sector.kappa * R)
    t = _tol_for(scale, tol)
    inner = lambda y: _sup_over_eps(model, y, scale, cfg, "re", t)
    return float(_over_states(model, x, 2.0 * R, inner, cfg, "min"))


def _envelope_ok(model, y_domain):
    return isinstance(model, StableLikeModel) and y_domain is None


def H_global(model, R, y_domain=None, cfg=BallOptimizerConfig(), tol=DEFAULT_TOL):
    """sup over all states (or over the box y_domain = (lo, hi)) of sup |p(y, eps/R)|."""
    if R <= 0:
        raise ValueError("R must be positive")
    if model.homogeneous:
        return H_local(model, np.zeros(model.dim), R, cfg, tol)
    if _envelope_ok(model, y_domain):
        return max(R ** -model.alpha0, R ** -model.alpha_inf)
    if y_domain is None:
        raise DomainRequired(f"{model.family} model: H(R) needs an explicit y_domain")
    t = _tol_for(1.0 / R, tol)
    inner = lambda y: _sup_over_eps(model, y, 1.0 / R, cfg, "abs", t)
    return float(_over_box(model, y_domain[0], y_domain[1], inner, cfg, "max"))


def h_global(model, R, sector, y_domain=None, cfg=BallOptimizerConfig(), tol=DEFAULT_TOL):
    """inf over all states (or the box y_domain) of sup Re p(y, eps/(4 kappa R))."""
    if not sector.satisfied:
        raise SectorViolation("sector condition violated; h is undefined")
    if R <= 0:
        raise ValueError("R must be positive")
    scale = 1.0 / (4.0 * sector.kappa * R)
    if model.homogeneous:
        return h_local(model, np.zeros(model.dim), R, sector, cfg, tol)
    if _envelope_ok(model, y_domain):
        return min(scale ** model.alpha0, scale ** model.alpha_inf)
    if y_domain is None:
        raise DomainRequired(f"{model.family} model: h(R) needs an explicit y_domain")
    t = _tol_for(scale, tol)
    inner = lambda y: _sup_over_eps(model, y, scale, cfg, "re", t)
    return float(_over_box(model, y_domain[0], y_domain[1], inner, cfg, "min"))


# --- exponents ----------------------------------------------------------------------

def default_R_grid(where, kmax=24):
    k = np.arange(kmax + 1, dtype=np.float64)
    return 2.0 ** k if where == "origin" else 2.0 ** -k


def raw_exponents(values, R):
    """-log F(R) / log R (nan at R = 1)."""
    values = np.asarray(values, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.log(values) / np.log(R)
    return np.where(R == 1.0, np.nan, out)


def anchored_exponents(values, R, window):
    """Local exponents over the last ``window`` grid points, anchored at the first of them."""
    values = np.asarray(values, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if window < 2 or window > R.size:
        raise ValueError(f"window must be between 2 and {R.size}")
    v = values[-window:]
    r = R[-window:]
    return -np.log(v[1:] / v[0]) / np.log(r[1:] / r[0])


def _check_finite(values, R, name):
    values = np.asarray(values, dtype=np.float64)
    bad = ~(np.isfinite(values) & (values > 0))
    if bad.any():
        j = int(np.argmax(bad))
        raise FloatingPointError(f"{name}(R) = {values[j]!r} is not finite and positive at R = {R[j]!r}")


@dataclass
class IndexReport:
    beta0: float = None
    beta0_lower: float = None
    delta0_upper: float = None
    delta0: float = None
    beta_inf: float = None
    beta_inf_lower: float = None
    delta_inf_upper: float = None
    delta_inf: float = None
    x: list = None
    window: int = DEFAULT_WINDOW
    origin: dict = field(default_factory=dict)
    infinity: dict = field(default_factory=dict)
    sector: dict = None
    sector_infinity: dict = None
    domain_restricted: bool = False
    diagnostics: list = field(default_factory=list)

    INDEX_FIELDS = ("beta0", "beta0_lower", "delta0_upper", "delta0",
                    "beta_inf", "beta_inf_lower", "delta_inf_upper", "delta_inf")

    def indices(self):
        return {k: getattr(self, k) for k in self.INDEX_FIELDS}

    def check_order(self):
        """Order relations forced by the lim inf / lim sup definitions."""
        pairs = [("beta0", "beta0_lower"), ("delta0_upper", "delta0"),
                 ("beta_inf_lower", "beta_inf"), ("delta_inf", "delta_inf_upper")]
        for lo, hi in pairs:
            a, b = getattr(self, lo), getattr(self, hi)
            if a is not None and b is not None and a > b + 1e-12:
                return False
        return True

    def to_dict(self):
        d = asdict(self)
        return _jsonable(d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _sector_points_origin(model, y_domain, cfg):
    if model.homogeneous or y_domain is None:
        return np.zeros((1, model.dim))
    return box_points(y_domain[0], y_domain[1], min(cfg.n_y, 32))


def _xi_radii_for(R_grid, pad=8.0):
    R = np.asarray(R_grid, dtype=np.float64)
    return np.geomspace(1.0 / (pad * R.max()), pad / R.min(), 33)


def estimate_indices_origin(model, R_grid=None, y_domain=None, cfg=BallOptimizerConfig(),
                            window=DEFAULT_WINDOW, sector=None, tol=DEFAULT_TOL):
    """beta0, beta0_lower, delta0_upper, delta0 from H(R), h(R) on an increasing grid."""
    R = default_R_grid("origin") if R_grid is None else np.asarray(R_grid, dtype=np.float64)
    if np.any(np.diff(R) <= 0):
        raise ValueError("origin R grid must be increasing")
    rep = IndexReport(window=window)
    rep.domain_restricted = not (model.homogeneous or _envelope_ok(model, y_domain))
    if rep.domain_restricted:
        rep.diagnostics.append("sup/inf over states restricted to y_domain")
    H = np.array([H_global(model, r, y_domain, cfg, tol) for r in R])
    _check_finite(H, R, "H")
    gH = anchored_exponents(H, R, window)
    rep.beta0 = float(gH.min())
    rep.beta0_lower = float(gH.max())
    rep.origin = {"R": R, "H": H, "g_H": gH, "raw_H": raw_exponents(H, R),
                  "y_domain": None if y_domain is None else [list(y_domain[0]), list(y_domain[1])]}
    if sector is None:
        sector = estimate_sector_constant(model, _sector_points_origin(model, y_domain, cfg),
                                          _xi_radii_for(R), cfg, tol)
    rep.sector = sector.to_dict()
    if sector.satisfied:
        h = np.array([h_global(model, r, sector, y_domain, cfg, tol) for r in R])
        _check_finite(h, R, "h")
        gh = anchored_exponents(h, R, window)
        rep.delta0 = float(gh.max())
        rep.delta0_upper = float(gh.min())
        rep.origin.update({"h": h, "g_h": gh, "raw_h": raw_exponents(h, R)})
    else:
        rep.diagnostics.append("sector condition violated: h-based origin indices omitted")
    return rep


def estimate_indices_infinity(model, x, R_grid=None, cfg=BallOptimizerConfig(),
                              window=DEFAULT_WINDOW, sector=None, tol=DEFAULT_TOL):
    """beta_inf, beta_inf_lower, delta_inf_upper, delta_inf at x from a decreasing grid."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    R = default_R_grid("infinity") if R_grid is None else np.asarray(R_grid, dtype=np.float64)
    if np.any(np.diff(R) >= 0):
        raise ValueError("infinity R grid must be decreasing")
    rep = IndexReport(window=window, x=x.tolist())
    H = np.array([H_local(model, x, r, cfg, tol) for r in R])
    _check_finite(H, R, "H")
    gH = anchored_exponents(H, R, window)
    rep.beta_inf = float(gH.max())
    rep.beta_inf_lower = float(gH.min())
    rep.infinity = {"R": R, "H": H, "g_H": gH, "raw_H": raw_exponents(H, R)}
    if sector is None:
        sector = estimate_sector_constant(model, x[None, :], _xi_radii_for(R), cfg, tol)
    rep.sector = sector.to_dict()
    if sector.satisfied:
        h = np.array([h_local(model, x, r, sector, cfg, tol) for r in R])
        _check_finite(h, R, "h")
        gh = anchored_exponents(h, R, window)
        rep.delta_inf_upper = float(gh.max())
        rep.delta_inf = float(gh.min())
        rep.infinity.update({"h": h, "g_h": gh, "raw_h": raw_exponents(h, R)})
    else:
        rep.diagnostics.append("sector condition violated: h-based indices at infinity omitted")
    return rep


def estimate_indices(model, x=None, R_origin=None, R_infinity=None, y_domain=None,
                     cfg=BallOptimizerConfig(), window=DEFAULT_WINDOW, tol=DEFAULT_TOL,
                     which=("origin", "infinity")):
    """All eight indices in one report."""
    x = np.zeros(model.dim) if x is None else np.atleast_1d(np.asarray(x, dtype=np.float64))
    rep = IndexReport(window=window, x=x.tolist())
    if "origin" in which:
        o = estimate_indices_origin(model, R_origin, y_domain, cfg, window, tol=tol)
        for k in ("beta0", "beta0_lower", "delta0_upper", "delta0"):
            setattr(rep, k, getattr(o, k))
        rep.origin = o.origin
        rep.domain_restricted = o.domain_restricted
        rep.diagnostics += o.diagnostics
        rep.sector = o.sector
    if "infinity" in which:
        i = estimate_indices_infinity(model, x, R_infinity, cfg, window, tol=tol)
        for k in ("beta_inf", "beta_inf_lower", "delta_inf_upper", "delta_inf"):
            setattr(rep, k, getattr(i, k))
        rep.infinity = i.infinity
        rep.diagnostics += i.diagnostics
        rep.sector_infinity = i.sector
    return rep


# --- lambda-scan validation of the exponent identities ----------------------------------

def lambda_scan_index(F, R, lambdas, mode, sink=10.0, tail=1.0 / 3.0):
    """sup{lambda : lim sup (mode='limsup') or lim inf (mode='liminf') of R^lambda F(R) is 0}.

    Decided on a finite increasing grid: the limit counts as 0 when
    lambda log R + log F(R) stays below -sink on the last ``tail`` fraction
    of the grid (limsup) or comes below -sink there at least once per
    tenth of that tail (liminf).
    """
    logR = np.log(np.asarray(R, dtype=np.float64))
    logF = np.log(np.asarray(F, dtype=np.float64))
    start = int(len(logR) * (1.0 - tail))
    best = -np.inf
    for lam in np.sort(np.asarray(lambdas, dtype=np.float64)):
        s = lam * logR[start:] + logF[start:]
        if mode == "limsup":
            zero = bool(np.all(s < -sink))
        elif mode == "liminf":
            chunks = np.array_split(s, 10)
            zero = all(np.min(c) < -sink for c in chunks)
        else:
            raise ValueError("mode must be 'limsup' or 'liminf'")
        if zero:
            best = lam
    return best


def exponent_extremes(F, R, tail=1.0 / 3.0):
    """lim inf and lim sup of -log F(R) / log R over the tail of the grid."""
    g = raw_exponents(F, R)
    start = int(len(g) * (1.0 - tail))
    return float(np.nanmin(g[start:])), float(np.nanmax(g[start:]))

"""Deterministic point sets for sup/inf searches over balls and boxes."""

from dataclasses import dataclass
import itertools
import math

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class BallOptimizerConfig:
    """Grid sizes for the nested sup/inf searches.

    ``n_directions`` x ``n_radial`` points discretise the unit ball of
    frequencies, ``n_y`` points the ball of states; each refinement pass
    re-searches a local grid around the incumbent with spacing divided by
    ``shrink``.
    """

    n_directions: int = 64
    n_radial: int = 8
    n_y: int = 128
    refine_passes: int = 2
    shrink: float = 4.0

    def __post_init__(self):
        for name in ("n_directions", "n_radial", "n_y"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        if self.refine_passes < 0:
            raise ValueError("refine_passes must be >= 0")
        if self.shrink <= 1:
            raise ValueError("shrink must exceed 1")


def _halton(n, d, skip=1):
    pts = qmc.Halton(d, scramble=False).random(n + skip)
    return pts[skip:]


def sphere_directions(d, n):
    """n deterministic unit vectors in R^d (both signs for d = 1)."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    if d == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        phi = np.pi * (3.0 - math.sqrt(5.0)) * i
        r = np.sqrt(1.0 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    pts = 2.0 * _halton(n, d) - 1.0
    pts = np.vstack([pts, np.eye(d), -np.eye(d)])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def epsilon_grid(d, cfg):
    """Points of the closed unit ball (origin excluded) and their typical spacing."""
    if d == 1:
        n = cfg.n_directions * cfg.n_radial // 2
        lev = np.arange(1, n + 1) / n
        return np.concatenate([lev, -lev])[:, None], 1.0 / n
    dirs = sphere_directions(d, cfg.n_directions)
    lev = np.arange(1, cfg.n_radial + 1) / cfg.n_radial
    pts = (lev[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    return pts, 1.0 / cfg.n_radial


def ball_points(d, n):
    """About n deterministic points in the closed unit ball, centre first."""
    if d == 1:
        pts = np.linspace(-1.0, 1.0, n)[:, None]
    elif d == 2:
        i = np.arange(1, n)
        r = np.sqrt(i / (n - 1))
        th = i * np.pi * (3.0 - math.sqrt(5.0))
        pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
    else:
        m = int(n * 2 ** d / (math.pi ** (d / 2) / math.gamma(d / 2 + 1))) + 1
        pts = 2.0 * _halton(m, d) - 1.0
        pts = pts[np.linalg.norm(pts, axis=1) <= 1.0][: n - 1]
    return np.vstack([np.zeros((1, d)), pts])


def box_points(lo, hi, n):
    """Product grid with about n points over the box [lo, hi]; flat axes get one node."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    live = hi > lo
    k = max(int(live.sum()), 1)
    per = max(int(math.ceil(n ** (1.0 / k))), 2)
    axes = [np.linspace(a, b, per) if b > a else np.array([a]) for a, b in zip(lo, hi)]
    return np.array(list(itertools.product(*axes)), dtype=np.float64)


def local_offsets(d):
    """Neighbourhood stencil used by the refinement passes."""
    if d <= 3:
        pts = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=d)))
        return pts[np.any(pts != 0, axis=1)]
    return np.vstack([np.eye(d), -np.eye(d)])


def project_ball(pts, centre, radius):
    off = pts - centre
    nrm = np.linalg.norm(off, axis=1, keepdims=True)
    fac = np.where(nrm > radius, radius / np.maximum(nrm, 1e-300), 1.0)
    return centre + off * fac


def project_box(pts, lo, hi):
    return np.clip(pts, lo, hi)


def optimize_on_grid(f, points, spacing, project, cfg, sense="max"):
    """Best value of f over ``points`` followed by local refinement passes.

    f maps an (m, d) array to m values; ties resolve to the first index so
    the result does not depend on evaluation order.
    """
    sign = 1.0 if sense == "max" else -1.0
    vals = sign * np.asarray(f(points), dtype=np.float64)
    if np.any(np.isnan(vals)):
        raise FloatingPointError("objective returned NaN")
    j = int(np.argmax(vals))
    best, inc = vals[j], points[j]
    stencil = local_offsets(points.shape[1])
    step = spacing
    for _ in range(cfg.refine_passes):
        step = step / cfg.shrink
        cand = project(inc[None, :] + step * stencil)
        v = sign * np.asarray(f(cand), dtype=np.float64)
        k = int(np.argmax(v))
        if v[k] > best:
            best, inc = v[k], cand[k]
    return sign * best, inc

"""Path simulation: Levy increments, Euler scheme for dX = Phi(X-) dZ, COGARCH,
the deterministic figure-eight example, and running maxima.

Paths are generated in chunks; every variate is keyed by (seed, stream,
path index, counter), so results do not depend on chunking or threads.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _backend
from .kernels import UnsupportedError
from .rng import STREAM_GAUSS, STREAM_JUMPS, RngSpec
from .symbol import (
    CogarchModel,
    CutoffFunction,
    DeterministicFigureEightModel,
    LevyModel,
    SdeComposedModel,
    SumIndependentModel,
    on_lower_circle,
    on_upper_circle,
)

DEFAULT_CHUNK = 4096
MAX_CHUNK_CELLS = 2 ** 23     # paths * steps held in memory per chunk


@dataclass(frozen=True)
class PathGrid:
    T: float
    n_steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def dt(self):
        return self.T / self.n_steps

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt


@dataclass
class PathEnsemble:
    """Simulated paths, stored at the recorded grid steps.

    ``running_max[i, j]`` is the maximum of |X_s - x0| over all grid times
    s <= times[j] (every step, not only recorded ones).
    """

    x0: np.ndarray
    grid: PathGrid
    record_steps: np.ndarray
    states: np.ndarray
    running_max: np.ndarray
    exploded: np.ndarray
    seed: int
    extra: dict = field(default_factory=dict)

    @property
    def times(self):
        return self.record_steps * self.grid.dt

    @property
    def M(self):
        return self.running_max.shape[0]

    @property
    def n_exploded(self):
        return int(self.exploded.sum())

    def step_index(self, t):
        if t < 0 or t > self.grid.T * (1 + 1e-12):
            raise ValueError(f"t = {t} outside [0, {self.grid.T}]")
        times = self.times
        j = int(np.argmin(np.abs(times - t)))
        if abs(times[j] - t) > 1e-9 * max(self.grid.T, 1.0):
            raise ValueError(f"t = {t} is not a recorded time")
        return j


def max_process(ensemble, t):
    """Per-path sup_{s <= t} |X_s - x0| on the grid (NaN for exploded paths)."""
    j = ensemble.step_index(t)
    out = ensemble.running_max[:, j].copy()
    out[ensemble.exploded] = np.nan
    return out


# --- Levy increments ------------------------------------------------------------------

def _sqrt_psd(Q):
    w, V = np.linalg.eigh(Q)
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.T


def compensator_drift(kernel, cutoff=CutoffFunction()):
    """int y chi(y) N(dy): subtracted from summed jumps to match the triplet drift."""
    if kernel.symmetric:
        return np.zeros(kernel.dim)
    if kernel.dim != 1:
        raise UnsupportedError("compensated sampling of asymmetric multivariate jumps")
    return np.array([kernel.first_moment(0.0, cutoff.radius)])


def levy_increments(triplet, dt, rng, path0, n_paths, step0, n_steps, cutoff=CutoffFunction(),
                    kern=None, return_jumps=False):
    """Increments of the Levy process with the given triplet over steps of length dt.

    Returns an array (n_paths, n_steps, n); with ``return_jumps`` also the raw
    (uncompensated) jump sums per step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    kern = kern or _backend.kernels
    n = triplet.dim
    inc = np.broadcast_to(triplet.ell * dt, (n_paths, n_steps, n)).copy()
    if np.any(triplet.Q):
        g = kern.normal_block(rng.seed, STREAM_GAUSS, path0, n_paths, step0, n_steps, n,
                              rng.threads)
        inc += math.sqrt(dt) * (g @ _sqrt_psd(triplet.Q).T)
    jumps = None
    if triplet.kernel.kind != "none":
        jumps = triplet.kernel.sample(kern, rng.seed, STREAM_JUMPS, path0, n_paths, step0,
                                      n_steps, dt, rng.threads)
        inc += jumps - dt * compensator_drift(triplet.kernel, cutoff)
    if return_jumps:
        if jumps is None:
            jumps = np.zeros((n_paths, n_steps, n))
        return inc, jumps
    return inc


def sample_levy_increment(triplet, dt, rng, index=0, cutoff=CutoffFunction()):
    """One increment over dt (path ``index`` of the stream)."""
    return levy_increments(triplet, dt, rng, index, 1, 0, 1, cutoff)[0, 0]


def sample_levy_increments(triplet, dt, rng, n, cutoff=CutoffFunction()):
    """n independent increments over dt, shape (n, dim)."""
    return levy_increments(triplet, dt, rng, 0, n, 0, 1, cutoff)[:, 0, :]


# --- ensemble assembly ---------------------------------------------------------------------

def _record_steps(grid, record_steps, record_times):
    if record_times is not None:
        rs = np.rint(np.asarray(record_times, dtype=np.float64) / grid.dt).astype(np.int64)
        if np.any(np.abs(rs * grid.dt - np.asarray(record_times)) > 1e-9 * max(grid.T, 1)):
            raise ValueError("record_times must lie on the grid")
        rs = np.union1d([0], rs)
    elif record_steps is None:
        rs = np.arange(grid.n_steps + 1)
    else:
        rs = np.union1d([0], np.asarray(record_steps, dtype=np.int64))
    if rs.max() > grid.n_steps or rs.min() < 0:
        raise ValueError("record steps outside the grid")
    return rs


def _chunk_size(chunk, n_steps):
    return max(1, min(chunk, MAX_CHUNK_CELLS // (n_steps + 1)))


def _assemble(chunk_fn, x0, grid, rng, M, record_steps, record_times, chunk, keep_states=True,
              extra_names=()):
    rs = _record_steps(grid, record_steps, record_times)
    d = x0.size
    states = np.empty((M, rs.size, d)) if keep_states else None
    runmax = np.empty((M, rs.size))
    exploded = np.zeros(M, dtype=bool)
    extras = {k: np.empty((M, rs.size)) for k in extra_names}
    step = _chunk_size(chunk, grid.n_steps)
    for p0 in range(0, M, step):
        m = min(step, M - p0)
        pos, rmax, extra = chunk_fn(p0, m)
        bad = ~np.all(np.isfinite(pos.reshape(m, -1)), axis=1)
        exploded[p0:p0 + m] = bad
        if keep_states:
            states[p0:p0 + m] = pos[:, rs, :]
        runmax[p0:p0 + m] = rmax[:, rs]
        for k in extra_names:
            extras[k][p0:p0 + m] = extra[k][:, rs]
    return PathEnsemble(x0, grid, rs, states, runmax, exploded, rng.seed, extras)


def _running_max(pos, x0):
    with np.errstate(over="ignore", invalid="ignore"):
        dist = np.sqrt(np.sum((pos - x0) ** 2, axis=2))
    dist = np.where(np.isfinite(dist), dist, np.inf)
    return np.maximum.accumulate(dist, axis=1)


def simulate_levy(triplet, x0, grid, rng=RngSpec(), M=1000, record_steps=None, record_times=None,
                  chunk=DEFAULT_CHUNK, cutoff=CutoffFunction(), keep_states=True):
    """X = x0 + Z for a Levy process Z (identity coefficient fast path)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    kern = _backend.kernels

    def fn(p0, m):
        inc = levy_increments(triplet, grid.dt, rng, p0, m, 0, grid.n_steps, cutoff, kern)
        pos, rmax = kern.cumulative_running_max(x0, inc, rng.threads)
        return pos, rmax, {}

    return _assemble(fn, x0, grid, rng, M, record_steps, record_times, chunk, keep_states)


def simulate_sde(Phi, driver, x0, grid, rng=RngSpec(), M=1000, record_steps=None,
                 record_times=None, chunk=DEFAULT_CHUNK, driver_cutoff=CutoffFunction(),
                 keep_states=True, vectorized=True):
    """Euler scheme X_{k+1} = X_k + Phi(X_k) dZ_k.

    ``Phi`` maps states (m, d) to matrices (m, d, n) when ``vectorized``,
    otherwise a single state (d,) to (d, n).  ``Phi=None`` means identity.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    if Phi is None:
        return simulate_levy(driver, x0, grid, rng, M, record_steps, record_times, chunk,
                             driver_cutoff, keep_states)
    d = x0.size
    n = driver.dim
    kern = _backend.kernels

    def phi_batch(X):
        if vectorized:
            P = np.asarray(Phi(X), dtype=np.float64)
        else:
            P = np.stack([np.asarray(Phi(x), dtype=np.float64) for x in X])
        return P.reshape(X.shape[0], d, n)

    def fn(p0, m):
        inc = levy_increments(driver, grid.dt, rng, p0, m, 0, grid.n_steps, driver_cutoff, kern)
        pos = np.empty((m, grid.n_steps + 1, d))
        X = np.broadcast_to(x0, (m, d)).copy()
        pos[:, 0] = X
        with np.errstate(all="ignore"):
            for k in range(grid.n_steps):
                X = X + np.einsum("mij,mj->mi", phi_batch(X), inc[:, k, :])
                X[~np.all(np.isfinite(X), axis=1)] = np.nan
                pos[:, k + 1] = X
        return pos, _running_max(pos, x0), {}

    return _assemble(fn, x0, grid, rng, M, record_steps, record_times, chunk, keep_states)


def simulate_cogarch(model, start, grid, rng=RngSpec(), M=1000, record_steps=None,
                     record_times=None, chunk=DEFAULT_CHUNK, keep_states=True):
    """Euler recursion for (G, V = log S^2) started at (g, S0).

    S^2 is driven by the squared jump part of each driver increment.
    """
    g0, s0 = float(start[0]), float(start[1])
    if not s0 > 0:
        raise ValueError("S0 must be positive")
    log_delta = math.log(model.delta)
    if grid.dt >= 1.0 / abs(log_delta):
        raise ValueError(f"step dt = {grid.dt} must be below 1/|log delta| = {1 / abs(log_delta)}")
    x0 = np.array([g0, math.log(s0 * s0)])
    kern = _backend.kernels

    def fn(p0, m):
        dz, jumps = levy_increments(model.driver, grid.dt, rng, p0, m, 0, grid.n_steps,
                                    model.driver_cutoff, kern, return_jumps=True)
        G, S2 = kern.cogarch_recursion(g0, s0 * s0, dz[:, :, 0], jumps[:, :, 0] ** 2, grid.dt,
                                       model.beta, log_delta, model.k)
        with np.errstate(all="ignore"):
            V = np.where(S2 > 0, np.log(np.where(S2 > 0, S2, 1.0)), np.nan)
        pos = np.stack([G, V], axis=2)
        return pos, _running_max(pos, x0), {"S2": S2}

    return _assemble(fn, x0, grid, rng, M, record_steps, record_times, chunk, keep_states,
                     extra_names=("S2",))


# --- deterministic figure-eight example ----------------------------------------------------

FOUR_PI = 4.0 * math.pi
TWO_PI = 2.0 * math.pi


def figure_eight_curve(s):
    """The 4 pi-periodic curve: upper circle on [0, 2pi), lower circle on [2pi, 4pi)."""
    s = np.mod(np.asarray(s, dtype=np.float64), FOUR_PI)
    upper = s < TWO_PI
    return np.stack([np.sin(s), np.where(upper, 1.0 - np.cos(s), np.cos(s) - 1.0)], axis=-1)


def figure_eight_phase(x0):
    """Inverse of the curve restricted to [0, 4pi); None off the circles."""
    x0 = np.asarray(x0, dtype=np.float64)
    if on_upper_circle(x0):
        return math.atan2(x0[0], 1.0 - x0[1]) % TWO_PI
    if on_lower_circle(x0):
        return TWO_PI + (math.atan2(x0[0], x0[1] + 1.0) % TWO_PI)
    return None


def deterministic_example(x0, t):
    """Position at time(s) t of the figure-eight process started at x0."""
    x0 = np.asarray(x0, dtype=np.float64)
    s0 = figure_eight_phase(x0)
    t = np.asarray(t, dtype=np.float64)
    if s0 is None:
        return np.broadcast_to(x0, t.shape + (2,)).copy()
    return figure_eight_curve(s0 + t)


def simulate_deterministic(x0, grid, M=1, record_steps=None, record_times=None):
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    path = deterministic_example(x0, grid.times)

    def fn(p0, m):
        pos = np.broadcast_to(path, (m,) + path.shape).copy()
        return pos, _running_max(pos, x0), {}

    return _assemble(fn, x0, grid, RngSpec(0), M, record_steps, record_times, DEFAULT_CHUNK)


def fine_continuity_gap(f, x0, times):
    """max |f(X_t) - f(x0)| over small t for the figure-eight process (spot check)."""
    fx0 = np.asarray(f(x0))
    return max(float(np.max(np.abs(np.asarray(f(deterministic_example(x0, t))) - fx0)))
               for t in times)


# --- dispatch ------------------------------------------------------------------------------

def simulate_model(model, x0, grid, rng=RngSpec(), M=1000, record_steps=None, record_times=None,
                   chunk=DEFAULT_CHUNK, keep_states=True):
    """Simulate any simulable model family started at x0."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    if x0.size != model.dim:
        raise ValueError(f"start point must have dimension {model.dim}")
    if isinstance(model, LevyModel):
        return simulate_levy(model.triplet(), x0, grid, rng, M, record_steps, record_times,
                             chunk, model.cutoff, keep_states)
    if isinstance(model, SdeComposedModel):
        phi = getattr(model, "Phi_batch", None)
        return simulate_sde(phi if phi is not None else model.phi, model.driver, x0, grid, rng,
                            M, record_steps, record_times, chunk, model.driver_cutoff,
                            keep_states, vectorized=phi is not None)
    if isinstance(model, CogarchModel):
        return simulate_cogarch(model, (x0[0], math.exp(x0[1] / 2.0)), grid, rng, M,
                                record_steps, record_times, chunk, keep_states)
    if isinstance(model, DeterministicFigureEightModel):
        return simulate_deterministic(x0, grid, M, record_steps, record_times)
    if isinstance(model, SumIndependentModel):
        return _simulate_sum(model, x0, grid, rng, M, record_steps, record_times, chunk,
                             keep_states)
    raise UnsupportedError(f"simulation of {model.family!r} models is not supported")


def _simulate_sum(model, x0, grid, rng, M, record_steps, record_times, chunk, keep_states):
    parts = []
    for j, (comp, sl) in enumerate(zip(model.components, model.slices())):
        parts.append(simulate_model(comp, x0[sl], grid, rng.child("component", j), M,
                                    None, None, chunk, True))
    pos_all = np.concatenate([p.states for p in parts], axis=2)
    rs = _record_steps(grid, record_steps, record_times)
    rmax = _running_max(pos_all, x0)
    exploded = np.any(np.stack([p.exploded for p in parts]), axis=0)
    states = pos_all[:, rs, :] if keep_states else None
    return PathEnsemble(x0, grid, rs, states, rmax[:, rs], exploded, rng.seed, {})

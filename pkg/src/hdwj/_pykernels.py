"""Pure-numpy implementation of the hot kernels.

Every function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and semantics.  Random variates are stateless functions of
``(seed, stream, path, counter)`` so any partition of the path range over
threads produces the same numbers.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
STREAM_MULT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0 ** -53
_TWO_PI = 2.0 * np.pi

GAMMA_ATTEMPTS = 16
GAMMA_SLOTS = 1 + 3 * GAMMA_ATTEMPTS
POISSON_MAX = 100000

BACKEND = "python"


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def path_keys(seed, stream, paths):
    """Per-path substream keys derived from (seed, stream, path index)."""
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(seed) + np.uint64(stream) * STREAM_MULT)
        p = np.asarray(paths, dtype=np.uint64)
        return _mix64(base ^ ((p + np.uint64(1)) * GOLDEN))


def _uniform_from_key(keys, counters):
    with np.errstate(over="ignore"):
        z = _mix64(keys + (counters + np.uint64(1)) * GOLDEN)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def uniform_at(seed, stream, paths, counters):
    """Uniforms on (0, 1) at arbitrary (path, counter) pairs (broadcast)."""
    paths = np.asarray(paths, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    paths, counters = np.broadcast_arrays(paths, counters)
    keys = path_keys(seed, stream, paths)
    return _uniform_from_key(keys, counters)


def _block_uniforms(seed, stream, path0, n_paths, step0, n_steps, n_slots, slots):
    keys = path_keys(seed, stream, np.arange(path0, path0 + n_paths, dtype=np.uint64))
    steps = np.arange(step0, step0 + n_steps, dtype=np.uint64)
    out = []
    for s in slots:
        ctr = steps * np.uint64(n_slots) + np.uint64(s)
        out.append(_uniform_from_key(keys[:, None], ctr[None, :]))
    return out


def _threaded(fn, n_paths, threads, *args):
    # fn(path0, n) -> array with paths on axis 0
    if threads <= 1 or n_paths < 2 * threads:
        return fn(0, n_paths)
    bounds = np.linspace(0, n_paths, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda ab: fn(ab[0], ab[1] - ab[0]), zip(bounds[:-1], bounds[1:])))
    return np.concatenate(parts, axis=0)


def normal_block(seed, stream, path0, n_paths, step0, n_steps, dim, threads=1):
    """Standard normals of shape (n_paths, n_steps, dim) by Box-Muller."""
    n_pairs = (dim + 1) // 2
    n_slots = 2 * n_pairs

    def work(p0, n):
        out = np.empty((n, n_steps, n_slots))
        for j in range(n_pairs):
            u1, u2 = _block_uniforms(seed, stream, path0 + p0, n, step0, n_steps,
                                     n_slots, (2 * j, 2 * j + 1))
            rad = np.sqrt(-2.0 * np.log(u1))
            ang = _TWO_PI * u2
            out[:, :, 2 * j] = rad * np.cos(ang)
            out[:, :, 2 * j + 1] = rad * np.sin(ang)
        return out[:, :, :dim]

    return _threaded(work, n_paths, threads)


def _cms(u1, u2, alpha):
    v = np.pi * (u1 - 0.5)
    w = -np.log(u2)
    if alpha == 1.0:
        return np.tan(v)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - alpha * v) / w) ** ((1.0 - alpha) / alpha))


def stable_block(seed, stream, path0, n_paths, step0, n_steps, alpha, threads=1):
    """Symmetric alpha-stable variates with E exp(i xi X) = exp(-|xi|^alpha).

    Chambers-Mallows-Stuck transform of two uniforms per variate.
    """
    def work(p0, n):
        u1, u2 = _block_uniforms(seed, stream, path0 + p0, n, step0, n_steps, 2, (0, 1))
        return _cms(u1, u2, alpha)

    return _threaded(work, n_paths, threads)


def _kanter(u1, u2, a):
    th = np.pi * u1
    e = -np.log(u2)
    amp = (np.sin(a * th) ** (a / (1.0 - a)) * np.sin((1.0 - a) * th)
           / np.sin(th) ** (1.0 / (1.0 - a)))
    return (amp / e) ** ((1.0 - a) / a)


def positive_stable_block(seed, stream, path0, n_paths, step0, n_steps, a, threads=1):
    """Positive a-stable variates (0 < a < 1) with E exp(-s S) = exp(-s^a)."""
    def work(p0, n):
        u1, u2 = _block_uniforms(seed, stream, path0 + p0, n, step0, n_steps, 2, (0, 1))
        return _kanter(u1, u2, a)

    return _threaded(work, n_paths, threads)


def gamma_block(seed, stream, path0, n_paths, step0, n_steps, shape, threads=1):
    """Gamma(shape, 1) variates by Marsaglia-Tsang with the shape < 1 boost."""
    boost = shape < 1.0
    dd = (shape + 1.0 if boost else shape) - 1.0 / 3.0
    cc = 1.0 / np.sqrt(9.0 * dd)

    def work(p0, n):
        keys = path_keys(seed, stream, np.arange(path0 + p0, path0 + p0 + n, dtype=np.uint64))
        base = np.arange(step0, step0 + n_steps, dtype=np.uint64) * np.uint64(GAMMA_SLOTS)
        keys = keys[:, None]
        base = base[None, :]
        out = np.full((n, n_steps), np.nan)
        pending = np.ones((n, n_steps), dtype=bool)
        for att in range(GAMMA_ATTEMPTS):
            s = np.uint64(1 + 3 * att)
            u1 = _uniform_from_key(keys, base + s)
            u2 = _uniform_from_key(keys, base + s + np.uint64(1))
            u3 = _uniform_from_key(keys, base + s + np.uint64(2))
            x = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
            t = 1.0 + cc * x
            v = t * t * t
            with np.errstate(invalid="ignore", divide="ignore"):
                ok = (v > 0.0) & (np.log(u3) < 0.5 * x * x + dd - dd * v + dd * np.log(v))
            take = pending & ok
            out[take] = (dd * v)[take]
            pending &= ~ok
            if not pending.any():
                break
        # exhausting all attempts has probability far below 1e-20
        out[pending] = dd
        if boost:
            u0 = _uniform_from_key(keys, base)
            out *= u0 ** (1.0 / shape)
        return out

    return _threaded(work, n_paths, threads)


def poisson_block(seed, stream, path0, n_paths, step0, n_steps, lam, threads=1):
    """Poisson(lam) counts by sequential inversion of one uniform."""
    def work(p0, n):
        (u,) = _block_uniforms(seed, stream, path0 + p0, n, step0, n_steps, 1, (0,))
        k = np.zeros(u.shape, dtype=np.int64)
        p = np.full(u.shape, np.exp(-lam))
        cdf = p.copy()
        active = u > cdf
        kk = 0
        while active.any() and kk < POISSON_MAX:
            kk += 1
            p = p * (lam / kk)
            k[active] = kk
            cdf = cdf + p
            active &= u > cdf
        return k

    return _threaded(work, n_paths, threads)


def cumulative_running_max(x0, increments, threads=1):
    """Partial sums of increments started at x0 and the running max of |X - x0|.

    increments has shape (n_paths, n_steps, d); returns positions of shape
    (n_paths, n_steps + 1, d) and running maxima of shape (n_paths, n_steps + 1).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    inc = np.asarray(increments, dtype=np.float64)
    m, n, d = inc.shape

    def work(p0, k):
        pos = np.empty((k, n + 1, d))
        pos[:, 0, :] = 0.0
        np.cumsum(inc[p0:p0 + k], axis=1, out=pos[:, 1:, :])
        dist = np.sqrt(np.sum(pos * pos, axis=2))
        runmax = np.maximum.accumulate(dist, axis=1)
        pos += x0
        return pos, runmax

    if threads <= 1 or m < 2 * threads:
        return work(0, m)
    bounds = np.linspace(0, m, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda ab: work(ab[0], ab[1] - ab[0]), zip(bounds[:-1], bounds[1:])))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def cogarch_recursion(g0, s2_0, dz, dj2, dt, beta, log_delta, lam_over_delta):
    """Euler recursion for (G, S^2) driven by increments dz and squared jumps dj2.

    Returns arrays G, S2 of shape (n_paths, n_steps + 1).
    """
    dz = np.asarray(dz, dtype=np.float64)
    dj2 = np.asarray(dj2, dtype=np.float64)
    m, n = dz.shape
    g = np.empty((m, n + 1))
    s2 = np.empty((m, n + 1))
    g[:, 0] = g0
    s2[:, 0] = s2_0
    for k in range(n):
        cur = s2[:, k]
        g[:, k + 1] = g[:, k] + np.sqrt(cur) * dz[:, k]
        s2[:, k + 1] = cur + (beta + cur * log_delta) * dt + cur * lam_over_delta * dj2[:, k]
    return g, s2

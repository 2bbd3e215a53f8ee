# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, log, cos, sin, tan, exp, pow, M_PI
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t STREAM_MULT = 0xD1B54A32D192ED03ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef int GAMMA_ATTEMPTS = 16
cdef int GAMMA_SLOTS = 1 + 3 * 16
cdef int64_t POISSON_MAX = 100000


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t path_key(uint64_t seed, uint64_t stream, uint64_t path) nogil:
    cdef uint64_t base = mix64(seed + stream * STREAM_MULT)
    return mix64(base ^ ((path + 1) * GOLDEN))


cdef inline double unif(uint64_t key, uint64_t ctr) nogil:
    cdef uint64_t z = mix64(key + (ctr + 1) * GOLDEN)
    return (<double>(z >> 11) + 0.5) * TWO_M53


def path_keys(seed, stream, paths):
    p = np.asarray(paths, dtype=np.uint64)
    out = np.empty(p.shape, dtype=np.uint64)
    cdef uint64_t[::1] pf = p.ravel()
    cdef uint64_t[::1] of = out.ravel()
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>stream
    cdef Py_ssize_t i
    for i in range(pf.shape[0]):
        of[i] = path_key(s, st, pf[i])
    return out


def uniform_at(seed, stream, paths, counters):
    paths = np.asarray(paths, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    paths, counters = np.broadcast_arrays(paths, counters)
    pa = np.ascontiguousarray(paths).ravel()
    ca = np.ascontiguousarray(counters).ravel()
    out = np.empty(pa.shape[0], dtype=np.float64)
    cdef uint64_t[::1] pv = pa
    cdef uint64_t[::1] cv = ca
    cdef double[::1] ov = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>stream
    cdef Py_ssize_t i
    for i in range(pv.shape[0]):
        ov[i] = unif(path_key(s, st, pv[i]), cv[i])
    return out.reshape(paths.shape)


def normal_block(seed, stream, Py_ssize_t path0, Py_ssize_t n_paths, Py_ssize_t step0,
                 Py_ssize_t n_steps, int dim, int threads=1):
    cdef int n_pairs = (dim + 1) // 2
    cdef int n_slots = 2 * n_pairs
    out = np.empty((n_paths, n_steps, dim), dtype=np.float64)
    cdef double[:, :, ::1] ov = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>stream
    cdef Py_ssize_t i, k
    cdef int j
    cdef uint64_t key, base
    cdef double rad, ang
    for i in prange(n_paths, nogil=True, num_threads=max(threads, 1), schedule="static"):
        key = path_key(s, st, <uint64_t>(path0 + i))
        for k in range(n_steps):
            base = <uint64_t>(step0 + k) * <uint64_t>n_slots
            for j in range(n_pairs):
                rad = sqrt(-2.0 * log(unif(key, base + 2 * j)))
                ang = 2.0 * M_PI * unif(key, base + 2 * j + 1)
                ov[i, k, 2 * j] = rad * cos(ang)
                if 2 * j + 1 < dim:
                    ov[i, k, 2 * j + 1] = rad * sin(ang)
    return out


cdef inline double cms(double u1, double u2, double alpha) nogil:
    cdef double v = M_PI * (u1 - 0.5)
    cdef double w = -log(u2)
    if alpha == 1.0:
        return tan(v)
    return (sin(alpha * v) / pow(cos(v), 1.0 / alpha)
            * pow(cos(v - alpha * v) / w, (1.0 - alpha) / alpha))


def stable_block(seed, stream, Py_ssize_t path0, Py_ssize_t n_paths, Py_ssize_t step0,
                 Py_ssize_t n_steps, double alpha, int threads=1):
    out = np.empty((n_paths, n_steps), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>stream
    cdef Py_ssize_t i, k
    cdef uint64_t key, base
    for i in prange(n_paths, nogil=True, num_threads=max(threads, 1), schedule="static"):
        key = path_key(s, st, <uint64_t>(path0 + i))
        for k in range(n_steps):
            base = <uint64_t>(step0 + k) * 2
            ov[i, k] = cms(unif(key, base), unif(key, base + 1), alpha)
    return out


cdef inline double kanter(double u1, double u2, double a) nogil:
    cdef double th = M_PI * u1
    cdef double e = -log(u2)
    cdef double amp = (pow(sin(a * th), a / (1.0 - a)) * sin((1.0 - a) * th)
                       / pow(sin(th), 1.0 / (1.0 - a)))
    return pow(amp / e, (1.0 - a) / a)


def positive_stable_block(seed, stream, Py_ssize_t path0, Py_ssize_t n_paths,
                          Py_ssize_t step0, Py_ssize_t n_steps, double a, int threads=1):
    out = np.empty((n_paths, n_steps), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>stream
    cdef Py_ssize_t i, k
    cdef uint64_t key, base
    for i in prange(n_paths, nogil=True, num_threads=max(threads, 1), schedule="static"):
        key = path_key(s, st, <uint64_t>(path0 + i))
        for k in range(n_steps):
            base = <uint64_t>(step0 + k) * 2
            ov[i, k] = kanter(unif(key, base), unif(key, base + 1), a)
    return out


def gamma_block(seed, stream, Py_ssize_t path0, Py_ssize_t n_paths, Py_ssize_t step0,
                Py_ssize_t n_steps, double shape, int threads=1):
    cdef bint boost = shape < 1.0
    cdef double dd = (shape + 1.0 if boost else shape) - 1.0 / 3.0
    cdef double cc = 1.0 / sqrt(9.0 * dd)
    out = np.empty((n_paths, n_steps), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>stream
    cdef Py_ssize_t i, k
    cdef int att
    cdef uint64_t key, base, slot
    cdef double x, t, v, u3, res
    cdef bint done
    for i in prange(n_paths, nogil=True, num_threads=max(threads, 1), schedule="static"):
        key = path_key(s, st, <uint64_t>(path0 + i))
        for k in range(n_steps):
            base = <uint64_t>(step0 + k) * <uint64_t>GAMMA_SLOTS
            res = dd
            done = False
            for att in range(GAMMA_ATTEMPTS):
                if not done:
                    slot = base + 1 + 3 * att
                    x = sqrt(-2.0 * log(unif(key, slot))) * cos(2.0 * M_PI * unif(key, slot + 1))
                    t = 1.0 + cc * x
                    v = t * t * t
                    if v > 0.0:
                        u3 = unif(key, slot + 2)
                        if log(u3) < 0.5 * x * x + dd - dd * v + dd * log(v):
                            res = dd * v
                            done = True
            if boost:
                res = res * pow(unif(key, base), 1.0 / shape)
            ov[i, k] = res
    return out


def poisson_block(seed, stream, Py_ssize_t path0, Py_ssize_t n_paths, Py_ssize_t step0,
                  Py_ssize_t n_steps, double lam, int threads=1):
    out = np.empty((n_paths, n_steps), dtype=np.int64)
    cdef int64_t[:, ::1] ov = out
    cdef uint64_t s = <uint64_t>seed, st = <uint64_t>stream
    cdef Py_ssize_t i, k
    cdef uint64_t key
    cdef double u, p, cdf
    cdef int64_t kk
    cdef double p0 = exp(-lam)
    for i in prange(n_paths, nogil=True, num_threads=max(threads, 1), schedule="static"):
        key = path_key(s, st, <uint64_t>(path0 + i))
        for k in range(n_steps):
            u = unif(key, <uint64_t>(step0 + k))
            p = p0
            cdf = p
            kk = 0
            while u > cdf and kk < POISSON_MAX:
                kk = kk + 1
                p = p * (lam / kk)
                cdf = cdf + p
            ov[i, k] = kk
    return out


def cumulative_running_max(x0, increments, int threads=1):
    x0a = np.ascontiguousarray(x0, dtype=np.float64)
    inc = np.ascontiguousarray(increments, dtype=np.float64)
    cdef Py_ssize_t m = inc.shape[0], n = inc.shape[1], d = inc.shape[2]
    pos = np.empty((m, n + 1, d), dtype=np.float64)
    runmax = np.empty((m, n + 1), dtype=np.float64)
    cdef double[:, :, ::1] iv = inc
    cdef double[:, :, ::1] pv = pos
    cdef double[:, ::1] rv = runmax
    cdef double[::1] xv = x0a
    cdef Py_ssize_t i, k, j
    cdef double acc, best, cur
    for i in prange(m, nogil=True, num_threads=max(threads, 1), schedule="static"):
        for j in range(d):
            pv[i, 0, j] = 0.0
        rv[i, 0] = 0.0
        best = 0.0
        for k in range(n):
            acc = 0.0
            for j in range(d):
                cur = pv[i, k, j] + iv[i, k, j]
                pv[i, k + 1, j] = cur
                acc = acc + cur * cur
            cur = sqrt(acc)
            if cur > best or cur != cur:
                best = cur
            rv[i, k + 1] = best
        for k in range(n + 1):
            for j in range(d):
                pv[i, k, j] = pv[i, k, j] + xv[j]
    return pos, runmax


def cogarch_recursion(double g0, double s2_0, dz, dj2, double dt, double beta,
                      double log_delta, double lam_over_delta):
    dza = np.ascontiguousarray(dz, dtype=np.float64)
    dja = np.ascontiguousarray(dj2, dtype=np.float64)
    cdef Py_ssize_t m = dza.shape[0], n = dza.shape[1]
    g = np.empty((m, n + 1), dtype=np.float64)
    s2 = np.empty((m, n + 1), dtype=np.float64)
    cdef double[:, ::1] zv = dza
    cdef double[:, ::1] jv = dja
    cdef double[:, ::1] gv = g
    cdef double[:, ::1] sv = s2
    cdef Py_ssize_t i, k
    cdef double cur
    with nogil:
        for i in range(m):
            gv[i, 0] = g0
            sv[i, 0] = s2_0
            for k in range(n):
                cur = sv[i, k]
                gv[i, k + 1] = gv[i, k] + sqrt(cur) * zv[i, k]
                sv[i, k + 1] = cur + (beta + cur * log_delta) * dt + cur * lam_over_delta * jv[i, k]
    return g, s2

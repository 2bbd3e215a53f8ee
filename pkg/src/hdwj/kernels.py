"""Levy measures N(dy): densities, closed forms, jump integrals and samplers.

All kernels evaluate the jump part of the Levy-Khinchine exponent,

    I(xi) = int (exp(i y'xi) - 1 - i y'xi chi(y)) N(dy),

either in closed form or by quadrature over |y| split into dyadic shells.
Below ``SERIES_CUT / |xi|`` the integrand is replaced by its second/third
order expansion and integrated against the kernel's small-ball moments.
"""

import math

import numpy as np
from scipy import optimize, special

from .quadrature import (
    IntegrabilityError,
    QuadratureError,
    cos_minus_one,
    dyadic_edges,
    fourier_tail,
    gauss_kronrod,
    sin_minus_id,
)

SERIES_CUT = 1e-4
OSC_CYCLES = 32          # shells beyond OSC_CYCLES periods go to the Fourier tail
SHELL_DEPTH = 50         # dyadic shells used by numeric moment/tail integrals
MAX_JUMPS_PER_STEP = 4096
HEAVY_TOP = 2.0 ** 40
QUAD_RTOL = 1e-11        # relative floor for jump-integral tolerances
XI_CHUNK = 32            # frequencies integrated together (sorted by magnitude)


class UnsupportedError(NotImplementedError):
    """Requested capability is not available for this kernel or model."""


def sphere_area(d):
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def stable_constant(alpha, d=1):
    """c such that c |y|^(-d-alpha) dy has exponent |xi|^alpha."""
    return (alpha * 2.0 ** (alpha - 1.0) * math.gamma((alpha + d) / 2.0)
            / (math.pi ** (d / 2.0) * math.gamma(1.0 - alpha / 2.0)))


def spherical_cos_mean(s, d):
    """Average of cos(s u'e) over unit vectors u in R^d."""
    s = np.asarray(s, dtype=np.float64)
    if d == 1:
        return np.cos(s)
    if d == 3:
        return np.sinc(s / np.pi)
    nu = d / 2.0 - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        val = math.gamma(d / 2.0) * (2.0 / s) ** nu * special.jv(nu, s)
    return np.where(np.abs(s) < 1e-8, 1.0 - s * s / (2.0 * d), val)


class JumpKernel:
    """Base class for a Levy measure on R^dim.

    One-dimensional kernels expose ``density(y)`` for signed ``y``; kernels in
    higher dimension must be radial and expose the radial profile f with
    N(dy) = f(|y|) dy.
    """

    kind = "abstract"
    dim = 1
    symmetric = True
    can_sample = False

    @property
    def radial(self):
        return self.dim > 1

    def density(self, y):
        raise NotImplementedError

    def closed_form(self, xi):
        """int (e^{iy'xi} - 1 - i y'xi chi) N(dy) for symmetric kernels, or None."""
        return None

    # --- radial/one-sided profiles used by the quadrature ----------------------
    def _even(self, r):
        """Mass density in |y| (both signs / all directions combined)."""
        r = np.asarray(r, dtype=np.float64)
        if self.radial:
            return sphere_area(self.dim) * r ** (self.dim - 1) * self.density(r)
        return self.density(r) + self.density(-r)

    def _odd(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.symmetric or self.radial:
            return np.zeros_like(r)
        return self.density(r) - self.density(-r)

    # --- moments -----------------------------------------------------------------
    def singularity_order(self):
        """s with density ~ |y|^(-d-s) near the origin (estimated numerically)."""
        r = 1e-12
        f1, f2 = self._even(np.array([r, 2 * r]))
        if f1 <= 0 or f2 <= 0:
            return -1.0
        return float(np.log2(f1 / f2)) - 1.0

    def tail_order(self):
        """a with mass density ~ r^(-1-a) far out (estimated numerically)."""
        big = 2.0 ** SHELL_DEPTH
        f1, f2 = self._even(np.array([big / 2, big]))
        if f2 <= 0:
            return np.inf
        return float(np.log2(f1 / f2)) - 1.0

    def _small_ball(self, weight_pow, r, odd=False, tol=1e-13):
        prof = self._odd if odd else self._even
        lo = r * 2.0 ** -SHELL_DEPTH
        edges = dyadic_edges(lo, r)
        val, _ = gauss_kronrod(lambda t: t ** weight_pow * prof(t), edges, tol=tol)
        s = self.singularity_order()
        if weight_pow - s <= 0:
            raise IntegrabilityError(f"density too singular at 0 (order {s:.3f})")
        g0 = float(prof(np.array([lo]))[0])
        val += g0 * lo ** (weight_pow + 1) / (weight_pow - s)
        return float(val)

    def moment2(self, r):
        """int_{0<|y|<r} |y|^2 N(dy)."""
        return self._small_ball(2, r)

    def moment3(self, r):
        """int_{0<|y|<r} y^3 N(dy) (one-dimensional, signed)."""
        if self.symmetric or self.radial:
            return 0.0
        return self._small_ball(3, r, odd=True)

    def tail_mass(self, r):
        """N(|y| > r)."""
        hi = r * 2.0 ** SHELL_DEPTH
        edges = dyadic_edges(r, hi)
        val, _ = gauss_kronrod(self._even, edges, tol=1e-13)
        g = float(self._even(np.array([hi]))[0])
        if g > 0:
            a = self.tail_order()
            if a <= 0:
                raise IntegrabilityError(f"Levy density not integrable at infinity (order {a:.3f})")
            val += g * hi / a
        return float(val)

    def first_moment(self, lo, hi):
        """int_{lo<|y|<=hi} y N(dy) (one-dimensional)."""
        if self.symmetric or self.radial or hi <= lo:
            return 0.0
        if lo <= 0:
            s = self.singularity_order()
            if s >= 1:
                raise IntegrabilityError("first moment diverges at 0; use a symmetric kernel")
            lo_eff = hi * 2.0 ** -SHELL_DEPTH
            val, _ = gauss_kronrod(lambda t: t * self._odd(t), dyadic_edges(lo_eff, hi), tol=1e-13)
            g0 = float(self._odd(np.array([lo_eff]))[0])
            return float(val + g0 * lo_eff ** 2 / (1.0 - s))
        val, _ = gauss_kronrod(lambda t: t * self._odd(t), dyadic_edges(lo, hi), tol=1e-13)
        return float(val)

    def support_radius(self, tol):
        """Radius beyond which N carries mass < tol, or inf for heavy tails."""
        r = 1.0
        for _ in range(int(SHELL_DEPTH)):
            if self.tail_mass(r) < tol:
                return r
            r *= 2.0
        return np.inf

    def blumenthal_getoor_mass(self):
        """int (1 ^ |y|^2) N(dy); raises IntegrabilityError when infinite."""
        val = self.moment2(1.0) + self.tail_mass(1.0)
        if not np.isfinite(val):
            raise IntegrabilityError("int (1 ^ |y|^2) N(dy) is infinite")
        return val

    # --- jump integral ----------------------------------------------------------
    def jump_integral(self, xi, cutoff_radius=1.0, tol=1e-8, method="auto"):
        """Jump part I(xi) for a batch xi of shape (m, dim); returns complex (m,)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        if method == "auto":
            cf = self.closed_form(xi)
            if cf is not None:
                return cf
        return _quadrature_jump_integral(self, xi, cutoff_radius, tol)

    # --- sampling ---------------------------------------------------------------
    def sample(self, kern, seed, stream, path0, n_paths, step0, n_steps, dt, threads=1):
        raise UnsupportedError(f"{self.kind} kernels are integration-only; sampling unsupported")

    def describe(self):
        return {"type": self.kind}


def chunked_by_magnitude(fn, xi, chunk=XI_CHUNK):
    """Apply fn to groups of similar-magnitude frequencies; bounds memory and work."""
    m = xi.shape[0]
    if m <= chunk:
        return fn(xi)
    order = np.argsort(np.sqrt(np.sum(xi * xi, axis=1)), kind="stable")
    out = np.empty(m, dtype=complex)
    for i in range(0, m, chunk):
        idx = order[i:i + chunk]
        out[idx] = fn(xi[idx])
    return out


def _quadrature_jump_integral(kernel, xi, cutoff_radius, tol):
    return chunked_by_magnitude(lambda z: _quadrature_chunk(kernel, z, cutoff_radius, tol), xi)


def _quadrature_chunk(kernel, xi, cutoff_radius, tol):
    m = xi.shape[0]
    out = np.zeros(m, dtype=complex)
    if kernel.radial:
        freq = np.sqrt(np.sum(xi * xi, axis=1))
    else:
        freq = xi[:, 0]
    nz = freq != 0.0
    if not nz.any():
        return out
    f = freq[nz]
    xs = float(np.max(np.abs(f)))
    d = kernel.dim
    rho = float(cutoff_radius)
    r_s = min(SERIES_CUT / xs, rho)

    # series region
    m2 = kernel.moment2(r_s)
    if kernel.radial:
        part = -0.5 * f * f * m2 / d + 0j
    else:
        m3 = kernel.moment3(r_s)
        part = -0.5 * f * f * m2 - 1j * f ** 3 * m3 / 6.0

    r_top = kernel.support_radius(tol * 1e-3)
    heavy = not np.isfinite(r_top)
    r_hf = OSC_CYCLES * 2.0 * np.pi / xs
    use_tail = heavy or r_hf < r_top
    r_mid = r_hf if use_tail else r_top
    if heavy and r_mid > HEAVY_TOP:
        r_mid = HEAVY_TOP
    breaks = [rho] if r_s < rho < r_mid else []

    if kernel.radial:
        def integrand(r):
            s = r[:, None] * f[None, :]
            g = kernel._even(r)[:, None]
            return (spherical_cos_mean(s, d) - 1.0) * g
    else:
        def integrand(r):
            u = r[:, None] * f[None, :]
            ge = kernel._even(r)[:, None]
            go = kernel._odd(r)[:, None]
            inside = (r <= rho)[:, None]
            comp = np.where(inside, sin_minus_id(u), np.sin(u))
            return ge * cos_minus_one(u) + 1j * go * comp

    if r_mid > r_s:
        edges = dyadic_edges(r_s, r_mid, breaks=breaks, rate=xs)
        val, _ = gauss_kronrod(integrand, edges, tol=tol * 0.5, rtol=QUAD_RTOL)
        part = part + val

    if use_tail and r_mid < np.inf:
        part = part - kernel.tail_mass(r_mid)
        if not kernel.radial and not kernel.symmetric and rho > r_mid:
            part = part - 1j * f * kernel.first_moment(r_mid, rho)
        if kernel.radial and d not in (1, 3):
            raise QuadratureError(
                f"high-frequency radial quadrature unsupported in dimension {d}", np.inf)
        osc = np.empty(f.size, dtype=complex)
        for j, fj in enumerate(f):
            if kernel.radial:
                re, _ = fourier_tail(lambda r: kernel._even(r) / (r * abs(fj)), r_mid, abs(fj),
                                     "sin", tol=tol * 0.1)
                osc[j] = re
            else:
                re, _ = fourier_tail(kernel._even, r_mid, fj, "cos", tol=tol * 0.1)
                im = 0.0
                if not kernel.symmetric:
                    im, _ = fourier_tail(kernel._odd, r_mid, fj, "sin", tol=tol * 0.1)
                osc[j] = re + 1j * im
        part = part + osc
    elif not use_tail and np.isfinite(r_top):
        part = part - kernel.tail_mass(r_top)
    out[nz] = part
    return out


class NoJumps(JumpKernel):
    kind = "none"
    can_sample = True

    def __init__(self, dim=1):
        self.dim = int(dim)

    def density(self, y):
        return np.zeros_like(np.asarray(y, dtype=np.float64))

    def closed_form(self, xi):
        return np.zeros(np.atleast_2d(xi).shape[0], dtype=complex)

    def moment2(self, r):
        return 0.0

    def tail_mass(self, r):
        return 0.0

    def support_radius(self, tol):
        return 0.0

    def sample(self, kern, seed, stream, path0, n_paths, step0, n_steps, dt, threads=1):
        return np.zeros((n_paths, n_steps, self.dim))

    def describe(self):
        return {"type": "none", "dim": self.dim}


class SymmetricStable(JumpKernel):
    """Isotropic alpha-stable measure with exponent (scale |xi|)^alpha."""

    kind = "stable"
    can_sample = True

    def __init__(self, alpha, scale=1.0, dim=1):
        if not 0.0 < alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.alpha = float(alpha)
        self.scale = float(scale)
        self.dim = int(dim)
        self.c = stable_constant(self.alpha, self.dim) * self.scale ** self.alpha

    def density(self, y):
        y = np.abs(np.asarray(y, dtype=np.float64))
        with np.errstate(divide="ignore"):
            return self.c * y ** (-self.dim - self.alpha)

    def closed_form(self, xi):
        xi = np.atleast_2d(xi)
        nrm = np.sqrt(np.sum(xi * xi, axis=1))
        return -((self.scale * nrm) ** self.alpha) + 0j

    def singularity_order(self):
        return self.alpha

    def tail_order(self):
        return self.alpha

    def moment2(self, r):
        return self.c * sphere_area(self.dim) * r ** (2.0 - self.alpha) / (2.0 - self.alpha)

    def tail_mass(self, r):
        return self.c * sphere_area(self.dim) * r ** (-self.alpha) / self.alpha

    def support_radius(self, tol):
        return np.inf

    def sample(self, kern, seed, stream, path0, n_paths, step0, n_steps, dt, threads=1):
        fac = self.scale * dt ** (1.0 / self.alpha)
        if self.dim == 1:
            x = kern.stable_block(seed, stream, path0, n_paths, step0, n_steps, self.alpha, threads)
            return fac * x[:, :, None]
        s = kern.positive_stable_block(seed, stream, path0, n_paths, step0, n_steps,
                                       self.alpha / 2.0, threads)
        g = kern.normal_block(seed, stream + 1, path0, n_paths, step0, n_steps, self.dim, threads)
        return fac * np.sqrt(2.0 * s)[:, :, None] * g

    def describe(self):
        return {"type": "stable", "alpha": self.alpha, "scale": self.scale, "dim": self.dim}


class VarianceGamma(JumpKernel):
    """Variance gamma measure (C/|y|) exp(-(2C)^(-1/2) |y|) dy."""

    kind = "variance_gamma"
    can_sample = True

    def __init__(self, C):
        if C <= 0:
            raise ValueError("C must be positive")
        self.C = float(C)
        self.rate = (2.0 * self.C) ** -0.5

    def density(self, y):
        y = np.abs(np.asarray(y, dtype=np.float64))
        with np.errstate(divide="ignore"):
            return self.C / y * np.exp(-self.rate * y)

    def closed_form(self, xi):
        xi = np.atleast_2d(xi)[:, 0]
        return -self.C * np.log1p(xi * xi / self.rate ** 2) + 0j

    def singularity_order(self):
        return 0.0

    def moment2(self, r):
        x = self.rate * r
        if x < 1e-3:
            core = x * x / 2.0 - x ** 3 / 3.0 + x ** 4 / 8.0
        else:
            core = -math.expm1(-x) - x * math.exp(-x)
        return 2.0 * self.C * core / self.rate ** 2

    def tail_mass(self, r):
        return 2.0 * self.C * float(special.exp1(self.rate * r))

    def support_radius(self, tol):
        f = lambda r: self.tail_mass(r) - tol
        hi = 1.0
        while f(hi) > 0:
            hi *= 2.0
        return float(optimize.brentq(f, hi / 2.0 if hi > 1 else 1e-300, hi))

    def sample(self, kern, seed, stream, path0, n_paths, step0, n_steps, dt, threads=1):
        shape = self.C * dt
        g1 = kern.gamma_block(seed, stream, path0, n_paths, step0, n_steps, shape, threads)
        g2 = kern.gamma_block(seed, stream + 1, path0, n_paths, step0, n_steps, shape, threads)
        return ((g1 - g2) / self.rate)[:, :, None]

    def describe(self):
        return {"type": "variance_gamma", "C": self.C}


class CompoundPoisson(JumpKernel):
    """intensity * law(dy) for a frozen scipy.stats continuous distribution."""

    kind = "compound_poisson"
    can_sample = True

    def __init__(self, intensity, distribution, symmetric=None, spec=None):
        if intensity <= 0:
            raise ValueError("intensity must be positive")
        self.intensity = float(intensity)
        self.dist = distribution
        self._spec = spec
        if symmetric is None:
            probe = np.linspace(0.01, 10.0, 97)
            symmetric = bool(np.allclose(distribution.pdf(probe), distribution.pdf(-probe),
                                         rtol=1e-12, atol=1e-300))
        self.symmetric = symmetric

    def density(self, y):
        return self.intensity * self.dist.pdf(np.asarray(y, dtype=np.float64))

    def singularity_order(self):
        return -1.0

    def tail_order(self):
        return np.inf

    def moment2(self, r):
        val, _ = gauss_kronrod(lambda t: t * t * self._even(t), np.linspace(0.0, r, 9), tol=1e-14)
        return float(val)

    def moment3(self, r):
        if self.symmetric:
            return 0.0
        val, _ = gauss_kronrod(lambda t: t ** 3 * self._odd(t), np.linspace(0.0, r, 9), tol=1e-14)
        return float(val)

    def tail_mass(self, r):
        return self.intensity * float(self.dist.sf(r) + self.dist.cdf(-r))

    def first_moment(self, lo, hi):
        if hi <= lo:
            return 0.0
        val, _ = gauss_kronrod(lambda t: t * self._odd(t), np.linspace(max(lo, 0.0), hi, 9),
                               tol=1e-14)
        return float(val)

    def support_radius(self, tol):
        q = min(0.5, tol / (2.0 * self.intensity))
        return float(max(abs(self.dist.isf(q)), abs(self.dist.ppf(q)), 1e-12))

    def sample(self, kern, seed, stream, path0, n_paths, step0, n_steps, dt, threads=1):
        lam = self.intensity * dt
        if lam > 500:
            raise ValueError("intensity * dt too large for Poisson inversion; refine the grid")
        counts = kern.poisson_block(seed, stream, path0, n_paths, step0, n_steps, lam, threads)
        if counts.max(initial=0) > MAX_JUMPS_PER_STEP:
            raise ValueError("too many jumps in one step; refine the grid")
        out = np.zeros((n_paths, n_steps))
        p_idx, s_idx = np.nonzero(counts)
        if p_idx.size:
            reps = counts[p_idx, s_idx]
            pp = np.repeat(p_idx, reps)
            ss = np.repeat(s_idx, reps)
            starts = np.cumsum(reps) - reps
            jj = np.arange(reps.sum()) - np.repeat(starts, reps)
            ctr = (ss + step0).astype(np.uint64) * np.uint64(MAX_JUMPS_PER_STEP) + jj.astype(np.uint64)
            u = kern.uniform_at(seed, stream + 1, (pp + path0).astype(np.uint64), ctr)
            np.add.at(out, (pp, ss), self.dist.ppf(u))
        return out[:, :, None]

    def describe(self):
        return self._spec or {"type": "compound_poisson", "intensity": self.intensity}


class CustomDensity(JumpKernel):
    """User-supplied Levy density; integration only.

    For ``dim > 1`` the density must be radial and is given as a function of
    the radius.  ``singularity`` is the order s with density ~ |y|^(-d-s) near
    0; it is estimated from the density when omitted.
    """

    kind = "custom"

    def __init__(self, density, dim=1, symmetric=True, singularity=None, spec=None,
                 check=True):
        self._density = density
        self.dim = int(dim)
        self.symmetric = bool(symmetric) or self.dim > 1
        self._sing = singularity
        self._spec = spec
        if check:
            self.blumenthal_getoor_mass()

    def density(self, y):
        y = np.asarray(y, dtype=np.float64)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = np.asarray(self._density(np.abs(y) if self.dim > 1 else y), dtype=np.float64)
        return np.broadcast_to(val, y.shape)

    def singularity_order(self):
        if self._sing is not None:
            return float(self._sing)
        return JumpKernel.singularity_order(self)

    def describe(self):
        return self._spec or {"type": "custom", "dim": self.dim}


class LinearImageKernel(JumpKernel):
    """Image of a driver measure N_Z under w -> Phi w (Phi of shape d x n)."""

    kind = "linear_image"

    def __init__(self, base, Phi):
        self.base = base
        self.Phi = np.atleast_2d(np.asarray(Phi, dtype=np.float64))
        self.dim = self.Phi.shape[0]
        self.symmetric = base.symmetric
        if self.Phi.shape[1] != base.dim:
            raise ValueError("Phi column count must equal the driver dimension")
        if base.dim > 1 and not base.symmetric:
            raise UnsupportedError("multivariate drivers must be radial and symmetric")

    @property
    def radial(self):
        return False

    def jump_integral(self, xi, cutoff_radius=1.0, tol=1e-8, method="auto"):
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        eta = xi @ self.Phi
        if self.base.dim == 1:
            nrm = float(np.linalg.norm(self.Phi[:, 0]))
            if nrm == 0.0:
                return np.zeros(xi.shape[0], dtype=complex)
            return self.base.jump_integral(eta, cutoff_radius / nrm, tol, method)
        return self.base.jump_integral(eta, cutoff_radius, tol, method)

    def describe(self):
        return {"type": "linear_image", "base": self.base.describe(), "Phi": self.Phi.tolist()}


class BlockKernel(JumpKernel):
    """Measure of independent components living on coordinate blocks."""

    kind = "block"

    def __init__(self, kernels, dims):
        self.kernels = list(kernels)
        self.dims = [int(d) for d in dims]
        self.dim = sum(self.dims)
        self.symmetric = all(k.symmetric for k in self.kernels)

    @property
    def radial(self):
        return False

    def jump_integral(self, xi, cutoff_radius=1.0, tol=1e-8, method="auto"):
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        out = np.zeros(xi.shape[0], dtype=complex)
        i = 0
        share = tol / max(len(self.kernels), 1)
        for k, d in zip(self.kernels, self.dims):
            out = out + k.jump_integral(xi[:, i:i + d], cutoff_radius, share, method)
            i += d
        return out

    def describe(self):
        return {"type": "block", "parts": [k.describe() for k in self.kernels], "dims": self.dims}


def cogarch_cutoff_radius(a, k, radius=1.0, norm="max"):
    """Radius r_c with chi(f_v(w)) = 1{|w| < r_c} for f_v(w) = (a w, log(1 + k w^2))."""
    if norm == "max":
        r = radius / a
        if k > 0:
            r = min(r, math.sqrt(math.expm1(radius) / k))
        return r
    g = lambda w: (a * w) ** 2 + math.log1p(k * w * w) ** 2 - radius ** 2
    hi = radius / a
    if k == 0 or g(hi) <= 0:
        return hi
    return float(optimize.brentq(g, 0.0, hi, xtol=1e-15 * hi))


class CogarchImageKernel(JumpKernel):
    """Image of a 1-d driver measure under f_v(w) = (a w, log(1 + k w^2)).

    The compensator uses chi(f_v(w)) = 1{|w| < r_c}; ``r_c`` is fixed at
    construction from the model cut-off.
    """

    kind = "cogarch_image"
    dim = 2

    def __init__(self, base, a, k, r_c):
        if base.dim != 1:
            raise ValueError("COGARCH driver must be one-dimensional")
        self.base = base
        self.a = float(a)
        self.k = float(k)
        self.r_c = float(r_c)
        self.symmetric = False

    @property
    def radial(self):
        return False

    def log_moment(self, r):
        """int_{|w|<r} log(1 + k w^2) N(dw)."""
        if self.k == 0.0 or r <= 0:
            return 0.0
        lo = r * 2.0 ** -SHELL_DEPTH
        val, _ = gauss_kronrod(lambda t: np.log1p(self.k * t * t) * self.base._even(t),
                               dyadic_edges(lo, r), tol=1e-13)
        return float(val + self.k * self.base.moment2(lo))

    def jump_integral(self, xi, cutoff_radius=None, tol=1e-8, method="auto"):
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        return chunked_by_magnitude(lambda z: self._chunk(z, tol), xi)

    def _chunk(self, xi, tol):
        out = np.zeros(xi.shape[0], dtype=complex)
        nz = np.any(xi != 0.0, axis=1)
        if not nz.any():
            return out
        x1 = xi[nz, 0]
        x2 = xi[nz, 1]
        a, k, base = self.a, self.k, self.base
        rate = a * np.max(np.abs(x1)) + math.sqrt(k) * np.max(np.abs(x2))
        r_s = self.r_c
        with np.errstate(over="ignore"):   # subnormal frequencies give r_s = r_c
            if np.max(np.abs(x1)) > 0:
                r_s = min(r_s, SERIES_CUT / (a * np.max(np.abs(x1))))
            if k * np.max(np.abs(x2)) > 0:
                r_s = min(r_s, math.sqrt(SERIES_CUT / (k * np.max(np.abs(x2)))))
        m2 = base.moment2(r_s)
        m3 = base.moment3(r_s)
        part = -0.5 * (a * x1) ** 2 * m2 - (a * x1 * x2 * k + 1j * (a * x1) ** 3 / 6.0) * m3

        r_top = base.support_radius(tol * 1e-3)
        if not np.isfinite(r_top):
            # oscillatory far field is bounded by the tail mass; stop where it is negligible
            r_top = 2.0 * np.pi * 5e4 / rate
            if base.tail_mass(r_top) > tol:
                raise QuadratureError("heavy-tailed COGARCH driver: far-field mass exceeds tol",
                                      base.tail_mass(r_top))
        r_c = self.r_c

        def integrand(r):
            lr = np.log1p(k * r * r)[:, None]
            inside = (r < r_c)[:, None]
            total = 0.0
            for sgn, dens in ((1.0, base.density(r)), (-1.0, base.density(-r))):
                u = sgn * a * r[:, None] * x1[None, :] + lr * x2[None, :]
                im = np.where(inside, sin_minus_id(u), np.sin(u))
                total = total + dens[:, None] * (cos_minus_one(u) + 1j * im)
            return total

        if r_top > r_s:
            edges = dyadic_edges(r_s, r_top, breaks=[r_c], rate=rate)
            val, _ = gauss_kronrod(integrand, edges, tol=tol * 0.5, rtol=QUAD_RTOL)
            part = part + val
            part = part - base.tail_mass(r_top)
        out[nz] = part
        return out

    def describe(self):
        return {"type": "cogarch_image", "base": self.base.describe(), "a": self.a, "k": self.k}

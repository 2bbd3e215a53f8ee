"""State-dependent Levy triplets and the probabilistic symbol

    p(x, xi) = -i l(x)'xi + 1/2 xi'Q(x)xi - int (e^{iy'xi} - 1 - i y'xi chi(y)) N(x, dy).

Each model family knows how to evaluate p for a fixed state ``x`` over a
batch of frequencies and how to expose its differential characteristics.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernels import (
    BlockKernel,
    CogarchImageKernel,
    JumpKernel,
    LinearImageKernel,
    NoJumps,
    SymmetricStable,
    UnsupportedError,
    cogarch_cutoff_radius,
)

DEFAULT_TOL = 1e-8
PSD_RTOL = 1e-12


@dataclass(frozen=True)
class CutoffFunction:
    """chi(y) = 1{|y| <= radius} for the euclidean or max norm."""

    radius: float = 1.0
    norm: str = "euclidean"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("cut-off radius must be positive")
        if self.norm not in ("euclidean", "max"):
            raise ValueError(f"unknown cut-off norm {self.norm!r}")

    def __call__(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if self.norm == "max":
            n = np.max(np.abs(y), axis=-1)
        else:
            n = np.sqrt(np.sum(y * y, axis=-1))
        return (n <= self.radius).astype(np.float64)


def _clamp_psd(Q):
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    if Q.shape[0] != Q.shape[1]:
        raise ValueError("Q must be square")
    if not np.allclose(Q, Q.T, rtol=0, atol=PSD_RTOL * max(np.abs(Q).max(initial=0.0), 1e-300)):
        raise ValueError("Q must be symmetric")
    Q = 0.5 * (Q + Q.T)
    if not Q.any():
        return Q
    w, V = np.linalg.eigh(Q)
    scale = np.linalg.norm(Q, 2)
    if w.min() < -PSD_RTOL * scale:
        raise ValueError(f"Q is not positive semi-definite (eigenvalue {w.min():.3e})")
    if w.min() < 0:
        Q = (V * np.maximum(w, 0.0)) @ V.T
    return Q


@dataclass(frozen=True)
class LevyTriplet:
    """Drift, diffusion matrix and jump kernel at one state."""

    ell: np.ndarray
    Q: np.ndarray
    kernel: JumpKernel = None

    def __post_init__(self):
        ell = np.atleast_1d(np.asarray(self.ell, dtype=np.float64))
        d = ell.size
        Q = _clamp_psd(self.Q if self.Q is not None else np.zeros((d, d)))
        if Q.shape != (d, d):
            raise ValueError(f"Q must be {d}x{d}")
        kernel = self.kernel if self.kernel is not None else NoJumps(d)
        if kernel.dim != d:
            raise ValueError(f"kernel dimension {kernel.dim} does not match drift dimension {d}")
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "kernel", kernel)

    @property
    def dim(self):
        return self.ell.size

    def exponent(self, xi, cutoff=CutoffFunction(), tol=DEFAULT_TOL, method="auto"):
        """Levy-Khinchine exponent at a batch of frequencies xi (m, d)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        drift = -1j * (xi @ self.ell)
        diff = 0.5 * np.einsum("mi,ij,mj->m", xi, self.Q, xi)
        jump = self.kernel.jump_integral(xi, cutoff.radius, tol, method)
        return drift + diff - jump


@dataclass(frozen=True)
class SymbolValue:
    re: float
    im: float

    def __complex__(self):
        return complex(self.re, self.im)

    @property
    def value(self):
        return complex(self.re, self.im)


class SymbolModel:
    """Base class: ``symbol(x, xis)`` evaluates p(x, .) on a batch (m, d)."""

    family = "abstract"
    dim = 1
    cutoff = CutoffFunction()
    homogeneous = False       # p independent of x
    simulable = False
    bounded_coefficients = False

    def triplet(self, x):
        raise NotImplementedError

    def symbol(self, x, xis, tol=DEFAULT_TOL):
        xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
        return self.triplet(x).exponent(xis, self.cutoff, tol)

    def describe(self):
        return {"family": self.family, "dim": self.dim}


class LevyModel(SymbolModel):
    family = "levy"
    homogeneous = True
    bounded_coefficients = True

    def __init__(self, triplet, cutoff=CutoffFunction()):
        self._triplet = triplet
        self.cutoff = cutoff
        self.dim = triplet.dim
        self.simulable = triplet.kernel.can_sample

    def triplet(self, x=None):
        return self._triplet


def brownian_motion(dim=1, variance=1.0):
    return LevyModel(LevyTriplet(np.zeros(dim), variance * np.eye(dim), NoJumps(dim)))


def stable_levy(alpha, scale=1.0, dim=1, drift=None):
    ell = np.zeros(dim) if drift is None else drift
    return LevyModel(LevyTriplet(ell, np.zeros((dim, dim)), SymmetricStable(alpha, scale, dim)))


class StableLikeModel(SymbolModel):
    """p(x, xi) = |xi|^alpha(x) with alpha clamped to [alpha0, alpha_inf]."""

    family = "stable_like"
    bounded_coefficients = True

    def __init__(self, alpha_fn, alpha0, alpha_inf, dim=1, cutoff=CutoffFunction()):
        if not 0 < alpha0 <= alpha_inf < 2:
            raise ValueError("need 0 < alpha0 <= alpha_inf < 2")
        self.alpha_fn = alpha_fn
        self.alpha0 = float(alpha0)
        self.alpha_inf = float(alpha_inf)
        self.dim = int(dim)
        self.cutoff = cutoff

    def alpha(self, x):
        a = float(self.alpha_fn(np.asarray(x, dtype=np.float64)))
        return min(max(a, self.alpha0), self.alpha_inf)

    def triplet(self, x):
        return LevyTriplet(np.zeros(self.dim), np.zeros((self.dim, self.dim)),
                           SymmetricStable(self.alpha(x), 1.0, self.dim))

    def symbol(self, x, xis, tol=DEFAULT_TOL):
        xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
        return np.sqrt(np.sum(xis * xis, axis=1)) ** self.alpha(x) + 0j

    def describe(self):
        return {"family": self.family, "dim": self.dim, "alpha0": self.alpha0,
                "alpha_inf": self.alpha_inf}


def recenter_drift(kernel, ell, from_radius, to_radius):
    """Drift w.r.t. cut-off radius ``to_radius`` given the drift for ``from_radius``."""
    if from_radius == to_radius or kernel.symmetric:
        return ell
    if kernel.dim != 1:
        raise UnsupportedError("cut-off change needs a one-dimensional or symmetric kernel")
    if to_radius > from_radius:
        return ell + kernel.first_moment(from_radius, to_radius)
    return ell - kernel.first_moment(to_radius, from_radius)


class SdeComposedModel(SymbolModel):
    """Symbol psi(Phi(x)'xi) of dX = Phi(X-) dZ for a Levy driver Z of dimension n.

    ``Phi_batch``, if given, maps states (m, d) to matrices (m, d, n) and is
    used by the path simulator instead of per-state calls to ``Phi``.
    """

    family = "sde"
    simulable = True

    def __init__(self, driver, Phi, dim, driver_cutoff=CutoffFunction(),
                 cutoff=CutoffFunction(), bounded=False, Phi_batch=None):
        self.driver = driver
        self.Phi = Phi
        self.Phi_batch = Phi_batch
        self.dim = int(dim)
        self.n = driver.dim
        self.driver_cutoff = driver_cutoff
        self.cutoff = cutoff
        self.bounded_coefficients = bool(bounded)
        self.simulable = driver.kernel.can_sample

    def phi(self, x):
        m = np.asarray(self.Phi(np.asarray(x, dtype=np.float64)), dtype=np.float64)
        m = m.reshape(self.dim, self.n)
        if not np.all(np.isfinite(m)):
            raise FloatingPointError("Phi(x) is not finite")
        return m

    def symbol(self, x, xis, tol=DEFAULT_TOL):
        xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
        eta = xis @ self.phi(x)
        return self.driver.exponent(eta, self.driver_cutoff, tol)

    def triplet(self, x):
        P = self.phi(x)
        base = self.driver.kernel
        ell_z = self.driver.ell
        if self.n == 1 and not base.symmetric:
            nrm = float(np.linalg.norm(P[:, 0]))
            if nrm > 0:
                ell_z = recenter_drift(base, ell_z, self.driver_cutoff.radius,
                                       self.cutoff.radius / nrm)
        kernel = NoJumps(self.dim) if isinstance(base, NoJumps) else LinearImageKernel(base, P)
        return LevyTriplet(P @ ell_z, P @ self.driver.Q @ P.T, kernel)

    def describe(self):
        return {"family": self.family, "dim": self.dim, "driver_dim": self.n}


class CogarchModel(SymbolModel):
    """Symbol of (G, V) = (G, log S^2) for the COGARCH(1,1) process.

    The default cut-off is the indicator of the unit square, i.e. the
    max-norm ball, matching the indicator products of the drift terms.
    """

    family = "cogarch"
    dim = 2
    simulable = True

    def __init__(self, driver, lam, delta, beta, driver_cutoff=CutoffFunction(),
                 cutoff=CutoffFunction(1.0, "max")):
        if driver.dim != 1:
            raise ValueError("COGARCH driver must be one-dimensional")
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.driver = driver
        self.lam = float(lam)
        self.delta = float(delta)
        self.beta = float(beta)
        self.k = self.lam / self.delta
        self.driver_cutoff = driver_cutoff
        self.cutoff = cutoff
        self.simulable = driver.kernel.can_sample

    def _scales(self, v):
        v = float(v)
        with np.errstate(over="raise"):
            try:
                ev = math.exp(v)
                emv = math.exp(-v)
            except OverflowError:
                raise OverflowError(f"log-volatility v = {v} overflows exp(v)") from None
        if not (np.isfinite(ev) and np.isfinite(emv)) or ev == 0.0 or emv == 0.0:
            raise OverflowError(f"log-volatility v = {v} out of floating-point range")
        return math.sqrt(ev), ev, emv

    def triplet(self, x):
        _, v = np.asarray(x, dtype=np.float64)
        a, ev, emv = self._scales(v)
        base = self.driver.kernel
        r_c = cogarch_cutoff_radius(a, self.k, self.cutoff.radius, self.cutoff.norm)
        rho_z = self.driver_cutoff.radius
        # int y (1{|y| < r_c} - 1{|y| < rho_z}) N(dy)
        if r_c < rho_z:
            shift = -base.first_moment(r_c, rho_z)
        else:
            shift = base.first_moment(rho_z, r_c)
        ell1 = a * (float(self.driver.ell[0]) + shift)
        kern = CogarchImageKernel(base, a, self.k, r_c)
        ell2 = self.beta * emv + math.log(self.delta) + kern.log_moment(r_c)
        Q = np.array([[ev * float(self.driver.Q[0, 0]), 0.0], [0.0, 0.0]])
        return LevyTriplet(np.array([ell1, ell2]), Q, kern)

    def symbol(self, x, xis, tol=DEFAULT_TOL):
        xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
        out = np.zeros(xis.shape[0], dtype=complex)
        nz = np.any(xis != 0, axis=1)
        if nz.any():
            out[nz] = self.triplet(x).exponent(xis[nz], self.cutoff, tol)
        return out

    def describe(self):
        return {"family": self.family, "lambda": self.lam, "delta": self.delta, "beta": self.beta}


class SumIndependentModel(SymbolModel):
    """Vector of independent components; p is the sum of component symbols."""

    family = "sum"

    def __init__(self, components, cutoff=CutoffFunction()):
        if not components:
            raise ValueError("need at least one component")
        self.components = list(components)
        self.dims = [c.dim for c in self.components]
        self.dim = sum(self.dims)
        self.cutoff = cutoff
        self.homogeneous = all(c.homogeneous for c in self.components)
        self.simulable = all(c.simulable for c in self.components)
        self.bounded_coefficients = all(c.bounded_coefficients for c in self.components)
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)])

    def slices(self):
        return [slice(int(a), int(b)) for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def symbol(self, x, xis, tol=DEFAULT_TOL):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
        if x.size != self.dim or xis.shape[1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}")
        total = np.zeros(xis.shape[0], dtype=complex)
        share = tol / len(self.components)
        for comp, sl in zip(self.components, self.slices()):
            total = total + comp.symbol(x[sl], xis[:, sl], share)
        return total

    def triplet(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        ells, Qs, kernels = [], [], []
        for comp, sl in zip(self.components, self.slices()):
            t = comp.triplet(x[sl])
            if comp.cutoff != self.cutoff and t.kernel.symmetric is False:
                if comp.cutoff.norm != self.cutoff.norm and t.kernel.dim > 1:
                    raise UnsupportedError("components with a different cut-off norm")
                t = LevyTriplet(recenter_drift(t.kernel, t.ell, comp.cutoff.radius,
                                               self.cutoff.radius), t.Q, t.kernel)
            ells.append(t.ell)
            Qs.append(t.Q)
            kernels.append(t.kernel)
        Q = np.zeros((self.dim, self.dim))
        for q, sl in zip(Qs, self.slices()):
            Q[sl, sl] = q
        return LevyTriplet(np.concatenate(ells), Q, BlockKernel(kernels, self.dims))

    def describe(self):
        return {"family": self.family, "components": [c.describe() for c in self.components]}


class CustomTripletModel(SymbolModel):
    """Arbitrary x -> LevyTriplet map (integration only)."""

    family = "custom"

    def __init__(self, triplet_fn, dim, cutoff=CutoffFunction(), bounded=False):
        self.triplet_fn = triplet_fn
        self.dim = int(dim)
        self.cutoff = cutoff
        self.bounded_coefficients = bool(bounded)

    def triplet(self, x):
        t = self.triplet_fn(np.asarray(x, dtype=np.float64))
        if t.dim != self.dim:
            raise ValueError(f"triplet dimension {t.dim} != model dimension {self.dim}")
        return t


CIRCLE_TOL = 1e-9


def on_upper_circle(x, tol=CIRCLE_TOL):
    return abs(math.hypot(x[0], x[1] - 1.0) - 1.0) <= tol


def on_lower_circle(x, tol=CIRCLE_TOL):
    return abs(math.hypot(x[0], x[1] + 1.0) - 1.0) <= tol


class DeterministicFigureEightModel(SymbolModel):
    """Deterministic non-Markov diffusion running along the circles (0, +-1)' + T.

    The drift on the lower circle is (x2 + 1, -x1), the field generating the
    clockwise parametrisation (sin t, cos t - 1).
    """

    family = "figure_eight"
    dim = 2
    simulable = True
    bounded_coefficients = True

    def drift(self, x):
        x = np.asarray(x, dtype=np.float64)
        if on_upper_circle(x):
            return np.array([1.0 - x[1], x[0]])
        if on_lower_circle(x):
            return np.array([x[1] + 1.0, -x[0]])
        return np.zeros(2)

    def triplet(self, x):
        return LevyTriplet(self.drift(x), np.zeros((2, 2)), NoJumps(2))


# --- functional API -------------------------------------------------------------

def symbol_batch(model, x, xis, tol=DEFAULT_TOL):
    """Complex array p(x, xi_j) for a batch of frequencies."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    xis = np.atleast_2d(np.asarray(xis, dtype=np.float64))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xis))):
        raise ValueError("x and xi must be finite")
    if x.size != model.dim or xis.shape[1] != model.dim:
        raise ValueError(f"expected vectors of dimension {model.dim}")
    return model.symbol(x, xis, tol)


def eval_symbol(model, x, xi, tol=DEFAULT_TOL):
    v = symbol_batch(model, x, np.atleast_1d(xi)[None, :], tol)[0]
    return SymbolValue(float(v.real), float(v.imag))


def eval_jump_integral(kernel, xi, cutoff=CutoffFunction(), tol=DEFAULT_TOL, method="auto"):
    """int (e^{iy'xi} - 1 - i y'xi chi(y)) N(dy)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = kernel.jump_integral(np.atleast_1d(np.asarray(xi, dtype=np.float64))[None, :],
                             cutoff.radius, tol, method)[0]
    return SymbolValue(float(v.real), float(v.imag))


def cogarch_symbol(model, state, xi, tol=DEFAULT_TOL):
    return eval_symbol(model, state, xi, tol)


def sum_symbol(components, tol=DEFAULT_TOL):
    """Sum of p_j(x[slice_j], xi[slice_j]) over (model, x_part, xi_part) triples."""
    total = 0j
    for model, xp, xip in components:
        xp = np.atleast_1d(xp)
        xip = np.atleast_1d(xip)
        if xp.size != model.dim or xip.size != model.dim:
            raise ValueError(f"component of dimension {model.dim} got slices "
                             f"of length {xp.size}/{xip.size}")
        total += complex(eval_symbol(model, xp, xip, tol / max(len(components), 1)))
    return SymbolValue(total.real, total.imag)


def differential_characteristics(model, x):
    return model.triplet(np.atleast_1d(np.asarray(x, dtype=np.float64)))


def symbol_from_triplet(model, x, xis, tol=DEFAULT_TOL):
    """Rebuild p(x, .) from the differential characteristics (consistency route)."""
    return differential_characteristics(model, x).exponent(np.atleast_2d(xis), model.cutoff, tol)

"""Parameterizing functions ``f`` whose level sets carry the norms ``H(t)``.

Every Euclidean family exposes ``f``, its gradient, ``Delta f``, the ratio
``q = Delta f / |grad f|^2``, the radial derivative
``G = <grad q, grad f / |grad f|^2>``, analytic bound functions and charts of
the level surfaces.  Bounds follow one convention throughout: the
differential inequality reads ``(log H)'' + tau (log H)' >= rho`` with
``tau = K + M`` and ``rho = g + m M + m K + 2 k``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .comparison import cot_k, sin_k
from .quadrature import Patch, SurfaceChart


class DomainError(ValueError):
    """Evaluation point or level value outside a family's valid range."""


def _zero(t):
    return 0.0 * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class CondBounds:
    m: Callable
    M: Callable
    g: Callable
    K: Callable
    k_extra: Callable = _zero
    # A family may pin rho to a published constant instead of the combination.
    rho_override: Optional[Callable] = None

    def tau(self, t):
        return self.K(t) + self.M(t)

    def rho_combined(self, t):
        return self.g(t) + self.m(t) * self.M(t) + self.m(t) * self.K(t) + 2 * self.k_extra(t)

    def rho(self, t):
        if self.rho_override is not None:
            return self.rho_override(t)
        return self.rho_combined(t)


# -- sphere parameterizations ---------------------------------------------------

def sphere_patches(d):
    """Patches ``(lower, upper, map, jacobian)`` covering the unit sphere S^d.

    ``d = 0`` gives the two points ``+-1`` as parameter-free patches; for
    ``d >= 1`` hyperspherical angles ``theta_1..theta_{d-1}`` in ``[0, pi]``
    and ``phi`` in ``[0, 2 pi]`` are used.
    """
    if d == 0:
        def point(sign):
            return (lambda u: np.full((len(u), 1), float(sign)),
                    lambda u: np.ones(len(u)))
        return [((), ()) + point(1), ((), ()) + point(-1)]

    lower = (0.0,) * (d - 1) + (0.0,)
    upper = (np.pi,) * (d - 1) + (2 * np.pi,)

    def to_sphere(u):
        u = np.asarray(u, dtype=float)
        out = np.empty((len(u), d + 1))
        running = np.ones(len(u))
        for i in range(d - 1):
            out[:, i] = running * np.cos(u[:, i])
            running = running * np.sin(u[:, i])
        out[:, d - 1] = running * np.cos(u[:, d - 1])
        out[:, d] = running * np.sin(u[:, d - 1])
        return out

    def jac(u):
        u = np.asarray(u, dtype=float)
        out = np.ones(len(u))
        for i in range(d - 1):
            out = out * np.sin(u[:, i]) ** (d - 1 - i)
        return out

    return [(lower, upper, to_sphere, jac)]


# -- families ------------------------------------------------------------------

class LevelFamily:
    """Base class for Euclidean parameterizing functions."""

    ambient_dim: int
    t_range: tuple
    label: str

    def check_t(self, t):
        lo, hi = self.t_range
        if not (lo <= t <= hi):
            raise DomainError(f"t={t} outside t_range [{lo}, {hi}] of {self.label}")

    def grad_norm(self, x):
        return np.linalg.norm(self.grad(x), axis=-1)

    def lap_over_gradsq(self, x):
        return self.laplacian(x) / self.grad_norm(x) ** 2

    def chart_at(self, t, check=True):
        if check:
            self.check_t(t)
        return self._chart(float(t))

    def normal_extension(self, x, t):
        """The field ``f grad f / (t |grad f|^2)``; equals ``nu / |grad f|`` on S_t."""
        g = self.grad(x)
        return (self.f(x) / (t * np.sum(g * g, axis=-1)))[:, None] * g

    def normal_extension_jacobian(self, x, t, rel_step=1e-3):
        """``J[i, j] = d X_i / d x_j`` by fourth-order central differences."""
        x = np.asarray(x, dtype=float)
        h = rel_step * np.maximum(np.linalg.norm(x, axis=-1), 1e-8)
        cols = []
        for j in range(self.ambient_dim):
            e = np.zeros_like(x)
            e[:, j] = h
            Xp2, Xp1 = self.normal_extension(x + 2 * e, t), self.normal_extension(x + e, t)
            Xm1, Xm2 = self.normal_extension(x - e, t), self.normal_extension(x - 2 * e, t)
            cols.append((-Xp2 + 8 * Xp1 - 8 * Xm1 + Xm2) / (12 * h[:, None]))
        return np.stack(cols, axis=-1)

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


class Ellipsoid(LevelFamily):
    """``f(x) = |D^{-1} x|`` with ``D = diag(a_1 <= ... <= a_n)``."""

    def __init__(self, semi_axes, t_range=(0.05, 10.0), label=None):
        a = np.asarray(semi_axes, dtype=float)
        if a.ndim != 1 or len(a) < 2:
            raise ValueError("need at least two semi-axes")
        if np.any(a <= 0):
            raise ValueError("semi-axes must be positive")
        if np.any(np.diff(a) < 0):
            raise ValueError("semi-axes must be ascending")
        self.a = a
        self.ambient_dim = len(a)
        self.t_range = tuple(t_range)
        self.trace = float(np.sum(a ** -2))
        self.label = label or "ellipsoid:a=" + ",".join(f"{v:g}" for v in a)

    def f(self, x):
        return np.linalg.norm(np.asarray(x) / self.a, axis=-1)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return (x / self.a ** 2) / self.f(x)[:, None]

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        fx = self.f(x)
        P = x / self.a ** 2
        return (np.diag(self.a ** -2)[None] / fx[:, None, None]
                - np.einsum("ni,nj->nij", P, P) / fx[:, None, None] ** 3)

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        fx = self.f(x)
        P2 = np.sum((x / self.a ** 2) ** 2, axis=-1)
        return self.trace / fx - P2 / fx ** 3

    def G(self, x):
        x = np.asarray(x, dtype=float)
        fx = self.f(x)
        P2 = np.sum((x / self.a ** 2) ** 2, axis=-1)
        D3 = np.sum((x / self.a ** 3) ** 2, axis=-1)
        return 1 / fx ** 2 + self.trace / P2 - 2 * self.trace * fx ** 2 * D3 / P2 ** 3

    @property
    def bounds(self):
        return ellipsoid_bounds(self)

    def bounding_box(self, t):
        return np.column_stack([-t * self.a, t * self.a])

    def _chart(self, t):
        n = self.ambient_dim
        a, prod_a = self.a, float(np.prod(self.a))
        (lower, upper, to_sphere, jac), = sphere_patches(n - 1)

        def chart_map(u):
            return t * a * to_sphere(u)

        def area(u):
            s = to_sphere(u)
            return t ** (n - 1) * prod_a * np.linalg.norm(s / a, axis=-1) * jac(u)

        return SurfaceChart((Patch(lower, upper, chart_map, area),), n)


def radial(n, t_range=(0.05, 10.0)):
    """``f(x) = |x|`` in ``R^n``: the ellipsoid with unit semi-axes."""
    return Ellipsoid(np.ones(int(n)), t_range=t_range, label=f"radial:n={int(n)}")


def ellipsoid_bounds(e):
    a1, an, T = e.a[0], e.a[-1], e.trace
    cm = a1 ** 2 * T - 1
    cM = an ** 2 * T - 1
    cg = 1 + a1 ** 2 * T - 2 * (an ** 4 / a1 ** 2) * T
    cK = 2 + 4 * (an ** 2 / a1 ** 2 - a1 ** 2 / an ** 2) - a1 ** 2 * T
    return CondBounds(
        m=lambda t: cm / np.asarray(t, dtype=float),
        M=lambda t: cM / np.asarray(t, dtype=float),
        g=lambda t: cg / np.asarray(t, dtype=float) ** 2,
        K=lambda t: cK / np.asarray(t, dtype=float),
    )


def ellipsoid_AB(e):
    """Constants ``(A, B)`` with ``tau = A/t`` and ``rho = B/t^2``."""
    a1, an, T = e.a[0], e.a[-1], e.trace
    A = 1 + 4 * (an ** 2 / a1 ** 2 - a1 ** 2 / an ** 2) + (an ** 2 - a1 ** 2) * T
    B = (4 * (a1 ** 2 / an ** 2 - an ** 2 / a1 ** 2)
         + (3 * a1 ** 2 + 3 * an ** 2 - 2 * an ** 4 / a1 ** 2 - 4 * a1 ** 4 / an ** 2) * T
         + a1 ** 2 * (an ** 2 - a1 ** 2) * T ** 2)
    return float(A), float(B)


class TorusDistance(LevelFamily):
    """Distance to the unit sphere ``S^k`` sitting in the first ``k+1`` coordinates.

    Valid on the band ``eps < r_{k+1}(x) < 2 - eps``, i.e. for levels below
    ``1 - eps``; for ``n = 3, k = 1`` the level sets are tori.
    """

    def __init__(self, n, k, eps, t_range=None):
        n, k, eps = int(n), int(k), float(eps)
        if not 0 <= k < n:
            raise ValueError("need 0 <= k < n")
        if not 0 < eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        self.ambient_dim, self.k, self.eps = n, k, eps
        if t_range is None:
            pad = min(0.05, 0.25 * (1 - eps))
            t_range = (pad, 1 - eps - pad)
        if not 0 < t_range[0] < t_range[1] < 1 - eps:
            raise ValueError("t_range must sit inside (0, 1 - eps)")
        self.t_range = tuple(t_range)
        self.label = f"torus:n={n},k={k},eps={eps:g}"

    def r(self, x):
        return np.linalg.norm(np.asarray(x)[:, : self.k + 1], axis=-1)

    def nearest(self, x):
        x = np.asarray(x, dtype=float)
        p = np.zeros_like(x)
        p[:, : self.k + 1] = x[:, : self.k + 1] / self.r(x)[:, None]
        return p

    def f(self, x):
        x = np.asarray(x, dtype=float)
        return np.sqrt((self.r(x) - 1) ** 2 + np.sum(x[:, self.k + 1:] ** 2, axis=-1))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.nearest(x)) / self.f(x)[:, None]

    def grad_norm(self, x):
        return np.ones(len(x))

    def laplacian(self, x):
        n, k = self.ambient_dim, self.k
        return (n - 1 - k / self.r(x)) / self.f(x)

    def lap_over_gradsq(self, x):
        return self.laplacian(x)

    def G(self, x):
        n, k = self.ambient_dim, self.k
        r = self.r(x)
        return (-(n - 1) + 2 * k / r - k / r ** 2) / self.f(x) ** 2

    def normal_extension(self, x, t):
        return (np.asarray(x, dtype=float) - self.nearest(x)) / t

    def check_point(self, x):
        r, fx = self.r(x), self.f(x)
        lo, hi = self.t_range
        if np.any((r <= self.eps) | (r >= 2 - self.eps)):
            raise DomainError("point outside the band eps < r_{k+1} < 2 - eps")
        if np.any((fx < lo) | (fx > hi)):
            raise DomainError("f(x) outside t_range")

    @property
    def bounds(self):
        return torus_bounds(self)

    def bounding_box(self, t):
        n, k = self.ambient_dim, self.k
        half = np.array([1 + t] * (k + 1) + [t] * (n - k - 1))
        return np.column_stack([-half, half])

    def _chart(self, t):
        n, k = self.ambient_dim, self.k
        patches = []
        for lo1, hi1, om, jom in sphere_patches(k):
            for lo2, hi2, nv, jnv in sphere_patches(n - k - 1):
                d1 = len(lo1)

                def chart_map(u, om=om, nv=nv, d1=d1):
                    w, v = om(u[:, :d1]), nv(u[:, d1:])
                    x = np.empty((len(u), n))
                    x[:, : k + 1] = (1 + t * v[:, :1]) * w
                    x[:, k + 1:] = t * v[:, 1:]
                    return x

                def area(u, nv=nv, jom=jom, jnv=jnv, d1=d1):
                    v0 = nv(u[:, d1:])[:, 0]
                    return ((1 + t * v0) ** k * t ** (n - k - 1)
                            * jom(u[:, :d1]) * jnv(u[:, d1:]))

                patches.append(Patch(tuple(lo1) + tuple(lo2), tuple(hi1) + tuple(hi2),
                                     chart_map, area))
        return SurfaceChart(tuple(patches), n)


def torus_bounds(tf):
    n, k, eps = tf.ambient_dim, tf.k, tf.eps
    C, B = torus_CB(tf)
    cm = n - 1 - k / eps
    cM = n - 1 - k / (2 - eps)
    cg = -(n - 1) + 2 * k / (2 - eps) - k / eps ** 2
    cK = k / eps - (n - 2)
    return CondBounds(
        m=lambda t: cm / np.asarray(t, dtype=float),
        M=lambda t: cM / np.asarray(t, dtype=float),
        g=lambda t: cg / np.asarray(t, dtype=float) ** 2,
        K=lambda t: cK / np.asarray(t, dtype=float),
        rho_override=lambda t: B / np.asarray(t, dtype=float) ** 2,
    )


def torus_CB(tf):
    """Constants ``(C, B)`` with ``tau = C/t`` and ``rho = B/t^2``."""
    n, k, eps = tf.ambient_dim, tf.k, tf.eps
    C = 1 + k * (1 / eps - 1 / (2 - eps))
    B = k * ((2 * n - 3) * (1 - eps) / (eps * (2 - eps)) - 2 / eps ** 2)
    return float(C), float(B)


def torus_laplacian(tf, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    tf.check_point(x)
    return tf.laplacian(x)


def torus_G(tf, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    tf.check_point(x)
    return tf.G(x)


class ModelSpace2D:
    """Geodesic polar coordinates ``(t, theta)`` on the 2D space form of curvature K.

    ``f`` is the radial distance; points are stored as ``(t, theta)`` pairs and
    never embedded.  The default ``t_range`` stops at ``pi / (2 sqrt K)`` when
    ``K > 0``; pass ``t_max`` (below ``pi / sqrt K``) to go further.
    """

    ambient_dim = 2

    def __init__(self, K, t_max=None, t_min=0.05):
        self.K = float(K)
        if t_max is None:
            t_max = min(np.pi / (2 * np.sqrt(self.K)), 3.0) if self.K > 0 else 3.0
        if self.K > 0 and t_max >= np.pi / np.sqrt(self.K):
            raise ValueError("t_max must stay below pi/sqrt(K)")
        self.t_range = (float(t_min), float(t_max))
        self.label = f"model:K={self.K:g}"

    check_t = LevelFamily.check_t

    def laplacian_r(self, t):
        return cot_k(self.K, t)

    @property
    def bounds(self):
        K = self.K
        return CondBounds(
            m=lambda t: cot_k(K, t),
            M=lambda t: cot_k(K, t),
            g=lambda t: -cot_k(K, t) ** 2 - K,
            K=_zero,
            k_extra=_zero,
        )

    def chart_at(self, t, check=True):
        if check:
            self.check_t(t)
        t = float(t)
        K = self.K
        patch = Patch((0.0,), (2 * np.pi,),
                      lambda u: np.column_stack([np.full(len(u), t), u[:, 0]]),
                      lambda u: np.full(len(u), sin_k(K, t)))
        return SurfaceChart((patch,), 2)

    def __repr__(self):
        return f"<ModelSpace2D {self.label}>"


class SquareBoundary:
    """The level set ``|x| + |y| = 1`` as four straight edges."""

    vertices = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])

    def chart(self):
        patches = []
        for i in range(4):
            P, Q = self.vertices[i], self.vertices[(i + 1) % 4]
            length = float(np.linalg.norm(Q - P))
            patches.append(Patch((0.0,), (1.0,),
                                 lambda u, P=P, Q=Q: P + u[:, :1] * (Q - P),
                                 lambda u, L=length: np.full(len(u), L)))
        return SurfaceChart(tuple(patches), 2)

    @staticmethod
    def normal(x):
        """Outward unit normal on edge interiors."""
        return np.sign(x) / np.sqrt(2)


# -- sampled 1-homogeneous families -----------------------------------------------

class StarShaped:
    """1-homogeneous ``f(x) = |x| / profile(x / |x|)``, differentiated numerically."""

    def __init__(self, profile, n):
        self.profile = profile
        self.ambient_dim = int(n)

    def f(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        rho = np.asarray(self.profile(x / r[:, None]), dtype=float)
        return r / rho

    def _d1(self, fn, x, v, h):
        return (-fn(x + 2 * h * v) + 8 * fn(x + h * v) - 8 * fn(x - h * v)
                + fn(x - 2 * h * v)) / (12 * h)

    def grad(self, x, h=1e-3):
        x = np.asarray(x, dtype=float)
        eye = np.eye(self.ambient_dim)
        return np.stack([self._d1(self.f, x, eye[j], h) for j in range(self.ambient_dim)],
                        axis=-1)

    def laplacian(self, x, h=1e-3):
        x = np.asarray(x, dtype=float)
        f0 = self.f(x)
        out = np.zeros(len(x))
        for e in np.eye(self.ambient_dim):
            out += (-self.f(x + 2 * h * e) + 16 * self.f(x + h * e) - 30 * f0
                    + 16 * self.f(x - h * e) - self.f(x - 2 * h * e)) / (12 * h * h)
        return out

    def lap_over_gradsq(self, x):
        return self.laplacian(x) / np.sum(self.grad(x) ** 2, axis=-1)

    def G(self, x, h=1e-2):
        x = np.asarray(x, dtype=float)
        g = self.grad(x)
        v = g / np.sum(g * g, axis=-1)[:, None]
        q = self.lap_over_gradsq
        return (-q(x + 2 * h * v) + 8 * q(x + h * v) - 8 * q(x - h * v)
                + q(x - 2 * h * v)) / (12 * h)

    def normal_extension(self, x, t=1.0):
        g = self.grad(x)
        return (self.f(x) / (t * np.sum(g * g, axis=-1)))[:, None] * g

    def normal_extension_jacobian(self, x, t=1.0, h=1e-2):
        eye = np.eye(self.ambient_dim)
        fn = lambda y: self.normal_extension(y, t)
        cols = [self._d1(fn, x, eye[j], h) for j in range(self.ambient_dim)]
        return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class HomogeneousConstants:
    C1: float
    C2: float
    C3: float
    C4: float
    A: float
    B: float
    n_samples: int
    sampled: bool = True


def quasi_random_sphere(n, n_samples, seed=0):
    sampler = qmc.Halton(d=n, scramble=True, seed=seed)
    u = np.clip(sampler.random(n_samples), 1e-12, 1 - 1e-12)
    z = ndtri(u)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def homogeneous_constants_sampled(profile, n, n_samples=10_000, seed=0):
    """Sampled constants for the 1-homogeneous family built on ``profile``.

    ``C1, C2`` bracket ``t q`` and ``C3`` bounds ``t^2 G`` from below on the
    sample; ``C4`` is the largest value of
    ``-(div X - 2 <grad_e X, e>)`` over unit ``e`` for the extension field
    ``X = f grad f / |grad f|^2``.  ``A = C2 + C4`` and
    ``B = C3 + C1 C2 + C1 C4`` (so ``rho = B / t^2``).  These are estimates
    from the sample, not certified bounds.
    """
    u = quasi_random_sphere(n, n_samples, seed)
    rho = np.asarray(profile(u), dtype=float)
    if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
        raise ValueError("profile must be positive on the unit sphere")
    fam = StarShaped(profile, n)
    x = rho[:, None] * u  # points on the level set f = 1
    q = fam.lap_over_gradsq(x)
    G = fam.G(x)
    J = fam.normal_extension_jacobian(x)
    sym = 0.5 * (J + np.swapaxes(J, -1, -2))
    lam_max = np.linalg.eigvalsh(sym)[:, -1]
    form = np.trace(J, axis1=-2, axis2=-1) - 2 * lam_max
    C1, C2, C3, C4 = float(q.min()), float(q.max()), float(G.min()), float(-form.min())
    return HomogeneousConstants(C1, C2, C3, C4, C2 + C4, C3 + C1 * C2 + C1 * C4, n_samples)


def ellipse_profile(semi_axes):
    a = np.asarray(semi_axes, dtype=float)
    return lambda u: 1.0 / np.linalg.norm(u / a, axis=-1)


def chart_at(family, t):
    return family.chart_at(t)

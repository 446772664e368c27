"""Exactly harmonic test functions with analytic gradients.

Euclidean functions are :class:`HarmonicFn` objects evaluated on ``(N, n)``
point arrays.  Model-space harmonics live in geodesic polar coordinates and
are :class:`ModelHarmonic` objects evaluated at ``(t, theta)``.
"""

import itertools
import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .comparison import cos_k, sin_k


@dataclass(frozen=True)
class HarmonicFn:
    ambient_dim: int
    value: Callable
    gradient: Callable
    label: str
    degree: Optional[int] = None
    # Delta h = eigenvalue * h; zero for harmonic functions.
    eigenvalue: float = 0.0

    def __call__(self, x):
        return self.value(x)

    def normal_derivative(self, x, normal):
        return np.sum(self.gradient(x) * normal, axis=-1)


def planar_homogeneous(k, a=1.0, b=0.0):
    """``t^k (a cos k theta + b sin k theta)``, i.e. ``a Re z^k + b Im z^k``."""
    k = int(k)
    if k < 0:
        raise ValueError("degree must be >= 0")

    def value(x):
        x = np.asarray(x, dtype=float)
        zk = (x[:, 0] + 1j * x[:, 1]) ** k
        return a * zk.real + b * zk.imag

    def gradient(x):
        x = np.asarray(x, dtype=float)
        if k == 0:
            return np.zeros_like(x)
        dz = k * (x[:, 0] + 1j * x[:, 1]) ** (k - 1)
        return np.column_stack([a * dz.real + b * dz.imag, -a * dz.imag + b * dz.real])

    return HarmonicFn(2, value, gradient, f"planar:k={k},a={a:g},b={b:g}", degree=k)


def polynomial(n, terms, label, degree=None):
    """Harmonic polynomial from ``{exponent tuple: coefficient}``.

    Harmonicity is the caller's responsibility; :func:`harmonicity_residual`
    checks it.
    """
    exps = np.array(list(terms.keys()), dtype=int).reshape(-1, n)
    coefs = np.array(list(terms.values()), dtype=float)

    def value(x):
        x = np.asarray(x, dtype=float)
        return np.prod(x[:, None, :] ** exps[None], axis=-1) @ coefs

    def gradient(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for i in range(n):
            e = exps.copy()
            c = coefs * e[:, i]
            e[:, i] = np.maximum(e[:, i] - 1, 0)
            out[:, i] = np.prod(x[:, None, :] ** e[None], axis=-1) @ c
        return out

    if degree is None:
        degree = int(exps.sum(axis=1).max()) if len(exps) else 0
    return HarmonicFn(n, value, gradient, label, degree=degree)


def _mono(n, **powers):
    e = [0] * n
    for name, p in powers.items():
        e[int(name[1:]) - 1] += p
    return tuple(e)


def poly_catalog(n, max_degree=3):
    """Curated degree <= 3 harmonic polynomials in ``n`` variables."""
    n = int(n)
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 <= max_degree <= 3:
        raise ValueError("max_degree must be in 0..3")
    zero = (0,) * n
    out = [polynomial(n, {zero: 1.0}, "1", 0)]
    if max_degree >= 1:
        for i in range(1, n + 1):
            out.append(polynomial(n, {_mono(n, **{f"x{i}": 1}): 1.0}, f"x{i}", 1))
    if max_degree >= 2:
        for i, j in itertools.combinations(range(1, n + 1), 2):
            out.append(polynomial(n, {_mono(n, **{f"x{i}": 1, f"x{j}": 1}): 1.0},
                                  f"x{i}x{j}", 2))
        for i, j in itertools.combinations(range(1, n + 1), 2):
            out.append(polynomial(n, {_mono(n, **{f"x{i}": 2}): 1.0,
                                      _mono(n, **{f"x{j}": 2}): -1.0},
                                  f"x{i}^2-x{j}^2", 2))
    if max_degree >= 3:
        for i, j in itertools.permutations(range(1, n + 1), 2):
            out.append(polynomial(n, {_mono(n, **{f"x{i}": 3}): 1.0,
                                      _mono(n, **{f"x{i}": 1, f"x{j}": 2}): -3.0},
                                  f"x{i}^3-3x{i}x{j}^2", 3))
        if n >= 3:
            out.append(polynomial(n, {_mono(n, x1=1, x2=1, x3=1): 1.0}, "x1x2x3", 3))
    return out


def harmonic_sum(parts, label=None):
    """Sum of Euclidean harmonics sharing one dimension (mixed degrees allowed)."""
    n = parts[0].ambient_dim
    return HarmonicFn(
        n,
        lambda x: sum(p.value(x) for p in parts),
        lambda x: sum(p.gradient(x) for p in parts),
        label or "+".join(p.label for p in parts),
        degree=None,
    )


def exp_cos(nu):
    """``e^{nu x} cos(nu y + pi/2) = -e^{nu x} sin(nu y)``."""
    nu = float(nu)
    if nu <= 0:
        raise ValueError("nu must be positive")

    def value(x):
        x = np.asarray(x, dtype=float)
        return -np.exp(nu * x[:, 0]) * np.sin(nu * x[:, 1])

    def gradient(x):
        x = np.asarray(x, dtype=float)
        e = np.exp(nu * x[:, 0])
        return np.column_stack([-nu * e * np.sin(nu * x[:, 1]), -nu * e * np.cos(nu * x[:, 1])])

    return HarmonicFn(2, value, gradient, f"expcos:nu={nu:g}")


def eigen_extension_integrand(n, k_eig, direction=None):
    """``u(x) = exp(k <d, x>)`` solving ``Delta u = k^2 u`` on ``R^n``."""
    n = int(n)
    d = np.zeros(n) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        d[0] = 1.0
    if abs(np.linalg.norm(d) - 1) > 1e-12:
        raise ValueError("direction must be a unit vector")
    k = float(k_eig)

    def value(x):
        return np.exp(k * (np.asarray(x, dtype=float) @ d))

    def gradient(x):
        return k * value(x)[:, None] * d

    dir_s = ",".join(f"{v:g}" for v in d)
    return HarmonicFn(n, value, gradient, f"eigen:k={k:g},dir={dir_s}", eigenvalue=k * k)


@dataclass(frozen=True)
class ModelHarmonic:
    """``tan_K(t/2)^k (a cos k theta + b sin k theta)`` in geodesic polar coordinates."""

    K: float
    k: int
    a: float = 1.0
    b: float = 0.0

    @property
    def label(self):
        return f"model:k={self.k},a={self.a:g},b={self.b:g}"

    def _radial(self, t):
        t = np.asarray(t, dtype=float)
        half = 0.5 * t
        return sin_k(self.K, half) / cos_k(self.K, half)

    def _angular(self, theta):
        return self.a * np.cos(self.k * theta) + self.b * np.sin(self.k * theta)

    def value(self, t, theta):
        if self.k == 0:
            return self._angular(theta) + 0.0 * np.asarray(t)
        return self._radial(t) ** self.k * self._angular(theta)

    def dt(self, t, theta):
        if self.k == 0:
            return 0.0 * (np.asarray(t) + np.asarray(theta))
        # d/dt tan_K(t/2) = 1 / (2 cos_K(t/2)^2)
        c = cos_k(self.K, 0.5 * np.asarray(t, dtype=float))
        return (self.k * self._radial(t) ** (self.k - 1) / (2 * c * c)
                * self._angular(theta))

    def dtheta(self, t, theta):
        if self.k == 0:
            return 0.0 * (np.asarray(t) + np.asarray(theta))
        ang = self.k * (-self.a * np.sin(self.k * theta) + self.b * np.cos(self.k * theta))
        return self._radial(t) ** self.k * ang


def model_space_harmonic(K, k, a=1.0, b=0.0):
    k = int(k)
    if k < 0:
        raise ValueError("k must be >= 0")
    return ModelHarmonic(float(K), k, float(a), float(b))


def model_laplacian_residual(h, t, theta, step=1e-4):
    """``h_tt + cot_K h_t + h_thetatheta / sin_K^2`` by central differences."""
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    v = h.value
    htt = (v(t + step, theta) - 2 * v(t, theta) + v(t - step, theta)) / step ** 2
    hqq = (v(t, theta + step) - 2 * v(t, theta) + v(t, theta - step)) / step ** 2
    s = sin_k(h.K, t)
    return htt + cos_k(h.K, t) / s * h.dt(t, theta) + hqq / s ** 2


def harmonicity_residual(h, x, step=1e-3):
    """Scaled residual ``|Delta h - lambda h| / max(1, |h|)`` by 5-point differences."""
    x = np.asarray(x, dtype=float)
    f0 = h.value(x)
    lap = np.zeros(len(x))
    for e in np.eye(h.ambient_dim):
        lap += (-h.value(x + 2 * step * e) + 16 * h.value(x + step * e) - 30 * f0
                + 16 * h.value(x - step * e) - h.value(x - 2 * step * e)) / (12 * step ** 2)
    return np.abs(lap - h.eigenvalue * f0) / np.maximum(1.0, np.abs(f0))


# -- label parsing -------------------------------------------------------------

def parse_params(text):
    """``"a=1,2,k=3"`` -> ``{"a": ["1", "2"], "k": ["3"]}``."""
    out = {}
    key = None
    for tok in filter(None, (s.strip() for s in text.split(","))):
        if "=" in tok:
            key, val = tok.split("=", 1)
            out[key.strip()] = [val.strip()]
        elif key is None:
            raise ValueError(f"value {tok!r} without a key")
        else:
            out[key].append(tok)
    return out


def harmonic_from_label(label, n=None):
    """Build a harmonic from a CLI label such as ``planar:k=3,a=1,b=0``."""
    kind, _, rest = label.partition(":")
    kind = kind.strip()
    if kind == "poly":
        if n is None:
            raise ValueError("poly labels need the ambient dimension")
        name = rest.strip()
        if re.fullmatch(r"const|1", name):
            name = "1"
        for item in poly_catalog(n, 3):
            if item.label == name:
                return item
        raise ValueError(f"no catalog polynomial {name!r} in dimension {n}")
    p = parse_params(rest)

    def num(key, default):
        return float(p[key][0]) if key in p else default

    if kind == "planar":
        return planar_homogeneous(int(num("k", 0)), num("a", 1.0), num("b", 0.0))
    if kind == "expcos":
        return exp_cos(num("nu", 1.0))
    if kind == "model":
        return model_space_harmonic(num("K", 0.0), int(num("k", 0)), num("a", 1.0), num("b", 0.0))
    if kind == "eigen":
        dim = int(num("n", n or 2))
        d = [float(v) for v in p["dir"]] if "dir" in p else None
        return eigen_extension_integrand(dim, num("k", 1.0), d)
    raise ValueError(f"unknown harmonic kind {kind!r}")

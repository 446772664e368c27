"""Surface and region integrals over level-set charts.

A :class:`SurfaceChart` is a list of patches, each an axis-aligned parameter
box with a map into ambient space.  Integrals use tensor-product
Gauss-Legendre rules on every box; the area element is either supplied
analytically or recovered from the Gram determinant of a finite-difference
Jacobian.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when degree doubling fails to reach the requested accuracy."""


@dataclass(frozen=True)
class Patch:
    lower: tuple
    upper: tuple
    map: Callable
    area_element: Optional[Callable] = None

    @property
    def param_dim(self):
        return len(self.lower)


@dataclass(frozen=True)
class SurfaceChart:
    patches: tuple
    ambient_dim: int

    def __post_init__(self):
        dims = {p.param_dim for p in self.patches}
        if len(dims) != 1:
            raise ValueError("all patches must share one parameter dimension")

    @property
    def param_dim(self):
        return self.patches[0].param_dim

    def nodes(self, degree):
        """Ambient nodes and weights (area element folded in) at ``degree``."""
        pts, wts = [], []
        for patch in self.patches:
            u, w = box_rule(patch.lower, patch.upper, degree)
            x = np.asarray(patch.map(u), dtype=float).reshape(len(u), self.ambient_dim)
            if patch.area_element is not None:
                dA = np.asarray(patch.area_element(u), dtype=float).reshape(len(u))
            else:
                dA = gram_area_element(patch, u)
            pts.append(x)
            wts.append(w * dA)
        return np.concatenate(pts), np.concatenate(wts)


@dataclass(frozen=True)
class QuadratureSpec:
    degree: int = 64
    refinements: int = 1
    coarea_degree: int = 48

    def __post_init__(self):
        if self.degree < 4 or self.coarea_degree < 4:
            raise ValueError("quadrature degree must be >= 4")
        if self.refinements < 0:
            raise ValueError("refinements must be >= 0")


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=64)
def _gauss_legendre(degree):
    x, w = np.polynomial.legendre.leggauss(degree)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=256)
def _box_rule_cached(lower, upper, degree):
    d = len(lower)
    if d == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, w = _gauss_legendre(degree)
    axes, weights = [], []
    for lo, hi in zip(lower, upper):
        half = 0.5 * (hi - lo)
        axes.append(lo + half * (x + 1.0))
        weights.append(half * w)
    grids = np.meshgrid(*axes, indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=-1)
    wg = np.meshgrid(*weights, indexing="ij")
    wt = np.prod(np.stack([g.ravel() for g in wg], axis=-1), axis=-1)
    u.setflags(write=False)
    wt.setflags(write=False)
    return u, wt


def box_rule(lower, upper, degree):
    """Tensor-product Gauss-Legendre nodes ``(N, d)`` and weights on a box."""
    return _box_rule_cached(tuple(float(v) for v in lower),
                            tuple(float(v) for v in upper), int(degree))


def gram_area_element(patch, u, rel_step=1e-6):
    """sqrt(det(J^T J)) with J from central differences of the patch map."""
    u = np.asarray(u, dtype=float)
    cols = []
    for j in range(patch.param_dim):
        h = rel_step * (patch.upper[j] - patch.lower[j])
        e = np.zeros(patch.param_dim)
        e[j] = h
        cols.append((np.asarray(patch.map(u + e)) - np.asarray(patch.map(u - e))) / (2 * h))
    if not cols:
        return np.ones(len(u))
    J = np.stack(cols, axis=-1)
    gram = np.einsum("nij,nik->njk", J, J)
    return np.sqrt(np.linalg.det(gram))


def integrate_fixed(chart, integrand, degree):
    """Single fixed-degree rule; returns ``(value, integral of |integrand|)``."""
    x, w = chart.nodes(degree)
    vals = np.asarray(integrand(x), dtype=float)
    return float(np.dot(w, vals)), float(np.dot(w, np.abs(vals)))


def surface_integral(chart, integrand, spec=DEFAULT_SPEC, rtol=1e-4):
    """Integrate ``integrand`` over the chart image.

    Returns ``(value, err_est)`` where ``err_est = |I(d) - I(2d)|``.  When the
    estimate exceeds ``rtol`` times the scale of the integral the degree is
    doubled, at most ``spec.refinements`` times; persisting disagreement
    raises :class:`QuadratureError`.
    """
    degree = spec.degree
    value, scale = integrate_fixed(chart, integrand, degree)
    finer, _ = integrate_fixed(chart, integrand, 2 * degree)
    err = abs(value - finer)
    for _ in range(spec.refinements):
        if err <= rtol * max(abs(value), scale):
            break
        degree *= 2
        value, scale = finer, integrate_fixed(chart, integrand, degree)[1]
        finer, _ = integrate_fixed(chart, integrand, 2 * degree)
        err = abs(value - finer)
    if err > rtol * max(abs(value), scale):
        raise QuadratureError(
            f"surface integral not converged at degree {degree}: "
            f"err_est={err:.3e}, value={value:.6e}")
    return value, err


def region_integral_coarea(family, integrand, t, spec=DEFAULT_SPEC):
    """Volume integral over ``{f < t}`` through the coarea formula.

    The outer integral runs over ``s`` in ``(0, t)`` with Gauss-Legendre
    nodes (which never touch ``s = 0``); each inner surface integral of
    ``integrand / |grad f|`` uses the fixed rule at ``spec.degree``.
    """
    family.check_t(t)
    s_nodes, s_weights = box_rule((0.0,), (float(t),), spec.coarea_degree)
    total = 0.0
    for s, ws in zip(s_nodes[:, 0], s_weights):
        chart = family.chart_at(s, check=False)
        x, w = chart.nodes(spec.degree)
        vals = np.asarray(integrand(x), dtype=float) / family.grad_norm(x)
        total += ws * float(np.dot(w, vals))
    return total


def dirichlet_region(family, h, t, spec=DEFAULT_SPEC):
    """Dirichlet energy of ``h`` over the sublevel region ``{f < t}``."""
    return region_integral_coarea(
        family, lambda x: np.sum(h.gradient(x) ** 2, axis=-1), t, spec)


def region_integral_mc(region_test, bbox, integrand, n_samples, seed, chunk=200_000):
    """Plain Monte Carlo over a bounding box; returns ``(value, std_err)``.

    Samples are drawn in fixed-size chunks from ``numpy.random.default_rng(seed)``
    so a given seed reproduces the value bit for bit.
    """
    bbox = np.asarray(bbox, dtype=float)
    lo, hi = bbox[:, 0], bbox[:, 1]
    volume = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    s1 = s2 = 0.0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        x = lo + (hi - lo) * rng.random((m, len(lo)))
        inside = np.asarray(region_test(x), dtype=bool)
        vals = np.zeros(m)
        if inside.any():
            vals[inside] = integrand(x[inside])
        s1 += vals.sum()
        s2 += np.dot(vals, vals)
        done += m
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0)
    return volume * mean, volume * np.sqrt(var / n_samples)

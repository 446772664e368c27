"""Weighted level-set norms of harmonic functions and the checks built on them.

``H(t) = int_{S_t} h^2 |grad f| dsigma`` is evaluated by Gauss-Legendre
quadrature on the family's charts.  Its first derivative comes from the
exact first-variation formula

    H'(t) = 2 int h h_n dsigma + int h^2 (Delta f / |grad f|^2) |grad f| dsigma,

and the second logarithmic derivative from a five-point stencil on
``log H``.  Every check returns a :class:`VerificationReport` whose rows
record ``lhs``, ``rhs`` and ``margin = lhs - rhs``.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .comparison import cot_k, sin_k
from .families import ModelSpace2D, SquareBoundary, radial
from .harmonics import ModelHarmonic, eigen_extension_integrand, exp_cos
from .quadrature import (DEFAULT_SPEC, box_rule, dirichlet_region,
                         region_integral_coarea, region_integral_mc)

H_FD_REL_STEP = 1e-4


def logdd_step(t):
    return max(1e-3 * t, 1e-4)


@dataclass
class CheckRow:
    check: str
    t: float
    lhs: float
    rhs: float
    tol: float
    two_sided: bool = False

    @property
    def margin(self):
        return self.lhs - self.rhs

    @property
    def passed(self):
        if not (np.isfinite(self.lhs) and np.isfinite(self.rhs)):
            return False
        if self.two_sided:
            return abs(self.margin) <= self.tol
        return self.margin >= -self.tol

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"


@dataclass
class VerificationReport:
    name: str
    rows: list = field(default_factory=list)
    family: str = ""
    harmonic: str = ""
    tolerance: float = 0.0
    spec: object = None
    status: Optional[str] = None
    notes: list = field(default_factory=list)
    curve: object = None

    def __post_init__(self):
        if self.status is None:
            self.status = "pass" if all(r.passed for r in self.rows) else "fail"

    @property
    def passed(self):
        return self.status == "pass"

    @property
    def worst_margin(self):
        """Smallest ``margin + tol`` (negative means a failure)."""
        if not self.rows:
            return float("nan")
        return min((r.tol - abs(r.margin)) if r.two_sided else (r.margin + r.tol)
                   for r in self.rows)


# -- surface moments --------------------------------------------------------------

def _is_model(family):
    return isinstance(family, ModelSpace2D)


def _check_pair(family, h):
    if _is_model(family) != isinstance(h, ModelHarmonic):
        raise ValueError("model-space families need model-space harmonics and vice versa")
    if _is_model(family) and abs(family.K - h.K) > 1e-14:
        raise ValueError("harmonic curvature differs from the family curvature")
    if not _is_model(family) and h.ambient_dim != family.ambient_dim:
        raise ValueError("harmonic and family dimensions differ")


def surface_moments(family, h, t, spec=DEFAULT_SPEC):
    """``(H, int h h_n, int h^2 q |grad f|)`` on the level set ``S_t``."""
    if _is_model(family):
        theta, w = box_rule((0.0,), (2 * np.pi,), spec.degree)
        theta = theta[:, 0]
        s = sin_k(family.K, t)
        v, vt = h.value(t, theta), h.dt(t, theta)
        H = s * float(np.dot(w, v * v))
        return H, s * float(np.dot(w, v * vt)), cot_k(family.K, t) * H
    x, w = family.chart_at(t, check=False).nodes(spec.degree)
    g = family.grad(x)
    gn = np.linalg.norm(g, axis=-1)
    v = h.value(x)
    hn = np.sum(h.gradient(x) * g, axis=-1) / gn
    q = family.lap_over_gradsq(x)
    return (float(np.dot(w, v * v * gn)), float(np.dot(w, v * hn)),
            float(np.dot(w, v * v * q * gn)))


def norm_H(family, h, t, spec=DEFAULT_SPEC):
    _check_pair(family, h)
    family.check_t(t)
    return surface_moments(family, h, t, spec)[0]


def dnorm_analytic(family, h, t, spec=DEFAULT_SPEC):
    _check_pair(family, h)
    family.check_t(t)
    _, hhn, hq = surface_moments(family, h, t, spec)
    return 2 * hhn + hq


def flux(family, h, t, spec=DEFAULT_SPEC):
    """Surface form ``int h h_n dsigma`` of the Dirichlet integral."""
    _check_pair(family, h)
    return surface_moments(family, h, t, spec)[1]


def _H(family, h, t, spec):
    return surface_moments(family, h, t, spec)[0]


# -- norm curves ---------------------------------------------------------------

@dataclass
class NormCurve:
    t: np.ndarray
    H: np.ndarray
    dH_analytic: np.ndarray
    dH_fd: np.ndarray
    d2logH_fd: np.ndarray
    D: np.ndarray
    tau: np.ndarray = None
    rho: np.ndarray = None

    @property
    def N(self):
        return self.t * self.dH_analytic / self.H

    @property
    def dlogH(self):
        return self.dH_analytic / self.H

    @property
    def lhs(self):
        return self.d2logH_fd + self.tau * self.dlogH

    @property
    def margin(self):
        return self.lhs - self.rho

    def rows(self):
        """Records in the ``curve.csv`` column order."""
        for i in range(len(self.t)):
            yield {
                "t": self.t[i], "H": self.H[i], "dH_analytic": self.dH_analytic[i],
                "dH_fd": self.dH_fd[i], "D": self.D[i], "N": self.N[i],
                "logH_dd": self.d2logH_fd[i], "tau": self.tau[i], "rho": self.rho[i],
                "margin": self.margin[i],
            }


def _validate_grid(family, t_grid, min_points=1):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < min_points:
        raise ValueError(f"t_grid needs at least {min_points} points, got {t.size}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    for ti in t:
        family.check_t(ti)
    return t


def build_curve(family, h, t_grid, spec=DEFAULT_SPEC, tau=None, rho=None):
    """Evaluate ``H``, both derivatives of ``H`` and ``(log H)''`` on a grid.

    ``tau``/``rho`` default to the family's bound functions.
    """
    _check_pair(family, h)
    t = _validate_grid(family, t_grid)
    H, dH, dH_fd, dd, D = (np.empty(len(t)) for _ in range(5))
    for i, ti in enumerate(t):
        Hi, hhn, hq = surface_moments(family, h, ti, spec)
        if not Hi > 0:
            raise ValueError(f"H({ti}) = {Hi} is not positive")
        H[i], D[i], dH[i] = Hi, hhn, 2 * hhn + hq
        s = H_FD_REL_STEP * ti
        dH_fd[i] = (_H(family, h, ti + s, spec) - _H(family, h, ti - s, spec)) / (2 * s)
        s = logdd_step(ti)
        L = [math.log(_H(family, h, ti + j * s, spec)) if j else math.log(Hi)
             for j in (-2, -1, 0, 1, 2)]
        dd[i] = (-L[0] + 16 * L[1] - 30 * L[2] + 16 * L[3] - L[4]) / (12 * s * s)
    bounds = getattr(family, "bounds", None)
    tau_fn = tau or bounds.tau
    rho_fn = rho or bounds.rho
    tau_v = np.broadcast_to(np.asarray(tau_fn(t), dtype=float), t.shape).copy()
    rho_v = np.broadcast_to(np.asarray(rho_fn(t), dtype=float), t.shape).copy()
    return NormCurve(t, H, dH, dH_fd, dd, D, tau_v, rho_v)


# -- differential inequalities -----------------------------------------------------

def differential_inequality_check(family, h, t_grid, tol=1e-4, tau=None, rho=None,
                                  spec=DEFAULT_SPEC, sharp_tol=None, name="differential_inequality"):
    """Check ``(log H)'' + tau (log H)' >= rho`` at every grid point.

    Without explicit ``tau``/``rho`` the family bounds are used, and the check
    refuses to give a verdict when ``K + M < 0`` somewhere on the grid.  Each
    row passes when ``margin >= -tol (1 + |rho|)``; with ``sharp_tol`` the row
    must instead satisfy ``|margin| <= sharp_tol``.
    """
    t = np.asarray(t_grid, dtype=float)
    if len(t) < 5:
        raise ValueError("differential inequality check needs at least 5 grid points")
    label = getattr(h, "label", "")
    if tau is None and rho is None:
        b = family.bounds
        tm = b.tau(t)
        if np.any(np.asarray(tm) < 0):
            return VerificationReport(name, [], family.label, label, tol, spec,
                                      status="hypothesis violated",
                                      notes=["K(t) + M(t) < 0 on part of the grid"])
    curve = build_curve(family, h, t, spec, tau, rho)
    rows = []
    for ti, lhs, r in zip(curve.t, curve.lhs, curve.rho):
        if sharp_tol is None:
            rows.append(CheckRow(name, ti, lhs, r, tol * (1 + abs(r))))
        else:
            rows.append(CheckRow(name, ti, lhs, r, sharp_tol, two_sided=True))
    return VerificationReport(name, rows, family.label, label, tol, spec, curve=curve)


def sphere_theorem_tau_rho(kappa, K, n):
    def tau(t):
        return cot_k(K, t) + (n + 1) * (cot_k(kappa, t) - cot_k(K, t))

    const = -(n - 1) * K + (n - 2) * min(K, 0.0) - (n - 1) * (K - kappa)

    def rho(t):
        return const + 0.0 * np.asarray(t, dtype=float)

    return tau, rho


def sphere_theorem_check(kappa, K, n, h, t_grid, family=None, spec=DEFAULT_SPEC,
                         tol=1e-4, sharp_tol=None):
    """Geodesic-sphere inequality with curvature bounds ``kappa <= sec <= K``.

    Supported configurations: flat ``R^n`` (``kappa = K = 0``) and the 2D
    space form (``kappa = K``, ``n = 2``).
    """
    kappa, K, n = float(kappa), float(K), int(n)
    if kappa > K:
        raise ValueError("need kappa <= K")
    if family is None:
        if n == 2 and kappa == K and isinstance(h, ModelHarmonic):
            family = ModelSpace2D(K)
        elif kappa == 0 and K == 0:
            family = radial(n)
        elif n == 2 and kappa == K:
            family = ModelSpace2D(K)
        else:
            raise ValueError("only flat space or 2D constant curvature is supported")
    tau, rho = sphere_theorem_tau_rho(kappa, K, n)
    return differential_inequality_check(family, h, t_grid, tol, tau, rho, spec,
                                         sharp_tol, name="sphere_theorem")


def eigen_convexity_check(n, k_eig, t_grid, direction=None, spec=DEFAULT_SPEC, tol=1e-4):
    """Flat-space convexity of spherical norms of ``exp(k <d, x>)``."""
    u = eigen_extension_integrand(n, k_eig, direction)
    rep = sphere_theorem_check(0.0, 0.0, n, u, t_grid, spec=spec, tol=tol)
    rep.name = "eigen_convexity"
    for r in rep.rows:
        r.check = "eigen_convexity"
    return rep


def growth_check(family, h, t, spec=DEFAULT_SPEC, tol=1e-4):
    """``H'(t) >= 2 int_{R_t} |grad h|^2 + m(t) H(t)``.

    On the 2D space form the Dirichlet integral is taken in its surface form.
    """
    _check_pair(family, h)
    family.check_t(t)
    H, hhn, hq = surface_moments(family, h, t, spec)
    D = hhn if _is_model(family) else dirichlet_region(family, h, t, spec)
    rhs = 2 * D + float(family.bounds.m(t)) * H
    row = CheckRow("growth", t, 2 * hhn + hq, rhs, tol * (1 + abs(rhs)))
    return VerificationReport("growth", [row], family.label, h.label, tol, spec)


# -- integrated forms --------------------------------------------------------------

def solve_alpha(A, t0, t1, t2):
    """Interpolation weight for the three-point inequality."""
    if not 0 < t0 < t1 < t2:
        raise ValueError("need 0 < t0 < t1 < t2")
    if A < 1:
        raise ValueError("A must be >= 1")
    if A - 1 < 1e-12:
        return math.log(t2 / t1) / math.log(t2 / t0)
    p, q = (t1 / t2) ** (A - 1), (t1 / t0) ** (A - 1)
    return (1 - p) / (q - p)


def three_point_bound(A, B, t, H):
    """Right-hand side of the three-point inequality for ``H(t1)``.

    ``B`` uses the convention ``rho = B / t^2``.
    """
    t0, t1, t2 = t
    H0, _, H2 = H
    alpha = solve_alpha(A, t0, t1, t2)
    if A - 1 < 1e-12:
        log_pref = 0.5 * B * math.log(t0 / t1) * math.log(t2 / t1)
    else:
        c = -B / (A - 1)
        log_pref = c * (alpha * math.log(t0 / t1) + (1 - alpha) * math.log(t2 / t1))
    return alpha, log_pref + alpha * math.log(H0) + (1 - alpha) * math.log(H2)


def three_point_check(A, B, t, H, tol=1e-8):
    """Compare ``log H(t1)`` with the log of its three-point bound."""
    if A < 1:
        raise ValueError("A must be >= 1")
    if any(v <= 0 for v in H):
        raise ValueError("H samples must be positive")
    alpha, log_bound = three_point_bound(A, B, t, H)
    if not -1e-12 <= alpha <= 1 + 1e-12:
        raise ArithmeticError(f"alpha={alpha} outside [0, 1]")
    return CheckRow("three_point", t[1], log_bound, math.log(H[1]), tol)


def three_point_suite(family, h, A, B, t_points, spec=DEFAULT_SPEC, tol=1e-8):
    t_points = _validate_grid(family, t_points, 3)
    Hs = [norm_H(family, h, ti, spec) for ti in t_points]
    rows = []
    for i, j, k in itertools.combinations(range(len(t_points)), 3):
        rows.append(three_point_check(A, B, (t_points[i], t_points[j], t_points[k]),
                                      (Hs[i], Hs[j], Hs[k]), tol))
    return VerificationReport("three_point", rows, family.label, h.label, tol, spec)


def frequency_function(A, B, curve):
    """Monotone frequency ``N_H`` for ``tau = A/t``, ``rho = B/t^2``."""
    t = curve.t
    N = t * curve.dH_analytic / curve.H
    if A - 1 < 1e-12:
        return N - B * np.log(t)
    return t ** (A - 1) * (N - B / (A - 1))


def frequency_monotonicity_check(A, B, curve, tol=1e-6):
    """``N_H(t_{i+1}) >= N_H(t_i) - tol`` for consecutive grid points."""
    if A < 1:
        raise ValueError("A must be >= 1")
    if len(curve.t) < 10:
        raise ValueError("frequency monotonicity needs at least 10 grid points")
    NH = frequency_function(A, B, curve)
    rows = [CheckRow("frequency_monotonicity", curve.t[i + 1], NH[i + 1], NH[i], tol)
            for i in range(len(NH) - 1)]
    return VerificationReport("frequency_monotonicity", rows, tolerance=tol, curve=curve)


# -- Hormander / Rellich identity -----------------------------------------------------

def tangential_minus_normal(family, h, t, spec=DEFAULT_SPEC):
    """``int_{S_t} (|grad_S h|^2 - h_n^2) / |grad f| dsigma``."""
    x, w = family.chart_at(t, check=False).nodes(spec.degree)
    g = family.grad(x)
    gn = np.linalg.norm(g, axis=-1)
    dh = h.gradient(x)
    hn = np.sum(dh * g, axis=-1) / gn
    return float(np.dot(w, (np.sum(dh * dh, axis=-1) - 2 * hn * hn) / gn))


def rellich_volume_term(family, h, t, spec=DEFAULT_SPEC):
    """``int_{R_t} |grad h|^2 div X - 2 <grad_{grad h} X, grad h>`` for the extension X."""

    def integrand(x):
        dh = h.gradient(x)
        J = family.normal_extension_jacobian(x, t)
        return (np.sum(dh * dh, axis=-1) * np.trace(J, axis1=-2, axis2=-1)
                - 2 * np.einsum("ni,nij,nj->n", dh, J, dh))

    return region_integral_coarea(family, integrand, t, spec)


def hormander_identity_check(family, h, t, spec=DEFAULT_SPEC, tol=1e-4):
    _check_pair(family, h)
    family.check_t(t)
    lhs = tangential_minus_normal(family, h, t, spec)
    rhs = rellich_volume_term(family, h, t, spec)
    D = dirichlet_region(family, h, t, spec)
    scale = max(abs(lhs), abs(rhs), D / t)
    row = CheckRow("hormander_identity", t, lhs, rhs, tol * scale, two_sided=True)
    return VerificationReport("hormander_identity", [row], family.label, h.label, tol, spec)


def hormander_bound_check(family, h, t, spec=DEFAULT_SPEC, tol=1e-6):
    """``int (|grad_S h|^2 - h_n^2)/|grad f| >= -K(t) int_{R_t} |grad h|^2``."""
    _check_pair(family, h)
    family.check_t(t)
    lhs = tangential_minus_normal(family, h, t, spec)
    D = dirichlet_region(family, h, t, spec)
    rhs = -float(family.bounds.K(t)) * D
    row = CheckRow("hormander_bound", t, lhs, rhs, tol * (1 + abs(rhs)))
    return VerificationReport("hormander_bound", [row], family.label, h.label, tol, spec)


def divergence_identity_check(family, h, t, spec=DEFAULT_SPEC, tol=1e-4):
    """``int_{S_t} h h_n dsigma = int_{R_t} |grad h|^2``."""
    _check_pair(family, h)
    family.check_t(t)
    surf = flux(family, h, t, spec)
    vol = dirichlet_region(family, h, t, spec)
    scale = max(abs(surf), abs(vol), 1e-300)
    row = CheckRow("divergence_identity", t, surf, vol, tol * scale, two_sided=True)
    return VerificationReport("divergence_identity", [row], family.label, h.label, tol, spec)


def derivative_identity_check(family, h, t_grid, spec=DEFAULT_SPEC, tol=1e-5):
    """First-variation formula for ``H'`` against a central difference of ``H``."""
    curve = build_curve(family, h, t_grid, spec)
    rows = [CheckRow("derivative_identity", ti, a, b,
                     tol * max(abs(a), abs(b)) + 1e-13 * Hi / ti, two_sided=True)
            for ti, a, b, Hi in zip(curve.t, curve.dH_analytic, curve.dH_fd, curve.H)]
    return VerificationReport("derivative_identity", rows, family.label, h.label, tol, spec,
                              curve=curve)


def coarea_mc_check(family, integrand, t, n_samples=1_000_000, seed=0,
                    spec=DEFAULT_SPEC, n_sigma=3.0, name="coarea_mc"):
    """Coarea volume integral against Monte Carlo on the bounding box."""
    value = region_integral_coarea(family, integrand, t, spec)
    mc, se = region_integral_mc(lambda x: family.f(x) < t, family.bounding_box(t),
                                integrand, n_samples, seed)
    row = CheckRow(name, t, value, mc, n_sigma * se, two_sided=True)
    return VerificationReport(name, [row], family.label, "", n_sigma, spec)


# -- mean value and monotonicity ---------------------------------------------------

def mean_value_check(family, h, t_grid, spec=DEFAULT_SPEC, tol=1e-8, spread_tol=1e-8):
    """Constancy of ``F(t) = int h |grad f| / int |grad f|``.

    Requires ``Delta f / |grad f|^2`` constant on each level set; otherwise the
    report status is ``"hypothesis not met"`` and no verdict is given.
    """
    _check_pair(family, h)
    t = _validate_grid(family, t_grid)
    F = []
    for ti in t:
        x, w = family.chart_at(ti).nodes(spec.degree)
        q = family.lap_over_gradsq(x)
        if q.max() - q.min() > spread_tol * max(1.0, np.abs(q).max()):
            return VerificationReport(
                "mean_value", [], family.label, h.label, tol, spec,
                status="hypothesis not met",
                notes=[f"Delta f/|grad f|^2 varies by {q.max() - q.min():.3e} on S_{ti:g}"])
        gn = family.grad_norm(x)
        F.append(float(np.dot(w, h.value(x) * gn)) / float(np.dot(w, gn)))
    rows = [CheckRow("mean_value", ti, Fi, F[0], tol * max(1.0, abs(F[0])), two_sided=True)
            for ti, Fi in zip(t, F)]
    return VerificationReport("mean_value", rows, family.label, h.label, tol, spec)


def monotonicity_check(family, h, t_grid, spec=DEFAULT_SPEC, tol=1e-10):
    """``H(t_{i+1}) >= H(t_i)`` along the grid (the convex-``f`` corollary)."""
    _check_pair(family, h)
    t = _validate_grid(family, t_grid, 2)
    H = [norm_H(family, h, ti, spec) for ti in t]
    rows = [CheckRow("monotonicity", t[i + 1], H[i + 1], H[i], tol * max(1.0, abs(H[i])))
            for i in range(len(t) - 1)]
    notes = []
    m = np.asarray(family.bounds.m(t), dtype=float)
    if np.any(m < 0):
        notes.append("m(t) < 0 on part of the grid; monotonicity is not guaranteed there")
    return VerificationReport("monotonicity", rows, family.label, h.label, tol, spec,
                              notes=notes)


# -- Lipschitz counterexample ------------------------------------------------------

@dataclass(frozen=True)
class SquareRow:
    nu: float
    tangential_minus_normal: float
    tangential_reference: float
    tangential_exact: float
    flux: float
    flux_reference: float

    @property
    def ratio(self):
        return -self.tangential_minus_normal / self.flux


def square_reference_forms(nu):
    """Closed forms ``(tangential reference, tangential exact, flux)`` at ``nu``.

    The reference tangential value is ``-nu sqrt2 (2 sinh 2nu - 2 sin 2nu)``;
    integrating edge by edge gives exactly half of it.
    """
    tangential_exact = -nu * math.sqrt(2) * (math.sinh(2 * nu) - math.sin(2 * nu))
    return 2 * tangential_exact, tangential_exact, math.cosh(2 * nu) - 1


def square_counterexample(nu_list, degree=64):
    """Integrate the tangential-minus-normal energy and the flux on ``|x|+|y|=1``."""
    chart = SquareBoundary().chart()
    x, w = chart.nodes(degree)
    normal = SquareBoundary.normal(x)
    out = []
    for nu in nu_list:
        nu = float(nu)
        if not 0 < nu <= 8:
            raise ValueError("nu must lie in (0, 8]")
        h = exp_cos(nu)
        dh = h.gradient(x)
        hn = np.sum(dh * normal, axis=-1)
        tang = float(np.dot(w, np.sum(dh * dh, axis=-1) - 2 * hn * hn))
        fl = float(np.dot(w, h.value(x) * hn))
        ref, exact, flux_ref = square_reference_forms(nu)
        out.append(SquareRow(nu, tang, ref, exact, fl, flux_ref))
    return out


def square_counterexample_report(nu_list, degree=64, tol=1e-6):
    rows = []
    for r in square_counterexample(nu_list, degree):
        rows.append(CheckRow(f"square_tangential_reference[nu={r.nu:g}]", 1.0,
                             r.tangential_minus_normal, r.tangential_reference,
                             tol * abs(r.tangential_reference), two_sided=True))
        rows.append(CheckRow(f"square_tangential_exact[nu={r.nu:g}]", 1.0,
                             r.tangential_minus_normal, r.tangential_exact,
                             tol * abs(r.tangential_exact), two_sided=True))
        rows.append(CheckRow(f"square_flux[nu={r.nu:g}]", 1.0, r.flux, r.flux_reference,
                             tol * abs(r.flux_reference), two_sided=True))
    return VerificationReport("square_counterexample", rows, "square", "expcos", tol)

"""Command-line runner: ``levelconvex {suite NAME, curve, constants, counterexample}``.

Configuration comes from a flat ``key=value`` file (``--config``), then
``--key value`` flags, which win.  ``LEVELCONVEX_OUTPUT`` sets the default
output directory.  Exit status: 0 all rows pass, 1 some row fails, 2 bad
configuration.
"""

import argparse
import csv
import os
import re
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import convexity as cv
from .families import (Ellipsoid, ModelSpace2D, TorusDistance, ellipse_profile,
                       ellipsoid_AB, homogeneous_constants_sampled, radial, torus_CB)
from .harmonics import harmonic_from_label, parse_params, poly_catalog
from .quadrature import QuadratureSpec

OUTPUT_ENV = "LEVELCONVEX_OUTPUT"
CURVE_COLUMNS = ("t", "H", "dH_analytic", "dH_fd", "D", "N", "logH_dd", "tau", "rho", "margin")
REPORT_COLUMNS = ("check_name", "t", "lhs", "rhs", "margin", "verdict")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    suite: str = ""
    family: str = "radial:n=2"
    harmonic: str = "catalog"
    t_start: float = None
    t_end: float = None
    n_points: int = 10
    spacing: str = "linear"
    degree: int = 64
    refinements: int = 1
    coarea_degree: int = 48
    tolerance: float = None
    seed: int = 0
    samples: int = 1_000_000
    nu: str = "1,2,3"
    output: str = "levelconvex-out"
    plots: bool = True

    @property
    def quadrature(self):
        return QuadratureSpec(self.degree, self.refinements, self.coarea_degree)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, value):
    typ = _FIELD_TYPES[key]
    try:
        if typ is bool:
            low = str(value).strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(value)
            return low in ("1", "true", "yes")
        if typ is int:
            return int(value)
        if typ is float:
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {typ.__name__}") from None
    return str(value).strip()


def read_config_file(path):
    """``key=value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(file_values=None, flag_values=None, env=None):
    env = os.environ if env is None else env
    cfg = RunConfig()
    if env.get(OUTPUT_ENV):
        cfg.output = env[OUTPUT_ENV]
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (flag_values or {}).items() if v is not None})
    return replace(cfg, **{k: _coerce(k, v) for k, v in merged.items()})


# -- object construction -------------------------------------------------------

def make_family(spec):
    kind, _, rest = spec.partition(":")
    try:
        p = parse_params(rest)
    except ValueError as exc:
        raise ConfigError(f"family {spec!r}: {exc}") from None

    def one(key, default=None, conv=float):
        if key not in p:
            if default is None:
                raise ConfigError(f"family {spec!r} needs {key}=")
            return default
        return conv(p[key][0])

    try:
        if kind == "radial":
            return radial(one("n", 2, int))
        if kind == "ellipsoid":
            return Ellipsoid([float(v) for v in p.get("a", ["1", "1"])])
        if kind == "torus":
            return TorusDistance(one("n", 3, int), one("k", 1, int), one("eps", 0.3))
        if kind == "model":
            t_max = one("t_max", -1.0)
            return ModelSpace2D(one("K"), None if t_max < 0 else t_max)
    except ValueError as exc:
        raise ConfigError(f"family {spec!r}: {exc}") from None
    raise ConfigError(f"unknown family {kind!r} (radial, ellipsoid, torus, model)")


def make_harmonics(label, family):
    if label == "catalog":
        if isinstance(family, ModelSpace2D):
            raise ConfigError("the polynomial catalog needs a Euclidean family")
        return poly_catalog(family.ambient_dim)
    out = []
    for item in filter(None, (s.strip() for s in label.split(";"))):
        if isinstance(family, ModelSpace2D) and item.startswith("model") and "K=" not in item:
            item = item + (",K=" if ":" in item and item.split(":", 1)[1] else ":K=") + repr(family.K)
        try:
            out.append(harmonic_from_label(item, family.ambient_dim))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"harmonic {item!r}: {exc}") from None
    if not out:
        raise ConfigError("no harmonic given")
    return out


def make_grid(cfg, family, min_points):
    lo, hi = family.t_range
    t0 = cfg.t_start if cfg.t_start is not None else max(0.5, lo)
    t1 = cfg.t_end if cfg.t_end is not None else min(2.0, hi)
    if cfg.n_points < min_points:
        raise ConfigError(f"t_grid needs n_points >= {min_points} for this suite, got {cfg.n_points}")
    if not t0 < t1:
        raise ConfigError(f"t_grid needs t_start < t_end, got {t0} >= {t1}")
    if t0 < lo or t1 > hi:
        raise ConfigError(f"t_grid [{t0}, {t1}] leaves the t_range [{lo}, {hi}] of {family.label}")
    if cfg.spacing == "linear":
        return np.linspace(t0, t1, cfg.n_points)
    if cfg.spacing == "log":
        return np.geomspace(t0, t1, cfg.n_points)
    raise ConfigError(f"spacing must be linear or log, got {cfg.spacing!r}")


def family_constants(family):
    """``(A, B)`` with ``tau = A/t``, ``rho = B/t^2`` for the families that have them."""
    if isinstance(family, Ellipsoid):
        return ellipsoid_AB(family)
    if isinstance(family, TorusDistance):
        return torus_CB(family)
    raise ConfigError(f"{family.label} has no (A, B) constants")


# -- suites ----------------------------------------------------------------------

SUITE_TOLERANCE = {
    "flat_sharpness": 1e-6, "model_sharpness": 1e-6, "differential_inequality": 1e-4,
    "derivative_identity": 1e-5, "growth": 1e-4, "hormander": 1e-4, "three_point": 1e-8,
    "frequency": 1e-6, "mean_value": 1e-8, "monotonicity": 1e-10, "eigen_convexity": 1e-4,
    "square_counterexample": 1e-6, "coarea": 3.0, "divergence": 1e-4,
}
SUITE_MIN_POINTS = {"flat_sharpness": 5, "model_sharpness": 5, "differential_inequality": 5,
                    "eigen_convexity": 5, "frequency": 10, "three_point": 3, "monotonicity": 2}


def _per_point(check, family, harmonics, grid, spec, tol):
    return [check(family, h, float(t), spec, tol) for h in harmonics for t in grid]


def execute_suite(cfg):
    """Run the configured suite; returns a list of :class:`VerificationReport`."""
    name = cfg.suite
    if name not in SUITE_TOLERANCE:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITE_TOLERANCE))}")
    tol = cfg.tolerance if cfg.tolerance is not None else SUITE_TOLERANCE[name]
    spec = cfg.quadrature
    if name == "square_counterexample":
        try:
            nus = [float(v) for v in cfg.nu.split(",") if v.strip()]
            return [cv.square_counterexample_report(nus, cfg.degree, tol)]
        except ValueError as exc:
            raise ConfigError(f"nu: {exc}") from None
    family = make_family(cfg.family)
    harmonics = make_harmonics(cfg.harmonic, family)
    grid = make_grid(cfg, family, SUITE_MIN_POINTS.get(name, 1))
    n = family.ambient_dim

    if name == "flat_sharpness":
        if not (isinstance(family, Ellipsoid) and np.all(family.a == 1)):
            raise ConfigError("flat_sharpness needs a radial family")
        return [cv.sphere_theorem_check(0.0, 0.0, n, h, grid, family, spec, sharp_tol=tol)
                for h in harmonics]
    if name == "model_sharpness":
        if not isinstance(family, ModelSpace2D):
            raise ConfigError("model_sharpness needs a model:K= family")
        return [cv.sphere_theorem_check(family.K, family.K, 2, h, grid, family, spec,
                                        sharp_tol=tol) for h in harmonics]
    if name == "differential_inequality":
        return [cv.differential_inequality_check(family, h, grid, tol, spec=spec)
                for h in harmonics]
    if name == "eigen_convexity":
        return [cv.sphere_theorem_check(0.0, 0.0, n, h, grid, radial(n), spec, tol)
                for h in harmonics]
    if name == "derivative_identity":
        return [cv.derivative_identity_check(family, h, grid, spec, tol) for h in harmonics]
    if name == "growth":
        return _per_point(cv.growth_check, family, harmonics, grid, spec, tol)
    if name == "divergence":
        return _per_point(cv.divergence_identity_check, family, harmonics, grid, spec, tol)
    if name == "hormander":
        bound_tol = cfg.tolerance if cfg.tolerance is not None else 1e-6
        return (_per_point(cv.hormander_identity_check, family, harmonics, grid, spec, tol)
                + _per_point(cv.hormander_bound_check, family, harmonics, grid, spec, bound_tol))
    if name == "three_point":
        A, B = family_constants(family)
        return [cv.three_point_suite(family, h, A, B, grid, spec, tol) for h in harmonics]
    if name == "frequency":
        A, B = family_constants(family)
        out = []
        for h in harmonics:
            curve = cv.build_curve(family, h, grid, spec,
                                   tau=lambda t: A / t, rho=lambda t: B / t ** 2)
            rep = cv.frequency_monotonicity_check(A, B, curve, tol)
            rep.family, rep.harmonic, rep.spec = family.label, h.label, spec
            out.append(rep)
        return out
    if name == "mean_value":
        return [cv.mean_value_check(family, h, grid, spec, tol) for h in harmonics]
    if name == "monotonicity":
        return [cv.monotonicity_check(family, h, grid, spec, tol) for h in harmonics]
    if name == "coarea":
        out = []
        for h in harmonics:
            rep = cv.coarea_mc_check(
                family, lambda x, h=h: np.sum(h.gradient(x) ** 2, axis=-1),
                float(grid[-1]), cfg.samples, cfg.seed, spec, n_sigma=tol)
            rep.harmonic = h.label
            out.append(rep)
        return out
    raise AssertionError(name)


# -- output ---------------------------------------------------------------------------

def _fmt(v):
    return "%.17g" % float(v)


def write_curve_csv(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for rec in curve.rows():
            w.writerow([_fmt(rec[c]) for c in CURVE_COLUMNS])


def report_records(reports):
    for rep in reports:
        for r in rep.rows:
            name = f"{r.check}[{rep.harmonic}]" if rep.harmonic and "[" not in r.check else r.check
            yield name, r
        if not rep.rows and rep.status != "pass":
            yield f"{rep.name}[{rep.harmonic}]", None


def write_report_csv(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for name, r in report_records(reports):
            if r is None:
                status = next(rep.status for rep in reports
                              if f"{rep.name}[{rep.harmonic}]" == name)
                w.writerow([name, "nan", "nan", "nan", "nan", status])
            else:
                w.writerow([name, _fmt(r.t), _fmt(r.lhs), _fmt(r.rhs), _fmt(r.margin), r.verdict])


def _slug(text):
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_") or "h"


def quadrature_error(family, h, t, spec):
    """``|H(degree) - H(2 degree)|`` at one level."""
    fine = QuadratureSpec(2 * spec.degree, spec.refinements, spec.coarea_degree)
    return abs(cv.surface_moments(family, h, t, spec)[0]
               - cv.surface_moments(family, h, t, fine)[0])


def write_summary(cfg, reports, path, quad_errors):
    rows = [r for rep in reports for r in rep.rows]
    n_pass = sum(r.passed for r in rows)
    family = reports[0].family if reports and reports[0].family else cfg.family
    lines = [f"suite: {cfg.suite}", f"family: {family}",
             f"rows: {len(rows)}", f"pass: {n_pass}", f"fail: {len(rows) - n_pass}"]
    if rows:
        worst = min(rows, key=lambda r: (r.tol - abs(r.margin)) if r.two_sided else r.margin + r.tol)
        lines.append(f"worst margin: {_fmt(worst.margin)} (tol {_fmt(worst.tol)}, "
                     f"{worst.check} at t={_fmt(worst.t)})")
    for label, err in quad_errors:
        lines.append(f"quadrature error estimate [{label}]: {_fmt(err)}")
    for rep in reports:
        if rep.status not in ("pass", "fail"):
            lines.append(f"{rep.name}[{rep.harmonic}]: {rep.status}")
        lines.extend(f"note [{rep.harmonic}]: {n}" for n in rep.notes)
    failed = [(name, r) for name, r in report_records(reports) if r is None or not r.passed]
    if failed:
        lines.append("failing rows:")
        lines.extend(f"  {name} t={_fmt(r.t)} margin={_fmt(r.margin)}" if r else f"  {name}"
                     for name, r in failed)
    Path(path).write_text("\n".join(lines) + "\n")
    return failed


def run_suite(cfg):
    """Execute a suite and write ``curve.csv``, ``report.csv``, ``summary.txt`` and plots.

    Returns ``(exit_status, reports)``.
    """
    reports = execute_suite(cfg)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    curves = {rep.harmonic: rep.curve for rep in reports if rep.curve is not None}
    for i, (label, curve) in enumerate(curves.items()):
        write_curve_csv(curve, out / ("curve.csv" if i == 0 else f"curve_{_slug(label)}.csv"))
    write_report_csv(reports, out / "report.csv")
    quad = []
    if cfg.suite != "square_counterexample":
        family = make_family(cfg.family)
        h = make_harmonics(cfg.harmonic, family)[0]
        t = make_grid(cfg, family, 1)[-1]
        quad.append((h.label, quadrature_error(family, h, float(t), cfg.quadrature)))
    failed = write_summary(cfg, reports, out / "summary.txt", quad)
    if cfg.plots:
        from .plotting import plot_curve, plot_margins
        if curves:
            plot_curve(curves, out / "curve.png")
        rows = [r for rep in reports for r in rep.rows]
        if rows:
            plot_margins(rows, out / "margins.png")
    return (1 if failed else 0), reports


def run_curve(cfg):
    family = make_family(cfg.family)
    harmonics = make_harmonics(cfg.harmonic, family)
    grid = make_grid(cfg, family, 5)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    curves = {}
    for i, h in enumerate(harmonics):
        c = cv.build_curve(family, h, grid, cfg.quadrature)
        curves[h.label] = c
        write_curve_csv(c, out / ("curve.csv" if i == 0 else f"curve_{_slug(h.label)}.csv"))
    if cfg.plots:
        from .plotting import plot_curve
        plot_curve(curves, out / "curve.png")
    return 0


def constants_table(family_spec, samples=10_000, seed=0):
    """Rows ``(name, value)`` for the constants subcommand."""
    kind, _, rest = family_spec.partition(":")
    if kind == "homogeneous":
        a = [float(v) for v in parse_params(rest).get("a", ["1", "2"])]
        hc = homogeneous_constants_sampled(ellipse_profile(a), len(a), samples, seed)
        return [("C1", hc.C1), ("C2", hc.C2), ("C3", hc.C3), ("C4", hc.C4),
                ("A", hc.A), ("B", hc.B), ("B_corollary", -hc.B),
                ("tau(1)", hc.A), ("rho(1)", hc.B)]
    family = make_family(family_spec)
    if isinstance(family, ModelSpace2D):
        raise ConfigError("constants supports ellipsoid, torus and homogeneous families")
    b = family.bounds
    rows = [(k, float(getattr(b, k)(1.0))) for k in ("m", "M", "g", "K")]
    A, B = family_constants(family)
    rows += [("C" if isinstance(family, TorusDistance) else "A", A), ("B", B),
             ("B_corollary", -B), ("tau(1)", float(b.tau(1.0))), ("rho(1)", float(b.rho(1.0)))]
    if isinstance(family, TorusDistance):
        rows.append(("rho_combined(1)", float(b.rho_combined(1.0))))
    return rows


# -- argument parsing ----------------------------------------------------------------

def _add_config_flags(p):
    p.add_argument("--config", help="key=value config file")
    for name in _FIELD_TYPES:
        if name != "suite":
            p.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="levelconvex",
                                     description="Convexity checks for level-set norms of harmonic functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("suite", help="run a named verification suite")
    p.add_argument("name", help=", ".join(sorted(SUITE_TOLERANCE)))
    _add_config_flags(p)
    _add_config_flags(sub.add_parser("curve", help="write curve.csv for a family and harmonic"))
    _add_config_flags(sub.add_parser("constants", help="print bound constants of a family"))
    _add_config_flags(sub.add_parser("counterexample", help="square boundary counterexample"))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k in _FIELD_TYPES}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(file_values, flags)
        if args.command == "suite":
            cfg.suite = args.name
            status, _ = run_suite(cfg)
            print((Path(cfg.output) / "summary.txt").read_text(), end="")
            return status
        if args.command == "curve":
            return run_curve(cfg)
        if args.command == "constants":
            for name, value in constants_table(cfg.family, min(cfg.samples, 100_000), cfg.seed):
                print(f"{name},{_fmt(value)}")
            return 0
        if args.command == "counterexample":
            cfg.suite = "square_counterexample"
            status, reports = run_suite(cfg)
            print("nu,tangential_minus_normal,reference,exact,flux,flux_reference,ratio")
            for r in cv.square_counterexample([float(v) for v in cfg.nu.split(",")], cfg.degree):
                print(",".join(_fmt(v) for v in (r.nu, r.tangential_minus_normal,
                                                 r.tangential_reference, r.tangential_exact,
                                                 r.flux, r.flux_reference, r.ratio)))
            return status
    except ValueError as exc:  # ConfigError, DomainError, mismatched inputs
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit status: 0 ok, 1 a residual exceeded its tolerance, 2 invalid or
unsupported input, 3 numerical non-convergence.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import json
import math
import os
import sys

import numpy as np

from .arith import ArithError, parse_rational
from .coords import CoordinateError, CoordinateFunction, default_coordinate
from .curve_analytic import (DEFAULT_IM_TOL, DEFAULT_QUAD_EPS, NonConvergenceError, SingularCurveError,
                             lattice_invariants, third_kind_differential, regularized_integral)
from .degeneration import (FamilyError, NodalFamily, corner_from_samples, fiber_periods, lmhs_period_matrix,
                           normalization_oracle)
from .mhs_heights import height_of_lmhs_matrix
from .neron_global import (complex_curve, complex_point, compatible_function, compatible_primes,
                           regularized_pairing_via_compatible_f, verify_main_theorem)
from .nonarch import (EllipticCurveQ, NonMinimalModel, NotOnCurve, UnsupportedReduction, coordinate_scale,
                      nonarch_regularized_pairing, relevant_primes, tate_reduce)
from .quadrature import QuadratureError

EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2, 3


class InputError(ValueError):
    def __init__(self, fieldname, message):
        super().__init__("%s: %s" % (fieldname, message))
        self.field = fieldname


@dataclass
class RunConfig:
    subcommand: str
    curve: tuple = None
    family: str = None
    rate: Fraction = Fraction(1)
    P: tuple = None
    Q: tuple = None
    u: str = None
    v: str = None
    quad_eps: float = DEFAULT_QUAD_EPS
    im_tol: float = DEFAULT_IM_TOL
    residual_tol: float = 1e-6
    threads: int = 1
    seed: int = 0
    tmin: float = 1e-8
    tmax: float = 1e-2
    steps: int = 7
    check_compatible: bool = False
    json_path: str = None
    fmt: str = "table"
    raw: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# grammar


def parse_curve(text, fieldname="--curve"):
    """"[a1,a2,a3,a4,a6]" with integer or rational entries."""
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise InputError(fieldname, "expected a bracketed 5-tuple like [0,0,1,-1,0], got %r" % text)
    parts = [p.strip() for p in s[1:-1].split(",")]
    if len(parts) != 5:
        raise InputError(fieldname, "expected 5 coefficients, got %d" % len(parts))
    try:
        return tuple(parse_rational(p) for p in parts)
    except (ArithError, ValueError, ZeroDivisionError) as exc:
        raise InputError(fieldname, "bad coefficient (%s)" % exc) from exc


def parse_point(text, fieldname):
    """"x,y" with rational coordinates, or "inf" for the point at infinity."""
    s = text.strip().lower()
    if s in ("inf", "infinity", "o"):
        return None
    parts = [p.strip() for p in s.strip("()").split(",")]
    if len(parts) != 2:
        raise InputError(fieldname, "expected \"x,y\" or \"inf\", got %r" % text)
    try:
        return tuple(parse_rational(p) for p in parts)
    except (ArithError, ValueError, ZeroDivisionError) as exc:
        raise InputError(fieldname, "bad coordinate (%s)" % exc) from exc


def parse_float(text, fieldname, positive=True):
    try:
        x = float(text)
    except ValueError:
        raise InputError(fieldname, "expected a number, got %r" % text) from None
    if not math.isfinite(x) or (positive and x <= 0):
        raise InputError(fieldname, "expected a positive finite number, got %r" % text)
    return x


# ---------------------------------------------------------------------------
# report helpers


def _q(r):
    return str(Fraction(r))


def measured(value, error):
    return {"value": float(value), "error": float(error)}


def measured_complex(z, error):
    z = complex(z)
    return {"re": measured(z.real, error), "im": measured(z.imag, error)}


def dump_json(report):
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def reemit(text):
    """Re-read a JSON report and emit it again; the output equals the input."""
    return dump_json(json.loads(text))


def _rows(obj, prefix=""):
    if isinstance(obj, dict):
        if set(obj) == {"value", "error"}:
            yield prefix, "%.15g" % obj["value"], "%.3g" % obj["error"]
            return
        for k in sorted(obj):
            yield from _rows(obj[k], "%s.%s" % (prefix, k) if prefix else str(k))
    elif isinstance(obj, list):
        for i, item in enumerate(obj):
            yield from _rows(item, "%s[%d]" % (prefix, i))
    else:
        yield prefix, str(obj), ""


def render_table(report):
    rows = [("quantity", "value", "error")] + list(_rows(report))
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    return "".join("%s  %s  %s\n" % (a.ljust(w0), b.rjust(w1), c) for a, b, c in rows)


# ---------------------------------------------------------------------------
# validation


def _curve(cfg, strict):
    """The curve over Q; strict also runs Tate's algorithm at every bad prime."""
    if cfg.curve is None:
        raise InputError("--curve", "required")
    try:
        return EllipticCurveQ(cfg.curve, check_minimal=strict)
    except UnsupportedReduction:
        raise
    except NonMinimalModel as exc:
        raise InputError("--curve", str(exc)) from exc
    except ValueError as exc:
        raise InputError("--curve", str(exc)) from exc


def _points(cfg, E):
    pts = []
    for name, P in (("--P", cfg.P), ("--Q", cfg.Q)):
        if P is not None and not E.contains(P):
            raise InputError(name, "point (%s, %s) is not on the curve"
                             % (_q(P[0]), _q(P[1])))
        pts.append(P)
    if pts[0] == pts[1]:
        raise InputError("--Q", "P and Q must be distinct")
    return pts


def _coordinates(cfg, E, P, Q):
    out = []
    for name, text, R in (("--u", cfg.u, P), ("--v", cfg.v, Q)):
        try:
            f = default_coordinate(E.coeffs, R) if text is None else CoordinateFunction(text)
            coordinate_scale(E, f, R)
        except CoordinateError as exc:
            raise InputError(name, str(exc)) from exc
        out.append(f)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_periods(cfg):
    E = _curve(cfg, strict=False)
    EC = complex_curve(E)
    L = EC.lattice
    g2, g3 = lattice_invariants(L.omega1, L.omega2)
    c4, c6 = float(E.c4), float(E.c6)
    mismatch = max(abs(g2 - c4 / 12) / max(1.0, abs(c4 / 12)), abs(g3 - c6 / 216) / max(1.0, abs(c6 / 216)))
    err = max(mismatch, 1e-15) * max(abs(L.omega1), abs(L.omega2))
    eta1, eta2 = L.quasi_periods()
    report = {
        "command": "periods",
        "curve": [_q(c) for c in cfg.curve],
        "discriminant": _q(E.discriminant),
        "omega1": measured_complex(L.omega1, err),
        "omega2": measured_complex(L.omega2, err),
        "tau": measured_complex(L.omega2 / L.omega1, err / abs(L.omega1)),
        "eta1": measured_complex(eta1, err),
        "eta2": measured_complex(eta2, err),
        "status": "ok",
    }
    return report, EXIT_OK


def cmd_regularized_arch(cfg):
    E = _curve(cfg, strict=False)
    P, Q = _points(cfg, E)
    u, v = _coordinates(cfg, E, P, Q)
    EC = complex_curve(E)
    p, q = complex_point(P), complex_point(Q)
    eta = third_kind_differential(EC, p, q, cfg.quad_eps, cfg.im_tol)
    res = regularized_integral(EC, p, q, u, v, eta=eta, eps=cfg.quad_eps)
    report = {
        "command": "regularized-arch",
        "curve": [_q(c) for c in cfg.curve],
        "P": _fmt_point(P), "Q": _fmt_point(Q), "u": str(u), "v": str(v),
        "value": measured(res.value, res.error),
        "convergence": [{"offset": measured(o, 0.0), "sample": measured(s, abs(s - res.value))}
                        for o, s in zip(res.offsets, res.samples)],
        "status": "ok",
    }
    return report, EXIT_OK


def _reduction_label(E, p):
    rd = tate_reduce(E, p)
    if rd.is_good:
        return "I0"
    return rd.kodaira + ("" if rd.split is None else (" split" if rd.split else " non-split"))


def cmd_nonarch(cfg):
    E = _curve(cfg, strict=True)
    P, Q = _points(cfg, E)
    u, v = _coordinates(cfg, E, P, Q)
    rows = []
    total = 0.0
    for p in relevant_primes(E, P, Q, u, v):
        lp = nonarch_regularized_pairing(E, P, Q, u, v, p)
        total += lp.value
        rows.append({"prime": p, "reduction": _reduction_label(E, p), "val_chi": lp.val_chi,
                     "iota": _q(lp.iota), "phi": _q(lp.phi),
                     "multiplicity": _q(lp.rational),
                     "value": measured(lp.value, 0.0)})
    report = {
        "command": "nonarch",
        "curve": [_q(c) for c in cfg.curve],
        "P": _fmt_point(P), "Q": _fmt_point(Q), "u": str(u), "v": str(v),
        "primes": rows,
        "total": measured(total, 1e-15 * max(1.0, abs(total)) * max(1, len(rows))),
        "status": "ok",
    }
    return report, EXIT_OK


def cmd_lmhs_limit(cfg):
    if cfg.family is None:
        raise InputError("--family", "required")
    try:
        fam = NodalFamily.from_polynomial(cfg.family, cfg.rate)
    except FamilyError as exc:
        raise InputError("--family", str(exc)) from exc
    if cfg.tmin >= cfg.tmax:
        raise InputError("--tmin", "must be smaller than --tmax")
    if cfg.tmax >= fam.t_max:
        raise InputError("--tmax", "fibers degenerate again at t=%.6g; choose a smaller value" % fam.t_max)
    if cfg.steps < 6:
        raise InputError("--steps", "at least 6 values of t are needed")
    ts = list(np.geomspace(cfg.tmax, cfg.tmin, cfg.steps))
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        periods = list(pool.map(lambda t: fiber_periods(fam, t).alpha, ts))
    samples = [a - math.log(t) for a, t in zip(periods, ts)]
    est = corner_from_samples(ts, samples, tol=cfg.residual_tol)
    oracle = normalization_oracle(fam)
    hgt = height_of_lmhs_matrix(lmhs_period_matrix(fam, est.value), im_tol=cfg.im_tol)
    residual = abs(est.value.real - oracle)
    ok = residual <= cfg.residual_tol
    report = {
        "command": "lmhs-limit",
        "family": cfg.family, "rate": _q(cfg.rate),
        "convergence": [{"t": measured(t, 0.0), "sample": measured_complex(s, abs(s - est.value))}
                        for t, s in zip(ts, samples)],
        "I_chi": measured_complex(est.value, est.error),
        "hgt_L_chi": measured(hgt, est.error),
        "closed_form": measured(oracle, 1e-15 * max(1.0, abs(oracle))),
        "residual": measured(residual, est.error),
        "status": "ok" if ok else "tolerance exceeded",
    }
    return report, EXIT_OK if ok else EXIT_TOLERANCE


def cmd_verify(cfg):
    E = _curve(cfg, strict=True)
    P, Q = _points(cfg, E)
    u, v = _coordinates(cfg, E, P, Q)
    rep = verify_main_theorem(E, P, Q, u, v, eps=cfg.quad_eps, im_tol=cfg.im_tol)
    out = rep.to_json()
    ok = rep.residual <= cfg.residual_tol and abs(rep.regrouped_rhs - rep.rhs) <= 1e-12 * max(1.0, abs(rep.rhs))
    if cfg.check_compatible:
        out["compatible_function"] = _compatible_check(cfg, E, P, Q, u, v, rep)
        ok = ok and out["compatible_function"]["agrees"]
    out.update({
        "command": "verify",
        "curve": [_q(c) for c in cfg.curve],
        "P": _fmt_point(P), "Q": _fmt_point(Q), "u": str(u), "v": str(v),
        "status": "ok" if ok else "tolerance exceeded",
    })
    return out, EXIT_OK if ok else EXIT_TOLERANCE


def _compatible_check(cfg, E, P, Q, u, v, rep):
    f = compatible_function(E, P, Q, u, v, seed=cfg.seed)
    arch, arch_err = regularized_pairing_via_compatible_f(E, P, Q, u, v, "inf", f)
    by_prime = {lp.prime: lp.rational for lp in rep.nonarch}
    rows, exact_ok = [], True
    for p in sorted(set(compatible_primes(E, P, Q, f, u, v)) | set(by_prime)):
        c = regularized_pairing_via_compatible_f(E, P, Q, u, v, p, f)
        same = c == by_prime.get(p, 0)
        exact_ok = exact_ok and same
        rows.append({"prime": p, "via_f": _q(c),
                     "regularized": _q(by_prime.get(p, 0)), "agrees": same})
    diff = abs(arch - rep.archimedean)
    return {"f": str(f.expr), "archimedean": measured(arch, arch_err),
            "archimedean_difference": measured(diff, arch_err + rep.archimedean_error),
            "primes": rows, "agrees": bool(exact_ok and diff <= cfg.residual_tol)}


def _fmt_point(P):
    return "inf" if P is None else "%s,%s" % (_q(P[0]), _q(P[1]))


COMMANDS = {
    "periods": cmd_periods,
    "regularized-arch": cmd_regularized_arch,
    "nonarch": cmd_nonarch,
    "lmhs-limit": cmd_lmhs_limit,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quad-eps", default=str(DEFAULT_QUAD_EPS))
    common.add_argument("--im-tol", default=str(DEFAULT_IM_TOL))
    common.add_argument("--residual-tol", default="1e-6")
    common.add_argument("--threads", default=None, help="worker threads (default: available cores)")
    common.add_argument("--seed", default="0", help="seed for auxiliary point searches")
    common.add_argument("--json", dest="json_path", default=None, help="also write the JSON report here")
    common.add_argument("--format", dest="fmt", choices=("json", "table"), default="table")

    on_curve = argparse.ArgumentParser(add_help=False)
    on_curve.add_argument("--P", required=True)
    on_curve.add_argument("--Q", required=True)
    on_curve.add_argument("--u", default=None, help="local coordinate at P (rational in x, y)")
    on_curve.add_argument("--v", default=None, help="local coordinate at Q (rational in x, y)")

    parser = argparse.ArgumentParser(prog="nodal-heights", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    p = sub.add_parser("periods", parents=[common], help="period lattice of a curve")
    p.add_argument("--curve", required=True)
    p = sub.add_parser("regularized-arch", parents=[common, on_curve], help="regularized archimedean pairing")
    p.add_argument("--curve", required=True)
    p = sub.add_parser("nonarch", parents=[common, on_curve], help="exact non-archimedean pairings")
    p.add_argument("--curve", required=True)
    p = sub.add_parser("lmhs-limit", parents=[common], help="limit period of a nodal pencil")
    p.add_argument("--family", required=True, help='monic cubic with one double root, e.g. "x^3+x^2"')
    p.add_argument("--rate", default="1", help="pencil y^2 = q(x) + rate*t")
    p.add_argument("--tmin", default="1e-8")
    p.add_argument("--tmax", default="1e-2")
    p.add_argument("--steps", default="7")
    p = sub.add_parser("verify", parents=[common, on_curve], help="height versus sum of local pairings")
    p.add_argument("--curve", required=True)
    p.add_argument("--check-compatible", action="store_true",
                   help="cross-check with a compatible rational function")
    return parser


def config_from_args(ns):
    """Validate the raw strings into a RunConfig; raises InputError naming the field."""
    cfg = RunConfig(subcommand=ns.subcommand, json_path=ns.json_path, fmt=ns.fmt, raw=vars(ns))
    cfg.quad_eps = parse_float(ns.quad_eps, "--quad-eps")
    cfg.im_tol = parse_float(ns.im_tol, "--im-tol")
    cfg.residual_tol = parse_float(ns.residual_tol, "--residual-tol")
    try:
        cfg.threads = int(ns.threads) if ns.threads is not None else (os.cpu_count() or 1)
    except ValueError:
        raise InputError("--threads", "expected an integer, got %r" % ns.threads) from None
    if cfg.threads < 1:
        raise InputError("--threads", "must be at least 1")
    try:
        cfg.seed = int(ns.seed)
    except ValueError:
        raise InputError("--seed", "expected an integer, got %r" % ns.seed) from None
    if getattr(ns, "curve", None) is not None:
        cfg.curve = parse_curve(ns.curve)
    if getattr(ns, "P", None) is not None:
        cfg.P = parse_point(ns.P, "--P")
        cfg.Q = parse_point(ns.Q, "--Q")
        cfg.u, cfg.v = ns.u, ns.v
    if ns.subcommand == "lmhs-limit":
        cfg.family = ns.family
        try:
            cfg.rate = parse_rational(ns.rate)
        except (ArithError, ValueError, ZeroDivisionError):
            raise InputError("--rate", "expected a rational number, got %r" % ns.rate) from None
        if cfg.rate == 0:
            raise InputError("--rate", "must be nonzero")
        cfg.tmin = parse_float(ns.tmin, "--tmin")
        cfg.tmax = parse_float(ns.tmax, "--tmax")
        try:
            cfg.steps = int(ns.steps)
        except ValueError:
            raise InputError("--steps", "expected an integer, got %r" % ns.steps) from None
    cfg.check_compatible = bool(getattr(ns, "check_compatible", False))
    return cfg


def run(cfg, stdout=None, stderr=None):
    """Dispatch one subcommand; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        report, status = COMMANDS[cfg.subcommand](cfg)
    except InputError as exc:
        print("error: invalid input: %s" % exc, file=stderr)
        return EXIT_INPUT
    except UnsupportedReduction as exc:
        print("error: unsupported input: --curve: %s" % exc, file=stderr)
        return EXIT_INPUT
    except (NotOnCurve, SingularCurveError, CoordinateError, FamilyError) as exc:
        print("error: invalid input: %s" % exc, file=stderr)
        return EXIT_INPUT
    except (NonConvergenceError, QuadratureError) as exc:
        print("error: no convergence: %s" % exc, file=stderr)
        return EXIT_NONCONVERGENCE
    text = dump_json(report)
    if cfg.json_path:
        with open(cfg.json_path, "w") as fh:
            fh.write(text)
    stdout.write(text if cfg.fmt == "json" else render_table(report))
    return status


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except InputError as exc:
        print("error: invalid input: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

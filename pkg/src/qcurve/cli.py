"""Command-line interface: ``qcurve <command> [options]``.

Every command prints one JSON report with a versioned ``schema`` field.
Exact values are strings in the expression grammar of :mod:`exact_core`.
Exit status: 0 when every check passes, 1 when a mathematical check fails
(the report carries a witness), 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from mpmath import mpc

from . import __version__
from . import acceptance
from . import elliptic_dictionary as ell
from . import isomonodromy as iso
from .exact_core import INF
from .loop_system import LoopSystem, UnsupportedCheck
from .spectral_curve import BUILTIN, CurveError, SpectralCurve, builtin, load_curve
from .tr_engine import loop_suite, zname
from .wavefunction_pde import Divisor, ReducedSystem, WaveFunction, quantum_limit

SCHEMA = "qcurve.report/1"


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# input helpers


def resolve_curve(spec: str) -> SpectralCurve:
    """A builtin name or a path to a ``.curve`` file."""
    if spec in BUILTIN:
        return builtin(spec)
    if not os.path.exists(spec):
        stem = os.path.splitext(os.path.basename(spec))[0]
        if stem in BUILTIN:
            return builtin(stem)
        raise InputError(f"no such curve file or builtin: {spec}")
    return load_curve(spec)


_DIV_TERM = re.compile(r"\s*([+-]?)\s*(\d*)\s*\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]")


def parse_divisor(text: str) -> Divisor:
    """``"[z1]-[z2]"``, ``"[z1]+[z2]-[z3]-[z4]"``, ``"2[a]-[b]-[c]"``."""
    pos, weights = 0, []
    text = text.strip()
    while pos < len(text):
        m = _DIV_TERM.match(text, pos)
        if not m:
            raise InputError(f"cannot parse divisor near {text[pos:]!r}")
        sign = -1 if m.group(1) == "-" else 1
        weights.append(sign * int(m.group(2) or 1))
        pos = m.end()
    if not weights:
        raise InputError("empty divisor")
    if sum(weights) != 0:
        raise InputError("divisor weights must sum to zero")
    return Divisor.standard(weights)


_COMPLEX = re.compile(r"^\s*([+-]?\s*[\d/]+(?:\.\d+)?)?\s*(?:([+-])\s*([\d/]*(?:\.\d+)?)\s*\*?\s*[ij])?\s*$")


def parse_complex(text: str) -> mpc:
    """Exact-rational complex literal such as ``7/10+1/5*i``, ``1/2``, ``-i``."""
    t = text.replace(" ", "")
    m = re.fullmatch(r"([+-]?[\d/.]*)\*?[ij]", t)
    if m:  # pure imaginary
        s = m.group(1)
        im = Fraction(s + "1") if s in ("", "+", "-") else Fraction(s)
        return mpc(0, 1) * _mpf(im)
    m = _COMPLEX.match(t)
    if not m or not (m.group(1) or m.group(2)):
        raise InputError(f"bad complex literal {text!r}")
    re_ = Fraction(m.group(1)) if m.group(1) else Fraction(0)
    im = Fraction(0)
    if m.group(2):
        mag = Fraction(m.group(3)) if m.group(3) else Fraction(1)
        im = mag if m.group(2) == "+" else -mag
    return _mpf(re_) + mpc(0, 1) * _mpf(im)


def _mpf(q: Fraction):
    from mpmath import mpf

    return mpf(q.numerator) / q.denominator


# ---------------------------------------------------------------------------
# reporting


def _s(v) -> str:
    return str(v)


def _c(v) -> Dict[str, str]:
    z = mpc(v)
    return {"re": str(z.real), "im": str(z.imag)}


def _report(command: str, ok: Optional[bool], **payload) -> Dict[str, object]:
    out: Dict[str, object] = {"schema": SCHEMA, "version": __version__, "command": command}
    if ok is not None:
        out["ok"] = ok
    out.update(payload)
    return out


def _checks(items: List[Dict[str, object]]) -> bool:
    return all(it.get("ok", True) for it in items)


# ---------------------------------------------------------------------------
# commands


def cmd_times(a) -> Dict[str, object]:
    c = resolve_curve(a.curve)
    times = {f"t[{k},{j}]": _s(v) for (k, j), v in sorted(c.times().items(), key=lambda kv: (kv[0][0], kv[0][1]))
             if not v.is_zero()}
    periods = {}
    for p in c.poles:
        if p.zeta == INF:
            for j in range(1, p.m + 1):
                v = c.second_kind_period(c.ydx, INF, j)
                if not v.is_zero():
                    periods[f"B[oo,{j}]"] = _s(v)
    return _report("times", None, curve=c.name, times=times, periods=periods)


def cmd_omega(a) -> Dict[str, object]:
    c = resolve_curve(a.curve)
    system = LoopSystem(c)
    names = tuple(zname(i) for i in range(1, a.n + 1))
    if a.n == 0:
        raise InputError("omega needs n >= 1 (free energies are not formed)")
    w = system.table.omega_rat(a.g, a.n, names)
    return _report("omega", None, curve=c.name, g=a.g, n=a.n, variables=list(names), expr=_s(w))


def cmd_check_loop(a) -> Dict[str, object]:
    c = resolve_curve(a.curve)
    rows = [{"kind": k, "g": g, "n": n, "ok": ok} for k, g, n, ok in loop_suite(LoopSystem(c).table, a.max_chi)]
    return _report("check-loop", _checks(rows), curve=c.name, checks=rows)


def cmd_check_pl(a) -> Dict[str, object]:
    c = resolve_curve(a.curve)
    system = LoopSystem(c)
    rows = []
    for g, n in acceptance._gn(a.max_chi):
        r = system.check_P_equals_L(g, n)
        row = {"g": g, "n": n, "ok": r.ok}
        if not r.ok:
            row["witness"] = _s(r.witness)
        rows.append(row)
    return _report("check-pl", _checks(rows), curve=c.name, L=system.L.describe(), checks=rows)


def cmd_check_pde(a) -> Dict[str, object]:
    c = resolve_curve(a.curve)
    div = parse_divisor(a.divisor)
    wf = WaveFunction(LoopSystem(c), div)
    rows = []
    for ell_ in range(a.order + 1):
        for k in range(1, len(div.points) + 1):
            r = wf.pde_residual(k, ell_)
            ok = r.is_rational() and r.rat.is_zero()
            row = {"order": ell_, "k": k, "ok": ok}
            if not ok:
                row["witness"] = _s(r)
            rows.append(row)
    return _report("check-pde", _checks(rows), curve=c.name, divisor=a.divisor, checks=rows)


def cmd_check_reduced(a) -> Dict[str, object]:
    c = resolve_curve(a.curve)
    res = ReducedSystem(LoopSystem(c), a.order).check(a.order)
    return _report("check-reduced", all(res.values()), curve=c.name, order=a.order, checks=res)


def cmd_gd(a) -> Dict[str, object]:
    R = iso.gd_R(a.k)
    return _report("gd", None, k=a.k, R=iso.format_diffpoly(R), expr=_s(R),
                   grading=iso.grading_ok(R), weight=str(iso.weight(R)))


def _pair(a):
    if a.painleve:
        return iso.painleve_lax()
    tt = [Fraction(v) for v in a.ttilde.split(",")] if a.ttilde else None
    return iso.gd_lax(a.m, tt)


def _mat(M) -> List[List[str]]:
    return [[_s(v) for v in row] for row in M]


def cmd_lax(a) -> Dict[str, object]:
    p = _pair(a)
    return _report("lax", None, convention=p.convention, L=_mat(p.L), R=_mat(p.R), string_equation=_s(p.string),
                   trace=_s(p.trace()))


def cmd_zero_curvature(a) -> Dict[str, object]:
    p = _pair(a)
    res = iso.zero_curvature_residual(p, a.order)
    ok = all(v.is_zero() for row in res for v in row)
    return _report("zero-curvature", ok, convention=p.convention, order=a.order, residual=_mat(res))


def cmd_quantum_curve(a) -> Dict[str, object]:
    p = _pair(a)
    op = iso.quantum_curve_op(p.L if p.x_sign() == 1 else tuple(tuple(-v for v in row) for row in p.L))
    out = {"c1": _s(op.c1), "c0": _s(op.c0)}
    ok = None
    if a.painleve:
        ok = op == iso.painleve_quantum_curve_display()
        out["matches_display"] = ok
    return _report("quantum-curve", ok, **out)


def _wkb(curve: str, K: int):
    if curve == "painleve1":
        return iso.painleve_wkb(K)
    if curve == "airy":
        return iso.airy_wkb(K)
    raise InputError("wkb supports the curves airy and painleve1")


def cmd_wkb(a) -> Dict[str, object]:
    sol = _wkb(a.curve, a.order)
    out = {"curve": a.curve, "order": a.order,
           "A": [_s(v) for v in sol.A], "At": [_s(v) for v in sol.At],
           "B": [_s(v) for v in sol.B], "Bt": [_s(v) for v in sol.Bt],
           "Phi": _s(sol.Aplus.Phi), "prefactor_log": _s(sol.Aplus.P)}
    checks = {"wronskian_constant": all(v.is_zero() for v in sol.det_log_derivative())}
    if a.curve == "airy":
        q = quantum_limit(LoopSystem(builtin("airy")), a.order + 1)
        checks["matches_quantum_limit"] = all((q.series[k] - sol.A[k]).is_zero() for k in range(a.order + 1))
    else:
        op = iso.quantum_curve_op(iso.painleve_lax().L)
        r = iso.quantum_curve_residual(op, sol, iso.painleve_jets(a.order + 3))
        checks["quantum_curve"] = all(v.is_zero() for v in r[:a.order + 1])
    out["checks"] = checks
    return _report("wkb", all(checks.values()), **out)


def cmd_kernel_pde(a) -> Dict[str, object]:
    r = iso.kernel_pde_check(a.order, a.curve)
    return _report("kernel-pde", r["ok"], curve=a.curve, order=a.order, residual=[_s(v) for v in r["residual"]])


def cmd_det_identity(a) -> Dict[str, object]:
    r = iso.det_identity_check(a.order)
    rows = [{"order": o["order"], "value": _s(o["value"]), "expected": _s(o["expected"]), "ok": o["ok"]}
            for o in r["orders"]]
    return _report("det-identity", r["ok"], orders=rows)


def cmd_elliptic_dict(a) -> Dict[str, object]:
    nu, tau = parse_complex(a.nu), parse_complex(a.tau)
    try:
        p = ell.dictionary(nu, tau, a.convention)
    except ell.EllipticError as exc:
        raise InputError(str(exc)) from exc
    errs = ell.check_prepotential_differential(nu, tau, a.convention)
    ok = max(errs.values()) < 1e-6
    fields = {k: _c(getattr(p, k)) for k in ("t", "V", "eps", "I", "I_alt", "F0")}
    fields["F1"] = _c(p.F1) if p.F1 is not None else None
    return _report("elliptic-dict", ok, nu=a.nu, tau=a.tau, convention=a.convention, values=fields,
                   dF0_relative_error={k: f"{v:.3e}" for k, v in errs.items()})


def cmd_accept(a) -> Dict[str, object]:
    only = [int(v) for v in a.only.split(",")] if a.only else None
    outcomes = acceptance.run_all(only)
    if not a.quiet:
        for o in outcomes:
            print(o.line(), file=sys.stderr)
    rows = [{"criterion": o.number, "title": o.title, "ok": o.ok, "details": o.details} for o in outcomes]
    return _report("accept", all(o.ok for o in outcomes), criteria=rows, **acceptance.summary(outcomes))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcurve", description="Topological recursion and quantum-curve checks.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--output", "-o", help="write the JSON report to this file")
    p.add_argument("--threads", type=int, default=1, help="accepted for compatibility; evaluation is serial")
    sub = p.add_subparsers(dest="command", required=True)

    def curve_cmd(name, fn, **kw):
        s = sub.add_parser(name, **kw)
        s.add_argument("--curve", required=True, help="builtin name or .curve file")
        s.set_defaults(fn=fn)
        return s

    curve_cmd("times", cmd_times, help="KP times and second-kind periods at infinity")
    s = curve_cmd("omega", cmd_omega, help="print omega_{g,n}")
    s.add_argument("--g", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s = curve_cmd("check-loop", cmd_check_loop, help="linear and quadratic loop equations")
    s.add_argument("--max-chi", type=int, default=4)
    s = curve_cmd("check-pl", cmd_check_pl, help="P_{g,n} = L(x).omega_{g,n}")
    s.add_argument("--max-chi", type=int, default=2)
    s = curve_cmd("check-pde", cmd_check_pde, help="wave-function PDE order by order")
    s.add_argument("--divisor", default="[z1]-[z2]")
    s.add_argument("--order", type=int, default=4)
    s = curve_cmd("check-reduced", cmd_check_reduced, help="reduced two-point equations")
    s.add_argument("--order", type=int, default=2)

    s = sub.add_parser("gd", help="Gelfand-Dikii polynomial R_k")
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(fn=cmd_gd)
    for name, fn, hlp in (("lax", cmd_lax, "Lax pair"), ("zero-curvature", cmd_zero_curvature, "zero curvature"),
                          ("quantum-curve", cmd_quantum_curve, "quantum curve of a Lax matrix")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--m", type=int, default=1)
        s.add_argument("--ttilde", help="comma-separated t~_0..t~_m (default: only t~_m = 1)")
        s.add_argument("--painleve", action="store_true", help="use the Painleve I pair")
        if name == "zero-curvature":
            s.add_argument("--order", type=int, default=4)
        s.set_defaults(fn=fn)
    for name, fn, default_curve in (("wkb", cmd_wkb, "painleve1"), ("kernel-pde", cmd_kernel_pde, "painleve1")):
        s = sub.add_parser(name)
        s.add_argument("--curve", default=default_curve, choices=("airy", "painleve1"))
        s.add_argument("--order", type=int, default=2)
        s.set_defaults(fn=fn)
    s = sub.add_parser("det-identity")
    s.add_argument("--order", type=int, default=2)
    s.set_defaults(fn=cmd_det_identity)
    s = sub.add_parser("elliptic-dict")
    s.add_argument("--nu", required=True)
    s.add_argument("--tau", required=True)
    s.add_argument("--convention", default="tau", choices=("tau", "q"))
    s.set_defaults(fn=cmd_elliptic_dict)
    s = sub.add_parser("accept", help="run the acceptance suite")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(fn=cmd_accept)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.threads < 1 or getattr(a, "order", 0) < 0:
        parser.error("threads >= 1 and order >= 0 required")
    try:
        report = a.fn(a)
    except (InputError, CurveError, UnsupportedCheck, ValueError) as exc:
        print(f"qcurve: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2, sort_keys=True)
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if report.get("ok", True) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

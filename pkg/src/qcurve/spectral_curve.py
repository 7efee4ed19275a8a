"""Genus-0 spectral curves with the global involution z -> -z.

A curve is given by rational functions ``x(z)`` and ``y(z)`` over a field of
named parameters.  We accept ``x = a*z^2 + s`` (``a``, ``s`` free of ``z``):
then ``sigma(z) = -z`` is the deck involution of the double cover, the only
finite zero of ``dx`` is ``z = 0`` and ``z = oo`` is a ramified pole of ``x``
(``d = -2``).  ``y`` must be odd.

The module also hosts the local apparatus at the poles of ``y dx``: local
coordinates ``xi``, KP times ``t_{zeta,j} = Res xi^j y dx`` and the pairing with
second-kind cycles ``Res xi^{-k}/k * omega``.  All residues are exact.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exact_core import (
    INF,
    ExactError,
    FieldExtensionError,
    LaurentSeries,
    Rat,
    laurent_expand,
    parse,
    series_residue,
)

Z = "z"


class CurveError(ExactError):
    """The input does not describe an admissible spectral curve."""


@dataclass(frozen=True)
class TimeEntry:
    name: str
    expr: Rat
    jacobian: Mapping[str, Rat] = field(default_factory=dict)


@dataclass(frozen=True)
class PoleData:
    """A pole of ``y dx``.

    ``zeta`` is a z-value (Rat) or :data:`INF`; ``d`` the order of ``x`` (or of
    ``x - x(zeta)``) there; ``m`` the pole degree so that
    ``y dx ~ sum_{j<=m} t_j xi^{-1-j} dxi``; ``label`` is ``'+'``/``'-'`` for an
    unramified pair and ``''`` for a ramified pole.
    """

    zeta: object
    d: int
    m: int
    label: str = ""

    @property
    def key(self) -> str:
        return "oo" if self.zeta == INF else str(self.zeta)


def _pt_str(p) -> str:
    return "oo" if p == INF else str(p)


class SpectralCurve:
    """Validated curve data; construct with :func:`validate_curve`."""

    def __init__(self, name: str, params: Sequence[str], x: Rat, y: Rat,
                 time_map: Sequence[TimeEntry] = ()):
        self.name = name
        self.params = tuple(params)
        self.x = x
        self.y = y
        self.time_map = tuple(time_map)

    # -- basic data -------------------------------------------------------
    @cached_property
    def zvar(self) -> Rat:
        return Rat.var(Z)

    @cached_property
    def a(self) -> Rat:
        return self.x.coeffs(Z)[0].get(2, Rat.const(0))

    @cached_property
    def s(self) -> Rat:
        return self.x.coeffs(Z)[0].get(0, Rat.const(0))

    @cached_property
    def dx(self) -> Rat:
        return self.x.diff(Z)

    @cached_property
    def ydx(self) -> Rat:
        """Density of ``omega_{0,1} = y dx`` against dz."""
        return self.y * self.dx

    @cached_property
    def R(self) -> Rat:
        """``R(x)`` with ``y^2 = R(x)``, as a rational function of the symbol ``x``."""
        y2 = self.y * self.y
        num, den = y2.coeffs(Z)
        w = (Rat.var("x") - self.s) / self.a

        def collapse(poly: Dict[int, Rat]) -> Rat:
            out = Rat.const(0)
            for k, c in poly.items():
                out = out + c * w ** (k // 2)
            return out

        return collapse(num) / collapse(den)

    def in_z(self, f: Rat, zname: str = Z) -> Rat:
        """Substitute ``x -> x(zname)`` in a function of ``x``."""
        return f.subs({"x": self.x.subs({Z: Rat.var(zname)}) if zname != Z else self.x})

    def at(self, f: Rat, zname: str) -> Rat:
        """Rename the chart variable: ``f(z) -> f(zname)``."""
        return f if zname == Z else f.subs({Z: Rat.var(zname)})

    def x_of(self, zname: str) -> Rat:
        return self.at(self.x, zname)

    def even_to_x(self, f: Rat, zname: str = Z, xname: str = "x") -> Rat:
        """Rewrite an even function of ``zname`` as a function of ``x``."""
        num, den = f.coeffs(zname)
        if any(k % 2 for k in num) or any(k % 2 for k in den):
            raise CurveError("function is not even in the chart variable")
        w = (Rat.var(xname) - self.s) / self.a

        def collapse(poly):
            out = Rat.const(0)
            for k, c in poly.items():
                out = out + c * w ** (k // 2)
            return out

        return collapse(num) / collapse(den)

    # -- ramification and poles -------------------------------------------
    @cached_property
    def ramification_points(self) -> List[object]:
        roots = _rational_roots(Rat.from_poly(self.dx.num, self.dx.names), Z)
        pts: List[object] = sorted(roots, key=str)
        if self.pole_order_x_at_inf == 2:
            pts.append(INF)
        return pts

    @cached_property
    def finite_branch_points(self) -> List[Rat]:
        return [p for p in self.ramification_points if p != INF]

    @cached_property
    def pole_order_x_at_inf(self) -> int:
        n, d = self.x.degree(Z)
        return n - d

    @cached_property
    def poles(self) -> List[PoleData]:
        out: List[PoleData] = []
        f = self.ydx
        # infinity: the form f(1/w) * (-dw/w^2)
        n, d = f.degree(Z)
        order_inf = n - d + 2
        if order_inf > 0:
            out.append(PoleData(INF, -self.pole_order_x_at_inf, order_inf - 1))
        finite: List[Tuple[Rat, int]] = []
        for fac, mult in f.factor_den(Z):
            for r in _rational_roots(fac, Z):
                finite.append((r, mult))
        pairs: Dict[str, Tuple[Rat, int]] = {str(r): (r, m) for r, m in finite}
        done = set()
        for key in sorted(pairs):
            if key in done:
                continue
            r, mult = pairs[key]
            mr = str(-r)
            if mr not in pairs:
                raise CurveError(f"pole set not closed under the involution at z={r}")
            done.update({key, mr})
            if r.is_zero():
                raise CurveError("y dx has a pole at the ramification point z=0")
            m = mult - 1
            lead = self._leading_time(r, m)
            plus, minus = (r, -r) if _positive_lead(lead) else (-r, r)
            out.append(PoleData(plus, 1, m, "+"))
            out.append(PoleData(minus, 1, m, "-"))
        return out

    def _leading_time(self, r: Rat, m: int) -> Rat:
        return self._time(PoleData(r, 1, m), m)

    def pole(self, zeta) -> PoleData:
        key = _pt_str(zeta)
        for p in self.poles:
            if p.key == key:
                return p
        raise CurveError(f"{key} is not a pole of y dx on {self.name}")

    # -- local coordinates ------------------------------------------------
    def local(self, f: Rat, zeta, order: int, zname: str = Z) -> LaurentSeries:
        """Expansion of ``f`` in the z-chart local coordinate at ``zeta``."""
        s = laurent_expand(f, zname, zeta, order)
        return LaurentSeries(f"@{_pt_str(zeta)}", zeta, s.val, s.coeffs, s.order)

    def xi(self, pole: PoleData, rel: int) -> LaurentSeries:
        """``xi = (x - x(zeta))^(1/d)``, valuation 1, exact through ``1 + rel``."""
        if pole.zeta == INF:
            if pole.d != -2:
                raise CurveError("only a ramified pole at infinity is supported")
            xs = self.local(self.x, INF, rel + 2)
            try:
                return xs.inv().sqrt().truncate(1 + rel)
            except FieldExtensionError as exc:
                raise FieldExtensionError("leading coefficient of x at infinity is not a square") from exc
        x0 = self.x.subs({Z: pole.zeta})
        return self.local(self.x - x0, pole.zeta, 1 + rel)

    def xi_pow(self, pole: PoleData, k: int, order: int) -> LaurentSeries:
        """``xi^k`` exact through local exponent ``order``."""
        rel = max(order - k, 0)
        return self.xi(pole, rel) ** k

    def residue_with(self, f: Rat, pole: PoleData, k: int, zname: str = Z) -> Rat:
        """``Res_zeta xi^k f dz`` for a density ``f`` (possibly with spectators)."""
        target = 1 if pole.zeta == INF else -1
        fs = self.local(f, pole.zeta, target - k, zname)
        try:
            vf = fs.valuation()
        except ExactError:
            return Rat.const(0)
        xs = self.xi_pow(pole, k, target - vf)
        return series_residue(fs * xs)

    def _time(self, pole: PoleData, j: int) -> Rat:
        return self.residue_with(self.ydx, pole, j)

    def kp_time(self, zeta, j: int) -> Rat:
        pole = self.pole(zeta)
        if j > pole.m:
            return Rat.const(0)
        return self._time(pole, j)

    def times(self) -> Dict[Tuple[str, int], Rat]:
        return {(p.key, j): self.kp_time(p.zeta, j) for p in self.poles for j in range(p.m + 1)}

    def second_kind_period(self, omega: Rat, zeta, k: int, zname: str = Z) -> Rat:
        """``Res_zeta xi^{-k}/k * omega`` (integration of a density over B_{zeta,k})."""
        if k < 1:
            raise CurveError("second-kind cycles need k >= 1")
        return self.residue_with(omega, self.pole(zeta), -k, zname) / k

    # -- moduli and fixed-x derivatives -----------------------------------
    @cached_property
    def moduli(self) -> List[Tuple[str, Rat]]:
        """Local moduli: ramified times, one representative of each pair, pole positions."""
        out: List[Tuple[str, Rat]] = []
        for p in self.poles:
            if p.zeta == INF:
                for j in range(1, p.m + 1):
                    out.append((f"t[oo,{j}]", self.kp_time(INF, j)))
            elif p.label == "+":
                for j in range(0, p.m + 1):
                    out.append((f"t[{p.key},{j}]", self.kp_time(p.zeta, j)))
                out.append((f"lambda[{p.key}]", self.x.subs({Z: p.zeta})))
        return out

    @cached_property
    def varying_moduli(self) -> List[Tuple[str, Rat]]:
        return [(n, v) for n, v in self.moduli if not v.is_constant()]

    def modulus(self, name: str) -> Rat:
        for n, v in self.moduli:
            if n == name:
                return v
        raise CurveError(f"unknown modulus {name}")

    @cached_property
    def moduli_jacobian_inverse(self) -> Dict[str, Dict[str, Rat]]:
        """``d param / d modulus`` at fixed other moduli, when the map is square."""
        mods = self.varying_moduli
        if len(mods) != len(self.params):
            raise CurveError(
                f"{len(mods)} varying moduli vs {len(self.params)} parameters; "
                "fixed-moduli derivatives are not defined on this family")
        J = [[v.diff(p) for p in self.params] for _, v in mods]
        inv = _mat_inverse(J)
        # inv[p][i] = d param_p / d modulus_i
        return {mods[i][0]: {p: inv[pi][i] for pi, p in enumerate(self.params)} for i in range(len(mods))}

    def fixed_x_flow(self, param: str, zname: str = Z) -> Rat:
        """``dz/dparam`` at fixed ``x``."""
        xz = self.x_of(zname)
        return -xz.diff(param) / xz.diff(zname)

    def param_derivation(self, coeffs: Mapping[str, Rat], znames: Sequence[str] = (Z,)):
        """Fixed-x derivation ``sum c_p d/dp`` acting on functions of ``znames``."""
        flows = {p: [self.fixed_x_flow(p, zn) for zn in znames] for p in coeffs}

        def d(f: Rat) -> Rat:
            out = Rat.const(0)
            for p, c in coeffs.items():
                if c.is_zero():
                    continue
                term = f.diff(p)
                for zn, v in zip(znames, flows[p]):
                    term = term + f.diff(zn) * v
                out = out + c * term
            return out

        return d

    def form_derivation(self, coeffs: Mapping[str, Rat], znames: Sequence[str]):
        """Fixed-x derivation on a density against ``dz_1...dz_n`` (Lie derivative)."""
        flows = {p: [self.fixed_x_flow(p, zn) for zn in znames] for p in coeffs}

        def d(f: Rat) -> Rat:
            out = Rat.const(0)
            for p, c in coeffs.items():
                if c.is_zero():
                    continue
                term = f.diff(p)
                for zn, v in zip(znames, flows[p]):
                    term = term + (f * v).diff(zn)
                out = out + c * term
            return out

        return d

    def modulus_derivative_coeffs(self, modulus: str) -> Dict[str, Rat]:
        return dict(self.moduli_jacobian_inverse[modulus])

    # -- declared time map ------------------------------------------------
    def declared_time(self, name: str) -> Tuple[str, int]:
        """Match a declared time to a computed modulus: returns (modulus, sign)."""
        for e in self.time_map:
            if e.name == name:
                for mname, v in self.moduli:
                    if (e.expr - v).is_zero():
                        return mname, 1
                    if (e.expr + v).is_zero():
                        return mname, -1
                raise CurveError(f"declared time {name} = {e.expr} matches no modulus")
        raise CurveError(f"no declared time {name}")

    def declared_jacobian_inverse(self) -> Dict[str, Dict[str, Rat]]:
        """``d param / d time`` from the declared Jacobian entries."""
        if not self.time_map:
            raise CurveError("curve declares no time map")
        names = [e.name for e in self.time_map]
        if len(names) != len(self.params):
            raise CurveError("declared time map is not square in the parameters")
        J = []
        for e in self.time_map:
            row = []
            for p in self.params:
                row.append(e.jacobian[p] if p in e.jacobian else e.expr.diff(p))
            J.append(row)
        inv = _mat_inverse(J)
        return {names[i]: {p: inv[pi][i] for pi, p in enumerate(self.params)} for i in range(len(names))}

    def __repr__(self) -> str:
        return f"SpectralCurve({self.name}: x={self.x}, y={self.y})"


def _positive_lead(r: Rat) -> bool:
    if r.is_zero():
        return True
    return r.num.leading_coefficient() > 0


def _rational_roots(poly: Rat, name: str) -> List[Rat]:
    """Roots in ``name`` of a polynomial, all of which must be rational."""
    if not poly.depends_on(name):
        return []
    _, facs = poly.num.factor()
    i = poly.names.index(name)
    roots = []
    for f, _ in facs:
        deg = f.degrees()[i]
        if deg == 0:
            continue
        fr = Rat.from_poly(f, poly.names)
        c, _ = fr.coeffs(name)
        if deg != 1:
            raise FieldExtensionError(f"irreducible factor {fr} of degree {deg} in {name}")
        roots.append(-c.get(0, Rat.const(0)) / c[1])
    return roots


def _mat_inverse(M: List[List[Rat]]) -> List[List[Rat]]:
    n = len(M)
    A = [list(row) + [Rat.const(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not A[r][col].is_zero()), None)
        if piv is None:
            raise CurveError("singular Jacobian")
        A[col], A[piv] = A[piv], A[col]
        inv = A[col][col].inv()
        A[col] = [v * inv for v in A[col]]
        for r in range(n):
            if r != col and not A[r][col].is_zero():
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[n:] for row in A]


# ---------------------------------------------------------------------------
# validation and file format


def validate_curve(name: str, params: Sequence[str], x, y,
                   time_map: Sequence[TimeEntry] = ()) -> SpectralCurve:
    """Check the admissibility conditions and return the curve."""
    x = parse(x) if isinstance(x, str) else x
    y = parse(y) if isinstance(y, str) else y
    z = Rat.var(Z)
    if not x.depends_on(Z):
        raise CurveError("x does not depend on z")
    allowed = set(params) | {Z}
    for f, label in ((x, "x"), (y, "y")):
        extra = set(f.variables()) - allowed
        if extra:
            raise CurveError(f"{label} uses undeclared symbols {sorted(extra)}")
    if not (x.subs({Z: -z}) - x).is_zero():
        raise CurveError("x(-z) != x(z): no global involution")
    if not (y.subs({Z: -z}) + y).is_zero():
        raise CurveError("y(-z) != -y(z): y is not odd under the involution")
    num, den = x.coeffs(Z)
    if max(den) != 0 or max(num) != 2:
        raise CurveError("x must be of the form a*z^2 + s")
    curve = SpectralCurve(name, params, x, y, time_map)
    if curve.a.is_zero():
        raise CurveError("degenerate x")
    # y^2 = R(x)
    if not (curve.in_z(curve.R) - y * y).is_zero():
        raise CurveError("y^2 is not a rational function of x")
    # dx vanishes only at z=0; dy must not vanish there, and y dx must be regular there
    yz = y / z
    yzn, yzd = yz.coeffs(Z)
    if yzd.get(0, Rat.const(0)).is_zero():
        raise CurveError("y has a pole at the ramification point")
    if yzn.get(0, Rat.const(0)).is_zero():
        raise CurveError("zeros of dx and dy coincide at z=0")
    for tentry in time_map:
        for p, v in tentry.jacobian.items():
            if not (tentry.expr.diff(p) - v).is_zero():
                raise CurveError(f"declared d{tentry.name}/d{p} = {v} disagrees with {tentry.expr.diff(p)}")
    curve.poles  # noqa: B018 - forces the pole analysis (rationality of pole loci)
    return curve


def _unquote(v: str) -> str:
    v = v.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def parse_curve_text(text: str) -> SpectralCurve:
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    cp.optionxform = str  # keep case
    cp.read_string(text)
    if "curve" not in cp:
        raise CurveError("missing [curve] section")
    sec = cp["curve"]
    for key in ("name", "x", "y"):
        if key not in sec:
            raise CurveError(f"[curve] lacks {key}")
    raw = _unquote(sec.get("parameters", ""))
    params = [p.strip() for p in raw.replace(",", " ").split() if p.strip()]
    entries: List[TimeEntry] = []
    if "times" in cp:
        ts = cp["times"]
        exprs = {k: parse(_unquote(v)) for k, v in ts.items() if "/" not in k}
        jac: Dict[str, Dict[str, Rat]] = {k: {} for k in exprs}
        for k, v in ts.items():
            if "/" in k:
                num, den = k.split("/")
                tname, pname = num[1:], den[1:]
                if not num.startswith("d") or not den.startswith("d") or tname not in exprs:
                    raise CurveError(f"bad Jacobian key {k}")
                jac[tname][pname] = parse(_unquote(v))
        entries = [TimeEntry(k, exprs[k], jac[k]) for k in exprs]
    return validate_curve(_unquote(sec["name"]), params, _unquote(sec["x"]), _unquote(sec["y"]), entries)


def load_curve(path: str) -> SpectralCurve:
    with open(path, encoding="utf-8") as fh:
        return parse_curve_text(fh.read())


# -- the standard test curves --------------------------------------------

AIRY = """[curve]
name = airy
parameters = ""
x = "z^2"
y = "z"
"""

PAINLEVE1 = """[curve]
name = painleve1
parameters = "u"
x = "z^2 - 2*u"
y = "z^3 - 3*u*z"

[times]
t = "-3*u^2"
dt/du = "-6*u"
"""

# y^2 = x/(x-a)^2 with a = b^2, so that the poles z = +-b are rational
FINITE_POLE = """[curve]
name = finite_pole
parameters = "b"
x = "z^2"
y = "z/(z^2 - b^2)"
"""

# three-parameter family around the finite-pole curve: enough moduli to vary
# lambda at fixed KP times
FINITE_POLE_FAMILY = """[curve]
name = finite_pole_family
parameters = "b, q, s"
x = "z^2 + s"
y = "q*z/(z^2 - b^2)"

[times]
t1 = "-2*q"
t0 = "q*b"
lam = "b^2 + s"
dt1/dq = "-2"
dt0/dq = "b"
dt0/db = "q"
dlam/db = "2*b"
dlam/ds = "1"
"""

BUILTIN = {
    "airy": AIRY,
    "painleve1": PAINLEVE1,
    "finite_pole": FINITE_POLE,
    "finite_pole_family": FINITE_POLE_FAMILY,
}


def builtin(name: str) -> SpectralCurve:
    return parse_curve_text(BUILTIN[name])

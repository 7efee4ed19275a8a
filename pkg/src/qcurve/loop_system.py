"""The functions P_{g,n} and the deformation operator L(x).

``pgn`` assembles the loop-equation combination plus the diagonal
correction terms that make it regular at ``x = x(z_i)``; the result is even
in ``z`` and is returned both in the z-chart and as a function of ``x``.

``build_L`` produces the operator in two shapes:

* cycle form: ``sum c(x) * d_B[zeta,k]`` where ``d_B`` inserts a
  second-kind cycle, ``d_B omega_{g,n} = int_B omega_{g,n+1}``;
* derivation form: ``sum c(x) * d/d(modulus)`` with moduli the KP times and
  pole positions, realised as fixed-x parameter derivatives.

``apply_L`` evaluates the cycle form on the memoized amplitudes with
symbolic spectators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exact_core import INF, ExactError, Rat, laurent_expand, series_residue
from .spectral_curve import CurveError, PoleData, SpectralCurve, Z
from .tr_engine import (
    LoopResult,
    OmegaTable,
    polar_to_rat,
    quadratic_combination,
    zname,
)

ZERO = Rat.const(0)
X = Rat.var("x")


class UnsupportedCheck(ExactError):
    """The requested check needs data the curve does not provide."""


@dataclass(frozen=True)
class LTerm:
    coeff: Rat          # rational function of x
    kind: str           # "B" (cycle insertion) or "d" (modulus derivative)
    zeta: object = None  # pole, for kind "B"
    k: int = 0           # cycle index, for kind "B"
    modulus: str = ""    # modulus name, for kind "d"

    def label(self) -> str:
        if self.kind == "B":
            return f"dB[{'oo' if self.zeta == INF else self.zeta},{self.k}]"
        return f"d/d{self.modulus}"


@dataclass(frozen=True)
class DeformOperator:
    curve_name: str
    cycle_terms: Tuple[LTerm, ...]
    derivation_terms: Optional[Tuple[LTerm, ...]]

    def is_empty(self) -> bool:
        return not self.cycle_terms

    def describe(self) -> Dict[str, List[str]]:
        out = {"cycle_form": [f"({t.coeff})*{t.label()}" for t in self.cycle_terms]}
        if self.derivation_terms is not None:
            out["derivation_form"] = [f"({t.coeff})*{t.label()}" for t in self.derivation_terms]
        return out


def _merge(terms: List[LTerm]) -> Tuple[LTerm, ...]:
    acc: Dict[str, LTerm] = {}
    order: List[str] = []
    for t in terms:
        key = t.label()
        if key in acc:
            old = acc[key]
            acc[key] = LTerm(old.coeff + t.coeff, t.kind, t.zeta, t.k, t.modulus)
        else:
            acc[key] = t
            order.append(key)
    return tuple(acc[k] for k in order if not acc[k].coeff.is_zero())


def build_L(curve: SpectralCurve) -> DeformOperator:
    cyc: List[LTerm] = []
    der: List[LTerm] = []
    derivation_ok = True
    for pole in curve.poles:
        if pole.zeta == INF:
            d = int(pole.d)
            for j in range(1 - 2 * d, pole.m + 1):
                tj = curve.kp_time(INF, j)
                if tj.is_zero():
                    continue
                kmax = floor(Fraction(1 - j, d) - 2)
                for k in range(0, kmax + 1):
                    w = Fraction(-j, d) - k - 2
                    K = j + d * (k + 2)
                    coeff = tj * X ** k * w
                    cyc.append(LTerm(coeff, "B", INF, K))
                    der.append(LTerm(coeff, "d", modulus=f"t[oo,{K}]"))
        else:
            lam = curve.x.subs({Z: pole.zeta})
            xi = X - lam
            for j in range(0, pole.m + 1):
                tj = curve.kp_time(pole.zeta, j)
                for k in range(0, j + 1):
                    cyc.append(LTerm(tj * xi ** (-(k + 1)) * (j + 1 - k), "B", pole.zeta, j + 1 - k))
            if pole.label == "+":
                der.append(LTerm(xi.inv(), "d", modulus=f"lambda[{pole.key}]"))
                for j in range(1, pole.m):
                    tj = curve.kp_time(pole.zeta, j)
                    for k in range(1, j + 1):
                        der.append(LTerm(tj * xi ** (-(k + 1)) * (j + 1 - k), "d",
                                         modulus=f"t[{pole.key},{j + 1 - k}]"))
    return DeformOperator(curve.name, _merge(cyc), _merge(der) if derivation_ok else None)


# ---------------------------------------------------------------------------
# cycle insertions on amplitudes


class LoopSystem:
    """Amplitude table plus the operator L for one curve."""

    def __init__(self, curve: SpectralCurve, table: Optional[OmegaTable] = None):
        self.curve = curve
        self.table = table or OmegaTable(curve)
        self.L = build_L(curve)
        self._rcache: Dict[Tuple[str, int, int], Rat] = {}
        self._qt: Optional[Rat] = None

    # -- periods ----------------------------------------------------------
    def _r(self, pole: PoleData, k: int, e: int) -> Rat:
        key = (pole.key, k, e)
        v = self._rcache.get(key)
        if v is None:
            v = self.curve.second_kind_period(Rat.var(Z) ** (-e), pole.zeta, k)
            self._rcache[key] = v
        return v

    def dB(self, zeta, k: int, g: int, n: int, names: Optional[Sequence[str]] = None) -> Rat:
        """``int_{B_{zeta,k}} omega_{g,n+1}(., z_1..z_n)`` with symbolic spectators."""
        names = tuple(names) if names is not None else tuple(zname(i) for i in range(1, n + 1))
        pole = self.curve.pole(zeta)
        if (g, n) == (0, 0):
            return self.curve.second_kind_period(self.curve.ydx, zeta, k)
        if (g, n) == (0, 1):
            dens = (Rat.var(Z) - Rat.var(names[0])) ** -2
            return self.curve.second_kind_period(dens, zeta, k)
        w = self.table.omega(g, n + 1)
        red: Dict[Tuple[int, ...], Rat] = {}
        for e, c in w.items():
            r = self._r(pole, k, e[0])
            if r.is_zero():
                continue
            key = e[1:]
            v = c * r
            red[key] = red[key] + v if key in red else v
        red = {k_: v for k_, v in red.items() if not v.is_zero()}
        if n == 0:
            return red.get((), ZERO)
        return polar_to_rat(red, names)

    def dB_polar(self, zeta, k: int, g: int, n: int) -> Dict[Tuple[int, ...], Rat]:
        """Polar form of the insertion for stable ``omega_{g,n+1}``."""
        pole = self.curve.pole(zeta)
        red: Dict[Tuple[int, ...], Rat] = {}
        for e, c in self.table.omega(g, n + 1).items():
            r = self._r(pole, k, e[0])
            if r.is_zero():
                continue
            v = c * r
            red[e[1:]] = red[e[1:]] + v if e[1:] in red else v
        return {k_: v for k_, v in red.items() if not v.is_zero()}

    def apply_L(self, g: int, n: int, names: Optional[Sequence[str]] = None) -> Rat:
        """``L(x).omega_{g,n}`` as a rational function of ``x`` and the spectators."""
        out = ZERO
        for t in self.L.cycle_terms:
            out = out + t.coeff * self.dB(t.zeta, t.k, g, n, names)
        return out

    def apply_L_polar(self, g: int, n: int) -> List[Tuple[Rat, Dict[Tuple[int, ...], Rat]]]:
        """Cycle form on stable ``omega_{g,n+1}``: list of (coefficient in x, polar insertion)."""
        return [(t.coeff, self.dB_polar(t.zeta, t.k, g, n)) for t in self.L.cycle_terms]

    def LF(self, g: int) -> Rat:
        """``L(x).F_g`` from the one-point amplitude ``omega_{g,1}`` (g >= 1)."""
        return self.apply_L(g, 0)

    # -- P_{g,n} ------------------------------------------------------------
    def pgn_z(self, g: int, n: int) -> Rat:
        """P_{g,n} in the z-chart with spectators z1..zn."""
        c = self.curve
        P = quadratic_combination(self.table, g, n)
        if n == 0:
            return P
        J = tuple(zname(i) for i in range(1, n + 1))
        for i, zi in enumerate(J):
            args = list(J)
            args[i] = "_m"
            w = self.table.omega_rat(g, n, tuple(args)).subs({"_m": -Rat.var(zi)})
            xi = c.x_of(zi)
            term = (-w) / (xi.diff(zi) * (c.x - xi))
            P = P + term.diff(zi)
        return P

    def pgn(self, g: int, n: int) -> Rat:
        """P_{g,n} as a rational function of ``x`` (even in z, regular at z=0)."""
        Pz = self.pgn_z(g, n)
        odd = Pz - Pz.subs({Z: -Rat.var(Z)})
        if not odd.is_zero():
            raise ExactError(f"P_({g},{n}) is not even in z")
        if Pz.depends_on(Z) and Rat.from_poly(Pz.den, Pz.names).subs({Z: 0}).is_zero():
            raise ExactError(f"P_({g},{n}) has a pole at the branch point")
        return self.curve.even_to_x(Pz)

    # -- the (0,0) polar part ----------------------------------------------
    def Q_times(self) -> Rat:
        """Polar part of ``y_s^2`` rebuilt from the KP times alone."""
        if self._qt is not None:
            return self._qt
        c = self.curve
        out = ZERO
        for pole in c.poles:
            ts = {j: c.kp_time(pole.zeta, j) for j in range(pole.m + 1)}
            if pole.zeta == INF:
                if pole.d != -2:
                    raise UnsupportedCheck("unramified infinity")
                # y_s = -1/2 sum t_j xi^{2-j}, xi^2 = 1/x
                for j, tj in ts.items():
                    for k, tk in ts.items():
                        p = 4 - j - k
                        if p <= 0 and p % 2 == 0:
                            out = out + tj * tk * X ** (-p // 2) / 4
            elif pole.label == "+":
                lam = c.x.subs({Z: pole.zeta})
                for j, tj in ts.items():
                    for k, tk in ts.items():
                        out = out + tj * tk * (X - lam) ** (-2 - j - k)
        self._qt = out
        return out

    # -- identities -----------------------------------------------------------
    def check_P_equals_L(self, g: int, n: int) -> LoopResult:
        c = self.curve
        Pz = self.pgn_z(g, n)
        Lw = self.apply_L(g, n)
        if (g, n) == (0, 0):
            Lw = Lw + self.Q_times()
        diff = Pz - c.in_z(Lw)
        return LoopResult(diff.is_zero(), diff, f"P=L ({g},{n})")

    # -- variational formulas ---------------------------------------------------
    def _modulus_param_coeffs(self) -> Dict[str, Dict[str, Rat]]:
        """d(param)/d(modulus) from the declared time map, cross-checked."""
        c = self.curve
        if not c.time_map:
            raise UnsupportedCheck(f"{c.name} declares no time map")
        decl = c.declared_jacobian_inverse()
        out: Dict[str, Dict[str, Rat]] = {}
        for e in c.time_map:
            mname, sign = c.declared_time(e.name)
            out[mname] = {p: v * sign for p, v in decl[e.name].items()}
        computed = c.moduli_jacobian_inverse
        for mname, coeffs in out.items():
            for p, v in coeffs.items():
                if not (computed[mname][p] - v).is_zero():
                    raise UnsupportedCheck(f"declared time map disagrees with the curve moduli at {mname}")
        return out

    def derivation_L(self, g: int, n: int, F0: Optional[Rat] = None) -> Rat:
        """Derivation form of L applied to ``omega_{g,n}`` (or to ``F0`` for (0,0))."""
        c = self.curve
        coeffs = self._modulus_param_coeffs()
        names = tuple(zname(i) for i in range(1, n + 1))
        if n == 0:
            target = F0
            if target is None:
                raise UnsupportedCheck("(0,0) needs F0")
        else:
            target = self.table.omega_rat(g, n, names)
        out = ZERO
        for t in self.L.derivation_terms or ():
            if t.modulus not in coeffs:
                raise UnsupportedCheck(f"modulus {t.modulus} is not a coordinate of this family")
            D = c.form_derivation(coeffs[t.modulus], names)
            out = out + t.coeff * D(target)
        return out

    def F0_from_times(self) -> Rat:
        """``F0 = 1/2 sum_j t_{oo,j} int_{B_{oo,j}} y dx`` (ramified infinity only)."""
        c = self.curve
        if any(p.zeta != INF for p in c.poles):
            raise UnsupportedCheck("F0 formula needs the only pole of y dx at a ramified infinity")
        pole = c.pole(INF)
        out = ZERO
        for j in range(1, pole.m + 1):
            tj = c.kp_time(INF, j)
            if not tj.is_zero():
                out = out + tj * c.second_kind_period(c.ydx, INF, j)
        return out / 2

    def family_derivative_check(self, g: int, n: int) -> LoopResult:
        c = self.curve
        if (g, n) == (0, 0):
            if all(p.zeta == INF for p in c.poles):
                F0 = self.F0_from_times()
                lhs = self.derivation_L(0, 0, F0)
                rhs = self.apply_L(0, 0)
                diff = lhs - rhs
                return LoopResult(diff.is_zero(), diff, "(0,0) via F0")
            return self._integrability_00()
        lhs = self.derivation_L(g, n)
        rhs = self.apply_L(g, n)
        diff = lhs - rhs
        return LoopResult(diff.is_zero(), diff, f"variational ({g},{n})")

    def _integrability_00(self) -> LoopResult:
        """Mixed partials: d/dt_{oo,1} of d_lambda F0 against d_lambda of d/dt_{oo,1} F0.

        ``d_lambda F0`` is the cycle-form value ``sum t_{zeta,0} int_{B_{zeta,1}} y dx``
        and ``dF0/dt_{oo,1} = int_{B_{oo,1}} y dx``; both sides are exact.
        """
        c = self.curve
        coeffs = self._modulus_param_coeffs()
        lam = next((m for m in coeffs if m.startswith("lambda")), None)
        if lam is None or "t[oo,1]" not in coeffs:
            raise UnsupportedCheck("(0,0) integrability needs lambda and t[oo,1] coordinates")
        dlamF = ZERO
        for p in c.poles:
            if p.zeta != INF:
                dlamF = dlamF + c.kp_time(p.zeta, 0) * c.second_kind_period(c.ydx, p.zeta, 1)
        dtF = c.second_kind_period(c.ydx, INF, 1)
        Dl = c.param_derivation(coeffs[lam], ())
        Dt = c.param_derivation(coeffs["t[oo,1]"], ())
        diff = Dt(dlamF) - Dl(dtF)
        return LoopResult(diff.is_zero(), diff, "(0,0) mixed partials")

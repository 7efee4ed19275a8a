"""Wave functions on divisors and the PDE they satisfy.

A divisor ``D = sum a_i [p_i]`` has symbolic points ``p_i`` (fresh variable
names in the z-chart) and integer weights summing to zero.  ``S_m(D)`` are
assembled from the amplitudes; the PDE is checked in the logarithmic form
``(operator psi)/psi`` order by order in hbar, so no exponential is ever
formed and every residual is an exact rational identity.

Stable amplitudes have polar parts ``z^{-e}`` with ``e >= 2`` only, so
``int_D z^{-e} dz = sum_j a_j p_j^{1-e}/(1-e)`` with no base point
ambiguity; ``F_{g,n}(D)`` is then a polynomial in the ``1/p_j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exact_core import (
    INF,
    TruncationError,
    ExactError,
    HbarSeries,
    LogExpr,
    Rat,
    _ctx,
    _order,
    laurent_expand,
    primitive,
)
from .loop_system import LoopSystem, UnsupportedCheck
from .spectral_curve import SpectralCurve, Z
from .tr_engine import LoopResult, zname

ZERO = Rat.const(0)
ONE = Rat.const(1)


class DivisorError(ExactError):
    pass


@dataclass(frozen=True)
class Divisor:
    points: Tuple[Tuple[str, int], ...]

    @staticmethod
    def of(*pairs: Tuple[str, int]) -> "Divisor":
        return Divisor(tuple((str(p), int(a)) for p, a in pairs))

    @staticmethod
    def standard(weights: Sequence[int]) -> "Divisor":
        return Divisor.of(*((f"p{i + 1}", a) for i, a in enumerate(weights)))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(p for p, _ in self.points)

    @property
    def weights(self) -> Tuple[int, ...]:
        return tuple(a for _, a in self.points)

    def validate(self, curve: SpectralCurve) -> None:
        if sum(self.weights) != 0:
            raise DivisorError("divisor must have degree 0")
        if len(set(self.names)) != len(self.names):
            raise DivisorError("divisor points must be distinct symbols")
        reserved = set(curve.params) | {Z, "x"}
        for p in self.names:
            if p in reserved or not p.isidentifier():
                raise DivisorError(f"divisor point {p!r} clashes with curve symbols")

    def __str__(self) -> str:
        return " ".join(f"{'+' if a >= 0 else '-'}{abs(a)}[{p}]" for p, a in self.points)


# ---------------------------------------------------------------------------
# integration of polar amplitudes over a divisor


def integrate_polar(w: Mapping[Tuple[int, ...], Rat], div: Divisor,
                    first: Optional[str] = None) -> Rat:
    """``int_D ... int_D`` of a polar density, exactly.

    With ``first`` given, the first slot is evaluated at that symbol instead
    of being integrated (this is the primed function times ``dx``).
    """
    if not w:
        return ZERO
    pn, al = div.names, div.weights
    qn = tuple(f"_q{i}" for i in range(len(pn)))
    cn = sorted({nm for c in w.values() for nm in c.names})
    extra = (first,) if first is not None else ()
    allq = _order(qn + extra + tuple(cn))
    ctx = _ctx(allq)
    cnames = _order(tuple(cn))
    den = None
    for c in w.values():
        _, cd = c.lifted(cnames)
        den = cd if den is None else den * (cd / den.gcd(cd))
    den = den / den.leading_coefficient()
    den_q = Rat(den, den, cnames, True).lifted(allq)[0]
    qi = [allq.index(q) for q in qn]
    fi = allq.index(first) if first is not None else None
    cache: Dict[int, object] = {}

    def P(e: int):
        v = cache.get(e)
        if v is None:
            v = ctx.constant(0)
            for j, a in enumerate(al):
                mono = [0] * len(allq)
                mono[qi[j]] = e - 1
                v += ctx.from_dict({tuple(mono): a}) / (1 - e)
            cache[e] = v
        return v

    num = ctx.constant(0)
    top_first = 0
    if first is not None:
        top_first = max(e[0] for e in w)
    for e, c in w.items():
        cn_, cd_ = c.lifted(allq)
        term = cn_ * (den_q / cd_)
        rest = e
        if first is not None:
            mono = [0] * len(allq)
            mono[fi] = top_first - e[0]
            term *= ctx.from_dict({tuple(mono): 1})
            rest = e[1:]
        for ei in rest:
            term *= P(ei)
        num += term
    if num.is_zero():
        return ZERO
    # q_j -> 1/p_j
    degs = num.degrees()
    tops = [degs[i] for i in qi]
    out_names = _order(pn + extra + tuple(cn))
    octx = _ctx(out_names)
    pos = {nm: out_names.index(nm) for nm in out_names}
    new = {}
    for mono, coef in num.to_dict().items():
        m = [0] * len(out_names)
        for k, nm in enumerate(allq):
            if k in qi:
                j = qi.index(k)
                m[pos[pn[j]]] = tops[j] - int(mono[k])
            else:
                m[pos[nm]] = int(mono[k])
        new[tuple(m)] = coef
    dmono = [0] * len(out_names)
    for j, p in enumerate(pn):
        dmono[pos[p]] = tops[j]
    if first is not None:
        dmono[pos[first]] = top_first
    den_l = Rat(den, den, cnames, True).lifted(out_names)[0]
    return Rat(octx.from_dict(new), den_l * octx.from_dict({tuple(dmono): 1}), out_names)


# ---------------------------------------------------------------------------
# the wave-function data


class WaveFunction:
    """``S_m(D)`` and its companions for one curve and one divisor."""

    def __init__(self, system: LoopSystem, div: Divisor):
        div.validate(system.curve)
        self.sys = system
        self.curve = system.curve
        self.table = system.table
        self.div = div
        self._S: Dict[int, LogExpr] = {}
        self._F: Dict[Tuple[int, int], LogExpr] = {}
        self._Phi: Optional[LogExpr] = None

    # -- chart helpers ----------------------------------------------------
    def xp(self, p: str) -> Rat:
        return self.curve.x_of(p)

    def ddx(self, f, p: str) -> Rat:
        """``d/dx(p)`` of a Rat or LogExpr in the point ``p``."""
        d = f.diff(p) if isinstance(f, (Rat, LogExpr)) else Rat.coerce(f).diff(p)
        return d / self.xp(p).diff(p)

    # -- F_{g,n}(D) ---------------------------------------------------------
    def primitive_ydx(self) -> LogExpr:
        if self._Phi is None:
            self._Phi = primitive(self.curve.ydx, Z)
        return self._Phi

    def f_gn(self, g: int, n: int) -> LogExpr:
        key = (g, n)
        if key in self._F:
            return self._F[key]
        if not self.div.points:
            return LogExpr(ZERO)
        if n == 0:
            raise UnsupportedCheck("F_g itself is not formed; only L(x).F_g is consumed")
        if (g, n) == (0, 1):
            Phi = self.primitive_ydx()
            out = LogExpr(ZERO)
            for p, a in self.div.points:
                out = out + Phi.subs({Z: Rat.var(p)}) * a
        elif (g, n) == (0, 2):
            out = self.f02()
        else:
            out = LogExpr(integrate_polar(self.table.omega(g, n), self.div))
        self._F[key] = out
        return out

    def f02(self) -> LogExpr:
        """``2 sum_{i<j} a_i a_j log((p_i - p_j) sqrt(x'(p_i) x'(p_j)))``."""
        atoms = []
        pts = self.div.points
        for (pi, ai), (pj, aj) in itertools.combinations(pts, 2):
            c = Rat.const(2 * ai * aj)
            atoms.append((c, Rat.var(pi) - Rat.var(pj)))
            atoms.append((c / 2, self.xp(pi).diff(pi)))
            atoms.append((c / 2, self.xp(pj).diff(pj)))
        return LogExpr(ZERO, atoms)

    def f02_prime(self, z: str = Z) -> Rat:
        """``F'_{0,2}(z, D)``."""
        xz = self.curve.x_of(z)
        xd = xz.diff(z)
        out = ZERO
        for p, a in self.div.points:
            out = out + (Rat.var(z) - Rat.var(p)).inv() * a
        tot = sum(self.div.weights)
        out = out + xd.diff(z) / xd * Rat.const(tot) / 2
        return out / xd

    def f_prime(self, g: int, n: int, p: str) -> Rat:
        """``F'_{g,n}(p, D)`` for stable (g,n)."""
        w = integrate_polar(self.table.omega(g, n), self.div, first="_f")
        return w.subs({"_f": Rat.var(p)}) / self.xp(p).diff(p)

    def S(self, m: int) -> LogExpr:
        if m in self._S:
            return self._S[m]
        if m == 0:
            out = self.f_gn(0, 1)
        elif m == 1:
            out = LogExpr(ZERO, [(c / 2, a) for c, a in self.f02().atoms])
        else:
            out = LogExpr(ZERO)
            for g, n in _topologies(m):
                out = out + self.f_gn(g, n) * (ONE / factorial(n))
        self._S[m] = out
        return out

    # -- cycle-form operators on F_{g,n}(D) --------------------------------------
    def cycle_integral(self, cycles: Sequence[Tuple[Rat, object, int]], g: int, n: int) -> LogExpr:
        """``int_D^n sum c * d_B[zeta,k] omega_{g,n}`` (the coefficients ``c`` are kept as factors)."""
        out = LogExpr(ZERO)
        if n == 0:
            for c, zeta, k in cycles:
                out = out + c * self.sys.dB(zeta, k, g, 0)
            return out
        if (g, n) == (0, 1):
            for c, zeta, k in cycles:
                dens = self.sys.dB(zeta, k, 0, 1, names=("_s",))
                prim = primitive(dens, "_s")
                acc = LogExpr(ZERO)
                for p, a in self.div.points:
                    acc = acc + prim.subs({"_s": Rat.var(p)}) * a
                out = out + acc * c
            return out
        for c, zeta, k in cycles:
            out = out + LogExpr(integrate_polar(self.sys.dB_polar(zeta, k, g, n), self.div)) * c
        return out

    def L_on_F(self, g: int, n: int, xk: Rat) -> LogExpr:
        """``L(x_k).F_{g,n}(D)`` with the operator's x set to ``xk``."""
        cyc = [(t.coeff.subs({"x": xk}), t.zeta, t.k) for t in self.sys.L.cycle_terms]
        if not cyc:
            return LogExpr(ZERO)
        return self.cycle_integral(cyc, g, n)

    def L_on_S(self, m: int, xk: Rat) -> LogExpr:
        if not self.sys.L.cycle_terms:
            return LogExpr(ZERO)
        if m == 0:
            return self.L_on_F(0, 1, xk)
        if m == 1:
            return self.L_on_F(0, 2, xk) * (ONE / 2)
        out = LogExpr(ZERO)
        for g, n in _topologies(m):
            out = out + self.L_on_F(g, n, xk) * (ONE / factorial(n))
        return out

    # -- the PDE ------------------------------------------------------------
    def pde_residual(self, k: int, ell: int) -> LogExpr:
        """``[h^ell]`` of ``(PDE operator psi - R psi)/psi`` at probe point ``k`` (1-based)."""
        pts = self.div.points
        if not 1 <= k <= len(pts):
            raise DivisorError("probe index out of range")
        pk, ak = pts[k - 1]
        if ak * ak != 1:
            raise DivisorError("probe weight must satisfy a_k^2 = 1")
        xk = self.xp(pk)
        dS = lambda m, p: self.ddx(self.S(m), p) if m >= 0 else ZERO
        res = LogExpr(ZERO)
        if ell >= 1:
            res = res + self.ddx(dS(ell - 1, pk), pk)
        for a in range(0, ell + 1):
            res = res + dS(a, pk) * dS(ell - a, pk)
        if ell >= 1:
            dk = dS(ell - 1, pk)
            for p, a in pts:
                if p == pk:
                    continue
                xi = self.xp(p)
                res = res - (dS(ell - 1, p) + dk * Rat.const(a) / ak) / (xk - xi)
            res = res - self.L_on_S(ell - 1, xk)
        if ell >= 2 and ell % 2 == 0:
            res = res - self.L_on_F(ell // 2, 0, xk)
        if ell == 2:
            res = res + self.star(k)
        if ell == 0:
            res = res - self.curve.R.subs({"x": xk})
        return res

    def star(self, k: int) -> Rat:
        pts = self.div.points
        xk = self.xp(pts[k - 1][0])
        out = ZERO
        for i, (pi, ai) in enumerate(pts):
            for j, (pj, aj) in enumerate(pts):
                if i == j or i == k - 1 or j == k - 1:
                    continue
                xi, xj = self.xp(pi), self.xp(pj)
                out = out + Rat.const(ai * aj) / ((xk - xi) * (xi - xj))
        return out

    # -- identities between the F's ----------------------------------------------
    def check_cylinder(self) -> LoopResult:
        """``F'_{0,2}(z,D) + F'_{0,2}(-z,D) = sum a_i/(x(z) - x(p_i))``."""
        fz = self.f02_prime(Z)
        # the form evaluated at the other sheet, read against dx there
        fmz = fz.subs({Z: -Rat.var(Z)})
        x = self.curve.x
        rhs = ZERO
        for p, a in self.div.points:
            rhs = rhs + Rat.const(a) / (x - self.xp(p))
        diff = fz + fmz - rhs
        return LoopResult(diff.is_zero(), diff, "cylinder identity")

    def check_symmetry(self, g: int, n: int) -> LoopResult:
        """``d/dx_i F_{g,n}(D) = n a_i F'_{g,n}(p_i, D)`` for every point."""
        F = self.f_gn(g, n).rat
        bad = ZERO
        for p, a in self.div.points:
            diff = self.ddx(F, p) - self.f_prime(g, n, p) * (n * a)
            if not diff.is_zero():
                bad = diff
                break
        return LoopResult(bad.is_zero(), bad, f"symmetry ({g},{n})")

    def check_f02_time_derivative(self, modulus: str) -> LoopResult:
        """Double integral of ``d_B omega_{0,2}`` against the fixed-x derivative of ``F_{0,2}(D)``."""
        c = self.curve
        cycles = modulus_cycles(c, modulus)
        lhs = self.cycle_integral(cycles, 0, 2)
        coeffs = c.moduli_jacobian_inverse[modulus]
        d = c.param_derivation(coeffs, self.div.names)
        rhs = self.f02().derivation(d)
        diff = lhs - LogExpr(rhs)
        ok = diff.is_rational() and diff.rat.is_zero()
        return LoopResult(ok, diff.rat, f"dF02/d{modulus}")


def _topologies(m: int) -> List[Tuple[int, int]]:
    """(g,n) with n >= 1 and 2g-2+n = m-1."""
    out = []
    for g in range(0, (m + 1) // 2 + 1):
        n = m + 1 - 2 * g
        if n >= 1 and 2 * g - 2 + n == m - 1:
            out.append((g, n))
    return out


def modulus_cycles(curve: SpectralCurve, modulus: str) -> List[Tuple[Rat, object, int]]:
    """The derivative along a modulus (others fixed) as a combination of cycle insertions."""
    if modulus.startswith("t[oo,"):
        k = int(modulus[5:-1])
        return [(ONE, INF, k)]
    if modulus.startswith("lambda["):
        key = modulus[7:-1]
        out = []
        for p in curve.poles:
            if p.zeta != INF and (p.key == key or p.key == _neg_key(key)):
                for j in range(0, p.m + 1):
                    out.append((curve.kp_time(p.zeta, j) * (j + 1), p.zeta, j + 1))
        return out
    if modulus.startswith("t["):
        key, j = modulus[2:-1].rsplit(",", 1)
        j = int(j)
        if j == 0:
            raise UnsupportedCheck("third-kind times have no second-kind cycle")
        out = []
        for p in curve.poles:
            if p.key == key:
                out.append((ONE, p.zeta, j))
            elif p.key == _neg_key(key):
                out.append((-ONE, p.zeta, j))
        return out
    raise UnsupportedCheck(f"unknown modulus {modulus}")


def _neg_key(key: str) -> str:
    return key[1:] if key.startswith("-") else "-" + key


# ---------------------------------------------------------------------------
# the reduced equation for two-point divisors


class ReducedSystem:
    """``psi~ = (x - x') psi([z]-[z']) e^F`` handled through ``T = log psi~``.

    Operators are applied to ``psi~ * f`` and return ``g`` with
    ``op(psi~ f) = psi~ g``; ``L(x)`` acts in derivation form (moduli
    derivatives at fixed ``x`` and ``x'``), with first derivatives of ``S``
    and ``F`` supplied by cycle insertions.
    """

    def __init__(self, system: LoopSystem, order: int, points: Tuple[str, str] = ("p1", "p2")):
        self.sys = system
        self.curve = c = system.curve
        self.order = order
        self.wf = WaveFunction(system, Divisor.of((points[0], 1), (points[1], -1)))
        self.p, self.pp = points
        self.x, self.xq = c.x_of(self.p), c.x_of(self.pp)
        self.terms: List[Tuple[Rat, str]] = [(t.coeff, t.modulus) for t in (system.L.derivation_terms or ())]
        self.moduli = sorted({m for _, m in self.terms})
        if self.moduli:
            inv = c.moduli_jacobian_inverse
            self.flows = {m: c.param_derivation(inv[m], (self.p, self.pp)) for m in self.moduli}
        else:
            self.flows = {}
        self._build()

    def _rat(self, v) -> Rat:
        v = LogExpr.coerce(v)
        if not v.is_rational():
            raise UnsupportedCheck("a moduli derivative kept a logarithm")
        return v.rat

    def _build(self) -> None:
        M, wf = self.order, self.wf
        dxp = lambda f: wf.ddx(f, self.p)
        dxq = lambda f: wf.ddx(f, self.pp)
        inv_dx = (self.x - self.xq).inv()
        tx = {m - 1: dxp(wf.S(m)) for m in range(M + 1)}
        tq = {m - 1: dxq(wf.S(m)) for m in range(M + 1)}
        tx[0] = tx.get(0, ZERO) + inv_dx
        tq[0] = tq.get(0, ZERO) - inv_dx
        self.Tx = HbarSeries(tx, M - 1)
        self.Tq = HbarSeries(tq, M - 1)
        self.Txx = self.Tx.map(dxp)
        self.Tqq = self.Tq.map(dxq)
        self.dT: Dict[str, HbarSeries] = {}
        for mod in self.moduli:
            cyc = modulus_cycles(self.curve, mod)
            d = {}
            for m in range(M + 1):
                if m == 0:
                    v = wf.cycle_integral(cyc, 0, 1)
                elif m == 1:
                    v = wf.cycle_integral(cyc, 0, 2) * (ONE / 2)
                else:
                    v = LogExpr(ZERO)
                    for g, n in _topologies(m):
                        v = v + wf.cycle_integral(cyc, g, n) * (ONE / factorial(n))
                d[m - 1] = self._rat(v)
            for g in range(1, M // 2 + 1):
                d[2 * g - 2] = d.get(2 * g - 2, ZERO) + self._rat(wf.cycle_integral(cyc, g, 0))
            self.dT[mod] = HbarSeries(d, M - 1)

    def _coeff(self, c: Rat, prime: bool) -> Rat:
        return c.subs({"x": self.xq if prime else self.x})

    def apply_D(self, f: HbarSeries, prime: bool = False) -> HbarSeries:
        p = self.pp if prime else self.p
        d = lambda r: self.wf.ddx(r, p)
        T1, T2 = (self.Tq, self.Tqq) if prime else (self.Tx, self.Txx)
        fx = f.map(d)
        fxx = fx.map(d)
        out = (fxx + T1 * fx * 2 + (T2 + T1 * T1) * f).shift(2)
        for c, mod in self.terms:
            cc = self._coeff(c, prime)
            lf = f.map(self.flows[mod]) + self.dT[mod] * f
            out = out - (lf * cc).shift(2)
        R = self.curve.R.subs({"x": self.xq if prime else self.x})
        return out - f * R

    def unit(self) -> HbarSeries:
        return HbarSeries({0: ONE}, 10 ** 6)

    def residual_first(self, ell: int) -> Tuple[HbarSeries, HbarSeries]:
        """Residuals of ``D psi~ = h^2/(x-x') (d/dx + d/dx') psi~`` and of ``D' psi~ = -(same)``."""
        rhs = (self.Tx + self.Tq).shift(2) * (self.x - self.xq).inv()
        one = self.unit()
        return self.apply_D(one) - rhs, self.apply_D(one, prime=True) + rhs

    def residual_second(self, ell: int) -> HbarSeries:
        """Residual of ``D^2 psi~ = h^2/(x-x') (R'(x) + h^2 L'(x) - dR - h^2 dL) psi~``.

        ``dR = (R(x)-R(x'))/(x-x')`` and likewise ``dL`` on the coefficients of L.
        """
        c = self.curve
        x, xq = self.x, self.xq
        dx = x - xq
        Rx, Rq = c.R.subs({"x": x}), c.R.subs({"x": xq})
        Rprime = c.R.diff("x").subs({"x": x})
        inner = HbarSeries({0: Rprime - (Rx - Rq) / dx}, 10 ** 6)
        for coef, mod in self.terms:
            dc = coef.diff("x").subs({"x": x}) - (self._coeff(coef, False) - self._coeff(coef, True)) / dx
            inner = inner + (self.dT[mod] * dc).shift(2)
        rhs = (inner * dx.inv()).shift(2)
        lhs = self.apply_D(self.apply_D(self.unit()))
        return lhs - rhs

    def check(self, ell: int) -> Dict[str, bool]:
        r1, r2 = self.residual_first(ell)
        r3 = self.residual_second(ell)
        for r in (r1, r2, r3):
            if r.K < ell:
                raise TruncationError(f"reduced residual known only through h^{r.K}")
        return {"first": r1.is_zero_through(ell), "first_prime": r2.is_zero_through(ell),
                "second": r3.is_zero_through(ell)}


# ---------------------------------------------------------------------------
# one-point limit


@dataclass
class QuantumLimit:
    """``psi_1(z) = exp(S0/h + S1) * series``; ``series = exp(sum_{m>=2} h^{m-1} S_m)``."""

    curve: SpectralCurve
    S0: LogExpr
    S1: LogExpr
    stable: Dict[int, Rat]
    K: int

    @property
    def series(self) -> HbarSeries:
        s = HbarSeries({m - 1: v for m, v in self.stable.items()}, self.K)
        return s.exp()

    def ddx(self, f) -> Rat:
        return f.diff(Z) / self.curve.dx

    def log_derivative(self) -> HbarSeries:
        """``d/dx log psi_1`` through ``h^{K-1}``."""
        d = {-1: self.ddx(self.S0), 0: self.ddx(self.S1)}
        for m, v in self.stable.items():
            d[m - 1] = self.ddx(v)
        return HbarSeries(d, self.K - 1)

    def residual(self, c2: HbarSeries, c1: HbarSeries, c0: HbarSeries) -> HbarSeries:
        """``(c2 d^2/dx^2 + c1 d/dx + c0) psi_1 / psi_1`` with coefficients in the z-chart."""
        T1 = self.log_derivative()
        T2 = T1.map(self.ddx)
        return c2 * (T2 + T1 * T1) + c1 * T1 + c0


def quantum_limit(system: LoopSystem, K: int = 4, pole=INF) -> QuantumLimit:
    """Send the second point of ``[z] - [z']`` to a pole and regularize.

    The (0,1) term keeps the primitive of ``y dx`` minus its finite part at
    the pole; the (0,2) term becomes ``-1/2 log x'(z)``; stable terms are
    integrated from the pole, where they vanish.
    """
    c = system.curve
    if pole != INF:
        raise UnsupportedCheck("only the limit to the pole at infinity is implemented")
    if not c.residue_with(c.ydx, c.pole(INF), 0).is_zero():
        raise UnsupportedCheck("y dx has a residue at the pole: logarithmic divergence")
    wf = WaveFunction(system, Divisor.of(("_o", 1), ("_oo", -1)))
    Phi = wf.primitive_ydx()
    if not Phi.is_rational():
        raise UnsupportedCheck("primitive of y dx is logarithmic")
    fin = laurent_expand(Phi.rat, Z, INF, 0)[0]
    S0 = LogExpr(Phi.rat - fin)
    S1 = LogExpr(ZERO, [(-ONE / 2, c.dx)])
    one = Divisor(((Z, 1),))
    stable: Dict[int, Rat] = {}
    for m in range(2, K + 1):
        v = ZERO
        for g, n in _topologies(m):
            v = v + integrate_polar(system.table.omega(g, n), one) / factorial(n)
        stable[m] = v
    return QuantumLimit(c, S0, S1, stable, K)

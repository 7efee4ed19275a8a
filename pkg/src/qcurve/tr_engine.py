"""Topological recursion on curves ``x = a z^2 + s`` with involution ``z -> -z``.

Stable amplitudes are Laurent polynomials in ``1/z_i`` (all poles sit at the
single finite branch point ``z = 0``), so they are stored in *polar form*: a
dict from exponent tuples ``e`` to coefficients in the parameter field,
meaning ``sum_e c_e prod_i z_i^(-e_i)`` as a density against
``dz_1 ... dz_n``.

With ``h(z) = z / (2 y(z) x'(z)) = sum_k h_k z^k`` the recursion kernel is
``h(z) / (z0^2 - z^2)``.  If the bracket (the quadratic combination of lower
amplitudes evaluated at ``z`` and ``-z``) expands as ``sum_p c_p z^p``, then

    W(z0, J) = sum_{p <= 0} sum_{0 <= 2m <= -p} c_p h_{-1-2m-p} z0^(-2m-2).

The kernel orientation (the overall sign) is the one for which the
quadratic loop equations hold; :func:`check_quadratic_loop` tests exactly that.
"""

from __future__ import annotations

import itertools
import threading
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .exact_core import ExactError, Rat, laurent_expand, _ctx, _order
from .spectral_curve import CurveError, SpectralCurve, Z

Polar = Dict[Tuple[int, ...], Rat]

ZERO = Rat.const(0)
ONE = Rat.const(1)


class TREngineError(ExactError):
    """Unsupported input for the recursion."""


def zname(i: int) -> str:
    return f"z{i}"


def polar_to_rat(w: Polar, names: Sequence[str]) -> Rat:
    """``sum_e c_e prod z_i^(-e_i)`` as a reduced rational function."""
    if not w:
        return ZERO
    n = len(names)
    top = [max(e[i] for e in w) for i in range(n)]
    # common denominator of the coefficients
    common = None
    for c in w.values():
        common = c if common is None else _lcm_den(common, c)
    cden = common.den if common is not None else None
    all_names = _order(tuple(names) + tuple(nm for c in w.values() for nm in c.names))
    ctx = _ctx(all_names)
    idx = [all_names.index(nm) for nm in names]
    cden_l = Rat(cden, cden, common.names, True).lifted(all_names)[0] if cden is not None else ctx.constant(1)
    num = ctx.constant(0)
    for e, c in w.items():
        cn, cd = c.lifted(all_names)
        mono = [0] * len(all_names)
        for j, i in enumerate(idx):
            mono[i] = top[j] - e[j]
        num += (cn * (cden_l / cd)) * ctx.from_dict({tuple(mono): 1})
    den_mono = [0] * len(all_names)
    for j, i in enumerate(idx):
        den_mono[i] = top[j]
    den = cden_l * ctx.from_dict({tuple(den_mono): 1})
    return Rat(num, den, all_names)


def _lcm_den(acc: Rat, c: Rat) -> Rat:
    """Carry a Rat whose denominator is the lcm of the denominators seen."""
    names = _order(acc.names + c.names)
    _, d1 = acc.lifted(names)
    _, d2 = c.lifted(names)
    g = d1.gcd(d2)
    l = d1 * (d2 / g)
    return Rat(l, l, names, True)


def polar_swap(w: Polar, perm: Sequence[int]) -> Polar:
    return {tuple(e[i] for i in perm): c for e, c in w.items()}


class OmegaTable:
    """Memoized amplitudes of one curve.

    Entries are immutable once inserted; a lock serialises insertion so that
    concurrent readers always see complete entries.
    """

    def __init__(self, curve: SpectralCurve):
        fbp = curve.finite_branch_points
        if len(fbp) != 1 or not fbp[0].is_zero():
            raise TREngineError("recursion implemented for a single finite branch point at z=0")
        self.curve = curve
        self._memo: Dict[Tuple[int, int], Polar] = {}
        self._h: List[Rat] = []
        self._h_order = -2
        self._lock = threading.RLock()

    # -- kernel data ------------------------------------------------------
    @cached_property
    def _hfun(self) -> Rat:
        c = self.curve
        return Rat.var(Z) / (c.y * c.dx * 2)

    def h(self, k: int) -> Rat:
        """Coefficient of z^k in ``z/(2 y dx/dz)`` at z=0."""
        if k < -1:
            return ZERO
        if k > self._h_order:
            with self._lock:
                order = max(k, 2 * self._h_order + 4, 8)
                s = laurent_expand(self._hfun, Z, 0, order)
                if s.val < -1:
                    raise TREngineError("y vanishes to higher order at the branch point")
                self._h = [s[j] for j in range(-1, order + 1)]
                self._h_order = order
        return self._h[k + 1]

    # -- recursion ----------------------------------------------------------
    def omega(self, g: int, n: int) -> Polar:
        """Polar form of W_{g,n} for 2g-2+n > 0."""
        if 2 * g - 2 + n <= 0:
            raise TREngineError(f"({g},{n}) is unstable; use omega_rat")
        key = (g, n)
        w = self._memo.get(key)
        if w is not None:
            return w
        w = self._compute(g, n)
        with self._lock:
            self._memo.setdefault(key, w)
        return self._memo[key]

    def _factor(self, g: int, idx: Tuple[int, ...], sign: int, n: int, kmax: int):
        """Series of W_{g,1+|idx|}(sign*z, z_idx) as [(p, eJ, c)] (eJ over n spectators)."""
        out = []
        if g == 0 and len(idx) == 1:
            j = idx[0]
            for k in range(0, kmax + 1):
                e = [0] * n
                e[j] = k + 2
                out.append((k, tuple(e), Rat.const((k + 1) * (sign ** k))))
            return out
        for e, c in self.omega(g, 1 + len(idx)).items():
            full = [0] * n
            for pos, j in enumerate(idx):
                full[j] = e[pos + 1]
            out.append((-e[0], tuple(full), c if (sign == 1 or e[0] % 2 == 0) else -c))
        return out

    def bracket(self, g: int, n: int) -> Dict[Tuple[int, Tuple[int, ...]], Rat]:
        """Polar part (p <= 0) of -W_{g-1,n+2}(z,-z,J) - sum' W(z,I) W(-z,J\\I)."""
        br: Dict[Tuple[int, Tuple[int, ...]], Rat] = {}

        def add(p, e, c):
            if p > 0 or c.is_zero():
                return
            key = (p, e)
            v = br.get(key)
            br[key] = -c if v is None else v - c

        if g >= 1:
            if (g - 1, n + 2) == (0, 2):
                add(-2, (), Rat.const(Fraction(1, 4)))
            else:
                for e, c in self.omega(g - 1, n + 2).items():
                    add(-e[0] - e[1], e[2:], c if e[1] % 2 == 0 else -c)
        spect = tuple(range(n))
        for g1 in range(g + 1):
            g2 = g - g1
            for r in range(n + 1):
                for I in itertools.combinations(spect, r):
                    Ic = tuple(j for j in spect if j not in I)
                    if (g1, len(I)) == (0, 0) or (g2, len(Ic)) == (0, 0):
                        continue
                    un1 = g1 == 0 and len(I) == 1
                    un2 = g2 == 0 and len(Ic) == 1
                    if un1 and un2:
                        # B(z,zi) B(-z,zj): only the constant term survives p <= 0
                        e = [0] * n
                        e[I[0]] = 2
                        e[Ic[0]] = 2
                        add(0, tuple(e), ONE)
                        continue
                    f2 = self._factor(g2, Ic, -1, n, 0) if not un2 else None
                    f1 = self._factor(g1, I, 1, n, 0) if not un1 else None
                    if un1:
                        kmax = max(-p for p, _, _ in f2)
                        f1 = self._factor(g1, I, 1, n, kmax)
                    if un2:
                        kmax = max(-p for p, _, _ in f1)
                        f2 = self._factor(g2, Ic, -1, n, kmax)
                    for p1, e1, c1 in f1:
                        for p2, e2, c2 in f2:
                            if p1 + p2 <= 0:
                                add(p1 + p2, tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
        return {k: v for k, v in br.items() if not v.is_zero()}

    def _compute(self, g: int, n: int) -> Polar:
        m = n - 1  # spectators
        out: Polar = {}
        for (p, eJ), c in sorted(self.bracket(g, m).items()):
            for mm in range(0, (-p) // 2 + 1):
                hk = self.h(-1 - 2 * mm - p)
                if hk.is_zero():
                    continue
                key = (2 * mm + 2,) + eJ
                v = c * hk
                out[key] = out[key] + v if key in out else v
        return {k: v for k, v in out.items() if not v.is_zero()}

    # -- rational views -----------------------------------------------------
    def omega_rat(self, g: int, n: int, names: Optional[Sequence[str]] = None) -> Rat:
        """W_{g,n} as a rational function of the given variable names."""
        names = tuple(names) if names is not None else tuple(zname(i) for i in range(n))
        if len(names) != n:
            raise ValueError("wrong number of variable names")
        if (g, n) == (0, 1):
            return self.curve.at(self.curve.ydx, names[0])
        if (g, n) == (0, 2):
            return (Rat.var(names[0]) - Rat.var(names[1])) ** -2
        if 2 * g - 2 + n <= 0:
            raise TREngineError(f"no amplitude ({g},{n})")
        return polar_to_rat(self.omega(g, n), names)

    def entries(self) -> List[Tuple[int, int]]:
        return sorted(self._memo)


def bergman(z1: str = "z1", z2: str = "z2") -> Rat:
    """Density of ``B(z1,z2) = dz1 dz2/(z1-z2)^2``."""
    return (Rat.var(z1) - Rat.var(z2)) ** -2


# ---------------------------------------------------------------------------
# loop equations


def _spectators(n: int) -> Tuple[str, ...]:
    return tuple(zname(i) for i in range(1, n + 1))


def _w_at(table: OmegaTable, g: int, first: Rat, rest: Sequence[str]) -> Rat:
    """W_{g,1+|rest|}(first, rest) with ``first`` a rational expression in z."""
    w = table.omega_rat(g, 1 + len(rest), ("_t",) + tuple(rest))
    return w.subs({"_t": first})


def quadratic_combination(table: OmegaTable, g: int, n: int) -> Rat:
    """``[W_{g-1,n+2}(z,-z,J) + sum_{all splits} W(z,I)W(-z,J\\I)] / x'(z)^2``.

    With ``omega(sigma z)`` read against ``dx`` this is minus the quadratic
    combination of the loop equations divided by ``dx^2``; for (0,0) it is y^2.
    """
    z = Rat.var(Z)
    J = _spectators(n)
    total = ZERO
    if g >= 1:
        w = table.omega_rat(g - 1, n + 2, ("_a", "_b") + J)
        total = total + w.subs({"_a": z, "_b": -z})
    for g1 in range(g + 1):
        for r in range(n + 1):
            for I in itertools.combinations(J, r):
                Ic = tuple(j for j in J if j not in I)
                a = _w_at(table, g1, z, I)
                b = _w_at(table, g - g1, -z, Ic)
                total = total + a * b
    return total / (table.curve.dx ** 2)


class LoopResult:
    def __init__(self, ok: bool, witness: Optional[Rat] = None, detail: str = ""):
        self.ok = ok
        self.witness = witness
        self.detail = detail

    def __bool__(self) -> bool:
        return self.ok

    def __repr__(self) -> str:
        return f"LoopResult(ok={self.ok}, {self.detail})"


def check_linear_loop(table: OmegaTable, g: int, n: int) -> LoopResult:
    """W_{g,n+1}(z,J) - W_{g,n+1}(-z,J) equals dx dx1/(x-x1)^2 for (0,1), else 0."""
    z = Rat.var(Z)
    J = _spectators(n)
    if 2 * g - 2 + n + 1 <= 0:
        raise TREngineError("linear loop equation needs 2g-1+n > 0")
    a = _w_at(table, g, z, J)
    b = _w_at(table, g, -z, J)
    lhs = a - b
    rhs = ZERO
    if (g, n) == (0, 1):
        c = table.curve
        x1 = c.x_of("z1")
        rhs = c.dx * x1.diff("z1") / (c.x - x1) ** 2
    diff = lhs - rhs
    return LoopResult(diff.is_zero(), diff, f"linear ({g},{n})")


def check_quadratic_loop(table: OmegaTable, g: int, n: int) -> LoopResult:
    """The combination is even in z and has no pole at the branch point."""
    q = quadratic_combination(table, g, n)
    z = Rat.var(Z)
    odd = q - q.subs({Z: -z})
    if not odd.is_zero():
        return LoopResult(False, odd, f"quadratic ({g},{n}): not even")
    if q.depends_on(Z):
        den0 = Rat.from_poly(q.den, q.names).subs({Z: 0})
        if den0.is_zero():
            return LoopResult(False, q, f"quadratic ({g},{n}): pole at z=0")
    return LoopResult(True, None, f"quadratic ({g},{n})")


def loop_suite(table: OmegaTable, max_chi: int) -> List[Tuple[str, int, int, bool]]:
    """All linear and quadratic loop equations with 2g-2+n <= max_chi."""
    out = []
    for g in range(0, max_chi // 2 + 2):
        for n in range(0, max_chi + 3):
            if 2 * g - 2 + n > max_chi:
                continue
            if 2 * g - 1 + n > 0:
                out.append(("linear", g, n, bool(check_linear_loop(table, g, n))))
            out.append(("quadratic", g, n, bool(check_quadratic_loop(table, g, n))))
    return out

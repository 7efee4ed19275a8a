"""Exact arithmetic foundation.

Everything downstream is built on :class:`Rat`, a reduced fraction of two
multivariate polynomials with rational coefficients.  Polynomials are
``python-flint`` ``fmpq_mpoly`` objects living in a context whose generator
list is the sorted set of variable names the value actually mentions, so two
values over different variable sets are lifted into the union before any
arithmetic happens.

Invariants kept by every constructor:

* ``gcd(num, den) == 1``;
* ``den`` is monic for the degree-lexicographic order of its context;
* the zero element is ``0/1``.

Equality is therefore a canonical-form comparison.  On top of ``Rat`` the
module provides a tiny expression grammar (parser and printer), truncated
Laurent series with an explicit validity window, ħ-series, ``LogExpr``
(rational part plus log atoms) and the one-variable residue/primitive
calculus used everywhere else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import flint

__all__ = [
    "ExactError",
    "FieldExtensionError",
    "TruncationError",
    "Rat",
    "parse",
    "var",
    "const",
    "LaurentSeries",
    "laurent_expand",
    "residue",
    "primitive",
    "LogExpr",
    "HbarSeries",
    "INF",
]


class ExactError(ValueError):
    """Base class for exact-arithmetic failures."""


class FieldExtensionError(ExactError):
    """A computation would leave the rational parameter field."""


class TruncationError(ExactError):
    """A series coefficient was requested outside its valid window."""


INF = "oo"  # the point at infinity of the z-line

Number = Union[int, Fraction, "flint.fmpq"]


# ---------------------------------------------------------------------------
# contexts

_NAT = re.compile(r"(\d+)")


def _natkey(name: str) -> tuple:
    return tuple(int(p) if p.isdigit() else p for p in _NAT.split(name))


def _order(names: Iterable[str]) -> Tuple[str, ...]:
    return tuple(sorted(set(names), key=_natkey))


@lru_cache(maxsize=None)
def _ctx(names: Tuple[str, ...]):
    return flint.fmpq_mpoly_ctx.get(names, "deglex")


@lru_cache(maxsize=4096)
def _lift_map(src: Tuple[str, ...], dst: Tuple[str, ...]):
    c = _ctx(dst)
    return tuple(c.gen(dst.index(n)) for n in src)


def _lift(p, src: Tuple[str, ...], dst: Tuple[str, ...]):
    if src == dst:
        return p
    c = _ctx(dst)
    if not src:
        return c.constant(p.leading_coefficient()) if not p.is_zero() else c.constant(0)
    return p.compose(*_lift_map(src, dst), ctx=c)


def _fmpq(v: Number) -> "flint.fmpq":
    if isinstance(v, flint.fmpq):
        return v
    if isinstance(v, Fraction):
        return flint.fmpq(v.numerator, v.denominator)
    if isinstance(v, int):
        return flint.fmpq(v)
    raise TypeError(f"not an exact number: {v!r}")


# ---------------------------------------------------------------------------
# rational functions


class Rat:
    """Reduced multivariate rational function over Q.

    Instances are immutable.  ``names`` is the sorted tuple of generators of
    the flint context that ``num`` and ``den`` live in; unused generators are
    allowed but get dropped by :meth:`trim`.
    """

    __slots__ = ("num", "den", "names")

    def __init__(self, num, den, names: Tuple[str, ...], _reduced: bool = False):
        if not _reduced:
            if den.is_zero():
                raise ZeroDivisionError("rational function with zero denominator")
            if num.is_zero():
                c = _ctx(names)
                num, den = c.constant(0), c.constant(1)
            elif not den.is_constant():
                g = num.gcd(den)
                if not g.is_constant():
                    num, den = num / g, den / g
                lc = den.leading_coefficient()
                if lc != 1:
                    num, den = num / lc, den / lc
            else:
                lc = den.leading_coefficient()
                if lc != 1:
                    num = num / lc
                    den = _ctx(names).constant(1)
        self.num = num
        self.den = den
        self.names = names

    # -- construction -----------------------------------------------------
    @staticmethod
    def const(v: Number) -> "Rat":
        c = _ctx(())
        return Rat(c.constant(_fmpq(v)), c.constant(1), (), True)

    @staticmethod
    def var(name: str) -> "Rat":
        c = _ctx((name,))
        return Rat(c.gen(0), c.constant(1), (name,), True)

    @staticmethod
    def from_poly(p, names: Tuple[str, ...]) -> "Rat":
        return Rat(p, _ctx(names).constant(1), names, True)

    @staticmethod
    def coerce(v) -> "Rat":
        if isinstance(v, Rat):
            return v
        return Rat.const(v)

    # -- structure ----------------------------------------------------------
    def lifted(self, names: Tuple[str, ...]) -> Tuple[object, object]:
        return _lift(self.num, self.names, names), _lift(self.den, self.names, names)

    def to(self, names: Tuple[str, ...]) -> "Rat":
        if names == self.names:
            return self
        n, d = self.lifted(names)
        return Rat(n, d, names, True)

    def variables(self) -> Tuple[str, ...]:
        """Names that really occur."""
        used = set()
        for p in (self.num, self.den):
            degs = p.degrees()
            used.update(n for n, dg in zip(self.names, degs) if dg > 0)
        return _order(used)

    def trim(self) -> "Rat":
        used = self.variables()
        if used == self.names:
            return self
        c = _ctx(used)
        return Rat(self.num.compose(*[c.gen(used.index(n)) if n in used else c.constant(0) for n in self.names], ctx=c),
                   self.den.compose(*[c.gen(used.index(n)) if n in used else c.constant(0) for n in self.names], ctx=c),
                   used, True)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def depends_on(self, name: str) -> bool:
        if name not in self.names:
            return False
        i = self.names.index(name)
        return self.num.degrees()[i] > 0 or self.den.degrees()[i] > 0

    def to_fraction(self) -> Fraction:
        if not self.is_constant():
            raise ExactError(f"not a constant: {self}")
        q = self.num.leading_coefficient() if not self.num.is_zero() else flint.fmpq(0)
        return Fraction(int(q.p), int(q.q))

    # -- arithmetic ---------------------------------------------------------
    def _pair(self, other: "Rat"):
        if self.names == other.names:
            return self.names, self.num, self.den, other.num, other.den
        names = _order(self.names + other.names)
        a, b = self.lifted(names)
        c, d = other.lifted(names)
        return names, a, b, c, d

    def __add__(self, other) -> "Rat":
        other = Rat.coerce(other)
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        names, a, b, c, d = self._pair(other)
        if b == d:
            return Rat(a + c, b, names)
        if b.is_constant():
            return Rat(a * d + c, d, names, True)  # gcd(a*d+c, d) = gcd(c, d) = 1
        if d.is_constant():
            return Rat(a + c * b, b, names, True)
        g = b.gcd(d)
        if g.is_constant():
            return Rat(a * d + c * b, b * d, names)
        bg, dg = b / g, d / g
        return Rat(a * dg + c * bg, b * dg, names)

    __radd__ = __add__

    def __neg__(self) -> "Rat":
        return Rat(-self.num, self.den, self.names, True)

    def __sub__(self, other) -> "Rat":
        return self + (-Rat.coerce(other))

    def __rsub__(self, other) -> "Rat":
        return Rat.coerce(other) + (-self)

    def __mul__(self, other) -> "Rat":
        if not isinstance(other, Rat):
            q = _fmpq(other)
            if q == 0:
                return Rat.const(0)
            return Rat(self.num * q, self.den, self.names, True)
        if self.num.is_zero() or other.num.is_zero():
            return Rat.const(0)
        names, a, b, c, d = self._pair(other)
        if b.is_constant() and d.is_constant():
            return Rat(a * c, b, names, True)
        if not d.is_constant():
            g1 = a.gcd(d)
            if not g1.is_constant():
                a, d = a / g1, d / g1
        if not b.is_constant():
            g2 = c.gcd(b)
            if not g2.is_constant():
                c, b = c / g2, b / g2
        den = b * d
        lc = den.leading_coefficient()
        num = a * c
        if lc != 1:
            num, den = num / lc, den / lc
        return Rat(num, den, names, True)

    __rmul__ = __mul__

    def inv(self) -> "Rat":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return Rat(self.den, self.num, self.names)

    def __truediv__(self, other) -> "Rat":
        if not isinstance(other, Rat):
            q = _fmpq(other)
            if q == 0:
                raise ZeroDivisionError("division by zero")
            return Rat(self.num / q, self.den, self.names, True)
        return self * other.inv()

    def __rtruediv__(self, other) -> "Rat":
        return Rat.coerce(other) * self.inv()

    def __pow__(self, k: int) -> "Rat":
        if int(k) != k:
            raise TypeError("integer exponents only")
        k = int(k)
        if k == 0:
            return Rat.const(1)
        if k < 0:
            return self.inv() ** (-k)
        if self.den.is_constant():
            return Rat(self.num ** k, self.den, self.names, True)
        return Rat(self.num ** k, self.den ** k, self.names, True)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Rat):
            try:
                other = Rat.coerce(other)
            except TypeError:
                return NotImplemented
        if self.names == other.names:
            return self.num == other.num and self.den == other.den
        return (self - other).is_zero()

    def __hash__(self) -> int:
        t = self.trim()
        return hash((t.names, str(t.num), str(t.den)))

    # -- calculus -----------------------------------------------------------
    def diff(self, name: str) -> "Rat":
        if not self.depends_on(name):
            return Rat.const(0)
        a, b = self.num, self.den
        da, db = a.derivative(name), b.derivative(name)
        if b.is_constant():
            return Rat(da, b, self.names, True)
        return Rat(da * b - a * db, b * b, self.names)

    def subs(self, values: Mapping[str, object]) -> "Rat":
        """Simultaneous substitution of variables by rational functions."""
        vals = {k: Rat.coerce(v) for k, v in values.items() if k in self.names}
        if not vals:
            return self
        rest = [n for n in self.names if n not in vals]
        names = _order(rest + [n for v in vals.values() for n in v.names])
        c = _ctx(names)
        # common denominator of the substituted values
        common = c.constant(1)
        polys = {}
        for k, v in vals.items():
            n, d = v.lifted(names)
            polys[k] = (n, d)
        if all(d.is_constant() for _, d in polys.values()):
            gens = []
            for n in self.names:
                if n in polys:
                    num, den = polys[n]
                    gens.append(num / den.leading_coefficient())
                else:
                    gens.append(c.gen(names.index(n)))
            return Rat(self.num.compose(*gens, ctx=c), self.den.compose(*gens, ctx=c), names)
        # rational values: substitute one at a time through homogenisation
        out = self
        for k, v in vals.items():
            if any(v.depends_on(o) for o in vals if o != k):
                raise ExactError("chained rational substitution is not supported")
        for k, v in vals.items():
            out = out._subs_one(k, v)
        return out

    def _subs_one(self, name: str, v: "Rat") -> "Rat":
        names = _order(tuple(n for n in self.names if n != name) + v.names)
        pn, pd = v.lifted(names)

        def hom(poly):
            coeffs = _coeffs_in(poly, self.names, name, names)
            if not coeffs:
                return _ctx(names).constant(0), 0
            deg = max(coeffs)
            acc = _ctx(names).constant(0)
            for k, ck in coeffs.items():
                acc += ck * pn ** k * pd ** (deg - k)
            return acc, deg

        a, da = hom(self.num)
        b, db = hom(self.den)
        if da > db:
            b = b * pd ** (da - db)
        elif db > da:
            a = a * pd ** (db - da)
        return Rat(a, b, names)

    def coeffs(self, name: str) -> Tuple[Dict[int, "Rat"], Dict[int, "Rat"]]:
        """Numerator and denominator as polynomials in ``name``."""
        rest = tuple(n for n in self.names if n != name)
        num = {k: Rat.from_poly(p, rest) for k, p in _coeffs_in(self.num, self.names, name, rest).items()}
        den = {k: Rat.from_poly(p, rest) for k, p in _coeffs_in(self.den, self.names, name, rest).items()}
        return num, den

    def degree(self, name: str) -> Tuple[int, int]:
        if name not in self.names:
            return 0, 0
        i = self.names.index(name)
        return self.num.degrees()[i], self.den.degrees()[i]

    def sqrt(self) -> "Rat":
        """Exact square root when numerator and denominator are squares."""
        try:
            n = self.num.sqrt()
            d = self.den.sqrt()
        except Exception as exc:  # flint raises DomainError
            raise FieldExtensionError(f"no rational square root of {self}") from exc
        r = Rat(n, d, self.names)
        # pick the root whose numerator has positive leading coefficient
        if not r.num.is_zero() and r.num.leading_coefficient() < 0:
            r = -r
        return r

    def factor_den(self, name: str) -> List[Tuple["Rat", int]]:
        """Irreducible factors of the denominator that involve ``name``."""
        _, facs = self.den.factor()
        return [(Rat.from_poly(f, self.names), e) for f, e in facs if f.degrees()[self.names.index(name)] > 0] if name in self.names else []

    # -- printing -----------------------------------------------------------
    def __str__(self) -> str:
        t = self.trim()
        n = str(t.num)
        if t.den.is_one():
            return n
        return f"({n})/({t.den})"

    def __repr__(self) -> str:
        return f"Rat({self})"


def _coeffs_in(poly, names: Tuple[str, ...], name: str, rest: Tuple[str, ...]):
    """Split a flint polynomial into coefficients of powers of ``name``."""
    if name not in names:
        return {0: _lift(poly, names, rest)} if not poly.is_zero() else {}
    i = names.index(name)
    keep = [j for j, n in enumerate(names) if n != name]
    target = [rest.index(names[j]) for j in keep]
    buckets: Dict[int, Dict[tuple, object]] = {}
    for mon, c in poly.to_dict().items():
        e = [0] * len(rest)
        for j, tj in zip(keep, target):
            e[tj] = mon[j]
        buckets.setdefault(int(mon[i]), {})[tuple(e)] = c
    c = _ctx(rest)
    return {k: c.from_dict(v) for k, v in buckets.items()}


def var(name: str) -> Rat:
    return Rat.var(name)


def const(v: Number) -> Rat:
    return Rat.const(v)


ZERO = Rat.const(0)
ONE = Rat.const(1)


# ---------------------------------------------------------------------------
# grammar

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


def _tokens(text: str) -> List[str]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExactError(f"cannot parse {text[pos:]!r}")
        out.append(m.group(1) or m.group(2) or ("^" if m.group(3) == "**" else m.group(3)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def parse(text: str, symbols: Optional[Mapping[str, Rat]] = None) -> Rat:
    """Parse the shared grammar: integers, names, ``+ - * / ^`` and parentheses.

    ``symbols`` may bind names to ready-made values (e.g. ``x`` to ``z^2-2*u``).
    """
    toks = _tokens(text)
    pos = 0
    symbols = symbols or {}

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take(expected=None):
        nonlocal pos
        if pos >= len(toks):
            raise ExactError(f"unexpected end of {text!r}")
        t = toks[pos]
        if expected is not None and t != expected:
            raise ExactError(f"expected {expected!r}, found {t!r} in {text!r}")
        pos += 1
        return t

    def expr():
        v = term()
        while peek() in ("+", "-"):
            v = v + term() if take() == "+" else v - term()
        return v

    def term():
        v = unary()
        while peek() in ("*", "/"):
            v = v * unary() if take() == "*" else v / unary()
        return v

    def unary():
        if peek() == "-":
            take()
            return -unary()
        if peek() == "+":
            take()
            return unary()
        return power()

    def exponent():
        sign = 1
        if peek() in ("-", "+"):
            sign = -1 if take() == "-" else 1
        if peek() == "(":
            take("(")
            k = exponent()
            take(")")
            return sign * k
        t = take()
        if not t.isdigit():
            raise ExactError(f"integer exponent expected, found {t!r}")
        return sign * int(t)

    def power():
        base = atom()
        if peek() == "^":
            take()
            return base ** exponent()
        return base

    def atom():
        t = take()
        if t == "(":
            v = expr()
            take(")")
            return v
        if t.isdigit():
            return Rat.const(int(t))
        if t[0].isalpha() or t[0] == "_":
            return symbols[t] if t in symbols else Rat.var(t)
        raise ExactError(f"unexpected token {t!r} in {text!r}")

    v = expr()
    if pos != len(toks):
        raise ExactError(f"trailing input {' '.join(toks[pos:])!r} in {text!r}")
    return v


# ---------------------------------------------------------------------------
# Laurent series


@dataclass(frozen=True)
class LaurentSeries:
    """Truncated Laurent series ``sum_{k=val}^{order} c_k * t^k``.

    ``coeffs[i]`` is the coefficient of ``t^(val+i)``; exponents above
    ``order`` are unknown, and asking for them raises :class:`TruncationError`.
    """

    var: str
    point: object
    val: int
    coeffs: Tuple[Rat, ...]
    order: int

    def __post_init__(self):
        if self.order < self.val - 1:
            raise ExactError("order below valuation")
        if len(self.coeffs) != self.order - self.val + 1:
            raise ExactError("coefficient count does not match window")

    @staticmethod
    def make(var: str, point, val: int, coeffs: Sequence[Rat], order: int) -> "LaurentSeries":
        coeffs = list(coeffs)[: max(order - val + 1, 0)]
        coeffs += [ZERO] * (order - val + 1 - len(coeffs))
        return LaurentSeries(var, point, val, tuple(coeffs), order)

    def __getitem__(self, k: int) -> Rat:
        if k > self.order:
            raise TruncationError(f"coefficient t^{k} beyond valid order {self.order}")
        if k < self.val:
            return ZERO
        return self.coeffs[k - self.val]

    def terms(self) -> Iterator[Tuple[int, Rat]]:
        for i, c in enumerate(self.coeffs):
            if not c.is_zero():
                yield self.val + i, c

    def valuation(self) -> int:
        for k, _ in self.terms():
            return k
        raise TruncationError("series is zero through its window; valuation unknown")

    def normalized(self) -> "LaurentSeries":
        v = self.valuation()
        return LaurentSeries.make(self.var, self.point, v, self.coeffs[v - self.val:], self.order)

    def _check(self, other: "LaurentSeries"):
        if self.var != other.var or self.point != other.point:
            raise ExactError("series in different local coordinates")

    def __add__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self + LaurentSeries.make(self.var, self.point, 0, [Rat.coerce(other)], max(self.order, 0))
        self._check(other)
        lo, hi = min(self.val, other.val), min(self.order, other.order)
        return LaurentSeries.make(self.var, self.point, lo, [self[k] + other[k] for k in range(lo, hi + 1)], hi)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(self.var, self.point, self.val, tuple(-c for c in self.coeffs), self.order)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LaurentSeries":
        c = Rat.coerce(c)
        return LaurentSeries(self.var, self.point, self.val, tuple(c * a for a in self.coeffs), self.order)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by ``t^k``."""
        return LaurentSeries(self.var, self.point, self.val + k, self.coeffs, self.order + k)

    def __mul__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self.scale(other)
        self._check(other)
        a, b = self.normalized(), other.normalized()
        val = a.val + b.val
        order = min(a.order + b.val, b.order + a.val)
        out = [ZERO] * (order - val + 1)
        for i, ca in enumerate(a.coeffs):
            if ca.is_zero():
                continue
            for j, cb in enumerate(b.coeffs):
                if i + j >= len(out):
                    break
                if not cb.is_zero():
                    out[i + j] = out[i + j] + ca * cb
        return LaurentSeries.make(self.var, self.point, val, out, order)

    __rmul__ = __mul__

    def inv(self) -> "LaurentSeries":
        a = self.normalized()
        n = a.order - a.val  # relative precision
        lead = a.coeffs[0].inv()
        out = [lead]
        for k in range(1, n + 1):
            s = ZERO
            for j in range(1, k + 1):
                s = s + a.coeffs[j] * out[k - j]
            out.append(-s * lead)
        return LaurentSeries.make(self.var, self.point, -a.val, out, -a.val + n)

    def __truediv__(self, other) -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            return self * other.inv()
        return self.scale(Rat.coerce(other).inv())

    def __pow__(self, k: int) -> "LaurentSeries":
        if k < 0:
            return self.inv() ** (-k)
        if k == 0:
            a = self.normalized()
            return LaurentSeries.make(self.var, self.point, 0, [ONE], a.order - a.val)
        base, out = self, None
        while k:
            if k & 1:
                out = base if out is None else out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def sqrt(self) -> "LaurentSeries":
        """Square root with leading coefficient the positive rational root."""
        a = self.normalized()
        if a.val % 2:
            raise FieldExtensionError("odd valuation has no Laurent square root")
        n = a.order - a.val
        r0 = a.coeffs[0].sqrt()
        two_r0 = r0 * 2
        out = [r0]
        for k in range(1, n + 1):
            s = a.coeffs[k]
            for j in range(1, k):
                s = s - out[j] * out[k - j]
            out.append(s / two_r0)
        return LaurentSeries.make(self.var, self.point, a.val // 2, out, a.val // 2 + n)

    def diff(self) -> "LaurentSeries":
        """d/dt of the series in its local coordinate."""
        terms = [self[k + 1] * (k + 1) for k in range(self.val - 1, self.order)]
        return LaurentSeries.make(self.var, self.point, self.val - 1, terms, self.order - 1)

    def truncate(self, order: int) -> "LaurentSeries":
        if order > self.order:
            raise TruncationError(f"cannot extend window to {order}")
        return LaurentSeries.make(self.var, self.point, self.val, self.coeffs, order)

    def principal_part(self) -> Dict[int, Rat]:
        return {k: c for k, c in self.terms() if k < 0}

    def __str__(self) -> str:
        t = self.var
        parts = [f"({c})*{t}^{k}" for k, c in self.terms()]
        return (" + ".join(parts) or "0") + f" + O({t}^{self.order + 1})"


def _local_polys(f: Rat, name: str, point) -> Tuple[Dict[int, Rat], Dict[int, Rat], int]:
    """Numerator/denominator of f in the local coordinate, plus a shift.

    For a finite point p the local coordinate is ``e = name - p``; at
    infinity it is ``w = 1/name`` and the returned shift records the extra
    power of ``w`` coming from clearing denominators.
    """
    num, den = f.coeffs(name)
    if point == INF:
        dn = max(num) if num else 0
        dd = max(den)
        return ({dn - k: c for k, c in num.items()}, {dd - k: c for k, c in den.items()}, dd - dn)
    p = Rat.coerce(point)
    if p.depends_on(name):
        raise ExactError("expansion point depends on the expansion variable")
    if p.is_zero():
        return num, den, 0

    def shifted(poly: Dict[int, Rat]) -> Dict[int, Rat]:
        out: Dict[int, Rat] = {}
        if not poly:
            return out
        deg = max(poly)
        ppow = [ONE]
        for _ in range(deg):
            ppow.append(ppow[-1] * p)
        for k, c in poly.items():
            for i in range(k + 1):
                out[i] = out.get(i, ZERO) + c * ppow[k - i] * comb(k, i)
        return {i: c for i, c in out.items() if not c.is_zero()}

    return shifted(num), shifted(den), 0


def laurent_expand(f, name: str, point=0, order: int = 0) -> LaurentSeries:
    """Expand f in ``name`` around ``point`` (a Rat constant in ``name`` or :data:`INF`).

    The local coordinate is ``name - point`` or ``1/name``; the returned
    series is exact on ``[ord_p f, order]``.
    """
    f = Rat.coerce(f)
    local = f"{name}@{point}"
    if f.is_zero():
        return LaurentSeries.make(local, point, order, [ZERO], order)
    a, b, shift = _local_polys(f, name, point)
    va, vb = min(a), min(b)
    val = va - vb + shift
    n = order - val
    if n < 0:
        return LaurentSeries.make(local, point, order + 1, [], order)
    b0inv = b[vb].inv()
    out: List[Rat] = []
    for k in range(n + 1):
        s = a.get(va + k, ZERO)
        for j in range(1, k + 1):
            bj = b.get(vb + j)
            if bj is not None:
                s = s - bj * out[k - j]
        out.append(s * b0inv)
    return LaurentSeries.make(local, point, val, out, order)


def residue(f, name: str, point=0) -> Rat:
    """Residue of the differential ``f d(name)`` at ``point``."""
    if point == INF:
        return -laurent_expand(f, name, INF, 1)[1]
    return laurent_expand(f, name, point, -1)[-1]


def series_residue(s: LaurentSeries) -> Rat:
    """Residue of ``s * d(name)`` where ``s`` is written in the local coordinate."""
    if s.point == INF:
        return -s[1]
    return s[-1]


def _linear_root(fac: Rat, name: str) -> Rat:
    num, _ = fac.coeffs(name)
    if max(num) != 1:
        raise FieldExtensionError(f"pole locus {fac} is not rational in {name}")
    return -num.get(0, ZERO) / num[1]


def primitive(f, name: str) -> "LogExpr":
    """Antiderivative of ``f d(name)`` as rational part plus log atoms."""
    f = Rat.coerce(f)
    if f.is_zero():
        return LogExpr(ZERO)
    atoms: List[Tuple[Rat, Rat]] = []
    rational = ZERO
    remainder = f
    x = Rat.var(name)
    for fac, mult in f.factor_den(name):
        root = _linear_root(fac, name)
        s = laurent_expand(f, name, root, -1)
        for k, c in s.principal_part().items():
            term = c * (x - root) ** k
            remainder = remainder - term
            if k == -1:
                atoms.append((c, x - root))
            else:
                rational = rational + c * (x - root) ** (k + 1) / (k + 1)
    if not remainder.is_polynomial() and remainder.depends_on(name):
        num, den = remainder.coeffs(name)
        if max(den) > 0:
            raise ExactError("partial-fraction remainder is not polynomial")
    num, den = remainder.coeffs(name)
    dinv = den[0].inv() if den else ONE
    for k, c in num.items():
        rational = rational + c * dinv * x ** (k + 1) / (k + 1)
    return LogExpr(rational, atoms)


# ---------------------------------------------------------------------------
# log expressions


class LogExpr:
    """``rational + sum c_i * log(arg_i)``; atoms with equal arguments merge."""

    __slots__ = ("rat", "atoms")

    def __init__(self, rat=None, atoms: Iterable[Tuple[object, object]] = ()):
        self.rat = Rat.coerce(rat if rat is not None else 0)
        merged: Dict[str, Tuple[Rat, Rat]] = {}
        for c, arg in atoms:
            c, arg = Rat.coerce(c), Rat.coerce(arg)
            if c.is_zero():
                continue
            key = str(arg)
            if key in merged:
                c0, a0 = merged[key]
                c = c0 + c
                if c.is_zero():
                    del merged[key]
                    continue
            merged[key] = (c, arg)
        self.atoms: Tuple[Tuple[Rat, Rat], ...] = tuple(merged[k] for k in sorted(merged))

    @staticmethod
    def coerce(v) -> "LogExpr":
        return v if isinstance(v, LogExpr) else LogExpr(v)

    def __add__(self, other) -> "LogExpr":
        other = LogExpr.coerce(other)
        return LogExpr(self.rat + other.rat, self.atoms + other.atoms)

    __radd__ = __add__

    def __neg__(self) -> "LogExpr":
        return LogExpr(-self.rat, [(-c, a) for c, a in self.atoms])

    def __sub__(self, other) -> "LogExpr":
        return self + (-LogExpr.coerce(other))

    def __rsub__(self, other) -> "LogExpr":
        return LogExpr.coerce(other) - self

    def __mul__(self, other) -> "LogExpr":
        if isinstance(other, LogExpr):
            if other.atoms and self.atoms:
                raise ExactError("product of two logarithmic expressions")
            if self.atoms:
                return self * other.rat
            return other * self.rat
        c = Rat.coerce(other)
        return LogExpr(self.rat * c, [(a * c, g) for a, g in self.atoms])

    __rmul__ = __mul__

    def is_rational(self) -> bool:
        return not self.atoms

    def derivation(self, d: Callable[[Rat], Rat]) -> Rat:
        """Apply a derivation; every atom must have a d-constant coefficient."""
        out = d(self.rat)
        for c, arg in self.atoms:
            if not d(c).is_zero():
                raise ExactError(f"log coefficient {c} is not constant for the derivation")
            out = out + c * d(arg) / arg
        return out

    def diff(self, name: str) -> Rat:
        return self.derivation(lambda r: r.diff(name))

    def subs(self, values: Mapping[str, object]) -> "LogExpr":
        return LogExpr(self.rat.subs(values), [(c.subs(values), a.subs(values)) for c, a in self.atoms])

    def __eq__(self, other) -> bool:
        other = LogExpr.coerce(other)
        return self.rat == other.rat and len(self.atoms) == len(other.atoms) and all(
            c1 == c2 and a1 == a2 for (c1, a1), (c2, a2) in zip(self.atoms, other.atoms))

    def __str__(self) -> str:
        parts = [str(self.rat)] if not self.rat.is_zero() or not self.atoms else []
        parts += [f"({c})*log({a})" for c, a in self.atoms]
        return " + ".join(parts)

    __repr__ = __str__


# ---------------------------------------------------------------------------
# ħ-series


@dataclass(frozen=True)
class HbarSeries:
    """``sum_{m} h^m c_m`` known through ``h^K`` (inclusive).

    Coefficients are anything with ring operations (``Rat``, ``LogExpr``,
    matrices of those...).  Missing keys below ``K`` mean zero.
    """

    coeffs: Mapping[int, object]
    K: int
    zero: object = field(default=ZERO, compare=False)

    def __getitem__(self, m: int):
        if m > self.K:
            raise TruncationError(f"h^{m} beyond valid order {self.K}")
        return self.coeffs.get(m, self.zero)

    @property
    def low(self) -> int:
        keys = [m for m in self.coeffs if m <= self.K]
        return min(keys) if keys else self.K + 1

    def orders(self) -> range:
        return range(self.low, self.K + 1)

    def __add__(self, other) -> "HbarSeries":
        if not isinstance(other, HbarSeries):
            other = HbarSeries({0: other}, 10 ** 6, self.zero)
        K = min(self.K, other.K)
        keys = {m for m in list(self.coeffs) + list(other.coeffs) if m <= K}
        return HbarSeries({m: self[m] + other[m] for m in keys}, K, self.zero)

    __radd__ = __add__

    def __neg__(self):
        return HbarSeries({m: -c for m, c in self.coeffs.items()}, self.K, self.zero)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> "HbarSeries":
        if not isinstance(other, HbarSeries):
            return HbarSeries({m: c * other for m, c in self.coeffs.items()}, self.K, self.zero)
        lo_a, lo_b = self.low, other.low
        K = min(self.K + lo_b, other.K + lo_a)
        out: Dict[int, object] = {}
        for i, a in self.coeffs.items():
            if i > self.K:
                continue
            for j, b in other.coeffs.items():
                if j > other.K or i + j > K:
                    continue
                out[i + j] = out[i + j] + a * b if i + j in out else a * b
        return HbarSeries(out, K, self.zero)

    __rmul__ = __mul__

    def shift(self, k: int) -> "HbarSeries":
        """Multiply by ``h^k``."""
        return HbarSeries({m + k: c for m, c in self.coeffs.items()}, self.K + k, self.zero)

    def map(self, fn: Callable[[object], object], zero=None) -> "HbarSeries":
        return HbarSeries({m: fn(c) for m, c in self.coeffs.items() if m <= self.K}, self.K,
                          self.zero if zero is None else zero)

    def truncate(self, K: int) -> "HbarSeries":
        if K > self.K:
            raise TruncationError(f"cannot extend h-series to {K}")
        return HbarSeries({m: c for m, c in self.coeffs.items() if m <= K}, K, self.zero)

    def exp(self) -> "HbarSeries":
        """exp of a series with no h^m terms for m <= 0."""
        if self.low <= 0:
            raise ExactError("exp needs a series starting at h^1 or higher")
        out = {0: ONE}
        term = HbarSeries({0: ONE}, self.K, self.zero)
        for n in range(1, self.K + 1):
            term = (term * self).map(lambda c, n=n: c / n)
            for m in term.orders():
                if m <= self.K:
                    out[m] = out.get(m, ZERO) + term[m]
        return HbarSeries(out, self.K, self.zero)

    def log(self) -> "HbarSeries":
        """log of ``1 + (terms of order >= 1)``."""
        if not (self[0] - ONE).is_zero() or any(m < 0 and not c.is_zero() for m, c in self.coeffs.items()):
            raise ExactError("log needs a series of the form 1 + O(h)")
        x = self - HbarSeries({0: ONE}, self.K)
        out: Dict[int, object] = {}
        power = HbarSeries({0: ONE}, self.K)
        for n in range(1, self.K + 1):
            power = power * x
            sign = 1 if n % 2 else -1
            for m in power.orders():
                c = power[m]
                out[m] = out.get(m, ZERO) + c * Fraction(sign, n)
        return HbarSeries(out, self.K)

    def is_zero_through(self, K: Optional[int] = None) -> bool:
        K = self.K if K is None else K
        return all(self.coeffs.get(m, self.zero).is_zero() for m in self.coeffs if m <= K)

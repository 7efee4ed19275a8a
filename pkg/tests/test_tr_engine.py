"""Airy amplitudes against psi-class intersection numbers from the DVV recursion."""

from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

import pytest

from qcurve.exact_core import Rat, residue
from qcurve.loop_system import LoopSystem
from qcurve.spectral_curve import builtin
from qcurve.tr_engine import bergman, check_linear_loop, check_quadratic_loop, zname


def dfact(n: int) -> int:
    r = 1
    while n > 1:
        r, n = r * n, n - 2
    return r


@lru_cache(maxsize=None)
def psi(g: int, ds: tuple) -> Fraction:
    ds = tuple(sorted(ds))
    n = len(ds)
    if g < 0 or min(ds, default=0) < 0 or sum(ds) != 3 * g - 3 + n or 2 * g - 2 + n <= 0:
        return Fraction(0)
    if (g, ds) == (0, (0, 0, 0)):
        return Fraction(1)
    if (g, ds) == (1, (1,)):
        return Fraction(1, 24)
    k, rest = ds[-1] - 1, ds[:-1]
    total = Fraction(0)
    for j, d in enumerate(rest):
        others = rest[:j] + rest[j + 1:]
        total += Fraction(dfact(2 * k + 2 * d + 1), dfact(2 * d - 1)) * psi(g, others + (d + k,))
    for a in range(k):
        b = k - 1 - a
        s = psi(g - 1, rest + (a, b))
        idx = range(len(rest))
        for r in range(len(rest) + 1):
            for I in combinations(idx, r):
                J = [i for i in idx if i not in I]
                for g1 in range(g + 1):
                    s += psi(g1, (a,) + tuple(rest[i] for i in I)) * psi(g - g1, (b,) + tuple(rest[i] for i in J))
        total += Fraction(dfact(2 * a + 1) * dfact(2 * b + 1), 2) * s
    return total / dfact(2 * k + 3)


def airy_oracle(g: int, n: int) -> Rat:
    zs = [Rat.var(zname(i)) for i in range(1, n + 1)]
    out = Rat.const(0)
    for ds in product(range(3 * g - 2 + n), repeat=n):
        v = psi(g, ds)
        if v:
            term = Rat.const(v * Fraction(-1, 2) ** (2 * g - 2 + n))
            for zi, d in zip(zs, ds):
                term = term * dfact(2 * d + 1) / zi ** (2 * d + 2)
            out = out + term
    return out


def test_psi_known_values():
    assert psi(2, (4,)) == Fraction(1, 1152)
    assert psi(1, (1, 1)) == Fraction(1, 24)
    assert psi(0, (0, 0, 0, 1)) == 1
    assert psi(3, (7,)) == Fraction(1, 82944)


@pytest.fixture(scope="module")
def airy():
    return LoopSystem(builtin("airy")).table


@pytest.mark.parametrize("g, n", [(0, 3), (1, 1), (0, 4), (1, 2), (2, 1), (0, 5), (1, 3), (2, 2), (3, 1)])
def test_airy_against_intersection_numbers(airy, g, n):
    names = [zname(i) for i in range(1, n + 1)]
    assert airy.omega_rat(g, n, names) == airy_oracle(g, n)


def test_bergman(airy):
    z1, z2 = Rat.var("z1"), Rat.var("z2")
    assert airy.omega_rat(0, 2, ["z1", "z2"]) == 1 / (z1 - z2) ** 2 == bergman("z1", "z2")


def test_symmetry():
    table = LoopSystem(builtin("painleve1")).table
    w = table.omega_rat(1, 2, ["z1", "z2"])
    assert w.subs({"z1": Rat.var("z2"), "z2": Rat.var("z1")}) == w


@pytest.mark.parametrize("name", ["painleve1", "finite_pole"])
def test_loop_equations(name):
    table = LoopSystem(builtin(name)).table
    for g, n in [(0, 3), (1, 1), (1, 2), (0, 4)]:
        assert check_linear_loop(table, g, n).ok
        assert check_quadratic_loop(table, g, n).ok


def test_painleve_f11_by_direct_residue():
    # one application of the recursion kernel, written out by hand
    table = LoopSystem(builtin("painleve1")).table
    z0, z, u = Rat.var("z1"), Rat.var("z"), Rat.var("u")
    y = lambda s: s ** 3 - 3 * u * s
    kernel = (1 / (z0 - z) - 1 / (z0 + z)) / (2 * (y(z) - y(-z)) * 2 * z)
    expected = residue(kernel * (-1) / (4 * z ** 2), "z")
    assert table.omega_rat(1, 1, ["z1"]) == expected
    assert expected == (z0 ** 2 / 144 + u / 48) / (u ** 2 * z0 ** 4)

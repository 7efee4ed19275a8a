import pytest

from qcurve.exact_core import Rat, primitive, residue
from qcurve.loop_system import LoopSystem, UnsupportedCheck
from qcurve.spectral_curve import builtin

u = Rat.var("u")


@pytest.fixture(scope="module")
def pI():
    return LoopSystem(builtin("painleve1"))


def test_operator_shape(pI):
    d = pI.L.describe()
    assert d["cycle_form"] == ["(-1)*dB[oo,1]"]
    assert d["derivation_form"] == ["(-1)*d/dt[oo,1]"]


def test_prepotential(pI):
    assert pI.F0_from_times() == Rat.const(-12) / 5 * u ** 5


@pytest.mark.parametrize("g", [1, 2, 3])
def test_LF_against_dilaton_equation(pI, g):
    # F_g = 1/(2-2g) Res Phi omega_{g,1}; L = -d/dt with t = 3u^2 at infinity
    Phi = primitive(pI.curve.ydx, "z").rat
    Fg = residue(Phi * pI.table.omega_rat(g, 1, ["z"]), "z") / (2 - 2 * g) if g > 1 else None
    if g == 1:
        assert pI.LF(1) == 1 / (144 * u ** 2)
        return
    assert pI.LF(g) == -Fg.diff("u") / (6 * u)


def test_frozen_free_energies(pI):
    assert pI.LF(2) == Rat.const(7) / (62208 * u ** 7)


@pytest.mark.parametrize("name", ["airy", "painleve1", "finite_pole", "finite_pole_family"])
def test_P_equals_L(name):
    system = LoopSystem(builtin(name))
    for g, n in [(0, 0), (0, 1), (0, 2), (1, 1), (0, 3)]:
        r = system.check_P_equals_L(g, n)
        assert r.ok, r.witness


@pytest.mark.parametrize("name", ["painleve1", "finite_pole_family"])
def test_variational(name):
    system = LoopSystem(builtin(name))
    for g, n in [(0, 0), (0, 1), (0, 2), (1, 1), (0, 3)]:
        assert system.family_derivative_check(g, n).ok


def test_unsupported_checks():
    fp = LoopSystem(builtin("finite_pole"))
    with pytest.raises(UnsupportedCheck):
        fp.family_derivative_check(0, 1)
    with pytest.raises(UnsupportedCheck):
        fp.F0_from_times()

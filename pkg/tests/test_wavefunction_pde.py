from fractions import Fraction

import pytest

from qcurve.exact_core import HbarSeries, Rat
from qcurve.loop_system import LoopSystem, UnsupportedCheck
from qcurve.spectral_curve import builtin
from qcurve.wavefunction_pde import Divisor, DivisorError, ReducedSystem, WaveFunction, quantum_limit

z = Rat.var("z")


def airy_asymptotic(k: int) -> Fraction:
    """Coefficient u_k of the classical Airy asymptotic series."""
    num = 1
    for j in range(2 * k + 1, 6 * k, 2):
        num *= j
    den = 216 ** k
    for j in range(1, k + 1):
        den *= j
    return Fraction(num, den)


@pytest.fixture(scope="module")
def airy():
    return LoopSystem(builtin("airy"))


def test_airy_one_point_limit_is_airy_series(airy):
    q = quantum_limit(airy, 5)
    s = q.series
    for k in range(5):
        # u_k / zeta^k with zeta = (2/3) z^3
        assert s[k] == Rat.const(airy_asymptotic(k) * Fraction(3, 2) ** k) / z ** (3 * k)


def test_airy_quantum_curve(airy):
    q = quantum_limit(airy, 6)
    big = 10 ** 6
    r = q.residual(HbarSeries({2: Rat.const(1)}, big), HbarSeries({}, big), HbarSeries({0: -z ** 2}, big))
    assert r.is_zero_through(5)


@pytest.mark.parametrize("name", ["airy", "painleve1"])
def test_main_pde_two_points(name):
    wf = WaveFunction(LoopSystem(builtin(name)), Divisor.standard([1, -1]))
    for ell in range(3):
        for k in (1, 2):
            r = wf.pde_residual(k, ell)
            assert r.is_rational() and r.rat.is_zero()


def test_main_pde_weighted_divisor():
    wf = WaveFunction(LoopSystem(builtin("airy")), Divisor.standard([2, -1, -1]))
    for k in (2, 3):
        r = wf.pde_residual(k, 2)
        assert r.is_rational() and r.rat.is_zero()
    with pytest.raises(DivisorError, match="a_k"):
        wf.pde_residual(1, 0)


def test_cylinder_and_symmetry(airy):
    wf = WaveFunction(airy, Divisor.standard([1, -1]))
    assert wf.check_cylinder().ok
    assert wf.check_symmetry(0, 3).ok


@pytest.mark.parametrize("name, order", [("airy", 3), ("painleve1", 1), ("finite_pole_family", 1)])
def test_reduced_system(name, order):
    res = ReducedSystem(LoopSystem(builtin(name)), order).check(order)
    assert all(res.values()), res


def test_divisor_validation(airy):
    for bad in (Divisor.standard([1, 1]), Divisor.of(("p", 1), ("p", -1)), Divisor.of(("z", 1), ("q", -1))):
        with pytest.raises(DivisorError):
            WaveFunction(airy, bad)


def test_quantum_limit_needs_no_residue():
    with pytest.raises(UnsupportedCheck):
        quantum_limit(LoopSystem(builtin("finite_pole")), 2)

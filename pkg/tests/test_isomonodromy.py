from fractions import Fraction

import pytest

from qcurve import isomonodromy as iso
from qcurve.exact_core import ExactError, Rat
from qcurve.loop_system import LoopSystem
from qcurve.spectral_curve import builtin
from tests.test_wavefunction_pde import airy_asymptotic

h, t, u, z = Rat.var("h"), Rat.var("t"), Rat.var("u"), Rat.var("z")
U0, U1, U2, U3, U4 = (iso.U(j) for j in range(5))


def test_total_derivative():
    assert iso.dt(U0 ** 2) == 2 * U0 * U1
    assert iso.dt(t * U1) == U1 + t * U2


def test_gd_low_orders():
    assert iso.gd_R(1) == -2 * U0
    assert iso.gd_R(2) == 3 * U0 ** 2 - h ** 2 / 2 * U2
    assert iso.format_diffpoly(iso.gd_R(3)) == \
        "-5*U^3 + (5/4)*h^2*U'^2 + (5/2)*h^2*U*U'' - (1/8)*h^4*U^(4)"


@pytest.mark.parametrize("k", range(1, 7))
def test_gd_structure(k):
    R = iso.gd_R(k)
    assert iso.recursion_defect(k).is_zero()
    assert iso.grading_ok(R) and iso.weight(R) == k
    # leading term (2k-1)!!/k! (-U)^k * 2, the dispersionless limit
    lead = R.subs({"h": 0})
    coeff = Fraction(2)
    for j in range(1, k + 1):
        coeff *= Fraction(2 * j - 1, 2 * j)
    assert lead == Rat.const(coeff * (-1) ** k * 2 ** k) * U0 ** k


def test_string_reduction():
    se = iso.StringEquation.of(iso.painleve_string_equation())
    red = se.reduce(U4)
    assert not red.depends_on("U4") and not red.depends_on("U2")
    # U4 = d_t^2 U2 = d_t^2 (2/h^2)(3U^2 + t)
    assert red == (2 / h ** 2) * (6 * U1 ** 2 + 6 * U0 * (2 / h ** 2) * (3 * U0 ** 2 + t))


def test_painleve_series_solves_string_equation():
    K = 3
    cs = iso.painleve_u_series(K)
    assert cs[:3] == [1, Fraction(-1, 432), Fraction(-49, 373248)]
    Us = sum((Rat.const(c) * h ** (2 * k) * u ** (1 - 5 * k) for k, c in enumerate(cs)), Rat.const(0))
    d_t = lambda f: -f.diff("u") / (6 * u)  # t = -3u^2
    residual = h ** 2 / 2 * d_t(d_t(Us)) - 3 * Us ** 2 + 3 * u ** 2
    num, _ = residual.coeffs("h")
    assert all(num.get(m, Rat.const(0)).is_zero() for m in range(0, 2 * K + 1))


def test_u_leading_sign_conventions():
    assert iso.u_leading(1) == t / 4 + Rat.const(3) / 4 * u ** 2
    assert iso.u_leading(0) == t / 4 - u / 2
    with pytest.raises(ValueError):
        iso.u_leading(1, [0, 0])


def test_lax_pairs():
    gd, pI = iso.gd_lax(1), iso.painleve_lax()
    assert gd.L == pI.L
    assert gd.trace() == 0 and gd.x_sign() == -1 and pI.x_sign() == 1


@pytest.mark.parametrize("m", [1, 2, 3])
def test_zero_curvature_gd(m):
    res = iso.zero_curvature_residual(iso.gd_lax(m), 4)
    assert all(v.is_zero() for row in res for v in row)


def test_zero_curvature_needs_string_equation():
    # with no reduction the m = 0 pair leaves h(2U' + 1)
    pair = iso.gd_lax(0)
    inert = iso.LaxPair(pair.L, pair.R, pair.convention, iso.U(9))  # reduces nothing present
    res = iso.zero_curvature_residual(inert)
    assert sorted(str(v) for row in res for v in row) == ["0", "0", "0", str(h * (2 * U1 + 1))] or \
        sorted(str(v) for row in res for v in row) == ["0", "0", "0", str(-h * (2 * U1 + 1))]
    assert all(v.is_zero() for row in iso.zero_curvature_residual(pair) for v in row)


def test_quantum_curve_operator():
    op = iso.quantum_curve_op(iso.painleve_lax().L)
    assert op == iso.painleve_quantum_curve_display()
    c1, c0 = op.classical()
    x = Rat.var("x")
    assert c1 == 0 and c0 == -(x - U0) ** 2 * (x + 2 * U0)
    with pytest.raises(ExactError):
        iso.quantum_curve_op(((U0, Rat.const(0)), (U1, U0)))


def test_airy_wkb_matches_asymptotic_series():
    sol = iso.airy_wkb(3)
    for k in range(4):
        expected = Rat.const(airy_asymptotic(k) * Fraction(3, 2) ** k) / z ** (3 * k)
        assert sol.A[k] == expected
        assert sol.B[k] == (-1) ** k * expected


def test_painleve_wkb():
    sol = iso.painleve_wkb(3)
    assert sol.A[1] == (-z ** 2 / 144 - 5 * u / 144) / (u ** 2 * z ** 3)
    assert all(v.is_zero() for v in sol.det_log_derivative())
    op = iso.quantum_curve_op(iso.painleve_lax().L)
    r = iso.quantum_curve_residual(op, sol, iso.painleve_jets(7))
    assert all(v.is_zero() for v in r[:4])


def test_det_identity_through_h4():
    r = iso.det_identity_check(4)
    assert r["ok"]
    assert r["orders"][4]["value"] == Rat.const(7) / (62208 * u ** 7)


@pytest.mark.parametrize("curve", ["airy", "painleve1"])
def test_kernel_equation(curve):
    assert iso.kernel_pde_check(3, curve)["ok"]


def test_kernel_equation_variants_fail():
    system = LoopSystem(builtin("painleve1"))
    no_lf = iso.kernel_pde_check(2, "painleve1", system=system, with_LF=False)
    assert not no_lf["ok"] and no_lf["residual"][2] != 0
    assert not iso.kernel_pde_check(1, "painleve1", divide=True, system=system)["ok"]

import pytest
from mpmath import mp, mpc, mpf

from qcurve import elliptic_dictionary as ell

TAUS = [mpc(0.1, 1.1), mpc(-0.3, 0.9), mpc(0.45, 1.4), mpc(0, 0.8)]


@pytest.mark.parametrize("tau", TAUS)
@pytest.mark.parametrize("k", [4, 6])
def test_qseries_against_lattice_rows(k, tau):
    val, tail = ell.eisenstein(k, tau)
    assert tail < mpf(10) ** -45
    assert abs(val - ell.lattice_eisenstein(k, tau)) < mpf(10) ** -40


def test_square_lattice_coarse():
    tau = mpc(0.1, 1.1)
    assert abs(ell.square_lattice_sum(4, tau, 64, levels=3) - ell.eisenstein(4, tau)[0]) < 1e-6


def test_special_values():
    with mp.workdps(ell.DPS):
        assert abs(ell.eisenstein(2, mpc(0, 1))[0] - mp.pi) < mpf(10) ** -40
        assert abs(ell.eisenstein(6, mpc(0, 1))[0]) < mpf(10) ** -40
        rho = mp.exp(2j * mp.pi / 3)
        assert abs(ell.eisenstein(4, rho)[0]) < mpf(10) ** -40


def test_modular_weight():
    tau = mpc(0.2, 0.7)
    with mp.workdps(ell.DPS):
        for k in (4, 6):
            lhs = ell.eisenstein(k, -1 / tau)[0]
            assert abs(lhs - tau ** k * ell.eisenstein(k, tau)[0]) < mpf(10) ** -35


def test_derivative_by_finite_difference():
    tau = mpc(0.1, 1.1)
    with mp.workdps(ell.DPS):
        step = mpf(10) ** -15
        f = lambda s: ell.eisenstein(4, s)[0]
        d = (f(tau + step) - f(tau - step)) / (2 * step)
        assert abs(d - ell.eisenstein_derivative(4, tau, "tau")[0]) < mpf(10) ** -25
        q = ell.eisenstein_derivative(4, tau, "q")[0]
        assert abs(2j * mp.pi * q - d) < mpf(10) ** -25


def test_weierstrass_differential_equation():
    tau, zz = mpc(0.1, 1.1), mpc(0.23, 0.17)
    with mp.workdps(ell.DPS):
        g2 = 60 * ell.eisenstein(4, tau)[0]
        g3 = 140 * ell.eisenstein(6, tau)[0]
        p, dp = ell.wp(zz, tau), ell.wp_prime(zz, tau)
        assert abs(dp ** 2 - (4 * p ** 3 - g2 * p - g3)) < mpf(10) ** -25


def test_dictionary_curve():
    # y^2 = x^3 + t x + V with x = nu^2 wp, y = nu^3 wp'/2
    nu, tau, zz = mpc(0.7, 0.2), mpc(0.1, 1.1), mpc(0.31, 0.2)
    p = ell.dictionary(nu, tau)
    with mp.workdps(ell.DPS):
        x = nu ** 2 * ell.wp(zz, tau)
        y = nu ** 3 * ell.wp_prime(zz, tau) / 2
        assert abs(y ** 2 - (x ** 3 + p.t * x + p.V)) < mpf(10) ** -25


@pytest.mark.parametrize("nu, tau", [(mpc(0.7, 0.2), mpc(0.1, 1.1)), (mpc(1.1, -0.3), mpc(-0.3, 0.9))])
def test_prepotential_differential(nu, tau):
    assert max(ell.check_prepotential_differential(nu, tau).values()) < 1e-20
    assert max(ell.check_prepotential_differential(nu, tau, "q").values()) > 1e-3
    assert max(ell.check_prepotential_differential(nu, tau, use_alt_I=True).values()) > 1e-3


def test_convention_selection():
    conv, _ = ell.select_g4_prime_convention([(mpc(0.7, 0.2), mpc(0.1, 1.1))])
    assert conv == "tau"


def test_cycle_integrals_oracle():
    nu, tau = mpc(0.8, 0.1), mpc(0.05, 1.05)
    p = ell.dictionary(nu, tau)
    A, B = ell.cycle_integrals(nu, tau)
    assert abs(A + p.eps) / abs(p.eps) < 1e-12
    assert abs(B + p.I) / abs(p.I) < 1e-12


def test_degenerate_limit():
    r = ell.degenerate_limit(mpc(0.9, 0), 4.0)
    assert r["rel_error"] < 1e-6
    r6 = ell.degenerate_limit(mpc(0.9, 0), 6.0)
    assert r6["rel_error"] < r["rel_error"]


def test_F1_and_errors():
    p = ell.dictionary(mpc(0.7, 0.2), mpc(0.1, 1.1))
    assert ell.F1(p) == p.F1
    degenerate = ell.EllipticParams(*(mpc(1),) * 8, None, "tau")
    with pytest.raises(ell.EllipticError, match="degenerate"):
        ell.F1(degenerate)
    with pytest.raises(ell.EllipticError):
        ell.eisenstein(3, mpc(0, 1))
    with pytest.raises(ell.EllipticError):
        ell.eisenstein(4, mpc(0, -1))
    with pytest.raises(ell.EllipticError):
        ell.lattice_eisenstein(2, mpc(0, 1))
    with pytest.raises(ell.EllipticError):
        ell.eisenstein_derivative(4, mpc(0, 1), "bogus")

"""Numeric dictionary for the non-degenerate (elliptic) Painleve I curve.

The torus is C/(Z + tau Z) with ``x = nu^2 wp(z)`` and ``y = nu^3 wp'(z)/2``,
so ``y^2 = x^3 + t x + V``.  Eisenstein series are evaluated from their
q-expansions with an explicit tail bound; a direct lattice sum and a
sine-series Weierstrass function serve as independent oracles.

Normalization used throughout::

    G_k(tau) = sum' (m + n tau)^-k,   G_2 summed over m first,
    G_k = 2 zeta(k) E_k,  E_k = 1 + c_k sum sigma_{k-1}(n) q^n,  q = e^{2 pi i tau}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import mpmath
from mpmath import mp, mpc, mpf

__all__ = [
    "EllipticError",
    "eisenstein",
    "eisenstein_derivative",
    "lattice_eisenstein",
    "square_lattice_sum",
    "wp",
    "wp_prime",
    "EllipticParams",
    "F1",
    "dictionary",
    "check_prepotential_differential",
    "select_g4_prime_convention",
    "degenerate_limit",
    "cycle_integrals",
]

DPS = 50
_C = {2: -24, 4: 240, 6: -504}


class EllipticError(ValueError):
    pass


def _tau(tau) -> mpc:
    tau = mpc(tau)
    if tau.imag <= 0:
        raise EllipticError("tau must have positive imaginary part")
    return tau


def _sigma(n: int, p: int) -> int:
    s = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            s += d ** p
            e = n // d
            if e != d:
                s += e ** p
        d += 1
    return s


def _tail(absq, power: int, N: int):
    """Bound on sum_{n > N} n^power |q|^n (None when the ratio test is not yet contracting)."""
    rho = (mpf(N + 2) / (N + 1)) ** power * absq
    if rho >= 1:
        return None
    return mpf(N + 1) ** power * absq ** (N + 1) / (1 - rho)


def _qsum(k: int, tau, extra: int, N: Optional[int]) -> Tuple[mpc, mpf]:
    """sum sigma_{k-1}(n) n^extra q^n with a tail bound; N chosen adaptively when None."""
    q = mpmath.exp(2j * mp.pi * tau)
    absq = abs(q)
    power = k + extra  # sigma_{k-1}(n) <= n^k
    if N is None:
        N = 8
        while True:
            tb = _tail(absq, power, N)
            if tb is not None and tb < mpf(10) ** (-mp.dps):
                break
            N *= 2
    s = mpc(0)
    qn = mpc(1)
    for n in range(1, N + 1):
        qn *= q
        s += _sigma(n, k - 1) * n ** extra * qn
    tb = _tail(absq, power, N)
    return s, (tb if tb is not None else mpf("inf"))


def eisenstein(k: int, tau, N: Optional[int] = None) -> Tuple[mpc, mpf]:
    """``(G_k(tau), tail bound)`` for k in {2, 4, 6}."""
    if k not in _C:
        raise EllipticError("k must be 2, 4 or 6")
    with mp.workdps(DPS):
        tau = _tau(tau)
        s, tb = _qsum(k, tau, 0, N)
        pref = 2 * mpmath.zeta(k)
        return pref * (1 + _C[k] * s), abs(pref * _C[k]) * tb


def eisenstein_derivative(k: int, tau, convention: str = "tau", N: Optional[int] = None) -> Tuple[mpc, mpf]:
    """``d G_k/d tau`` (convention "tau") or ``q d G_k/dq`` (convention "q")."""
    if k not in _C:
        raise EllipticError("k must be 2, 4 or 6")
    with mp.workdps(DPS):
        tau = _tau(tau)
        s, tb = _qsum(k, tau, 1, N)
        f = 2 * mpmath.zeta(k) * _C[k]
        if convention == "tau":
            f *= 2j * mp.pi
        elif convention != "q":
            raise EllipticError(f"unknown derivative convention {convention!r}")
        return f * s, abs(f) * tb


def lattice_eisenstein(k: int, tau, N: int = 200) -> mpc:
    """Lattice sum by rows |n| <= N; each row sum_m (m + n tau)^-k via Hurwitz zeta.

    Shares nothing with the q-expansion path except the definition of G_k.
    """
    if k < 3:
        raise EllipticError("direct lattice sums need k >= 3")
    with mp.workdps(DPS):
        tau = _tau(tau)
        s = 2 * mpmath.zeta(k)
        for n in range(1, N + 1):
            for a in (n * tau, -n * tau):
                s += mpmath.zeta(k, a) + (-1) ** k * mpmath.zeta(k, 1 - a)
        return s


def square_lattice_sum(k: int, tau, N: int, levels: int = 4) -> mpc:
    """Raw sum over square shells max(|m|,|n|) <= N with Richardson steps in N.

    Coarse (corner effects limit it to about 1e-8 at N = 200); a sanity
    check on the row sums.
    """
    if k < 3:
        raise EllipticError("direct lattice sums need k >= 3")
    with mp.workdps(DPS):
        tau = _tau(tau)
        marks = [N >> j for j in range(levels, -1, -1)]
        if marks[0] < 2:
            raise EllipticError("N too small for the requested extrapolation depth")
        partial = []
        s = mpc(0)
        for r in range(1, N + 1):
            for m in range(-r, r + 1):
                s += 1 / (m + r * tau) ** k + 1 / (m - r * tau) ** k
            for n in range(-r + 1, r):
                s += 1 / (r + n * tau) ** k + 1 / (-r + n * tau) ** k
            if r in marks:
                partial.append(s)
        for step in range(levels):
            f = mpf(2) ** (k - 2 + step)
            partial = [(f * b - a) / (f - 1) for a, b in zip(partial, partial[1:])]
        return partial[0]


def wp(z, tau, terms: int = 40) -> mpc:
    """Weierstrass function of Z + tau Z from the sine series (oracle use)."""
    with mp.workdps(DPS):
        tau = _tau(tau)
        z = mpc(z)
        s = mpc(0)
        for n in range(-terms, terms + 1):
            s += mp.pi ** 2 / mpmath.sin(mp.pi * (z + n * tau)) ** 2
        return s - eisenstein(2, tau)[0]


def wp_prime(z, tau, terms: int = 40) -> mpc:
    with mp.workdps(DPS):
        tau = _tau(tau)
        z = mpc(z)
        s = mpc(0)
        for n in range(-terms, terms + 1):
            a = mp.pi * (z + n * tau)
            s += -2 * mp.pi ** 3 * mpmath.cos(a) / mpmath.sin(a) ** 3
        return s


@dataclass(frozen=True)
class EllipticParams:
    nu: mpc
    tau: mpc
    t: mpc
    V: mpc
    eps: mpc
    I: mpc
    I_alt: mpc
    F0: mpc
    F1: Optional[mpc]
    convention: str


def dictionary(nu, tau, convention: str = "tau") -> EllipticParams:
    """Times, periods and free energies at ``(nu, tau)``.

    ``I`` is the B-period ``2 pi i tau eps - (8 pi i/5) nu t`` obtained from
    Legendre's relation; ``I_alt = 2 pi i tau eps + (4/5) nu t`` is kept
    for comparison only (it does not satisfy dF0 = V dt + I d eps).
    """
    with mp.workdps(DPS):
        nu, tau = mpc(nu), _tau(tau)
        G4 = eisenstein(4, tau)[0]
        G6 = eisenstein(6, tau)[0]
        G4p = eisenstein_derivative(4, tau, convention)[0]
        t = -15 * nu ** 4 * G4
        V = -35 * nu ** 6 * G6
        eps = 3 * nu ** 5 * G4p
        I = 2j * mp.pi * tau * eps - mpf(8) / 5 * 1j * mp.pi * nu * t
        I_alt = 2j * mp.pi * tau * eps + mpf(4) / 5 * nu * t
        F0 = mpf(2) / 5 * t * V + I * eps / 2
        disc = 4 * t ** 3 + 27 * V ** 2
        scale = abs(t) ** 3 + abs(V) ** 2
        F1 = None
        if abs(disc) > mpf(10) ** (-30) * scale:
            F1 = mpmath.log(disc) / 48 + mpmath.log(2 / nu) / 4
        return EllipticParams(nu, tau, t, V, eps, I, I_alt, F0, F1, convention)


def F1(params: EllipticParams) -> mpc:
    if params.F1 is None:
        raise EllipticError("degenerate discriminant 4t^3 + 27V^2 = 0: F1 undefined")
    return params.F1


def _holo_diff(f: Callable, p: mpc, h=None) -> mpc:
    """Central difference with one Richardson step (holomorphic f, real step)."""
    h = h or mpf(10) ** (-8)
    d1 = (f(p + h) - f(p - h)) / (2 * h)
    d2 = (f(p + h / 2) - f(p - h / 2)) / h
    return (4 * d2 - d1) / 3


def check_prepotential_differential(nu, tau, convention: str = "tau", use_alt_I: bool = False) -> Dict[str, float]:
    """Relative errors of dF0/dnu = V dt/dnu + I deps/dnu and the same for tau."""
    with mp.workdps(DPS):
        nu, tau = mpc(nu), _tau(tau)
        base = dictionary(nu, tau, convention)
        I = base.I_alt if use_alt_I else base.I

        def F0(p: EllipticParams) -> mpc:
            if not use_alt_I:
                return p.F0
            return mpf(2) / 5 * p.t * p.V + p.I_alt * p.eps / 2

        out = {}
        for name in ("nu", "tau"):
            if name == "nu":
                get = lambda s: dictionary(s, tau, convention)
                at = nu
            else:
                get = lambda s: dictionary(nu, s, convention)
                at = tau
            dF = _holo_diff(lambda s: F0(get(s)), at)
            dt = _holo_diff(lambda s: get(s).t, at)
            de = _holo_diff(lambda s: get(s).eps, at)
            out[name] = float(abs(dF - (base.V * dt + I * de)) / abs(dF))
        return out


def select_g4_prime_convention(samples, tol: float = 1e-6) -> Tuple[str, Dict[str, list]]:
    """Try both derivative conventions; return the one passing at every sample."""
    report = {}
    for conv in ("tau", "q"):
        report[conv] = [check_prepotential_differential(nu, tau, conv) for nu, tau in samples]
    good = [c for c in report if all(max(r.values()) < tol for r in report[c])]
    if len(good) != 1:
        raise EllipticError(f"no unique G4' convention satisfies dF0 = V dt + I deps: {good}")
    return good[0], report


def degenerate_limit(nu, s: float) -> Dict[str, mpc]:
    """Compare F0 with -(12/5) u^5, u = -3V/(2t), at tau = i s."""
    with mp.workdps(DPS):
        p = dictionary(nu, mpc(0, s))
        u = -3 * p.V / (2 * p.t)
        target = -mpf(12) / 5 * u ** 5
        return {"u": u, "F0": p.F0, "target": target,
                "rel_error": abs(p.F0 - target) / abs(target),
                "curve_defect": abs(p.t + 3 * u ** 2) / abs(p.t)}


def cycle_integrals(nu, tau, offset=mpf("0.31")) -> Tuple[mpc, mpc]:
    """``(1/(2 pi i)) int_A y dx`` and ``int_B y dx`` by quadrature of (nu^5/2) wp'^2.

    The A path runs from ``offset * tau`` to ``offset * tau + 1``; the B path
    from ``offset`` to ``offset + tau``.  Both orientations are the standard
    ones on the period parallelogram.
    """
    with mp.workdps(30):
        nu, tau = mpc(nu), _tau(tau)
        f = lambda z: wp_prime(z, tau) ** 2
        a0 = offset * tau
        A = mpmath.quad(lambda s: f(a0 + s), [0, 0.5, 1])
        b0 = mpc(offset)
        B = mpmath.quad(lambda s: f(b0 + s * tau) * tau, [0, 0.5, 1])
        return nu ** 5 / 2 * A / (2j * mp.pi), nu ** 5 / 2 * B

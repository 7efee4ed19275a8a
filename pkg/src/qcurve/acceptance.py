"""The thirteen acceptance checks, shared by the CLI and the test suite."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple

from mpmath import mp, mpc

from . import elliptic_dictionary as ell
from . import isomonodromy as iso
from .exact_core import INF, HbarSeries, Rat
from .loop_system import LoopSystem
from .spectral_curve import builtin
from .tr_engine import loop_suite
from .wavefunction_pde import Divisor, ReducedSystem, WaveFunction, quantum_limit

CURVES = ("airy", "painleve1", "finite_pole")


@dataclass
class Outcome:
    number: int
    title: str
    ok: bool
    details: List[str] = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.number:2d} {self.title} ({self.seconds:.1f}s)"


class _Collector:
    def __init__(self):
        self.ok = True
        self.details: List[str] = []

    def expect(self, cond: bool, what: str) -> None:
        if not cond:
            self.ok = False
            self.details.append(f"failed: {what}")


def _painleve():
    c = builtin("painleve1")
    u = Rat.var("u")
    return c, u


def kp_times() -> _Collector:
    col = _Collector()
    c, u = _painleve()
    expected = {1: 3 * u ** 2, 5: Rat.const(-2)}
    for j in range(0, 8):
        col.expect((c.kp_time(INF, j) - expected.get(j, Rat.const(0))).is_zero(), f"t[oo,{j}]")
    col.expect((c.second_kind_period(c.ydx, INF, 1) + 2 * u ** 3).is_zero(), "int_B1 y dx = -2u^3")
    col.expect((c.second_kind_period(c.ydx, INF, 5) + Rat.const(3) / 5 * u ** 5).is_zero(),
               "int_B5 y dx = -3/5 u^5")
    return col


def prepotential() -> _Collector:
    col = _Collector()
    c, u = _painleve()
    F0 = LoopSystem(c).F0_from_times()
    col.expect((F0 + Rat.const(12) / 5 * u ** 5).is_zero(), "F0 = -12/5 u^5")
    d_t = lambda f: f.diff("u") / (-6 * u)  # t = -3u^2
    V = d_t(F0)
    col.expect((V - 2 * u ** 3).is_zero(), "dF0/dt = 2u^3")
    col.expect((d_t(V) + u).is_zero(), "d2F0/dt2 = -u")
    return col


def loop_equations(max_chi: int = 4) -> _Collector:
    col = _Collector()
    for name in CURVES:
        table = LoopSystem(builtin(name)).table
        for kind, g, n, ok in loop_suite(table, max_chi):
            col.expect(ok, f"{name} {kind} ({g},{n})")
    return col


def _gn(max_chi: int) -> List[Tuple[int, int]]:
    return [(g, n) for g in range(0, max_chi // 2 + 2) for n in range(0, max_chi + 3)
            if 2 * g - 2 + n <= max_chi]


def p_equals_l(max_chi: int = 2) -> _Collector:
    col = _Collector()
    for name in CURVES:
        system = LoopSystem(builtin(name))
        for g, n in _gn(max_chi):
            col.expect(system.check_P_equals_L(g, n).ok, f"{name} P=L ({g},{n})")
    return col


def variational() -> _Collector:
    col = _Collector()
    for name in ("painleve1", "finite_pole_family"):
        system = LoopSystem(builtin(name))
        for g, n in ((0, 0), (0, 1), (0, 2), (1, 1)):
            col.expect(system.family_derivative_check(g, n).ok, f"{name} ({g},{n})")
    return col


def main_pde(order: int = 4) -> _Collector:
    col = _Collector()
    for name in ("airy", "painleve1"):
        system = LoopSystem(builtin(name))
        for weights in ((1, -1), (1, 1, -1, -1)):
            wf = WaveFunction(system, Divisor.standard(weights))
            for ell_ in range(order + 1):
                for k in range(1, len(weights) + 1):
                    r = wf.pde_residual(k, ell_)
                    col.expect(r.is_rational() and r.rat.is_zero(), f"{name} {weights} k={k} h^{ell_}")
    return col


def reduced() -> _Collector:
    col = _Collector()
    for name, order in (("airy", 4), ("painleve1", 2)):
        res = ReducedSystem(LoopSystem(builtin(name)), order).check(order)
        for key, ok in res.items():
            col.expect(ok, f"{name} {key} through h^{order}")
    return col


def airy_quantum_curve(K: int = 4) -> _Collector:
    col = _Collector()
    c = builtin("airy")
    q = quantum_limit(LoopSystem(c), K + 1)
    r = q.residual(HbarSeries({2: Rat.const(1)}, 10 ** 6), HbarSeries({}, 10 ** 6),
                   HbarSeries({0: -c.x}, 10 ** 6))
    col.expect(r.K >= K, f"residual known through h^{K}")
    col.expect(r.is_zero_through(K), f"(h^2 d^2 - x) psi = O(h^{K + 1})")
    return col


EXPECTED_R = {
    0: "2",
    1: "-2*U",
    2: "3*U^2 - (1/2)*h^2*U''",
    3: "-5*U^3 + (5/4)*h^2*U'^2 + (5/2)*h^2*U*U'' - (1/8)*h^4*U^(4)",
}


def gelfand_dikii() -> _Collector:
    col = _Collector()
    u, U0, U1, U2, U4 = Rat.var("u"), iso.U(0), iso.U(1), iso.U(2), iso.U(4)
    h = Rat.var("h")
    expected = {0: Rat.const(2), 1: -2 * U0, 2: 3 * U0 ** 2 - h ** 2 / 2 * U2,
             3: -5 * U0 ** 3 + Rat.const(5) / 2 * h ** 2 * U0 * U2 + Rat.const(5) / 4 * h ** 2 * U1 ** 2
             - h ** 4 / 8 * U4}
    for k, v in expected.items():
        col.expect((iso.gd_R(k) - v).is_zero(), f"R_{k}")
        col.expect(iso.format_diffpoly(iso.gd_R(k)) == EXPECTED_R[k], f"R_{k} display form")
    for k in range(0, 6):
        col.expect(iso.recursion_defect(k).is_zero(), f"recursion identity k={k}")
        col.expect(iso.grading_ok(iso.gd_R(k)), f"h-grading R_{k}")
        col.expect(iso.weight(iso.gd_R(k)) == k, f"homogeneity R_{k}")
    t = Rat.var("t")
    lead = iso.u_leading(1)
    col.expect((lead.subs({"t": -3 * u ** 2})).is_zero(), "u_leading m=1: t = -3u^2")
    c = iso.painleve_u_series(2)
    from fractions import Fraction

    col.expect(c[0] == 1, "c0 = 1")
    col.expect(c[1] == Fraction(-1, 432), "c1 = -1/432")
    col.expect(c[2] == Fraction(-49, 373248), "c2 = -49/373248")
    # independent: the U-series solves Painleve I through h^4
    jets = iso.painleve_jets(4)
    ode = iso.painleve_string_equation().subs({f"U{j}": v for j, v in jets.items()}).subs({"t": -3 * u ** 2})
    col.expect(iso._truncate_h(ode, 4).is_zero(), "U-series solves P_I through h^4")
    return col


def zero_curvature(K: int = 4) -> _Collector:
    col = _Collector()
    for m in (0, 1, 2):
        res = iso.zero_curvature_residual(iso.gd_lax(m), K)
        col.expect(all(v.is_zero() for row in res for v in row), f"GD m={m}")
    res = iso.zero_curvature_residual(iso.painleve_lax(), K)
    col.expect(all(v.is_zero() for row in res for v in row), "Painleve I pair")
    return col


def quantum_curve(K: int = 3) -> _Collector:
    col = _Collector()
    op = iso.quantum_curve_op(iso.painleve_lax().L)
    col.expect(op == iso.painleve_quantum_curve_display(), "operator equals the displayed one")
    sol = iso.painleve_wkb(K)
    r = iso.quantum_curve_residual(op, sol, iso.painleve_jets(K + 3))
    col.expect(all(v.is_zero() for v in r[:K + 1]), f"annihilates the WKB A-series through h^{K}")
    return col


def det_and_kernel(K: int = 2) -> _Collector:
    col = _Collector()
    system = LoopSystem(builtin("painleve1"))
    det = iso.det_identity_check(K, system)
    col.expect(det["ok"], "det identity through h^2")
    u = Rat.var("u")
    col.expect((system.LF(1) - 1 / (144 * u ** 2)).is_zero(), "L.F_1 = 1/(144u^2)")
    ker = iso.kernel_pde_check(K, "painleve1", system=system)
    col.expect(ker["ok"], "kernel equation through h^2")
    return col


SAMPLES = [(mpc(0.7, 0.2), mpc(0.1, 1.1)), (mpc(1.1, -0.3), mpc(-0.3, 0.9)), (mpc(0.5, 0), mpc(0.45, 1.4))]


def elliptic() -> _Collector:
    col = _Collector()
    conv, report = ell.select_g4_prime_convention(SAMPLES)
    for r in report[conv]:
        col.expect(max(r.values()) < 1e-6, f"dF0 = V dt + I deps ({conv})")
    with mp.workdps(ell.DPS):
        rho = mp.exp(2j * mp.pi / 3)
        col.expect(abs(ell.eisenstein(6, mpc(0, 1))[0]) < 1e-10, "G6(i) = 0")
        col.expect(abs(ell.eisenstein(4, rho)[0]) < 1e-10, "G4(rho) = 0")
    return col


CRITERIA: List[Tuple[int, str, Callable[[], _Collector]]] = [
    (1, "KP times and B-periods, Painleve I", kp_times),
    (2, "prepotential F0 and its t-derivatives", prepotential),
    (3, "linear and quadratic loop equations, 2g-2+n <= 4", loop_equations),
    (4, "P = L.omega, 2g-2+n <= 2", p_equals_l),
    (5, "variational formulas", variational),
    (6, "main PDE through h^4", main_pde),
    (7, "reduced equations", reduced),
    (8, "Airy quantum curve on the one-point limit", airy_quantum_curve),
    (9, "Gelfand-Dikii polynomials and Painleve series", gelfand_dikii),
    (10, "zero curvature modulo string equations", zero_curvature),
    (11, "Painleve I quantum curve and WKB", quantum_curve),
    (12, "determinant identity and kernel equation", det_and_kernel),
    (13, "elliptic dictionary", elliptic),
]


def run_one(number: int) -> Outcome:
    for num, title, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            try:
                col = fn()
                ok, details = col.ok, col.details
            except Exception as exc:  # report, do not crash the suite
                ok, details = False, [f"error: {type(exc).__name__}: {exc}"]
            return Outcome(num, title, ok, details, time.perf_counter() - t0)
    raise KeyError(number)


def run_all(numbers=None) -> List[Outcome]:
    return [run_one(n) for n, _, _ in CRITERIA if numbers is None or n in numbers]


def summary(outcomes: List[Outcome]) -> Dict[str, object]:
    return {"passed": sum(o.ok for o in outcomes), "total": len(outcomes)}

import pytest

from qcurve.exact_core import INF, Rat
from qcurve.spectral_curve import BUILTIN, CurveError, builtin, load_curve, parse_curve_text

u = Rat.var("u")


def test_curve_files_match_builtins(curves_dir):
    for name in BUILTIN:
        c = load_curve(str(curves_dir / f"{name}.curve"))
        b = builtin(name)
        assert c.name == name and c.x == b.x and c.y == b.y


def test_painleve_times_and_periods():
    c = builtin("painleve1")
    assert c.times() == {("oo", 0): 0, ("oo", 1): 3 * u ** 2, ("oo", 2): 0, ("oo", 3): 0,
                         ("oo", 4): 0, ("oo", 5): Rat.const(-2)}
    assert c.second_kind_period(c.ydx, INF, 1) == -2 * u ** 3
    assert c.second_kind_period(c.ydx, INF, 3) == Rat.const(3) / 4 * u ** 4
    assert c.second_kind_period(c.ydx, INF, 5) == Rat.const(-3) / 5 * u ** 5
    with pytest.raises(CurveError):
        c.second_kind_period(c.ydx, INF, 0)


def test_finite_pole_labels():
    c = builtin("finite_pole")
    b = Rat.var("b")
    times = c.times()
    assert times[("b", 0)] == b and times[("-b", 0)] == -b
    assert c.ramification_points == [0, INF]


def test_declared_times_jacobian():
    c = builtin("finite_pole_family")
    inv = c.moduli_jacobian_inverse
    for i in inv:
        for j in inv:
            chain = sum((c.modulus(j).diff(p) * inv[i][p] for p in c.params), Rat.const(0))
            assert chain == (1 if i == j else 0)


@pytest.mark.parametrize("text, message", [
    ("[curve]\nname = a\nparameters = \"\"\nx = \"z^3\"\ny = \"z\"\n", "involution"),
    ("[curve]\nname = a\nparameters = \"\"\nx = \"z^2\"\ny = \"z^2\"\n", "odd"),
    ("[curve]\nname = a\nparameters = \"\"\nx = \"z^2\"\ny = \"1/z\"\n", "ramification"),
    ("[curve]\nname = a\nparameters = \"\"\nx = \"z^2\"\ny = \"w*z\"\n", "undeclared"),
    ("[curve]\nname = a\nparameters = \"\"\nx = \"z^4\"\ny = \"z\"\n", "a*z^2 + s"),
    ("[times]\nt = \"1\"\n", "[curve]"),
])
def test_invalid_curves(text, message):
    with pytest.raises(CurveError, match=message[:8].replace("*", r"\*").replace("^", r"\^").replace("+", r"\+")):
        parse_curve_text(text)


def test_declared_derivative_mismatch():
    text = BUILTIN["painleve1"].replace('dt/du = "-6*u"', 'dt/du = "6*u"')
    with pytest.raises(CurveError, match="disagrees"):
        parse_curve_text(text)

import math
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasebound import evaluate, make_potential, monotone_decomposition, parse_potential_spec, primitive
from phasebound.errors import EvalAtSingularity, InvalidParams, NonMonotoneResolutionFailure
from phasebound.potentials import Kind, load_table, quadrature_strength, split_strength

# Frozen: mpmath.quad of 0.5*log((x^2+a^2)/(x^2+b^2)) over the real line,
# a = h2 - h1 = 0.75, b = h2 + h1 = 1.25, 30 digits.
TOPGATE_G_ORACLE = -1.57079632679489661866


def test_sech_strength():
    p = make_potential("sech", U0=1.0, d=0.5)
    assert p.strength_G == pytest.approx(-math.pi * 0.5, rel=1e-15)
    assert p.n_G == -1 and p.delta_n_G == pytest.approx(0.5)


def test_zero_delta():
    p = make_potential("delta", G=0.0)
    assert (p.strength_G, p.n_G, p.delta_n_G) == (0.0, 0, 0.0)


def test_topgate_strength_matches_quadrature():
    p = make_potential("topgate", U0=1.0, h1=0.25, h2=1.0)
    assert p.strength_G == pytest.approx(TOPGATE_G_ORACLE, rel=1e-13)
    assert quadrature_strength(p, X=2000.0) == pytest.approx(TOPGATE_G_ORACLE, rel=1e-6)


def test_exponential_strength():
    p = make_potential("exponential", U0=0.5, d=1.0)
    assert p.strength_G == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kind,params,x,value",
    [
        ("lorentzian", dict(U0=1, d=1), 0.0, -1.0),
        ("sech", dict(U0=1, d=1), 0.0, -1.0),
        ("lorentzian", dict(U0=1, d=1), 1.0, -0.5),
    ],
)
def test_evaluate_examples(kind, params, x, value):
    assert evaluate(make_potential(kind, params), x) == pytest.approx(value, abs=1e-15)


def test_delta_singularity():
    p = make_potential("delta", G=1.2)
    with pytest.raises(EvalAtSingularity):
        evaluate(p, 0.0)
    assert evaluate(p, 0.3) == 0.0


def test_delta_primitive_step():
    f = primitive(make_potential("delta", G=1.2), x0=-1.0)
    assert f(-0.5) == 0.0
    assert f(0.5) == pytest.approx(1.2)


@pytest.mark.parametrize(
    "kind,params,total",
    [("sech", dict(U0=1, d=1), -math.pi), ("exponential", dict(U0=0.5, d=1), 1.0)],
)
def test_primitive_limits(kind, params, total):
    f = primitive(make_potential(kind, params))
    assert f.finite
    assert f.upper - f.lower == pytest.approx(total, rel=1e-12)


def test_lorentzian_not_x_u_integrable():
    assert not primitive(make_potential("lorentzian", U0=1, d=1)).x_u_integrable
    assert primitive(make_potential("sech", U0=1, d=1)).x_u_integrable


@pytest.mark.parametrize(
    "kind,params",
    [("lorentzian", dict(U0=1, d=1)), ("sech", dict(U0=2, d=0.7)), ("exponential", dict(U0=1.3, d=0.5))],
)
def test_two_monotone_pieces(kind, params):
    dec = monotone_decomposition(make_potential(kind, params))
    assert dec.n_pieces == 2
    assert dec.breakpoints == (0.0,)


def test_lorentzian_slope_closed_form():
    U0 = 1.0
    dec = monotone_decomposition(make_potential("lorentzian", U0=U0, d=1))
    u = np.linspace(-0.95, -0.05, 7)
    for j in range(2):
        closed = (-1) ** (j + 1) * (2 * u**2 / U0) * np.sqrt(-U0 / u - 1)
        assert np.allclose(dec.slope(j, u), closed, rtol=1e-12)
    # slope vanishes at the far ends of both outer pieces
    assert dec.slope(0, -1e-12) == pytest.approx(0.0, abs=1e-9)
    assert dec.slope(1, -1e-12) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("kind", ["delta", "sech", "exponential", "lorentzian", "topgate"])
def test_invalid_params(kind):
    bad = {
        "delta": dict(G=float("nan")),
        "sech": dict(U0=1, d=0),
        "exponential": dict(U0=1, d=-1),
        "lorentzian": dict(U0=1, d=0),
        "topgate": dict(U0=1, h1=1, h2=0.5),
    }[kind]
    with pytest.raises(InvalidParams):
        make_potential(kind, bad)


def test_tabulated(tmp_path):
    x = np.linspace(-10, 10, 401)
    u = -1.0 / np.cosh(x)
    path = tmp_path / "u.txt"
    np.savetxt(path, np.column_stack([x, u]), header="x U")
    p = make_potential("tabulated", file=str(path))
    assert p.kind is Kind.TABULATED
    assert p.strength_G == pytest.approx(-math.pi, rel=1e-4)
    assert evaluate(p, 20.0) == 0.0
    dec = monotone_decomposition(p)
    assert dec.n_pieces == 2
    assert load_table(path)[0].size == 401


def test_tabulated_rejects_bad_tables(tmp_path):
    path = tmp_path / "u.txt"
    np.savetxt(path, [[0.0, -1.0], [0.0, -0.5], [1.0, 0.0]])
    with pytest.raises(InvalidParams):
        make_potential("tabulated", file=str(path))
    x = np.linspace(-5, 5, 201)
    np.savetxt(path, np.column_stack([x, -np.ones_like(x)]))
    with pytest.raises(InvalidParams):
        make_potential("tabulated", file=str(path))


def test_noisy_table_fails_decomposition(tmp_path):
    rng = np.random.default_rng(3)
    x = np.linspace(-10, 10, 2001)
    u = -1.0 / np.cosh(x) + 1e-3 * rng.standard_normal(x.size) * np.exp(-(x**2) / 20)
    u[0] = u[-1] = 0.0
    path = tmp_path / "noisy.txt"
    np.savetxt(path, np.column_stack([x, u]))
    with pytest.raises(NonMonotoneResolutionFailure):
        monotone_decomposition(make_potential("tabulated", file=str(path)))


def test_spec_grammar_and_pickle():
    p = parse_potential_spec("kind=lorentzian U0=2 d=0.5")
    assert p.params["U0"] == 2.0 and p.params["d"] == 0.5
    q = pickle.loads(pickle.dumps(p))
    assert q.strength_G == p.strength_G
    with pytest.raises(InvalidParams):
        parse_potential_spec("U0=1 d=1")
    with pytest.raises(InvalidParams):
        parse_potential_spec("kind=sech U0=1 d=1 colour=red")


# -- properties ----------------------------------------------------------------

catalog = st.one_of(
    st.tuples(st.just("sech"), st.floats(-3, 3), st.floats(0.2, 3)),
    st.tuples(st.just("exponential"), st.floats(-3, 3), st.floats(0.2, 3)),
    st.tuples(st.just("lorentzian"), st.floats(-3, 3), st.floats(0.2, 3)),
).filter(lambda t: abs(t[1]) > 1e-3)


def _build(t):
    kind, U0, d = t
    return make_potential(kind, U0=U0, d=d)


@given(st.floats(-20, 20))
def test_split_strength_reconstructs(G):
    n, dn = split_strength(G)
    assert 0.0 <= dn < 1.0
    assert math.pi * (n + dn) == pytest.approx(G, abs=1e-12)


@given(catalog)
def test_quadrature_matches_strength(t):
    p = _build(t)
    assert quadrature_strength(p) == pytest.approx(p.strength_G, rel=1e-5, abs=1e-9)


@given(catalog, st.floats(-5, 5), st.floats(0.01, 3))
def test_primitive_monotone_with_sign_of_u(t, x, h):
    p = _build(t)
    f = primitive(p)
    df = f(x + h) - f(x)
    assert df * math.copysign(1.0, p.value(x)) >= -1e-14


@given(catalog, st.floats(0.05, 4), st.booleans())
def test_slope_matches_derivative(t, r, left):
    p = _build(t)
    dec = monotone_decomposition(p)
    x = -r * p.length_scale if left else r * p.length_scale
    j = 0 if left else 1
    u = p.value(x)
    h = 1e-5 * p.length_scale
    fd = (p.value(x + h) - p.value(x - h)) / (2 * h)
    assert dec.slope(j, u) == pytest.approx(fd, rel=1e-6, abs=1e-10)
    assert np.sign(dec.slope(j, u)) == dec.signs[j]

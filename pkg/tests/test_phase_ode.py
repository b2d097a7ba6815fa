import math

import numpy as np
import pytest
from hypothesis import given
from scipy.integrate import cumulative_trapezoid
from hypothesis import strategies as st

from phasebound import IntegratorControl, PhaseProblem, integrate_phase, left_separatrix, make_potential, right_separatrix
from phasebound.errors import InvalidParams
from phasebound.limits import kernel_K
from phasebound.phase_ode import TerminalKind, domain_half_width, left_tail_seed

TWO_PI = 2 * math.pi
CTRL = IntegratorControl()


def test_free_left_separatrix_is_stationary(zero):
    prob = PhaseProblem(zero, 0.3, 0.5)
    tr = left_separatrix(prob)
    assert np.allclose(tr.omega, -math.asin(0.6), atol=1e-12)
    assert tr.terminal.kind is TerminalKind.ATTRACTOR and tr.terminal.branch == 0


def test_free_right_separatrix_is_stationary(zero):
    prob = PhaseProblem(zero, -0.2, 0.5)
    tr = right_separatrix(prob)
    assert np.allclose(tr.omega, math.pi + math.asin(-0.4), atol=1e-12)


@pytest.mark.parametrize("G", [1.2, math.pi + 0.4, 2 * math.pi + 2.0])
def test_delta_variance_at_upper_edge(G):
    p_y = 0.5
    pot = make_potential("delta", G=G)
    tr = left_separatrix(PhaseProblem(pot, p_y * (1 - 1e-6), p_y))
    assert tr.terminal.fate == pot.n_G
    assert round(tr.variance / TWO_PI) == pot.n_G


def test_delta_jump_is_exact():
    G = 1.2
    prob = PhaseProblem(make_potential("delta", G=G), 0.1, 0.5)
    tr = left_separatrix(prob)
    left = tr.segments[0].y[-1]
    right = tr.segments[1].y[0]
    assert tr.segments[0].x[-1] == tr.segments[1].x[0] == 0.0
    assert right - left == pytest.approx(2 * G, abs=1e-15)


def test_delta_right_separatrix_degenerates_at_zero_mode(half_delta):
    prob = PhaseProblem(half_delta, 0.0, 1.0)
    tr = right_separatrix(prob)
    assert np.allclose(tr.segments[-1].y, math.pi, atol=1e-12)
    assert tr.segments[0].y[-1] == pytest.approx(0.0, abs=1e-12)


def test_lorentzian_edge_variance(lorentzian):
    tr = left_separatrix(PhaseProblem(lorentzian, 0.1 * (1 - 1e-6), 0.1))
    assert tr.terminal.fate == -2


def test_lorentzian_off_spectrum_gap(lorentzian):
    # E = 0.05 lies between the two levels: separatrix ends are not degenerate
    prob = PhaseProblem(lorentzian, 0.05, 0.1)
    l, r = left_separatrix(prob), right_separatrix(prob)
    assert l.terminal.kind is TerminalKind.ATTRACTOR
    assert r.terminal.kind is TerminalKind.ATTRACTOR
    diff = (l(0.0) - r(0.0)) % TWO_PI
    assert min(diff, TWO_PI - diff) > 0.1


def test_free_relaxation_at_edge(zero):
    p_y = 1.0
    prob = PhaseProblem(zero, p_y, p_y)
    tr = integrate_phase(prob, -math.pi / 2 + 0.1, 0.0, 50.0)
    assert np.all(np.diff(tr.omega) < 0)


def test_attractor_start_stays_constant(zero):
    prob = PhaseProblem(zero, 0.2, 0.5)
    tr = integrate_phase(prob, prob.omega_minus, 0.0, 30.0)
    assert np.allclose(tr.omega, prob.omega_minus, atol=1e-13)


def test_sech_variance_near_2G():
    pot = make_potential("sech", U0=1.0, d=1.0)
    prob = PhaseProblem(pot, 0.0, 0.1)
    tr = integrate_phase(prob, prob.omega_minus, -40.0, 40.0)
    K = kernel_K(tr)
    dW = tr.end - tr.start
    assert dW == pytest.approx(2 * pot.strength_G + K, abs=1e-6)
    assert abs(dW - (-TWO_PI)) < 0.3
    assert abs(K) < 0.3


def test_separatrix_needs_gap(zero):
    with pytest.raises(InvalidParams):
        left_separatrix(PhaseProblem(zero, 0.6, 0.5))
    with pytest.raises(InvalidParams):
        PhaseProblem(zero, 0.1, -1.0)


def test_control_validation():
    with pytest.raises(InvalidParams):
        IntegratorControl(tol_phase=0)
    with pytest.raises(InvalidParams):
        IntegratorControl(eps_edge=2.0)


# -- properties ----------------------------------------------------------------

potentials = st.sampled_from(
    [
        make_potential("sech", U0=1.0, d=1.0),
        make_potential("lorentzian", U0=1.0, d=1.0),
        make_potential("exponential", U0=-0.8, d=0.7),
        make_potential("topgate", U0=1.0, h1=0.25, h2=1.0),
        make_potential("delta", G=2.0),
    ]
)


@given(potentials, st.floats(-0.95, 0.95))
def test_bounded_and_insensitive_to_L(pot, e):
    p_y = 0.5
    prob = PhaseProblem(pot, e * p_y, p_y)
    tr = left_separatrix(prob, strict=False)
    assert np.all(np.isfinite(tr.omega))
    if tr.terminal.kind is TerminalKind.ATTRACTOR:
        tr2 = left_separatrix(prob, strict=False, L=2 * tr.L)
        assert tr2.terminal.fate == tr.terminal.fate
        assert abs(np.max(np.abs(tr2.omega)) - np.max(np.abs(tr.omega))) < CTRL.classify_tol


@given(potentials, st.floats(-0.9, 0.9), st.sampled_from([-1e-4, 1e-4]))
def test_seed_perturbation_keeps_variance(pot, e, dseed):
    p_y = 0.5
    prob = PhaseProblem(pot, e * p_y, p_y)
    tr = left_separatrix(prob, strict=False)
    if tr.terminal.kind is not TerminalKind.ATTRACTOR:
        return
    L = tr.L
    w0 = prob.omega_minus + left_tail_seed(pot, prob.E, p_y, L)
    pert = integrate_phase(prob, w0 + dseed, -L, L)
    assert pert.terminal.fate == tr.terminal.fate


@given(potentials, st.floats(-0.9, 0.9))
def test_reversal_consistency(pot, e):
    p_y = 0.5
    prob = PhaseProblem(pot, e * p_y, p_y)
    fwd = integrate_phase(prob, prob.omega_minus, -3.0, 3.0)
    rev = integrate_phase(prob, fwd.end, 3.0, -3.0)
    # linearised growth of a perturbation carried back along the forward path
    xs = np.linspace(-3.0, 3.0, 4001)
    growth = np.exp(cumulative_trapezoid(2 * p_y * np.cos(fwd(xs)), xs, initial=0.0).max())
    tol = 10 * CTRL.tol_phase * growth * (1 + abs(fwd.start))
    assert rev.end == pytest.approx(fwd.start, abs=tol)


@given(st.floats(0.3, 6.0), st.floats(-0.9, 0.9))
def test_jump_rule_property(G, e):
    pot = make_potential("delta", G=G)
    prob = PhaseProblem(pot, e, 1.0)
    tr = integrate_phase(prob, 0.3, -1.0, 1.0)
    assert tr.segments[1].y[0] - tr.segments[0].y[-1] == pytest.approx(2 * G, abs=1e-14)


def test_csv_rows(lorentzian):
    tr = left_separatrix(PhaseProblem(lorentzian, 0.0, 0.1), record=True)
    rows = tr.to_csv_rows()
    assert len(rows) == tr.x.size and rows[0][0] == -tr.L

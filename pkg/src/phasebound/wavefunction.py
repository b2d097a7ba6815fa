"""Bound-state spinors rebuilt from the phase function.

With the parametrization ``R'/R = p_y cos(Omega)`` and
``Phi' = p_y sin(Omega)`` the spinor is::

    psi = R / sqrt(W) * (cos(Omega/2), -i sin(Omega/2))

which carries zero current along x by construction. The pure phase factors
``exp(i p_y y)`` and ``exp(i int (E - U))`` are left out: they do not affect
the density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from ._rk import Segment, cumulative_quad
from .errors import ConditionViolated, InvalidParams, NotAnEigenstate
from .phase_ode import (
    IntegratorControl,
    PhaseProblem,
    PhaseTrajectory,
    Terminal,
    TerminalKind,
    domain_half_width,
    integrate_phase,
    left_tail_seed,
    right_tail_seed,
)
from .potentials import Potential

__all__ = [
    "SpinorSample",
    "Spinor",
    "eigenstate_trajectory",
    "reconstruct",
    "delta_limit_phase",
]

_TWO_PI = 2.0 * math.pi
# density floor relative to the peak; below this the tails are clipped
_LOG_RHO_FLOOR = -460.0


class SpinorSample(NamedTuple):
    x: float
    omega: float
    R: float
    phi: float
    psi1: complex
    psi2: complex
    rho: float


@dataclass
class Spinor:
    """Column-oriented samples of one normalized bound state."""

    x: np.ndarray
    omega: np.ndarray
    log_R: np.ndarray
    phi: np.ndarray
    W: float
    E: float
    p_y: float

    @property
    def k(self) -> float:
        return math.sqrt(max(self.p_y**2 - self.E**2, 0.0))

    @property
    def R(self) -> np.ndarray:
        return np.exp(self.log_R)

    @property
    def rho(self) -> np.ndarray:
        return np.exp(2.0 * self.log_R) / self.W

    @property
    def psi1(self) -> np.ndarray:
        return (self.R / math.sqrt(self.W) * np.cos(0.5 * self.omega)).astype(complex)

    @property
    def psi2(self) -> np.ndarray:
        return -1j * self.R / math.sqrt(self.W) * np.sin(0.5 * self.omega)

    @property
    def current(self) -> np.ndarray:
        """j_x = psi^dagger sigma_x psi = 2 Re(conj(psi1) psi2)."""
        return 2.0 * np.real(np.conj(self.psi1) * self.psi2)

    def norm(self) -> float:
        return float(integrate.simpson(self.rho, x=self.x))

    def samples(self) -> list[SpinorSample]:
        cols = zip(self.x, self.omega, self.R, self.phi, self.psi1, self.psi2, self.rho)
        return [SpinorSample(*(float(v) if not isinstance(v, complex) else v for v in c)) for c in cols]


def eigenstate_trajectory(
    pot: Potential,
    p_y: float,
    E_d: float,
    ctrl: IntegratorControl | None = None,
    x_m: float | None = None,
) -> PhaseTrajectory:
    """Stitch the left and right separatrices at ``x_m`` for an eigenvalue.

    Each separatrix is only followed over the half line where it is stable,
    so the result stays accurate out to both tails. The right piece is
    shifted by a multiple of 2 pi to join the left one.
    """
    ctrl = ctrl or IntegratorControl()
    prob = PhaseProblem(pot, E_d, p_y)
    if not prob.in_gap:
        raise InvalidParams("eigenstates need |E| < p_y")
    x_m = pot.center if x_m is None else float(x_m)
    L = domain_half_width(pot, E_d, p_y, ctrl)
    w_l = prob.omega_minus + left_tail_seed(pot, E_d, p_y, L)
    w_r = prob.omega_plus + right_tail_seed(pot, E_d, p_y, L)
    left = integrate_phase(prob, w_l, -L, x_m, ctrl)
    right = integrate_phase(prob, w_r, L, x_m, ctrl)
    wl, wr = left.meta["end_value"], right.meta["end_value"]
    shift = _TWO_PI * round((wl - wr) / _TWO_PI)
    gap = wl - (wr + shift)
    rsegs = [Segment(s.x, s.y + shift, s.f) for s in right.segments]
    branch = round((rsegs[-1].y[-1] - prob.omega_plus) / _TWO_PI)
    term = Terminal(TerminalKind.DEGENERATE, int(branch), int(branch), float(gap))
    traj = PhaseTrajectory(prob, left.segments + rsegs, 1, L, term, 0, w_l - prob.omega_minus)
    traj.meta.update(x_m=x_m, left_end=wl, right_end=wr + shift)
    return traj


def _refine(seg: Segment, refine: int, dx_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Subdivide each step into at least ``refine`` pieces no wider than ``dx_max``."""
    h = np.diff(seg.x)
    counts = np.maximum(refine, np.ceil(h / dx_max).astype(int))
    parts = [a + hh * np.arange(c) / c for a, hh, c in zip(seg.x[:-1], h, counts)]
    xs = np.append(np.concatenate(parts), seg.x[-1])
    return xs, seg(xs)


def reconstruct(
    pot: Potential,
    p_y: float,
    E_d: float,
    traj: PhaseTrajectory | None = None,
    ctrl: IntegratorControl | None = None,
    *,
    refine: int = 4,
) -> Spinor:
    """Amplitude, phase, spinor and density for the eigenvalue ``E_d``.

    Parameters
    ----------
    traj : PhaseTrajectory, optional
        A stitched trajectory from :func:`eigenstate_trajectory`; built on
        demand when omitted.
    refine : int
        Minimum samples per integrator step in the output grid; long
        steps are further split to at most ``0.05 / p_y`` apart.

    Raises
    ------
    NotAnEigenstate
        ``traj`` is not a stitched pair, or its separatrices fail to meet
        within ``classify_tol``.
    """
    ctrl = ctrl or IntegratorControl()
    if traj is None:
        traj = eigenstate_trajectory(pot, p_y, E_d, ctrl)
    term = traj.terminal
    if term is None or term.kind is not TerminalKind.DEGENERATE:
        raise NotAnEigenstate("trajectory is not a degenerate separatrix pair")
    if abs(term.residual) > ctrl.classify_tol:
        raise NotAnEigenstate(f"separatrices miss each other by {term.residual:.3g} rad at the stitch point")

    # the tails relax on the scale 1/k; keep several samples per length
    k = math.sqrt(max(p_y**2 - E_d**2, 0.0))
    dx_max = 0.05 / max(p_y, k)
    xs, ws, logr, phis = [], [], [], []
    lr0 = ph0 = 0.0
    for seg in traj.segments:
        if seg.x.size < 2:
            continue
        cr = cumulative_quad(seg, lambda w: p_y * np.cos(w))
        cp = cumulative_quad(seg, lambda w: p_y * np.sin(w))
        xr, wr = _refine(seg, refine, dx_max)
        idx = np.clip(np.searchsorted(seg.x, xr, side="right") - 1, 0, seg.x.size - 2)
        # integrate from the last node to each refined point
        sub_r = _partial(seg, idx, xr, lambda w: p_y * np.cos(w))
        sub_p = _partial(seg, idx, xr, lambda w: p_y * np.sin(w))
        xs.append(xr)
        ws.append(wr)
        logr.append(lr0 + cr[idx] + sub_r)
        phis.append(ph0 + cp[idx] + sub_p)
        lr0, ph0 = lr0 + cr[-1], ph0 + cp[-1]
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    lr = np.concatenate(logr)
    ph = np.concatenate(phis)
    # drop duplicated stitch / jump abscissae, keeping the right limit
    keep = np.append(x[1:] > x[:-1], True)
    x, w, lr, ph = x[keep], w[keep], lr[keep], ph[keep]
    lr = lr - lr.max()
    live = 2.0 * lr > _LOG_RHO_FLOOR
    i0, i1 = np.flatnonzero(live)[[0, -1]]
    x, w, lr, ph = x[i0 : i1 + 1], w[i0 : i1 + 1], lr[i0 : i1 + 1], ph[i0 : i1 + 1]
    ph = ph - ph[0]
    W = float(integrate.simpson(np.exp(2.0 * lr), x=x))
    return Spinor(x, w, lr, ph, W, float(E_d), float(p_y))


def _partial(seg: Segment, idx: np.ndarray, xq: np.ndarray, g: Callable) -> np.ndarray:
    """int_{seg.x[idx]}^{xq} g(Omega) dx by 6-point Gauss-Legendre."""
    from ._rk import _GL_NODES, _GL_WEIGHTS

    a = seg.x[idx]
    mid, half = 0.5 * (a + xq), 0.5 * (xq - a)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = g(seg(pts.ravel())).reshape(pts.shape)
    return half * (vals @ _GL_WEIGHTS)


def delta_limit_phase(
    pot: Potential, p_y: float, E: float, *, threshold: float = 0.1
) -> Callable:
    """Closed-form phase ``-arcsin(E/p_y) + 2 int_{-inf}^x U`` of the delta limit.

    Valid when ``p_y * width_d / min(dn_G, 1 - dn_G)`` is small and x U(x)
    is integrable; otherwise :class:`ConditionViolated` is raised.
    """
    if not (p_y > 0 and abs(E) <= p_y):
        raise InvalidParams("need p_y > 0 and |E| <= p_y")
    base = -math.asin(E / p_y)
    if pot.is_zero:
        return np.vectorize(lambda x: base, otypes=[float])
    if not pot.x_u_integrable:
        raise ConditionViolated("x U(x) is not integrable; the delta-limit wavefunction does not apply")
    dn = pot.delta_n_G
    gap = min(dn, 1.0 - dn)
    ratio = math.inf if gap == 0.0 else p_y * pot.width_d / gap
    if ratio > threshold:
        raise ConditionViolated(f"validity ratio p_y d / min(dn_G, 1 - dn_G) = {ratio:.3g} exceeds {threshold}")
    lo = pot.limits[0]

    def omega(x):
        return base + 2.0 * (np.asarray(pot.antiderivative(x)) - lo)

    return omega

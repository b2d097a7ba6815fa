"""Phase-portrait geometry: autonomous fields per monotone interval, the
stripe-to-ring map and Poincare winding indices.

On an interval where U is strictly monotone, U itself can replace x as the
independent variable and the phase equation becomes the autonomous system::

    dU/dt     = G_j(U)
    dOmega/dt = 2 (U - E) - 2 p_y sin(Omega)

The map ``X = (U + a p_y) cos(Omega)``, ``Y = (U + a p_y) sin(Omega)`` sends
the stripe onto a ring around the origin, where the winding number of a
closed separatrix equals its phase variance over 2 pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams, NotClosed
from .phase_ode import (
    IntegratorControl,
    PhaseProblem,
    TerminalKind,
    domain_half_width,
    integrate_phase,
    left_tail_seed,
)
from .potentials import MonotoneDecomposition, Potential, monotone_decomposition

__all__ = [
    "FieldGrid",
    "RingTrajectory",
    "IntervalTrace",
    "PortraitResult",
    "default_offset",
    "ring_map",
    "polygon_winding",
    "field_grid",
    "separatrix_in_phase_space",
    "stable_trajectory",
]

_TWO_PI = 2.0 * math.pi


@dataclass
class FieldGrid:
    """Samples of the autonomous field on interval ``j`` (0-based).

    ``FU`` and ``Fomega`` have shape ``(len(U), len(omega))``.
    ``zero_rows`` are the U values where ``G_j`` vanishes; ``stationary``
    lists the stationary points on those rows that fall in the window.
    """

    j: int
    U: np.ndarray
    omega: np.ndarray
    FU: np.ndarray
    Fomega: np.ndarray
    E: float
    p_y: float
    zero_rows: list
    stationary: list

    def rows(self):
        """Flat ``(U, omega, FU, Fomega)`` tuples for CSV export."""
        UU, WW = np.meshgrid(self.U, self.omega, indexing="ij")
        return list(zip(UU.ravel().tolist(), WW.ravel().tolist(), self.FU.ravel().tolist(), self.Fomega.ravel().tolist()))


@dataclass
class RingTrajectory:
    X: np.ndarray
    Y: np.ndarray
    a: float
    winding: int
    closed: bool
    gap: float

    @property
    def endpoints(self):
        return (self.X[0], self.Y[0]), (self.X[-1], self.Y[-1])


@dataclass
class IntervalTrace:
    j: int
    x: np.ndarray
    U: np.ndarray
    omega: np.ndarray


@dataclass
class PortraitResult:
    E: float
    p_y: float
    traces: list
    ring: RingTrajectory
    variance_index: int
    meta: dict = field(default_factory=dict)


def default_offset(pot: Potential, p_y: float) -> float:
    """Offset a with ``a p_y = 2 (-inf U) + p_y``."""
    inf_u = _inf_u(pot)
    return (2.0 * (-inf_u) + p_y) / p_y


def _inf_u(pot: Potential) -> float:
    if pot.sup_abs == 0.0:
        return 0.0
    dec = monotone_decomposition(pot)
    return min(0.0, min(dec.value_range(j)[0] for j in range(dec.n_pieces)))


def ring_map(U, omega, a: float, p_y: float):
    r = np.asarray(U, dtype=float) + a * p_y
    w = np.asarray(omega, dtype=float)
    return r * np.cos(w), r * np.sin(w)


def polygon_winding(X, Y) -> float:
    """Signed turns of the polygon (X, Y) around the origin (not rounded)."""
    ang = np.arctan2(Y, X)
    steps = np.diff(ang)
    steps = (steps + math.pi) % _TWO_PI - math.pi
    return float(steps.sum() / _TWO_PI)


def _zero_rows(dec: MonotoneDecomposition, j: int) -> list[float]:
    pot = dec.potential
    if dec.signs[j] == 0:
        return [0.0]
    a, b = dec.interval(j)
    rows = []
    for edge in (a, b):
        u = dec._u_at(edge)
        if math.isinf(edge):
            rows.append(0.0)
        else:
            # one-sided slope just inside the interval
            h = 1e-7 * max(1.0, abs(edge), pot.length_scale)
            inside = edge + h if edge == a else edge - h
            if abs(pot.derivative(inside)) < 1e-5 * max(pot.sup_abs, 1e-300) / max(pot.length_scale, 1e-300):
                rows.append(u)
    return sorted(set(rows))


def field_grid(
    pot: Potential,
    p_y: float,
    E: float,
    j: int,
    resolution: tuple[int, int] = (64, 128),
    omega_window: tuple[float, float] | None = None,
    ctrl: IntegratorControl | None = None,
) -> FieldGrid:
    """Sample the autonomous field of interval ``j`` on a U x Omega grid.

    The default Omega window is the left-separatrix trace on the interval
    padded by pi on each side.
    """
    if not p_y > 0:
        raise InvalidParams("p_y must be positive")
    dec = monotone_decomposition(pot)
    if not 0 <= j < dec.n_pieces:
        raise InvalidParams(f"interval index {j} out of range 0..{dec.n_pieces - 1}")
    nu, nw = resolution
    if nu < 1 or nw < 2:
        raise InvalidParams("resolution needs at least 1 x 2 samples")
    lo, hi = dec.value_range(j)
    U = np.array([lo]) if lo == hi else np.linspace(lo, hi, nu)
    if omega_window is None:
        omega_window = _trace_window(pot, dec, p_y, E, j, ctrl)
    w = np.linspace(omega_window[0], omega_window[1], nw)
    GU = np.asarray(dec.slope(j, U), dtype=float) if dec.signs[j] != 0 else np.zeros_like(U)
    FU = np.repeat(GU[:, None], nw, axis=1)
    Fw = 2.0 * (U[:, None] - E) - 2.0 * p_y * np.sin(w[None, :])
    rows = _zero_rows(dec, j)
    stationary = []
    for u in rows:
        s = (u - E) / p_y
        if abs(s) > 1.0:
            continue
        base = (math.asin(s), math.pi - math.asin(s))
        n_lo = math.floor((omega_window[0] - math.pi) / _TWO_PI)
        n_hi = math.ceil((omega_window[1] + math.pi) / _TWO_PI)
        for n in range(n_lo, n_hi + 1):
            for b0 in base:
                v = b0 + _TWO_PI * n
                if omega_window[0] <= v <= omega_window[1]:
                    stationary.append((u, v))
    stationary = sorted(set(stationary))
    return FieldGrid(j, U, w, FU, Fw, float(E), float(p_y), rows, stationary)


def _trace_window(pot, dec, p_y, E, j, ctrl):
    if abs(E) >= p_y:
        return (-math.pi, math.pi)
    traj = _left_trace(pot, p_y, E, 0.0, ctrl)
    a, b = dec.interval(j)
    sel = (traj.x >= a) & (traj.x <= b)
    w = traj.omega[sel] if np.any(sel) else traj.omega
    return float(w.min() - math.pi), float(w.max() + math.pi)


def _left_trace(pot, p_y, E, perturb, ctrl, stretch=1.0):
    ctrl = ctrl or IntegratorControl()
    prob = PhaseProblem(pot, E, p_y)
    L = stretch * domain_half_width(pot, E, p_y, ctrl)
    w0 = prob.omega_minus + left_tail_seed(pot, E, p_y, L) + perturb
    return integrate_phase(prob, w0, -L, L, ctrl)


def _dense_samples(traj, max_turn: float = 0.5):
    """Trajectory samples refined so consecutive Omega differ by < max_turn.

    Delta jumps are filled in at fixed x so the ring polygon follows them.
    """
    xs, ws = [], []
    for seg in traj.segments:
        if ws and abs(seg.y[0] - ws[-1][-1]) > max_turn:
            # delta jump: walk the phase across it at fixed x
            n = int(math.ceil(abs(seg.y[0] - ws[-1][-1]) / max_turn))
            ws.append(np.linspace(ws[-1][-1], seg.y[0], n + 1)[1:-1])
            xs.append(np.full(n - 1, seg.x[0]))
        if seg.x.size < 2:
            xs.append(seg.x)
            ws.append(seg.y)
            continue
        dw = np.abs(np.diff(seg.y))
        counts = np.maximum(1, np.ceil(dw / max_turn).astype(int))
        parts = [a + h * np.arange(c) / c for a, h, c in zip(seg.x[:-1], np.diff(seg.x), counts)]
        xr = np.append(np.concatenate(parts), seg.x[-1])
        xs.append(xr)
        ws.append(seg(xr))
    return np.concatenate(xs), np.concatenate(ws)


def separatrix_in_phase_space(
    pot: Potential,
    p_y: float,
    E: float,
    seed_perturbation: float = 0.05,
    *,
    a: float | None = None,
    ctrl: IntegratorControl | None = None,
) -> PortraitResult:
    """Left separatrix as per-interval (U, Omega) traces and as a ring curve.

    The trajectory is started ``seed_perturbation`` away from the asymptote
    (towards +Omega for E >= 0, -Omega otherwise); the forward flow pulls it
    back onto the separatrix. The asymptote point itself is prepended so
    the ring curve closes when E is off the spectrum.

    Raises
    ------
    NotClosed
        The trajectory ends near a repellor (E too close to an eigenvalue)
        or the ring curve fails to close within ``classify_tol * a p_y``.
    """
    ctrl = ctrl or IntegratorControl()
    if not (p_y > 0 and abs(E) < p_y):
        raise InvalidParams("need p_y > 0 and |E| < p_y")
    a = default_offset(pot, p_y) if a is None else float(a)
    if not a * p_y > -_inf_u(pot):
        raise InvalidParams("ring offset must satisfy a p_y > -inf U")
    sign = 1.0 if E >= 0 else -1.0
    # the seed excursion may need longer to relax than the bare separatrix;
    # allow one doubling of the domain, as the separatrix runs do
    dec = monotone_decomposition(pot)
    for stretch in (1.0, 2.0):
        traj = _left_trace(pot, p_y, E, sign * abs(seed_perturbation), ctrl, stretch)
        prob = traj.problem
        term = traj.terminal
        if term is not None and term.kind is TerminalKind.NEAR_REPELLOR:
            raise NotClosed(f"E={E!r} is too close to an eigenvalue; the separatrix does not close")
        x, w = _dense_samples(traj)
        U = _safe_u(pot, x)
        traces = []
        for j in range(dec.n_pieces):
            lo, hi = dec.interval(j)
            sel = (x >= lo) & (x <= hi)
            traces.append(IntervalTrace(j, x[sel], U[sel], w[sel]))

        U_ring = np.concatenate([[0.0], U])
        w_ring = np.concatenate([[prob.omega_minus], w])
        X, Y = ring_map(U_ring, w_ring, a, p_y)
        n_var = round((w_ring[-1] - w_ring[0]) / _TWO_PI)
        X_end, Y_end = ring_map(0.0, prob.omega_minus + _TWO_PI * n_var, a, p_y)
        gap = math.hypot(float(X[-1] - X_end), float(Y[-1] - Y_end))
        closed = gap < ctrl.classify_tol * a * p_y
        if closed:
            break
    if not closed:
        raise NotClosed(f"ring curve misses its start by {gap:.3g} (> {ctrl.classify_tol * a * p_y:.3g})")
    # close the polygon through the asymptote before counting turns
    Xc, Yc = np.append(X, X[0]), np.append(Y, Y[0])
    turns = polygon_winding(Xc, Yc)
    wind = round(turns)
    if wind != n_var or abs(turns - wind) > 0.25:
        raise NotClosed(f"polygon winding {turns:.3f} disagrees with phase variance index {n_var}")
    ring = RingTrajectory(X, Y, a, int(wind), closed, gap)
    return PortraitResult(float(E), float(p_y), traces, ring, int(n_var), {"L": traj.L})


def _safe_u(pot, x):
    jumps = [xj for xj, _ in pot.jumps]
    if not jumps:
        return np.asarray(pot(x), dtype=float)
    xx = np.where(np.isin(x, jumps), np.nextafter(x, np.inf), x)
    return np.asarray(pot(xx), dtype=float)


def stable_trajectory(
    pot: Potential,
    p_y: float,
    E: float,
    omega0: float,
    x0: float = 0.0,
    extent: float | None = None,
    *,
    a: float | None = None,
    ctrl: IntegratorControl | None = None,
) -> RingTrajectory:
    """Ring image of a generic trajectory through ``(x0, omega0)``.

    Followed both ways it settles on Omega_plus at -infinity and on
    Omega_minus at +infinity, so the curve stays open with endpoints near
    ``(-a k, -a E)`` and ``(a k, -a E)``.
    """
    ctrl = ctrl or IntegratorControl()
    if not (p_y > 0 and abs(E) < p_y):
        raise InvalidParams("need p_y > 0 and |E| < p_y")
    prob = PhaseProblem(pot, E, p_y)
    a = default_offset(pot, p_y) if a is None else float(a)
    if extent is None:
        extent = domain_half_width(pot, E, p_y, ctrl) + 12.0 / prob.k
    back = integrate_phase(prob, omega0, x0, x0 - extent, ctrl)
    fwd = integrate_phase(prob, omega0, x0, x0 + extent, ctrl)
    xb, wb = _dense_samples(back)
    xf, wf = _dense_samples(fwd)
    x = np.concatenate([xb[:-1], xf])
    w = np.concatenate([wb[:-1], wf])
    X, Y = ring_map(_safe_u(pot, x), w, a, p_y)
    gap = math.hypot(float(X[-1] - X[0]), float(Y[-1] - Y[0]))
    turns = polygon_winding(X, Y)
    return RingTrajectory(X, Y, a, int(round(turns)), False, gap)

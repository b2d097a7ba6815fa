"""Analytic limits used as oracles: delta potential, non-relativistic and
semiclassical regimes, plus delta-barrier transmission above the gap."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from ._rk import cumulative_quad
from .errors import (
    ExcludedCase,
    InsideGap,
    InvalidParams,
    SolverFailure,
    TurningPointFailure,
)
from .phase_ode import IntegratorControl
from .potentials import Kind, Potential, monotone_decomposition, split_strength

__all__ = [
    "DeltaLimitResult",
    "delta_limit_energy",
    "zero_mode_condition",
    "kernel_K",
    "nonrelativistic_levels",
    "numerov_levels",
    "bohr_sommerfeld_action",
    "bohr_sommerfeld_levels",
    "BohrSommerfeldLevel",
    "delta_transmission",
    "delta_transmission_matching",
]

# G within this many ulps-ish of a multiple of pi is treated as excluded
_EXCLUDE_TOL = 1e-12


@dataclass(frozen=True)
class DeltaLimitResult:
    E_pred: float
    validity: float
    zero_mode: bool
    n_G: int
    delta_n_G: float


def _strength(pot_or_G) -> tuple[float, float]:
    """(G, width_d) from a Potential or a bare strength."""
    if isinstance(pot_or_G, Potential):
        return pot_or_G.strength_G, pot_or_G.width_d
    G = float(pot_or_G)
    if not math.isfinite(G):
        raise InvalidParams("G must be finite")
    return G, 0.0


def delta_limit_energy(pot_or_G, p_y: float) -> DeltaLimitResult:
    """Single level ``E = (-1)^(n_G + 1) p_y cos G`` of the delta limit.

    ``validity`` is ``p_y d / min(dn_G, 1 - dn_G)``; the prediction is
    trustworthy when it is small.

    Raises
    ------
    ExcludedCase
        G is a multiple of pi, where the limit is degenerate.
    """
    if not (math.isfinite(p_y) and p_y > 0):
        raise InvalidParams("p_y must be positive")
    G, d = _strength(pot_or_G)
    n_G, dn = split_strength(G)
    if dn < _EXCLUDE_TOL or 1.0 - dn < _EXCLUDE_TOL:
        raise ExcludedCase(f"G = {G!r} is a multiple of pi")
    E = (-1) ** (n_G + 1) * p_y * math.cos(G)
    validity = p_y * d / min(dn, 1.0 - dn)
    zero = abs(dn - 0.5) < _EXCLUDE_TOL
    return DeltaLimitResult(E, validity, zero, n_G, dn)


def zero_mode_condition(pot: Potential, n_max: int = 4) -> dict:
    """Parameter values admitting a zero mode at small p_y.

    Returns a dict with the varied ``parameter``, its ``values`` for
    n = 0..n_max, and the invariant ``product`` (U0 d, 2 U0 d, U0 h1 or G)
    that is quantized.
    """
    n = np.arange(n_max + 1) + 0.5
    kind = pot.kind
    if kind is Kind.DELTA:
        return {"parameter": "G", "product": "G", "values": (math.pi * n).tolist(), "products": (math.pi * n).tolist()}
    if kind in (Kind.SECH, Kind.LORENTZIAN):
        d = pot.params["d"]
        return {"parameter": "U0", "product": "U0*d", "values": (n / d).tolist(), "products": n.tolist()}
    if kind is Kind.EXPONENTIAL:
        d = pot.params["d"]
        prod = math.pi * n
        return {"parameter": "U0", "product": "2*U0*d", "values": (prod / (2 * d)).tolist(), "products": prod.tolist()}
    if kind is Kind.TOPGATE:
        h1 = pot.params["h1"]
        return {"parameter": "U0", "product": "U0*h1", "values": (0.5 * n / h1).tolist(), "products": (0.5 * n).tolist()}
    raise InvalidParams(f"no closed-form strength for {kind.value} potentials")


def kernel_K(traj) -> float:
    """The nonlinear remainder ``K`` in ``Delta Omega = 2 G + K``.

    Evaluated as ``-int 2 (E + p_y sin Omega) dx`` along a computed
    trajectory; its size measures how far the delta limit is from exact.
    """
    prob = traj.problem
    E, p = prob.E, prob.p_y
    total = 0.0
    for seg in traj.segments:
        if seg.x.size > 1:
            total += cumulative_quad(seg, lambda w: -2.0 * (E + p * np.sin(w)))[-1]
    return float(total)


# -- non-relativistic limit ---------------------------------------------------


def _numerov_count(q: np.ndarray, h2: float) -> int:
    """Nodes of the Dirichlet solution of psi'' = q psi on the interior grid.

    Uses the ratio form of Numerov's recurrence so nothing overflows.
    """
    w = 1.0 - h2 * q / 12.0
    c = h2 * q / w
    nodes = 0
    t = 2.0 + c[1]  # y_0 = 0, y_1 = 1
    if t < 0.0:
        nodes += 1
    for ci in c[2:-1].tolist():
        if t == 0.0:
            t = 1e-300
        t = 2.0 + ci - 1.0 / t
        if t < 0.0:
            nodes += 1
    return nodes


def numerov_levels(
    U, mass: float, L: float, n: int = 8001, e_min: float | None = None, e_max: float = 0.0, tol: float = 1e-13
) -> np.ndarray:
    """Dirichlet eigenvalues below ``e_max`` of ``-psi''/(2 m) + U psi = e psi`` on [-L, L].

    Levels are isolated by Sturm node counting and bisection, so none can
    be skipped.
    """
    x = np.linspace(-L, L, n)
    h2 = (x[1] - x[0]) ** 2
    u = np.asarray(U(x), dtype=float)
    lo = float(u.min()) if e_min is None else e_min
    if lo >= e_max:
        return np.array([])

    def count(e):
        return _numerov_count(2.0 * mass * (u - e), h2)

    n_max = count(e_max)
    out = []
    for level in range(n_max):
        a, b = lo, e_max
        # the level-th eigenvalue sits where the count passes level -> level+1
        while b - a > tol * max(1.0, abs(a), abs(b)):
            m = 0.5 * (a + b)
            if count(m) > level:
                b = m
            else:
                a = m
        out.append(0.5 * (a + b))
    return np.array(out)


def nonrelativistic_levels(
    pot: Potential,
    p_y: float,
    *,
    n: int = 8001,
    L: float | None = None,
    ctrl: IntegratorControl | None = None,
) -> np.ndarray:
    """Levels ``E = p_y + eps`` from the Schrodinger problem of mass p_y.

    The hard-wall box reaches past ten widths and the slowest-decaying
    bound tail; the wall shifts levels by roughly exp(-2 sqrt(2 p_y |eps|) L).
    """
    if not p_y > 0:
        raise InvalidParams("p_y must be positive")
    if pot.jumps:
        raise InvalidParams("the Numerov oracle needs a smooth potential")
    if pot.sup_abs == 0.0:
        return np.array([])
    if pot.sup_abs > 0.1 * p_y or (pot.width_d > 0 and 1.0 / pot.width_d > 0.1 * p_y):
        warnings.warn("non-relativistic limit needs sup|U| and 1/d well below p_y", stacklevel=2)
    ctrl = ctrl or IntegratorControl()
    if L is None:
        decay = 1.0 / math.sqrt(2.0 * p_y * 1e-3 * pot.sup_abs)
        L = max(10.0 * pot.width_d, pot.core_extent, 20.0 * decay)
    eps = numerov_levels(pot, p_y, L, n=n, e_min=-pot.sup_abs, e_max=0.0)
    if eps.size and not np.all(np.isfinite(eps)):
        raise SolverFailure("Numerov bisection produced non-finite levels")
    eps = eps[eps > -2.0 * p_y]
    return p_y + eps


# -- semiclassical limit ------------------------------------------------------


@dataclass(frozen=True)
class BohrSommerfeldLevel:
    n: int
    E: float
    validity: float


def _turning_points(pot: Potential, levels) -> list[float]:
    dec = monotone_decomposition(pot)
    pts = set()
    for j in range(dec.n_pieces):
        lo, hi = dec.value_range(j)
        for u in levels:
            if lo < u < hi:
                x = float(dec.inverse(j, u))
                if math.isfinite(x):
                    pts.add(x)
    return sorted(pts)


def bohr_sommerfeld_action(pot: Potential, p_y: float, E: float) -> tuple[float, int]:
    """``(1/pi) int sqrt((E - U)^2 - p_y^2) dx`` over classical regions.

    Returns the action and the number of disjoint classical regions.
    """
    tps = _turning_points(pot, (E - p_y, E + p_y))
    if not tps:
        return 0.0, 0
    edges = [-math.inf, *tps, math.inf]
    total, regions = 0.0, 0

    def px(x):
        v = (E - pot.value(x)) ** 2 - p_y * p_y
        return math.sqrt(v) if v > 0.0 else 0.0

    for a, b in zip(edges[:-1], edges[1:]):
        if math.isinf(a) or math.isinf(b):
            continue
        mid = 0.5 * (a + b)
        if px(mid) == 0.0:
            continue
        regions += 1
        val = integrate.quad(px, a, b, limit=400, epsabs=1e-12, epsrel=1e-11)[0]
        total += val
    return total / math.pi, regions


def _bs_validity(pot: Potential, p_y: float, E: float) -> float:
    """Median of p_y |U'| / p_x^3 over the inner half of the classical regions."""
    tps = _turning_points(pot, (E - p_y, E + p_y))
    vals = []
    for a, b in zip(tps[:-1], tps[1:]):
        xs = np.linspace(a + 0.25 * (b - a), b - 0.25 * (b - a), 33)
        pxsq = (E - pot(xs)) ** 2 - p_y**2
        ok = pxsq > 0
        if np.any(ok):
            vals.extend((p_y * np.abs(pot.derivative(xs[ok])) / pxsq[ok] ** 1.5).tolist())
    return float(np.median(vals)) if vals else math.inf


def bohr_sommerfeld_levels(
    pot: Potential,
    p_y: float,
    gamma: float = 0.5,
    ctrl: IntegratorControl | None = None,
    *,
    n_grid: int = 256,
) -> list[BohrSommerfeldLevel]:
    """Solve ``S(E) = n + gamma`` inside the gap edges used for level counting.

    Raises
    ------
    TurningPointFailure
        No energy in the gap has a classically allowed region.
    """
    if not p_y > 0:
        raise InvalidParams("p_y must be positive")
    if pot.jumps:
        raise InvalidParams("Bohr-Sommerfeld quantization needs a smooth potential")
    if pot.kind is Kind.EXPONENTIAL and gamma == 0.5:
        warnings.warn("gamma = 1/2 assumes smooth turning points; the exponential cusp is not", stacklevel=2)
    ctrl = ctrl or IntegratorControl()
    e_edge = p_y * (1.0 - ctrl.eps_edge)
    th = math.asin(e_edge / p_y)
    grid = p_y * np.sin(np.linspace(-th, th, n_grid))
    S = np.array([bohr_sommerfeld_action(pot, p_y, E)[0] for E in grid])
    multi = max(bohr_sommerfeld_action(pot, p_y, E)[1] for E in grid[:: max(1, n_grid // 16)])
    if multi > 1:
        warnings.warn("several classical regions at some energies; actions are summed", stacklevel=2)
    if not np.any(S > 0.0):
        raise TurningPointFailure("no classically allowed region anywhere in the gap")

    def f(E, target):
        return bohr_sommerfeld_action(pot, p_y, E)[0] - target

    levels = []
    n_lo = math.ceil(S.min() - gamma)
    n_hi = math.floor(S.max() - gamma)
    for n in range(max(n_lo, 0), n_hi + 1):
        target = n + gamma
        s = S - target
        idx = np.flatnonzero(np.sign(s[:-1]) * np.sign(s[1:]) < 0)
        for i in idx:
            E = optimize.brentq(f, grid[i], grid[i + 1], args=(target,), xtol=1e-14 * p_y, rtol=1e-14)
            levels.append(BohrSommerfeldLevel(n, float(E), _bs_validity(pot, p_y, E)))
    levels.sort(key=lambda lv: lv.E)
    return levels


# -- transmission above the gap ----------------------------------------------


def _check_scattering(E: float, p_y: float) -> float:
    if not (math.isfinite(E) and math.isfinite(p_y) and p_y >= 0):
        raise InvalidParams("E and p_y must be finite with p_y >= 0")
    if abs(E) <= p_y:
        raise InsideGap(f"|E| = {abs(E)!r} lies inside the gap [0, {p_y!r}]")
    return math.sqrt(E * E - p_y * p_y)


def delta_transmission(G: float, E: float, p_y: float) -> float:
    """``T = k^2 / (k^2 + p_y^2 sin^2 G)`` with ``k = sqrt(E^2 - p_y^2)``."""
    k = _check_scattering(E, p_y)
    return k * k / (k * k + (p_y * math.sin(G)) ** 2)


def delta_transmission_matching(G: float, E: float, p_y: float) -> float:
    """Transmission from the matching rule ``g'(+0) / g'(-0) = exp(2 i G)``.

    With ``g = A e^{i(k-E)x} + B e^{-i(k+E)x}`` on the left and
    ``C e^{i(k-E)x}`` on the right, continuity and the derivative rule
    form a 2x2 linear system for (B, C) at A = 1.
    """
    k = _check_scattering(E, p_y)
    ph = cmath.exp(2j * G)
    # continuity:  B - C = -1
    # derivative:  ph (k+E) B + (k-E) C = ph (k-E)
    M = np.array([[1.0, -1.0], [ph * (k + E), (k - E)]], dtype=complex)
    rhs = np.array([-1.0, ph * (k - E)], dtype=complex)
    _, C = np.linalg.solve(M, rhs)
    return float(abs(C) ** 2)


def matching_ratio(G: float) -> complex:
    """``g'(+0) / g'(-0)`` across a delta of strength G."""
    return cmath.exp(2j * G)

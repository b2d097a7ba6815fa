"""Level counting and eigenvalues from the phase staircase.

The total phase variance of the left separatrix, divided by 2 pi, is an
integer ``branch(E)`` for every energy off the spectrum. It never increases
with E and drops by exactly one at each bound-state energy, so counting and
locating levels reduces to evaluating that integer.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import BracketMiss, DivergentPrimitive, InvalidParams, NearEigenvalue, Unresolved
from .phase_ode import (
    IntegratorControl,
    PhaseProblem,
    Terminal,
    TerminalKind,
    integrate_phase,
    domain_half_width,
    left_separatrix,
    left_tail_seed,
    right_tail_seed,
)
from .potentials import Potential

__all__ = [
    "Eigenvalue",
    "Staircase",
    "SpectrumReport",
    "edge_energies",
    "terminal_at",
    "staircase_value",
    "edge_branches",
    "count_levels",
    "count_between",
    "find_eigenvalues",
    "mismatch",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Eigenvalue:
    E: float
    uncertainty: float


@dataclass
class Staircase:
    """Sampled ``(E, branch)`` pairs, sorted by E, over the scan bounds."""

    energies: list = field(default_factory=list)
    branches: list = field(default_factory=list)
    bounds: tuple = (0.0, 0.0)

    def add(self, E: float, b: int):
        self.energies.append(float(E))
        self.branches.append(int(b))

    def sorted(self) -> "Staircase":
        order = np.argsort(self.energies, kind="stable")
        return Staircase([self.energies[i] for i in order], [self.branches[i] for i in order], self.bounds)

    def is_monotone(self) -> bool:
        return all(b1 >= b2 for b1, b2 in zip(self.branches[:-1], self.branches[1:]))

    @property
    def total_drop(self) -> int:
        return self.branches[0] - self.branches[-1] if self.branches else 0


@dataclass
class SpectrumReport:
    p_y: float
    eigenvalues: list
    N_d: int
    staircase: Staircase
    edge_branches: tuple = (0, 0)

    @property
    def energies(self) -> np.ndarray:
        return np.array([e.E for e in self.eigenvalues])

    def to_dict(self) -> dict:
        return {
            "p_y": self.p_y,
            "N_d": self.N_d,
            "eigenvalues": [{"E": e.E, "uncertainty": e.uncertainty} for e in self.eigenvalues],
            "staircase": [{"E": E, "branch": b} for E, b in zip(self.staircase.energies, self.staircase.branches)],
        }


def edge_energies(p_y: float, ctrl: IntegratorControl | None = None) -> tuple[float, float]:
    ctrl = ctrl or IntegratorControl()
    e = p_y * (1.0 - ctrl.eps_edge)
    return -e, e


def _check_energy(p_y: float, E: float):
    if not (math.isfinite(p_y) and p_y > 0):
        raise InvalidParams("p_y must be positive")
    if not (math.isfinite(E) and abs(E) < p_y):
        raise InvalidParams(f"energy {E!r} must lie strictly inside (-p_y, p_y)")


def terminal_at(pot: Potential, p_y: float, E: float, ctrl: IntegratorControl | None = None) -> Terminal:
    """Terminal classification of the left separatrix at energy E."""
    _check_energy(p_y, E)
    traj = left_separatrix(PhaseProblem(pot, E, p_y), ctrl, strict=False, record=False)
    return traj.terminal


def _fate(args) -> int:
    pot, p_y, E, ctrl = args
    return terminal_at(pot, p_y, E, ctrl).fate


def staircase_value(pot: Potential, p_y: float, E: float, ctrl: IntegratorControl | None = None) -> int:
    """``round(Delta Omega_l(E) / 2 pi)`` from a resolved run.

    Raises
    ------
    NearEigenvalue
        The separatrix ends hugging a repellor, so E is too close to a level
        for the integer to be read off.
    Unresolved
        The end value is not near any stationary point even after one
        domain extension.
    """
    term = terminal_at(pot, p_y, E, ctrl)
    if term.kind is TerminalKind.NEAR_REPELLOR:
        raise NearEigenvalue(f"E={E!r} is within reach of an eigenvalue (repellor residual {term.residual:.3g})")
    if term.kind is TerminalKind.UNRESOLVED:
        raise Unresolved(f"staircase at E={E!r} unresolved (residual {term.residual:.3g})")
    return term.branch


def _check_primitive(pot: Potential):
    lo, hi = pot.limits
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DivergentPrimitive("the primitive of U diverges at infinity; level counting is undefined")


def edge_branches(pot: Potential, p_y: float, ctrl: IntegratorControl | None = None) -> tuple[int, int]:
    """Branches at the lower and upper gap edges, reached as limits.

    Edge runs sit next to a saddle-node of the free flow, so the fate
    (basin) is used rather than the strict classification.
    """
    _check_primitive(pot)
    lo, hi = edge_energies(p_y, ctrl)
    return _fate((pot, p_y, lo, ctrl)), _fate((pot, p_y, hi, ctrl))


def count_levels(pot: Potential, p_y: float, ctrl: IntegratorControl | None = None) -> int:
    """Number of discrete levels in the gap, branch(-p_y) - branch(+p_y)."""
    b_lo, b_hi = edge_branches(pot, p_y, ctrl)
    return b_lo - b_hi


def count_between(
    pot: Potential, p_y: float, E1: float, E2: float, ctrl: IntegratorControl | None = None
) -> int:
    """Levels between two energies in [-p_y, p_y]; the gap edges count as limits."""
    if E1 == E2:
        return 0
    lo, hi = edge_energies(p_y, ctrl)

    def branch(E):
        if abs(E) > p_y:
            raise InvalidParams("energies must lie in [-p_y, p_y]")
        if E == -p_y:
            return _fate((pot, p_y, lo, ctrl))
        if E == p_y:
            return _fate((pot, p_y, hi, ctrl))
        return staircase_value(pot, p_y, E, ctrl)

    _check_primitive(pot)
    return abs(branch(E2) - branch(E1))


def mismatch(pot: Potential, p_y: float, E: float, ctrl: IntegratorControl | None = None, x_m=None) -> float:
    """Separatrix mismatch ``Omega_l(x_m) - Omega_r(x_m)`` wrapped to (-pi, pi].

    It vanishes at eigenvalues, where the two separatrices coincide.
    """
    ctrl = ctrl or IntegratorControl()
    prob = PhaseProblem(pot, E, p_y)
    x_m = pot.center if x_m is None else x_m
    L = domain_half_width(pot, E, p_y, ctrl)
    wl = prob.omega_minus + left_tail_seed(pot, E, p_y, L)
    wr = prob.omega_plus + right_tail_seed(pot, E, p_y, L)
    wl = integrate_phase(prob, wl, -L, x_m, ctrl, record=False).meta["end_value"]
    wr = integrate_phase(prob, wr, L, x_m, ctrl, record=False).meta["end_value"]
    d = math.remainder(wl - wr, _TWO_PI)
    return d


def _map(fn, items, workers: int):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def find_eigenvalues(
    pot: Potential,
    p_y: float,
    refine_tol: float | None = None,
    ctrl: IntegratorControl | None = None,
    *,
    polish: bool = False,
    n_grid: int = 64,
    workers: int = 1,
    max_depth: int = 80,
    window: tuple[float, float] | None = None,
) -> SpectrumReport:
    """Scan the staircase, bracket each unit drop and bisect it.

    Parameters
    ----------
    pot : Potential
    p_y : float
        Transverse momentum, > 0.
    refine_tol : float, optional
        Final bracket width; defaults to ``ctrl.refine_tol`` or ``1e-8 p_y``.
    ctrl : IntegratorControl, optional
    polish : bool
        Finish each level with Brent's method on :func:`mismatch`, which
        converges much faster than bisection once the bracket is small.
    n_grid : int
        Initial scan points, uniform in arcsin(E/p_y).
    workers : int
        Processes for the initial scan; results do not depend on it.
    window : (float, float), optional
        Restrict the scan to this energy interval inside the gap edges;
        ``N_d`` then counts the levels inside the window only.

    Raises
    ------
    BracketMiss
        The sampled branches are not monotone or a drop cannot be resolved
        into unit steps.
    """
    ctrl = ctrl or IntegratorControl()
    tol = refine_tol if refine_tol is not None else ctrl.refine_abs(p_y)
    if not tol > 0:
        raise InvalidParams("refine_tol must be positive")
    _check_primitive(pot)
    lo, hi = edge_energies(p_y, ctrl)
    if window is not None:
        w_lo, w_hi = (float(v) for v in window)
        if not lo <= w_lo < w_hi <= hi:
            raise InvalidParams("window must be an increasing pair inside the gap edges")
        lo, hi = w_lo, w_hi
    grid = [p_y * math.sin(t) for t in np.linspace(math.asin(lo / p_y), math.asin(hi / p_y), max(n_grid, 2))]
    grid[0], grid[-1] = lo, hi
    fates = _map(_fate, [(pot, p_y, E, ctrl) for E in grid], workers)
    stairs = Staircase(bounds=(lo, hi))
    for E, b in zip(grid, fates):
        stairs.add(E, b)
    if not stairs.is_monotone():
        raise BracketMiss("staircase is not monotone on the scan grid")

    def fate(E):
        b = _fate((pot, p_y, E, ctrl))
        stairs.add(E, b)
        return b

    # split cells until each holds a single unit drop
    cells = []
    stack = [(grid[i], fates[i], grid[i + 1], fates[i + 1], 0) for i in range(len(grid) - 1)][::-1]
    while stack:
        a, fa, b, fb, depth = stack.pop()
        drop = fa - fb
        if drop < 0:
            raise BracketMiss(f"branch increases between E={a:.17g} and E={b:.17g}")
        if drop == 0:
            continue
        if drop == 1:
            cells.append((a, fa, b, fb))
            continue
        if depth >= max_depth or b - a < tol:
            raise BracketMiss(f"cannot separate {drop} levels in ({a:.17g}, {b:.17g})")
        m = 0.5 * (a + b)
        fm = fate(m)
        stack.append((m, fm, b, fb, depth + 1))
        stack.append((a, fa, m, fm, depth + 1))

    eigen = []
    for a, fa, b, fb in cells:
        coarse = max(tol, 1e-3 * (b - a)) if polish else tol
        while b - a >= coarse:
            m = 0.5 * (a + b)
            fm = fate(m)
            if fm == fa:
                a = m
            elif fm == fb:
                b = m
            else:
                raise BracketMiss(f"branch {fm} at E={m:.17g} outside ({fb}, {fa})")
        if polish and b - a >= tol:
            E_d, unc = _polish(pot, p_y, a, b, tol, ctrl)
        else:
            E_d, unc = 0.5 * (a + b), 0.5 * (b - a)
        eigen.append(Eigenvalue(E_d, unc))
    eigen.sort(key=lambda e: e.E)
    stairs = stairs.sorted()
    if not stairs.is_monotone():
        raise BracketMiss("staircase became non-monotone during refinement")
    N_d = stairs.total_drop
    return SpectrumReport(p_y, eigen, N_d, stairs, (stairs.branches[0], stairs.branches[-1]))


def _polish(pot, p_y, a, b, tol, ctrl):
    """Brent's method on the separatrix mismatch inside a bisection bracket."""
    try:
        da, db = mismatch(pot, p_y, a, ctrl), mismatch(pot, p_y, b, ctrl)
        if da * db > 0 or abs(da) > 1.0 or abs(db) > 1.0:
            return 0.5 * (a + b), 0.5 * (b - a)
        E = optimize.brentq(lambda e: mismatch(pot, p_y, e, ctrl), a, b, xtol=0.25 * tol, rtol=1e-15)
        return E, 0.5 * tol
    except (ValueError, RuntimeError):
        return 0.5 * (a + b), 0.5 * (b - a)

"""Integration of the phase equation ``Omega' = 2(U - E) - 2 p_y sin(Omega)``.

Free motion (U = 0) has two stationary families::

    Omega_minus(n) = -arcsin(E/p_y) + 2 pi n     stable going forward
    Omega_plus(n)  =  arcsin(E/p_y) + pi + 2 pi n  stable going backward

The left separatrix leaves Omega_minus(0) at -infinity and is integrated
forward (a stable direction); the right separatrix leaves Omega_plus(0) at
+infinity and is integrated backward. Both start from a first-order tail
seed so the truncated domain does not bias the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import integrate

from ._rk import Segment, dopri5
from .errors import DomainTooSmall, InvalidParams
from .potentials import Potential

__all__ = [
    "IntegratorControl",
    "PhaseProblem",
    "TerminalKind",
    "Terminal",
    "PhaseTrajectory",
    "integrate_phase",
    "left_separatrix",
    "right_separatrix",
    "domain_half_width",
    "left_tail_seed",
    "right_tail_seed",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IntegratorControl:
    """Solver tolerances shared by every module.

    Attributes
    ----------
    tol_phase : float
        Relative tolerance of the Runge-Kutta step control.
    atol : float
        Absolute tolerance of the step control (radians).
    classify_tol : float
        Distance (radians) to a stationary value that counts as "arrived".
    eps_edge : float
        Gap edges are approached as ``E = +-(1 - eps_edge) p_y``.
    refine_tol : float or None
        Eigenvalue bracket width; None means ``1e-8 * p_y``.
    tail_tol : float
        Largest tolerated first-order tail seed at the domain boundary.
    max_L : float
        Hard cap on the half-width of the integration domain.
    max_steps : int
        Step budget per continuous integration segment.
    """

    tol_phase: float = 1e-9
    atol: float = 1e-12
    classify_tol: float = 1e-3
    eps_edge: float = 1e-6
    refine_tol: float | None = None
    tail_tol: float = 1e-4
    max_L: float = 1e7
    max_steps: int = 2_000_000

    def __post_init__(self):
        for name in ("tol_phase", "atol", "classify_tol", "eps_edge", "tail_tol", "max_L"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise InvalidParams(f"{name} must be a positive finite number")
        if self.eps_edge >= 1.0:
            raise InvalidParams("eps_edge is relative to p_y and must be < 1")
        if self.refine_tol is not None and not self.refine_tol > 0:
            raise InvalidParams("refine_tol must be positive")

    def refine_abs(self, p_y: float) -> float:
        return self.refine_tol if self.refine_tol is not None else 1e-8 * p_y


@dataclass(frozen=True)
class PhaseProblem:
    potential: Potential
    E: float
    p_y: float

    def __post_init__(self):
        if not (math.isfinite(self.p_y) and self.p_y > 0):
            raise InvalidParams("p_y must be positive")
        if not math.isfinite(self.E):
            raise InvalidParams("E must be finite")

    @property
    def in_gap(self) -> bool:
        return abs(self.E) < self.p_y

    @property
    def k(self) -> float:
        return math.sqrt(max(self.p_y**2 - self.E**2, 0.0))

    @property
    def omega_minus(self) -> float:
        return -math.asin(max(-1.0, min(1.0, self.E / self.p_y)))

    @property
    def omega_plus(self) -> float:
        return math.asin(max(-1.0, min(1.0, self.E / self.p_y))) + math.pi

    def rhs(self):
        U, E, tp = self.potential.value, self.E, 2.0 * self.p_y
        if self.potential.sup_abs == 0.0:
            return lambda x, w: -2.0 * E - tp * math.sin(w)
        return lambda x, w: 2.0 * (U(x) - E) - tp * math.sin(w)


class TerminalKind(str, Enum):
    ATTRACTOR = "attractor"
    NEAR_REPELLOR = "near_repellor"
    UNRESOLVED = "unresolved"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Terminal:
    """Where a trajectory ends relative to the free stationary families.

    ``branch`` is the index n of the family member it sits on (or near).
    ``fate`` is the attractor index the trajectory relaxes to once the
    potential is gone, decided by which side of the repellors it lies on.
    For a forward run these index Omega_minus; for a backward run they
    index Omega_plus. DEGENERATE marks a left/right separatrix pair stitched
    at an eigenvalue; its residual is the mismatch at the stitch point.
    """

    kind: TerminalKind
    branch: int
    fate: int
    residual: float
    side: int = 0


@dataclass
class PhaseTrajectory:
    """Sampled Omega(x) with terminal classification.

    ``x`` is increasing; at a delta location the sample appears twice
    (left then right limit). ``segments`` are the continuous pieces with
    Hermite dense output.
    """

    problem: PhaseProblem
    segments: list
    direction: int
    L: float
    terminal: Terminal | None = None
    start_family: int = 0
    seed: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([s.x for s in self.segments])

    @property
    def omega(self) -> np.ndarray:
        return np.concatenate([s.y for s in self.segments])

    @property
    def slope(self) -> np.ndarray:
        return np.concatenate([s.f for s in self.segments])

    @property
    def start(self) -> float:
        seg = self.segments[0] if self.direction > 0 else self.segments[-1]
        return float(seg.y[0] if self.direction > 0 else seg.y[-1])

    @property
    def end(self) -> float:
        seg = self.segments[-1] if self.direction > 0 else self.segments[0]
        return float(seg.y[-1] if self.direction > 0 else seg.y[0])

    @property
    def variance(self) -> float:
        """Omega(end) minus the starting stationary value, in radians."""
        prob = self.problem
        base = prob.omega_minus if self.direction > 0 else prob.omega_plus
        return self.end - base

    def __call__(self, xq):
        """Dense output; right limits at delta locations."""
        xq = np.asarray(xq, dtype=float)
        out = np.empty_like(xq)
        done = np.zeros(xq.shape, dtype=bool)
        for seg in reversed(self.segments):
            sel = (~done) & (xq >= seg.x[0])
            if np.any(sel):
                out[sel] = seg(xq[sel])
                done |= sel
        if np.any(~done):
            out[~done] = self.segments[0](xq[~done])
        return float(out) if out.ndim == 0 else out

    def to_csv_rows(self):
        return list(zip(self.x.tolist(), self.omega.tolist()))


# -- tails and domain --------------------------------------------------------


def _chunked_quad(f, a: float, b: float, scale: float, rest) -> float:
    """int_a^b f over doubling chunks; stops early once ``rest(t)`` < 1e-15.

    ``rest(t)`` bounds the remaining integral beyond t. Slowly decaying
    1/x^2 tails under a weak exponential defeat a single call to quad.
    """
    total, lo, width = 0.0, a, scale
    for _ in range(200):
        hi = min(lo + width, b)
        total += integrate.quad(f, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-10)[0]
        lo, width = hi, 2.0 * width
        if lo >= b or rest(lo) < 1e-15:
            break
    return total


def _seed_integral(pot: Potential, k: float, start: float, sgn: int) -> float:
    """2 * int_0^inf U(start + sgn t) exp(-2 k t) dt."""
    if pot.sup_abs == 0.0:
        return 0.0
    U = pot.value

    def f(t):
        return U(start + sgn * t) * math.exp(-2.0 * k * t)

    def rest(t):
        x = start + sgn * t
        # |U| decays at least like 1/x^2 beyond the core: remainder <= |x U(x)|
        return abs(U(x)) * max(abs(x), pot.length_scale) * math.exp(-2.0 * k * t)

    pieces = [0.0]
    # split where the core sits in the integration variable, if it does
    core = pot.core_extent
    for edge in (-core, core):
        t = sgn * (edge - start)
        if t > 0:
            pieces.append(t)
    pieces = sorted(set(pieces))
    total = 0.0
    for a, b in zip(pieces[:-1], pieces[1:]):
        total += integrate.quad(f, a, b, limit=200, epsabs=1e-14, epsrel=1e-10)[0]
    total += _chunked_quad(f, pieces[-1], math.inf, pot.length_scale, rest)
    return 2.0 * total


def left_tail_seed(pot: Potential, E: float, p_y: float, L: float) -> float:
    """First-order offset of the left separatrix from Omega_minus at x = -L."""
    k = math.sqrt(max(p_y**2 - E**2, 0.0))
    return _seed_integral(pot, k, -L, -1)


def right_tail_seed(pot: Potential, E: float, p_y: float, L: float) -> float:
    """First-order offset of the right separatrix from Omega_plus at x = +L."""
    k = math.sqrt(max(p_y**2 - E**2, 0.0))
    return -_seed_integral(pot, k, L, 1)


def _attractor_shift(pot: Potential, k: float, L: float, direction: int) -> float:
    """Linear response of the attractor to the tail crossed just before the end.

    Only the part of the potential outside the core contributes; inside it
    the linearization does not hold and its memory has decayed anyway.
    """
    if pot.sup_abs == 0.0 or k == 0.0:
        return 0.0
    span = L - pot.core_extent
    if span <= 0.0:
        return 0.0
    U = pot.value
    end = L if direction > 0 else -L
    val = _chunked_quad(
        lambda t: U(end - direction * t) * math.exp(-2.0 * k * t),
        0.0,
        span,
        pot.length_scale,
        lambda t: math.exp(-2.0 * k * t) / k * max(abs(U(end - direction * t)), abs(U(pot.core_extent))),
    )
    return 2.0 * direction * val


def _seed_bound(pot: Potential, k: float, L: float) -> float:
    # |U| is non-increasing beyond the core for every catalog kind, so the
    # seed is bounded both by |U(L)|/k and by twice the primitive remainder.
    u = max(abs(pot.value(L)), abs(pot.value(-L)))
    b1 = u / k if k > 0 else math.inf
    return min(b1, 2.0 * pot.tail_remainder(L))


def domain_half_width(pot: Potential, E: float, p_y: float, ctrl: IntegratorControl) -> float:
    """Half-width L of the integration domain.

    L covers ten characteristic widths, four relaxation lengths 1/k and
    reaches far enough that the tail seeds stay below ``ctrl.tail_tol``.
    """
    k = math.sqrt(max(p_y**2 - E**2, 0.0))
    L = max(10.0 * pot.width_d, 4.0 / k if k > 0 else ctrl.max_L, 1.05 * pot.core_extent)
    for xj, _ in pot.jumps:
        L = max(L, 2.0 * abs(xj) + 1.0 / max(k, 1e-300))
    if pot.sup_abs > 0.0 and _seed_bound(pot, k, L) >= ctrl.tail_tol:
        lo, hi = L, 2.0 * L
        while _seed_bound(pot, k, hi) >= ctrl.tail_tol and hi < ctrl.max_L:
            lo, hi = hi, 2.0 * hi
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if _seed_bound(pot, k, mid) >= ctrl.tail_tol:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-3 * hi:
                break
        L = hi
    return min(L, ctrl.max_L)


# -- integration -------------------------------------------------------------


def _breaks(pot: Potential, a: float, b: float) -> list[float]:
    """Sorted interior points where integration restarts, in (a, b)."""
    core = pot.core_extent
    pts = {xj for xj, _ in pot.jumps} | set(pot.kinks)
    if core > 0:
        pts |= {-core, core}
    return sorted(p for p in pts if a < p < b)


def _run(prob: PhaseProblem, w0: float, x0: float, x1: float, ctrl: IntegratorControl, record: bool):
    """Integrate with delta jumps applied; returns (w1, segments)."""
    if x0 == x1:
        raise InvalidParams("integration interval is empty")
    pot = prob.potential
    fwd = x1 > x0
    lo, hi = (x0, x1) if fwd else (x1, x0)
    stops = _breaks(pot, lo, hi)
    if not fwd:
        stops = stops[::-1]
    nodes = [x0, *stops, x1]
    jumps = dict(pot.jumps)
    core = pot.core_extent
    scale = max(prob.p_y, abs(prob.E), pot.sup_abs)
    core_step = 0.1 / scale
    rhs = prob.rhs()
    segs = []
    w = w0
    for a, b in zip(nodes[:-1], nodes[1:]):
        if not fwd and a in jumps:
            w -= 2.0 * jumps[a]
        mid = 0.5 * (a + b)
        inside = core > 0 and abs(mid) < core
        w, seg = dopri5(
            rhs,
            a,
            w,
            b,
            rtol=ctrl.tol_phase,
            atol=ctrl.atol,
            max_step=core_step if inside else math.inf,
            max_steps=ctrl.max_steps,
            record=record,
        )
        if fwd and b in jumps:
            if record:
                segs.append(seg)
                seg = Segment(np.array([b]), np.array([w + 2 * jumps[b]]), np.array([rhs(b, w + 2 * jumps[b])]))
            w += 2.0 * jumps[b]
        if record:
            segs.append(seg)
    if record and not fwd:
        segs = segs[::-1]
    if record:
        segs = _merge_points(segs)
    return w, segs


def _merge_points(segs):
    """Fold single-point segments into their neighbour to keep dense output tidy."""
    out = []
    for s in segs:
        if out and s.x.size == 1 and out[-1].x[-1] != s.x[0]:
            continue
        if out and out[-1].x.size == 1 and out[-1].x[0] == s.x[0]:
            # single right-limit point followed by its continuation
            out[-1] = s
            continue
        out.append(s)
    return out


def _classify(
    prob: PhaseProblem, w: float, direction: int, shift_rep: float, tol: float, shift_att: float = 0.0
) -> Terminal:
    """Classify the end value of a run.

    Forward runs relax onto Omega_minus and are repelled by Omega_plus;
    backward runs the other way round. ``shift_rep`` moves the repellor
    by its tail correction at the endpoint, ``shift_att`` the attractor.
    """
    if direction > 0:
        att0, rep0 = prob.omega_minus, prob.omega_plus
    else:
        att0, rep0 = prob.omega_plus, prob.omega_minus
    n = round((w - att0 - shift_att) / _TWO_PI)
    res_att = w - (att0 + shift_att + _TWO_PI * n)
    rep_pos = rep0 + shift_rep
    m = round((w - rep_pos) / _TWO_PI)
    dist = w - (rep_pos + _TWO_PI * m)
    if direction > 0:
        # basin of Omega_minus(n) is (Omega_plus(n-1), Omega_plus(n))
        fate = math.ceil((w - rep_pos) / _TWO_PI)
    else:
        # basin of Omega_plus(n) is (Omega_minus(n), Omega_minus(n+1))
        fate = math.floor((w - rep_pos) / _TWO_PI)
    if abs(res_att) < tol and abs(res_att) <= abs(dist):
        return Terminal(TerminalKind.ATTRACTOR, int(n), int(n), float(res_att))
    if abs(dist) < tol:
        side = 1 if dist > 0 else -1
        return Terminal(TerminalKind.NEAR_REPELLOR, int(m), int(fate), float(dist), side)
    return Terminal(TerminalKind.UNRESOLVED, int(n), int(fate), float(res_att))


def integrate_phase(
    prob: PhaseProblem,
    omega0: float,
    x0: float,
    x1: float,
    ctrl: IntegratorControl | None = None,
    *,
    record: bool = True,
) -> PhaseTrajectory:
    """General initial-value integration of the phase equation.

    ``omega0`` is the value at ``x0`` (right limit if ``x0`` is a delta
    location). The terminal classification uses the free stationary
    families without tail corrections.
    """
    ctrl = ctrl or IntegratorControl()
    w1, segs = _run(prob, float(omega0), float(x0), float(x1), ctrl, record)
    direction = 1 if x1 > x0 else -1
    if not record:
        segs = [Segment(np.array([min(x0, x1), max(x0, x1)]), np.array([omega0, w1][::direction]), np.zeros(2))]
    traj = PhaseTrajectory(prob, segs, direction, max(abs(x0), abs(x1)))
    if prob.in_gap:
        traj.terminal = _classify(prob, w1, direction, 0.0, ctrl.classify_tol)
    traj.meta["end_value"] = w1
    return traj


def _separatrix(prob, ctrl, direction, strict, record, L):
    if not prob.in_gap:
        raise InvalidParams("separatrices need |E| < p_y")
    pot = prob.potential
    ctrl = ctrl or IntegratorControl()
    if L is None:
        L = domain_half_width(pot, prob.E, prob.p_y, ctrl)
    extended = False
    while True:
        if direction > 0:
            seed = left_tail_seed(pot, prob.E, prob.p_y, L)
            w0 = prob.omega_minus + seed
            shift = right_tail_seed(pot, prob.E, prob.p_y, L)
            w1, segs = _run(prob, w0, -L, L, ctrl, record)
        else:
            seed = right_tail_seed(pot, prob.E, prob.p_y, L)
            w0 = prob.omega_plus + seed
            shift = left_tail_seed(pot, prob.E, prob.p_y, L)
            w1, segs = _run(prob, w0, L, -L, ctrl, record)
        att = _attractor_shift(pot, prob.k, L, direction)
        term = _classify(prob, w1, direction, shift, ctrl.classify_tol, att)
        if term.kind is not TerminalKind.UNRESOLVED or extended or 2 * L > ctrl.max_L:
            break
        L, extended = 2.0 * L, True
    if term.kind is TerminalKind.UNRESOLVED and strict:
        raise DomainTooSmall(
            f"terminal value {w1:.6g} not within {ctrl.classify_tol} of a stationary point at L={L:.4g}"
        )
    if not record:
        pts = np.array([-L, L])
        ys = np.array([w0, w1]) if direction > 0 else np.array([w1, w0])
        segs = [Segment(pts, ys, np.zeros(2))]
    traj = PhaseTrajectory(prob, segs, direction, L, term, 0, seed)
    traj.meta.update(end_value=w1, extended=extended)
    return traj


def left_separatrix(
    prob: PhaseProblem,
    ctrl: IntegratorControl | None = None,
    *,
    strict: bool = True,
    record: bool = True,
    L: float | None = None,
) -> PhaseTrajectory:
    """Solution leaving Omega_minus(0) at -infinity, integrated to +L.

    With ``strict=False`` an unresolved terminal is returned (kind
    UNRESOLVED, fate from the basin it lies in) instead of raising
    :class:`DomainTooSmall`.
    """
    return _separatrix(prob, ctrl, 1, strict, record, L)


def right_separatrix(
    prob: PhaseProblem,
    ctrl: IntegratorControl | None = None,
    *,
    strict: bool = True,
    record: bool = True,
    L: float | None = None,
) -> PhaseTrajectory:
    """Solution leaving Omega_plus(0) at +infinity, integrated back to -L."""
    return _separatrix(prob, ctrl, -1, strict, record, L)


def with_control(ctrl: IntegratorControl | None, **changes) -> IntegratorControl:
    return replace(ctrl or IntegratorControl(), **changes)

"""Catalog of 1D confining potentials.

Every potential knows its value, slope, closed-form (or exact-interpolant)
primitive, total strength ``G = integral of U``, a characteristic width, and
how it splits into monotone pieces. Units are dimensionless with hbar = s = 1.

Sign conventions follow the usual gate-potential forms::

    delta        U = G * delta(x)
    sech         U = -U0 / cosh(x/d)                  G = -pi U0 d
    exponential  U =  U0 * exp(-|x|/d)                G = 2 U0 d
    lorentzian   U = -U0 / (1 + (x/d)^2)              G = -pi U0 d
    topgate      U = U0/2 * ln((x^2+(h2-h1)^2) / (x^2+(h2+h1)^2))   G = -2 pi U0 h1
    tabulated    monotone cubic through (x, U) samples, zero outside the table
"""

from __future__ import annotations

import math
import shlex
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, interpolate, optimize

from .errors import (
    EvalAtSingularity,
    InvalidParams,
    NonMonotoneResolutionFailure,
    QuadratureFailure,
)

__all__ = [
    "Kind",
    "Potential",
    "Primitive",
    "MonotoneDecomposition",
    "make_potential",
    "evaluate",
    "primitive",
    "monotone_decomposition",
    "parse_potential_spec",
    "load_table",
    "split_strength",
]


class Kind(str, Enum):
    DELTA = "delta"
    SECH = "sech"
    EXPONENTIAL = "exponential"
    LORENTZIAN = "lorentzian"
    TOPGATE = "topgate"
    TABULATED = "tabulated"


def split_strength(G: float) -> tuple[int, float]:
    """Return ``(n_G, delta_n_G)`` with ``G = pi (n_G + delta_n_G)``, delta in [0, 1)."""
    q = G / math.pi
    n = math.floor(q)
    frac = q - n
    if frac >= 1.0:  # rounding at the top of the interval
        n, frac = n + 1, 0.0
    return int(n), float(frac)


class Potential:
    """Base class; use :func:`make_potential` to construct.

    Instances are immutable after construction and safe to share between
    threads or processes.
    """

    kind: Kind

    def __init__(self, params: Mapping[str, float]):
        self.params = MappingProxyType(dict(params))
        self.strength_G = float(self._strength())
        self.n_G, self.delta_n_G = split_strength(self.strength_G)
        self.width_d = float(self._width())

    # -- kind-specific hooks -------------------------------------------------
    def _scalar(self, x: float) -> float:
        raise NotImplementedError

    def _array(self, x: np.ndarray) -> np.ndarray:
        return np.vectorize(self._scalar, otypes=[float])(x)

    def _deriv(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _antiderivative(self, x: np.ndarray) -> np.ndarray:
        """Some primitive F with F' = U (any constant)."""
        raise NotImplementedError

    def _limits(self) -> tuple[float, float]:
        """(F(-inf), F(+inf)) for the primitive above."""
        raise NotImplementedError

    def _strength(self) -> float:
        lo, hi = self._limits()
        return hi - lo

    def _inverse(self, u: np.ndarray, side: int) -> np.ndarray:
        """x on the given monotone piece where U(x) = u."""
        raise NotImplementedError

    # -- public surface ------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.sup_abs == 0.0 and not self.jumps

    @property
    def jumps(self) -> tuple[tuple[float, float], ...]:
        """Delta singularities as ``(position, strength)`` pairs."""
        return ()

    @property
    def sup_abs(self) -> float:
        """sup |U| over the smooth part."""
        raise NotImplementedError

    @property
    def center(self) -> float:
        """Position of the dominant extremum (matching point for shooting)."""
        return 0.0

    @property
    def core_extent(self) -> float:
        """Half-width beyond which |U| < 1e-3 sup|U| (0 for pure deltas)."""
        raise NotImplementedError

    @property
    def x_u_integrable(self) -> bool:
        """Whether x*U(x) is integrable at both infinities."""
        return True

    @property
    def kinks(self) -> tuple[float, ...]:
        """Points where U' is discontinuous (step-control restarts there)."""
        return ()

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior extrema separating the monotone pieces."""
        return (0.0,) if self.sup_abs > 0.0 else ()

    @property
    def length_scale(self) -> float:
        """Natural geometric scale used to seed searches."""
        return 1.0

    def value(self, x: float) -> float:
        """Scalar U(x); fast path used inside the ODE right-hand side."""
        return self._scalar(x)

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        for xj, _ in self.jumps:
            if np.any(x_arr == xj):
                raise EvalAtSingularity(f"{self.kind.value} potential is singular at x={xj}")
        out = self._array(x_arr)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, x):
        out = self._deriv(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def antiderivative(self, x):
        out = self._antiderivative(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    @property
    def limits(self) -> tuple[float, float]:
        return self._limits()

    def tail_remainder(self, x: float) -> float:
        """max(|F(+inf) - F(x)|, |F(-x) - F(-inf)|) for x >= 0."""
        lo, hi = self._limits()
        return max(abs(hi - self.antiderivative(x)), abs(self.antiderivative(-x) - lo))

    def tail_extent(self, tol: float) -> float:
        """Smallest x >= 0 (to bisection accuracy) with ``tail_remainder(x) < tol``."""
        if self.tail_remainder(0.0) < tol:
            return 0.0
        hi = self.length_scale
        while self.tail_remainder(hi) >= tol:
            hi *= 2.0
            if hi > 1e12:
                raise QuadratureFailure("potential tail does not decay")
        lo = hi / 2.0 if hi > self.length_scale else 0.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.tail_remainder(mid) < tol:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-9 * hi:
                break
        return hi

    def _width(self) -> float:
        G = self.strength_G
        if self.is_zero or (not self.jumps and self.sup_abs == 0.0):
            return 0.0
        if self.jumps and self.sup_abs == 0.0:
            return 0.0
        if G != 0.0:
            target = 0.01 * abs(G)

            def bad(W):
                return abs(self.antiderivative(W) - self.antiderivative(-W) - G) >= target

            hi = self.length_scale
            while bad(hi):
                hi *= 2.0
                if hi > 1e12:
                    raise QuadratureFailure("strength integral does not converge")
            lo = 0.0
            # scan down for the first crossing, then bisect
            grid = np.linspace(0.0, hi, 257)[1:]
            ok = [not bad(w) for w in grid]
            first = next(i for i, v in enumerate(ok) if v)
            lo = 0.0 if first == 0 else grid[first - 1]
            hi = grid[first]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if bad(mid):
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-12 * hi:
                    break
            return hi
        # G == 0 with nonzero U: second-moment radius of |U|
        num = _quad(lambda x: x * x * abs(self.value(x)), -np.inf, np.inf)
        den = _quad(lambda x: abs(self.value(x)), -np.inf, np.inf)
        return math.sqrt(num / den)

    def describe(self) -> dict:
        out = {"kind": self.kind.value}
        out.update({k: v for k, v in self.params.items() if np.ndim(v) == 0})
        return out

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.describe().items() if k != "kind")
        return f"{type(self).__name__}({args})"

    def __reduce__(self):
        return (make_potential, (self.kind, dict(self.params)))


def _quad(func, a, b, **kw) -> float:
    val, err, *rest = integrate.quad(func, a, b, limit=400, full_output=1, **kw)
    info = rest[0] if rest else None
    if len(rest) > 1 and abs(err) > 1e-6 * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature did not converge: {rest[1] if len(rest) > 1 else info}")
    return float(val)


class _Delta(Potential):
    kind = Kind.DELTA

    def __init__(self, params):
        self.G = float(params["G"])
        super().__init__(params)

    @property
    def jumps(self):
        return ((0.0, self.G),) if self.G != 0.0 else ()

    @property
    def sup_abs(self):
        return 0.0

    @property
    def core_extent(self):
        return 0.0

    @property
    def breakpoints(self):
        return (0.0,) if self.G != 0.0 else ()

    def _scalar(self, x):
        if x == 0.0 and self.G != 0.0:
            raise EvalAtSingularity("delta potential is singular at x=0")
        return 0.0

    def _array(self, x):
        return np.zeros_like(x)

    def _deriv(self, x):
        return np.zeros_like(x)

    def _antiderivative(self, x):
        return np.where(x > 0.0, self.G, 0.0) + 0.0 * x

    def _limits(self):
        return 0.0, self.G

    def _inverse(self, u, side):
        raise InvalidParams("delta potential has no smooth inverse")


class _Sech(Potential):
    kind = Kind.SECH

    def __init__(self, params):
        self.U0, self.d = float(params["U0"]), float(params["d"])
        super().__init__(params)

    @property
    def sup_abs(self):
        return abs(self.U0)

    @property
    def length_scale(self):
        return self.d

    @property
    def core_extent(self):
        return self.d * math.acosh(1e3) if self.U0 else 0.0

    def _scalar(self, x):
        t = abs(x) / self.d
        if t > 700.0:
            return 0.0
        return -self.U0 / math.cosh(t)

    def _array(self, x):
        return -self.U0 / np.cosh(np.minimum(np.abs(x) / self.d, 700.0))

    def _deriv(self, x):
        t = np.minimum(np.abs(x) / self.d, 700.0) * np.sign(x)
        return self.U0 / self.d * np.tanh(t) / np.cosh(t)

    def _antiderivative(self, x):
        # -U0 d * gd(x/d), gd(t) = 2 atan(tanh(t/2))
        return -self.U0 * self.d * 2.0 * np.arctan(np.tanh(0.5 * x / self.d))

    def _limits(self):
        half = self.U0 * self.d * math.pi / 2.0
        return half, -half

    def _inverse(self, u, side):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(u == 0.0, np.inf, -self.U0 / u)
        return side * self.d * np.arccosh(np.maximum(r, 1.0))


class _Exponential(Potential):
    kind = Kind.EXPONENTIAL

    def __init__(self, params):
        self.U0, self.d = float(params["U0"]), float(params["d"])
        super().__init__(params)

    @property
    def kinks(self):
        return (0.0,) if self.U0 != 0.0 else ()

    @property
    def sup_abs(self):
        return abs(self.U0)

    @property
    def length_scale(self):
        return self.d

    @property
    def core_extent(self):
        return self.d * math.log(1e3) if self.U0 else 0.0

    def _scalar(self, x):
        return self.U0 * math.exp(-abs(x) / self.d)

    def _array(self, x):
        return self.U0 * np.exp(-np.abs(x) / self.d)

    def _deriv(self, x):
        return -np.sign(x) * self.U0 / self.d * np.exp(-np.abs(x) / self.d)

    def _antiderivative(self, x):
        return self.U0 * self.d * np.sign(x) * (1.0 - np.exp(-np.abs(x) / self.d))

    def _limits(self):
        return -self.U0 * self.d, self.U0 * self.d

    def _inverse(self, u, side):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(u == 0.0, np.inf, self.U0 / u)
        return side * self.d * np.log(np.maximum(r, 1.0))

    def slope_on_piece(self, u, side):
        # one-sided slopes keep the cusp value at x = 0
        return -side * np.asarray(u, dtype=float) / self.d


class _Lorentzian(Potential):
    kind = Kind.LORENTZIAN

    def __init__(self, params):
        self.U0, self.d = float(params["U0"]), float(params["d"])
        super().__init__(params)

    @property
    def sup_abs(self):
        return abs(self.U0)

    @property
    def length_scale(self):
        return self.d

    @property
    def core_extent(self):
        return self.d * math.sqrt(999.0) if self.U0 else 0.0

    @property
    def x_u_integrable(self):
        return self.U0 == 0.0

    def _scalar(self, x):
        t = x / self.d
        return -self.U0 / (1.0 + t * t)

    def _array(self, x):
        return -self.U0 / (1.0 + (x / self.d) ** 2)

    def _deriv(self, x):
        t = x / self.d
        return 2.0 * self.U0 * t / (self.d * (1.0 + t * t) ** 2)

    def _antiderivative(self, x):
        return -self.U0 * self.d * np.arctan(x / self.d)

    def _limits(self):
        half = self.U0 * self.d * math.pi / 2.0
        return half, -half

    def _inverse(self, u, side):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(u == 0.0, np.inf, -self.U0 / u)
        return side * self.d * np.sqrt(np.maximum(r - 1.0, 0.0))


class _TopGate(Potential):
    kind = Kind.TOPGATE

    def __init__(self, params):
        self.U0 = float(params["U0"])
        self.h1, self.h2 = float(params["h1"]), float(params["h2"])
        self.a, self.b = self.h2 - self.h1, self.h2 + self.h1
        super().__init__(params)

    @property
    def sup_abs(self):
        return abs(self._scalar(0.0))

    @property
    def length_scale(self):
        return self.h2

    @property
    def core_extent(self):
        if self.U0 == 0.0:
            return 0.0
        target = 1e-3 * self.sup_abs
        # tail ~ 2 |U0| h1 h2 / x^2 gives a safe upper bracket
        hi = max(self.b, math.sqrt(2.0 * abs(self.U0) * self.h1 * self.h2 / target)) * 2.0
        return optimize.brentq(lambda x: abs(self._scalar(x)) - target, 0.0, hi)

    @property
    def x_u_integrable(self):
        return self.U0 == 0.0

    # log((x^2 + a^2) / (x^2 + b^2)) written with log1p: the ratio tends to 1
    def _scalar(self, x):
        x2 = x * x
        return 0.5 * self.U0 * math.log1p((self.a * self.a - self.b * self.b) / (x2 + self.b * self.b))

    def _array(self, x):
        x2 = x * x
        return 0.5 * self.U0 * np.log1p((self.a**2 - self.b**2) / (x2 + self.b**2))

    def _deriv(self, x):
        x2 = x * x
        return self.U0 * x * (self.b**2 - self.a**2) / ((x2 + self.a**2) * (x2 + self.b**2))

    def _antiderivative(self, x):
        a, b = self.a, self.b
        x2 = x * x
        with np.errstate(divide="ignore", invalid="ignore"):
            xlog = np.where(x == 0.0, 0.0, x * np.log1p((a * a - b * b) / (x2 + b * b)))
        return 0.5 * self.U0 * (xlog + 2 * a * np.arctan(x / a) - 2 * b * np.arctan(x / b))

    def _limits(self):
        half = 0.5 * self.U0 * math.pi * (self.a - self.b)
        return -half, half

    def _inverse(self, u, side):
        u = np.asarray(u, dtype=float)
        r = np.exp(2.0 * u / self.U0)
        with np.errstate(divide="ignore", invalid="ignore"):
            x2 = np.where(r >= 1.0, np.inf, (self.a**2 - r * self.b**2) / (r - 1.0))
        return side * np.sqrt(np.maximum(x2, 0.0))


class _Tabulated(Potential):
    kind = Kind.TABULATED

    def __init__(self, params):
        x = np.asarray(params["x"], dtype=float)
        u = np.asarray(params["U"], dtype=float)
        if x.ndim != 1 or x.shape != u.shape or x.size < 4:
            raise InvalidParams("table needs at least 4 matching (x, U) samples")
        if np.any(np.diff(x) <= 0.0):
            raise InvalidParams("table abscissae must be strictly increasing")
        if not np.all(np.isfinite(u)):
            raise InvalidParams("table values must be finite")
        peak = float(np.max(np.abs(u)))
        edge_tol = float(params.get("edge_tol", 1e-3)) * peak
        if peak > 0.0 and max(abs(u[0]), abs(u[-1])) > edge_tol:
            raise InvalidParams("tabulated potential must decay at both table edges")
        self.x_tab, self.u_tab = x, u
        self._pchip = interpolate.PchipInterpolator(x, u, extrapolate=False)
        self._dpchip = self._pchip.derivative()
        self._F = self._pchip.antiderivative()
        self._peak = peak
        self._max_extrema = int(params.get("max_extrema", 32))
        super().__init__(params)

    @property
    def sup_abs(self):
        return self._peak

    @property
    def length_scale(self):
        return 0.25 * (self.x_tab[-1] - self.x_tab[0])

    @property
    def core_extent(self):
        return float(max(abs(self.x_tab[0]), abs(self.x_tab[-1])))

    @property
    def center(self):
        return float(self.x_tab[int(np.argmax(np.abs(self.u_tab)))])

    @property
    def breakpoints(self):
        du = np.sign(np.diff(self.u_tab))
        nz = np.flatnonzero(du)
        if nz.size == 0:
            return ()
        flips = [i for i, j in zip(nz[:-1], nz[1:]) if du[i] != du[j]]
        pts = tuple(float(self.x_tab[j]) for j in (np.asarray(flips) + 1)) if flips else ()
        # a flip between nonadjacent slopes sits at the first node after the plateau
        if len(pts) > self._max_extrema:
            raise NonMonotoneResolutionFailure(
                f"table has {len(pts)} extrema (limit {self._max_extrema}); smooth it first"
            )
        return pts

    def _scalar(self, x):
        if x <= self.x_tab[0] or x >= self.x_tab[-1]:
            return 0.0
        return float(self._pchip(x))

    def _array(self, x):
        out = self._pchip(x)
        return np.nan_to_num(out, nan=0.0)

    def _deriv(self, x):
        return np.nan_to_num(self._dpchip(x), nan=0.0)

    def _antiderivative(self, x):
        return self._F(np.clip(x, self.x_tab[0], self.x_tab[-1]))

    def _limits(self):
        return 0.0, float(self._F(self.x_tab[-1]))

    def _inverse(self, u, side):
        raise NotImplementedError  # handled piecewise by MonotoneDecomposition

    def describe(self):
        out = {"kind": self.kind.value, "n_samples": int(self.x_tab.size)}
        if "file" in self.params:
            out["file"] = self.params["file"]
        return out

    def __repr__(self):
        return f"_Tabulated(n_samples={self.x_tab.size}, G={self.strength_G:.6g})"


_KINDS: dict[Kind, tuple[type[Potential], tuple[str, ...]]] = {
    Kind.DELTA: (_Delta, ("G",)),
    Kind.SECH: (_Sech, ("U0", "d")),
    Kind.EXPONENTIAL: (_Exponential, ("U0", "d")),
    Kind.LORENTZIAN: (_Lorentzian, ("U0", "d")),
    Kind.TOPGATE: (_TopGate, ("U0", "h1", "h2")),
    Kind.TABULATED: (_Tabulated, ("x", "U")),
}


def make_potential(kind: Kind | str, params: Mapping | None = None, **kwargs) -> Potential:
    """Build a catalog potential.

    Parameters
    ----------
    kind : Kind or str
        One of ``delta, sech, exponential, lorentzian, topgate, tabulated``.
    params : mapping, optional
        Kind-specific parameters; keyword arguments are merged on top.
        Tabulated potentials accept either ``x``/``U`` arrays or ``file``.

    Raises
    ------
    InvalidParams
        Unknown kind, missing or non-finite parameters, nonpositive widths,
        ``h1 >= h2``, or a malformed table.
    """
    try:
        kind = Kind(str(getattr(kind, "value", kind)).lower())
    except ValueError:
        raise InvalidParams(f"unknown potential kind {kind!r}") from None
    merged = dict(params or {})
    merged.update(kwargs)
    cls, required = _KINDS[kind]
    if kind is Kind.TABULATED and "file" in merged and "x" not in merged:
        x, u = load_table(merged["file"])
        merged.update(x=x, U=u)
    missing = [k for k in required if k not in merged]
    if missing:
        raise InvalidParams(f"{kind.value} potential needs {', '.join(missing)}")
    if kind is not Kind.TABULATED:
        for name in required:
            try:
                merged[name] = float(merged[name])
            except (TypeError, ValueError):
                raise InvalidParams(f"parameter {name} must be a real number") from None
            if not math.isfinite(merged[name]):
                raise InvalidParams(f"parameter {name} must be finite")
        if "d" in required and merged["d"] <= 0.0:
            raise InvalidParams("width d must be positive")
        if kind is Kind.TOPGATE and not 0.0 < merged["h1"] < merged["h2"]:
            raise InvalidParams("top-gate geometry needs 0 < h1 < h2")
        merged = {k: merged[k] for k in required}
    return cls(merged)


def evaluate(p: Potential, x):
    """U(x); raises :class:`EvalAtSingularity` on a delta location."""
    return p(x)


@dataclass(frozen=True)
class Primitive:
    """``f(x) = integral of U from x0 to x`` with its limits at infinity.

    At a delta location ``f`` is left-continuous; it jumps by the delta
    strength just to the right.
    """

    potential: Potential
    x0: float
    lower: float
    upper: float
    x_u_integrable: bool

    def __call__(self, x):
        p = self.potential
        return p.antiderivative(x) - p.antiderivative(self.x0)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)


def primitive(p: Potential, x0: float = 0.0) -> Primitive:
    lo, hi = p.limits
    base = p.antiderivative(x0)
    return Primitive(p, float(x0), lo - base, hi - base, p.x_u_integrable)


def quadrature_strength(p: Potential, X: float | None = None, tol: float = 1e-10) -> float:
    """Independent estimate of G by adaptive quadrature of U.

    Integrates over (-X, X) and adds the 1/x^2 tail estimate from the value
    at X, which handles the slow algebraic decay of the Lorentzian and
    top-gate shapes. Deltas contribute their strength symbolically.
    """
    X = X if X is not None else 200.0 * p.length_scale
    pts = [xj for xj, _ in p.jumps if -X < xj < X]
    smooth = 0.0
    edges = [-X, *sorted(pts), X]
    for a, b in zip(edges[:-1], edges[1:]):
        smooth += _quad(p.value, a, b, epsabs=tol, epsrel=tol)
    # assume U ~ c/x^2 beyond X: each side adds X*U(X)
    tail = X * (p.value(X) + p.value(-X)) if p.kind in (Kind.LORENTZIAN, Kind.TOPGATE) else 0.0
    return smooth + tail + sum(g for _, g in p.jumps)


@dataclass(frozen=True)
class MonotoneDecomposition:
    """Split of the real line into pieces where U is strictly monotone.

    Piece ``j`` (0-based) spans ``(edges[j], edges[j+1])`` with the outer
    edges at -inf and +inf. ``slope(j, u)`` is ``G_j(u) = U'(x_j(u))`` where
    ``x_j`` inverts U on that piece.
    """

    potential: Potential
    breakpoints: tuple[float, ...]
    signs: tuple[int, ...]

    @property
    def n_pieces(self) -> int:
        return len(self.breakpoints) + 1

    @property
    def edges(self) -> tuple[float, ...]:
        return (-math.inf, *self.breakpoints, math.inf)

    def interval(self, j: int) -> tuple[float, float]:
        e = self.edges
        return e[j], e[j + 1]

    def _u_at(self, x: float) -> float:
        if math.isinf(x):
            return 0.0
        p = self.potential
        if any(x == xj for xj, _ in p.jumps):
            return 0.0
        return p.value(x)

    def value_range(self, j: int) -> tuple[float, float]:
        a, b = self.interval(j)
        ua, ub = self._u_at(a), self._u_at(b)
        return min(ua, ub), max(ua, ub)

    def inverse(self, j: int, u):
        p = self.potential
        a, b = self.interval(j)
        u = np.asarray(u, dtype=float)
        if self.signs[j] == 0:
            raise InvalidParams("U is constant on this piece; no inverse")
        if p.kind is Kind.TABULATED:
            lo = max(a, p.x_tab[0])
            hi = min(b, p.x_tab[-1])

            def one(v):
                if v == 0.0:
                    return a if self.signs[j] * (0.0 - p.value(lo)) <= 0 and math.isinf(a) else b
                return optimize.brentq(lambda x: p.value(x) - v, lo, hi, xtol=1e-14)

            out = np.vectorize(one, otypes=[float])(u)
            return float(out) if out.ndim == 0 else out
        side = -1 if j == 0 else 1
        out = p._inverse(u, side)
        return float(out) if np.ndim(out) == 0 else out

    def slope(self, j: int, u):
        """G_j(u), vectorized; zero at the asymptotic value u = 0 on outer pieces."""
        p = self.potential
        u = np.asarray(u, dtype=float)
        if self.signs[j] == 0:
            out = np.zeros_like(u)
        elif hasattr(p, "slope_on_piece"):
            out = p.slope_on_piece(u, -1 if j == 0 else 1)
        else:
            x = np.asarray(self.inverse(j, u), dtype=float)
            with np.errstate(invalid="ignore"):
                out = np.where(np.isinf(x), 0.0, p.derivative(np.where(np.isinf(x), 0.0, x)))
        return float(out) if out.ndim == 0 else out

    def slope_function(self, j: int) -> Callable:
        return lambda u: self.slope(j, u)


def monotone_decomposition(p: Potential) -> MonotoneDecomposition:
    bps = p.breakpoints
    edges = (-math.inf, *bps, math.inf)
    signs = []
    for a, b in zip(edges[:-1], edges[1:]):
        if p.sup_abs == 0.0:
            signs.append(0)
            continue
        lo = a if math.isfinite(a) else (b - 1.0 if math.isfinite(b) else -1.0)
        hi = b if math.isfinite(b) else (a + 1.0 if math.isfinite(a) else 1.0)
        if math.isinf(a):
            lo = hi - max(1.0, p.length_scale)
        if math.isinf(b):
            hi = lo + max(1.0, p.length_scale)
        xm = 0.5 * (lo + hi)
        s = np.sign(p.derivative(xm))
        signs.append(int(s))
    return MonotoneDecomposition(p, tuple(bps), tuple(signs))


def load_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``x U`` text table; ``#`` starts a comment."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InvalidParams(f"cannot read potential table {path}: {exc}") from None
    if data.shape[1] != 2:
        raise InvalidParams("potential table must have exactly two columns")
    return data[:, 0].copy(), data[:, 1].copy()


_SPEC_KEYS = {"kind", "U0", "d", "G", "h1", "h2", "file", "edge_tol"}


def parse_potential_spec(text: str) -> Potential:
    """Parse ``kind=<name> U0=<v> d=<v> G=<v> h1=<v> h2=<v> file=<path>``."""
    fields = {}
    for token in shlex.split(text):
        if "=" not in token:
            raise InvalidParams(f"expected key=value, got {token!r}")
        key, val = token.split("=", 1)
        if key not in _SPEC_KEYS:
            raise InvalidParams(f"unknown potential field {key!r}")
        fields[key] = val
    if "kind" not in fields:
        raise InvalidParams("potential spec needs kind=<name>")
    kind = fields.pop("kind")
    return make_potential(kind, fields)

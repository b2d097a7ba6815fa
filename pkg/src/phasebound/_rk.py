"""Scalar Dormand-Prince 5(4) integrator with cubic Hermite dense output.

The phase equation is a single real ODE, so a plain-Python stepper on floats
is an order of magnitude faster than array-based general solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import StiffnessFailure

# Dormand-Prince tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


@dataclass
class Segment:
    """Accepted step nodes of one continuous integration, x increasing."""

    x: np.ndarray
    y: np.ndarray
    f: np.ndarray

    def __call__(self, xq):
        return hermite(self.x, self.y, self.f, xq)


def dopri5(
    rhs: Callable[[float, float], float],
    x0: float,
    y0: float,
    x1: float,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_step: float = math.inf,
    first_step: float | None = None,
    max_steps: int = 2_000_000,
    record: bool = True,
):
    """Integrate ``y' = rhs(x, y)`` from ``x0`` to ``x1`` (either direction).

    Returns ``(y1, segment)``; ``segment`` is None when ``record`` is False.
    """
    span = x1 - x0
    if span == 0.0:
        seg = Segment(np.array([x0]), np.array([y0]), np.array([rhs(x0, y0)])) if record else None
        return y0, seg
    direction = 1.0 if span > 0 else -1.0
    max_step = abs(max_step)
    x, y = x0, y0
    k1 = rhs(x, y)
    if first_step is None:
        scale = atol + rtol * abs(y)
        h = 0.01 * scale / abs(k1) if k1 != 0.0 else 1e-3
        h = min(max(h, 1e-6 * abs(span), 1e-12), abs(span), max_step)
    else:
        h = min(abs(first_step), abs(span), max_step)

    xs, ys, fs = ([x], [y], [k1]) if record else (None, None, None)
    n_acc = 0
    n_tries = 0
    while direction * (x1 - x) > 0.0:
        n_tries += 1
        if n_tries > max_steps:
            raise StiffnessFailure(f"step budget exhausted at x={x:.6g}")
        remaining = abs(x1 - x)
        last = h >= remaining
        if last:
            h = remaining
        hs = direction * h
        k2 = rhs(x + _C2 * hs, y + hs * (_A21 * k1))
        k3 = rhs(x + _C3 * hs, y + hs * (_A31 * k1 + _A32 * k2))
        k4 = rhs(x + _C4 * hs, y + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(x + _C5 * hs, y + hs * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = rhs(x + hs, y + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        yn = y + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        xn = x1 if last else x + hs
        k7 = rhs(xn, yn)
        err = hs * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * max(abs(y), abs(yn))
        e = abs(err) / scale
        if e <= 1.0:
            x, y, k1 = xn, yn, k7
            n_acc += 1
            if record:
                xs.append(x)
                ys.append(y)
                fs.append(k7)
            fac = 5.0 if e == 0.0 else min(5.0, 0.9 * e ** -0.2)
            h = min(h * fac, max_step)
        else:
            h *= max(0.2, 0.9 * e ** -0.2)
            if h < 1e-14 * max(1.0, abs(x)):
                raise StiffnessFailure(f"step size underflow at x={x:.6g}")
    if not math.isfinite(y):
        raise StiffnessFailure("non-finite solution")
    if not record:
        return y, None
    xs_a, ys_a, fs_a = np.asarray(xs), np.asarray(ys), np.asarray(fs)
    if direction < 0:
        xs_a, ys_a, fs_a = xs_a[::-1], ys_a[::-1], fs_a[::-1]
    return y, Segment(xs_a.copy(), ys_a.copy(), fs_a.copy())


def hermite(x: np.ndarray, y: np.ndarray, f: np.ndarray, xq):
    """Cubic Hermite interpolation through nodes with known slopes."""
    xq = np.asarray(xq, dtype=float)
    if x.size == 1:
        return np.full_like(xq, y[0])
    i = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    h = x[i + 1] - x[i]
    t = (xq - x[i]) / h
    t2, t3 = t * t, t * t * t
    return (
        (2 * t3 - 3 * t2 + 1) * y[i]
        + (t3 - 2 * t2 + t) * h * f[i]
        + (-2 * t3 + 3 * t2) * y[i + 1]
        + (t3 - t2) * h * f[i + 1]
    )


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def cumulative_quad(seg: Segment, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Running integral of ``g(y(x))`` over the segment nodes, starting at 0.

    Each node interval uses 6-point Gauss-Legendre on the dense output.
    """
    if seg.x.size < 2:
        return np.zeros(seg.x.size)
    a, b = seg.x[:-1], seg.x[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    xq = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = g(seg(xq.ravel())).reshape(xq.shape)
    pieces = half * (vals @ _GL_WEIGHTS)
    return np.concatenate([[0.0], np.cumsum(pieces)])

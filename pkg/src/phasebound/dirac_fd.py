"""Finite-difference Dirac diagonalization, used as an independent oracle.

The reduced 1D operator ``H = sigma_x p_x + sigma_y p_y + U`` becomes real
symmetric after rotating the second component by -i::

    [ U      -(d/dx + p_y) ] [psi_1]       [psi_1]
    [ d/dx - p_y      U    ] [phi  ]  = E  [phi  ]

On a staggered grid (psi_1 on integer sites, phi on half sites) the
derivative is a compact central difference, so the discretization has no
spurious doubled species. The box is closed by dropping the half site
beyond the left edge.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .errors import SolverFailure
from .potentials import Potential


def dirac_matrix(pot: Potential, p_y: float, L: float, n: int) -> tuple[sparse.csr_matrix, np.ndarray]:
    """Sparse real symmetric Hamiltonian of size 2n on [-L, L]."""
    x = np.linspace(-L, L, n)
    h = x[1] - x[0]
    xh = x + 0.5 * h
    u1 = _sample(pot, x, h)
    u2 = _sample(pot, xh, h)
    # (B phi)_i = -[(phi_i - phi_{i-1})/h + p_y (phi_i + phi_{i-1})/2]
    main = -(1.0 / h + 0.5 * p_y) * np.ones(n)
    sub = -(-1.0 / h + 0.5 * p_y) * np.ones(n - 1)
    B = sparse.diags([main, sub], [0, -1], format="csr")
    H = sparse.bmat([[sparse.diags(u1), B], [B.T, sparse.diags(u2)]], format="csc")
    return H, x


def _sample(pot: Potential, x: np.ndarray, h: float) -> np.ndarray:
    u = np.asarray(pot(np.where(np.isin(x, [j for j, _ in pot.jumps]), x + 1e-300, x)), dtype=float)
    for xj, g in pot.jumps:
        i = int(np.argmin(np.abs(x - xj)))
        u[i] += g / h
    return u


def gap_eigenvalues(
    pot: Potential, p_y: float, L: float = 60.0, n: int = 2**14, edge_weight: float = 1e-3
) -> np.ndarray:
    """Eigenvalues inside (-p_y, p_y) whose states are localized in the box.

    A state counts as localized when the probability within 5% of either
    box edge is below ``edge_weight``.
    """
    H, x = dirac_matrix(pot, p_y, L, n)
    want = 8
    while True:
        want = min(want, 2 * n - 2)
        try:
            vals, vecs = eigsh(H, k=want, sigma=0.0, which="LM")
        except Exception as exc:  # ARPACK reports failures through several types
            raise SolverFailure(f"shift-invert eigensolve failed: {exc}") from exc
        if np.max(np.abs(vals)) >= p_y or want >= 2 * n - 2:
            break
        want *= 2
    inside = np.abs(vals) < p_y
    rim = np.abs(x) > 0.95 * L
    keep = []
    for lam, v in zip(vals[inside], vecs[:, inside].T):
        w = v[:n] ** 2 + v[n:] ** 2
        if w[rim].sum() / w.sum() < edge_weight:
            keep.append(lam)
    return np.sort(np.array(keep))


def gap_eigenvalues_with_error(pot: Potential, p_y: float, L: float = 60.0, n: int = 2**14, **kw):
    """Eigenvalues on n and n/2 points with a Richardson error estimate.

    The scheme is second order, so ``|E_n - E_{n/2}| / 3`` estimates the
    error of the fine-grid values. Levels are paired by order; a count
    mismatch between the grids is reported as an infinite error.
    """
    fine = gap_eigenvalues(pot, p_y, L, n, **kw)
    coarse = gap_eigenvalues(pot, p_y, L, n // 2, **kw)
    if fine.size != coarse.size:
        return fine, np.full(fine.size, np.inf)
    return fine, np.abs(fine - coarse) / 3.0

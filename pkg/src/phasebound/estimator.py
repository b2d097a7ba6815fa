"""scikit-learn style wrappers.

``fit`` takes a potential (object or spec string) and solves for its
spectrum at the estimator's ``p_y``; ``predict`` maps energies to staircase
branches. This lets the solvers sit in parameter searches and get the usual
``get_params`` / ``set_params`` / ``clone`` behaviour.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_scalar

from .dirac_fd import gap_eigenvalues_with_error
from .phase_ode import IntegratorControl
from .potentials import Potential, parse_potential_spec
from .spectrum import find_eigenvalues, terminal_at


def _as_potential(potential) -> Potential:
    if isinstance(potential, Potential):
        return potential
    if isinstance(potential, str):
        return parse_potential_spec(potential)
    raise TypeError(f"expected a Potential or a spec string, got {type(potential).__name__}")


class LevinsonSpectrum(BaseEstimator):
    """Bound states from the phase-function staircase.

    Parameters
    ----------
    p_y : float
        Transverse momentum.
    tol_phase, classify_tol, eps_edge : float
        Integrator controls, see :class:`IntegratorControl`.
    refine_tol : float or None
        Eigenvalue bracket width (None: ``1e-8 p_y``).
    polish : bool
        Finish eigenvalues with Brent's method on the separatrix mismatch.

    Attributes
    ----------
    spectrum_ : SpectrumReport
    eigenvalues_ : ndarray
    n_levels_ : int
    """

    def __init__(self, p_y=0.1, tol_phase=1e-9, classify_tol=1e-3, eps_edge=1e-6, refine_tol=None, polish=False):
        self.p_y = p_y
        self.tol_phase = tol_phase
        self.classify_tol = classify_tol
        self.eps_edge = eps_edge
        self.refine_tol = refine_tol
        self.polish = polish

    def _control(self) -> IntegratorControl:
        check_scalar(self.p_y, "p_y", numbers.Real, min_val=0.0, include_boundaries="neither")
        check_scalar(self.tol_phase, "tol_phase", numbers.Real, min_val=0.0, include_boundaries="neither")
        check_scalar(self.classify_tol, "classify_tol", numbers.Real, min_val=0.0, include_boundaries="neither")
        check_scalar(self.eps_edge, "eps_edge", numbers.Real, min_val=0.0, max_val=1.0, include_boundaries="neither")
        return IntegratorControl(
            tol_phase=self.tol_phase,
            classify_tol=self.classify_tol,
            eps_edge=self.eps_edge,
            refine_tol=self.refine_tol,
        )

    def fit(self, potential, y=None):
        ctrl = self._control()
        self.potential_ = _as_potential(potential)
        self.control_ = ctrl
        self.spectrum_ = find_eigenvalues(self.potential_, float(self.p_y), ctrl=ctrl, polish=self.polish)
        self.eigenvalues_ = self.spectrum_.energies
        self.n_levels_ = self.spectrum_.N_d
        return self

    def predict(self, E):
        """Staircase branch (Delta Omega_l / 2 pi) at each energy.

        Energies are clipped to the gap edges used during ``fit``.
        """
        check_is_fitted(self, "spectrum_")
        E = check_array(np.atleast_1d(np.asarray(E, dtype=float)), ensure_2d=False)
        edge = self.p_y * (1.0 - self.control_.eps_edge)
        out = np.empty(E.shape, dtype=int)
        for i, e in enumerate(np.clip(E, -edge, edge)):
            out[i] = terminal_at(self.potential_, float(self.p_y), float(e), self.control_).fate
        return out


class DiracFiniteDifference(BaseEstimator):
    """Gap eigenvalues of the staggered-grid Dirac matrix.

    Attributes
    ----------
    eigenvalues_ : ndarray
    errors_ : ndarray
        Richardson estimates from halving the grid.
    """

    def __init__(self, p_y=0.1, L=60.0, n=2**14):
        self.p_y = p_y
        self.L = L
        self.n = n

    def fit(self, potential, y=None):
        check_scalar(self.p_y, "p_y", numbers.Real, min_val=0.0, include_boundaries="neither")
        check_scalar(self.L, "L", numbers.Real, min_val=0.0, include_boundaries="neither")
        check_scalar(self.n, "n", numbers.Integral, min_val=16)
        self.potential_ = _as_potential(potential)
        self.eigenvalues_, self.errors_ = gap_eigenvalues_with_error(
            self.potential_, float(self.p_y), float(self.L), int(self.n)
        )
        return self

    def predict(self, E):
        """Number of oracle eigenvalues strictly below each energy."""
        check_is_fitted(self, "eigenvalues_")
        E = check_array(np.atleast_1d(np.asarray(E, dtype=float)), ensure_2d=False)
        return np.searchsorted(self.eigenvalues_, E, side="left")

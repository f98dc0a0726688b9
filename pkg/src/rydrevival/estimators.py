"""scikit-learn style wrappers around the functional core.

The estimators hold configuration in ``__init__`` (so ``get_params`` /
``set_params`` and ``sklearn.base.clone`` work) and build the spectrum,
packet and time scales in ``fit``.  ``transform`` maps a column of times to
derived quantities.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .packet import PhaseModel, autocorrelation, build_packet
from .spectrum import HydrogenSpectrum, QuantumDefectSpectrum, StarkSpectrum
from .squeezed import FitTarget, evolve_uncertainty, fit, project


def _times_from(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of times, got shape {X.shape}")
        X = X[:, 0]
    return X


class AutocorrelationEstimator(BaseEstimator, TransformerMixin):
    """|A(t)|^2 of a Gaussian packet; ``transform`` returns an (n, 1) column.

    Parameters
    ----------
    model : {"hydrogen", "quantum_defect", "stark"}
    nbar : float
        Packet center.
    sigma : float
        Width of |c_n|^2.
    phase : {"exact", "truncated"}
    order : int
        Truncation order when ``phase="truncated"``.
    field : float
        Stark field (atomic units), used only by the Stark model.
    defect : float
        l = 1 quantum defect, used only by the quantum-defect model.
    """

    def __init__(self, model="hydrogen", nbar=45, sigma=2.5, window=None, phase="exact",
                 order=3, field=0.0, defect=0.0, sigma_k=None):
        self.model = model
        self.nbar = nbar
        self.sigma = sigma
        self.window = window
        self.phase = phase
        self.order = order
        self.field = field
        self.defect = defect
        self.sigma_k = sigma_k

    def _spectrum(self):
        if self.model == "hydrogen":
            return HydrogenSpectrum()
        if self.model == "quantum_defect":
            return QuantumDefectSpectrum({1: self.defect})
        if self.model == "stark":
            return StarkSpectrum(self.field)
        raise ValueError(f"unknown model {self.model!r}")

    def fit(self, X=None, y=None):
        self.spectrum_ = self._spectrum()
        self.scales_ = self.spectrum_.time_scales(self.nbar)
        self.packet_ = build_packet(self.spectrum_, self.nbar, self.sigma, self.window,
                                    sigma_k=self.sigma_k)
        self.phase_model_ = (PhaseModel.exact() if self.phase == "exact"
                             else PhaseModel.truncated(self.scales_, self.order))
        return self

    def transform(self, X):
        check_is_fitted(self, "packet_")
        trace = autocorrelation(self.spectrum_, self.packet_, self.phase_model_, _times_from(X))
        return trace.intensity[:, None]

    def predict(self, X):
        return self.transform(X)[:, 0]


class SqueezedStateEstimator(BaseEstimator, TransformerMixin):
    """Fitted radial squeezed state; ``transform`` gives <r>, Dr, <p_r>, Dp_r, Dr*Dp_r per time."""

    def __init__(self, nbar=45, l=1, r_out=None, orbit="radial", half_width=15):
        self.nbar = nbar
        self.l = l
        self.r_out = r_out
        self.orbit = orbit
        self.half_width = half_width

    def fit(self, X=None, y=None):
        self.target_ = FitTarget(self.nbar, self.l, self.r_out, self.orbit)
        self.params_ = fit(self.target_)
        self.packet_ = project(self.params_, l=self.l, nbar=self.nbar, half_width=self.half_width)
        return self

    def transform(self, X):
        check_is_fitted(self, "packet_")
        s = evolve_uncertainty(self.packet_, _times_from(X), l=self.l)
        return np.column_stack([s.r_mean, s.delta_r, s.p_mean, s.delta_p, s.product])

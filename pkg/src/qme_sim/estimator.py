"""scikit-learn style front end for the engine.

``MeasurementEngine`` maps rows of ``(p, kBT)`` to the per-cycle ledger, so
the engine drops into pipelines, ``ColumnTransformer`` and parameter
searches like any other stateless transformer.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import constants
from .cycle import CycleConfig, normalize_backend, run_cycle
from .errors import QmeError

LEDGER_COLUMNS = ("heat_p", "work_ext", "heat_cold", "dS_a", "dS_b", "efficiency", "power_ext", "q_used")


def check_strength_grid(X) -> np.ndarray:
    """Validate an ``(n, 2)`` array of ``(p, kBT)`` rows."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns (p, kBT), got {X.shape[1]}")
    if np.any((X[:, 0] < 0) | (X[:, 0] > 1)):
        raise ValueError("p must lie in [0, 1]")
    if np.any(X[:, 1] <= 0):
        raise ValueError("kBT must be positive")
    return X


class MeasurementEngine(TransformerMixin, BaseEstimator):
    """Three-stroke measurement-powered engine as a transformer.

    Parameters
    ----------
    nu : float
        Working-substance frequency in kHz.
    tau_cycle : float
        Cycle duration in seconds, used for the power column.
    backend : {"ideal", "pulse"}
        Kraus-map evaluation or two-spin pulse simulation.
    noise : NoiseModel or None
        Relaxation model for the pulse backend.

    ``transform`` returns one row per input with the columns listed in
    ``LEDGER_COLUMNS``. Points that fail produce a row of NaN.
    """

    def __init__(self, nu=constants.NU_KHZ, tau_cycle=constants.TAU_CYCLE_S, backend="ideal", noise=None):
        self.nu = nu
        self.tau_cycle = tau_cycle
        self.backend = backend
        self.noise = noise

    def fit(self, X, y=None):
        X = check_strength_grid(X)
        normalize_backend(self.backend)
        if not self.nu > 0 or not self.tau_cycle > 0:
            raise ValueError("nu and tau_cycle must be positive")
        self.n_features_in_ = X.shape[1]
        self.backend_ = normalize_backend(self.backend)
        return self

    def _row(self, p, kbt):
        try:
            cfg = CycleConfig(p=p, kBT=kbt, nu=self.nu, tau_cycle=self.tau_cycle, backend=self.backend_, noise=self.noise)
            r = run_cycle(cfg)
        except QmeError:
            return [np.nan] * len(LEDGER_COLUMNS)
        return [getattr(r, c) for c in LEDGER_COLUMNS]

    def transform(self, X):
        check_is_fitted(self, "backend_")
        X = check_strength_grid(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("feature count differs from fit")
        return np.array([self._row(p, kbt) for p, kbt in X], dtype=float)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(LEDGER_COLUMNS, dtype=object)

    def score(self, X, y=None):
        """Mean efficiency over the engine-regime rows of ``X``."""
        eta = self.transform(X)[:, LEDGER_COLUMNS.index("efficiency")]
        eta = eta[np.isfinite(eta)]
        return float(eta.mean()) if eta.size else float("nan")

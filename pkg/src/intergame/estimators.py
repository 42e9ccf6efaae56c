"""Estimator-style wrappers so the analysis layer composes with the wider
scikit-learn ecosystem (get_params/set_params, clone, pipelines).

These wrap the same numerics as the functional API:

  EpsilonTraceTransformer  trajectory -> per-tick parameter estimates
  CellPartitioner          estimate series -> hysteresis cell labels
  CorrelationIntegralMiner basis sample matrix -> vanishing relations
  RecursionRegressor       (omega_prev, v, phibar) -> omega_next, scored by
                           the verbalizability of the fit
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .engine import Trajectory
from .epsilon import CellComplex, EpsilonTrace, detect_cell_transitions, epsilon_trace
from .errors import DimensionMismatch, UnderDetermined


class EpsilonTraceTransformer(BaseEstimator, TransformerMixin):
    """Invert a declared representation at every tick of a trajectory.

    transform returns an (n_ticks, d_eps) array with NaN rows on warm-up
    ticks.  The transformer is stateless; fit only validates parameters.
    """

    def __init__(self, representation=None, player=0):
        self.representation = representation
        self.player = player

    def fit(self, X=None, y=None):
        if self.representation is None:
            raise DimensionMismatch("a representation must be declared")
        self.n_features_in_ = self.representation.d_eps
        return self

    def transform(self, X: Trajectory) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        if not isinstance(X, Trajectory):
            raise DimensionMismatch("EpsilonTraceTransformer consumes Trajectory objects")
        return epsilon_trace(X, self.representation, self.player).values


class CellPartitioner(BaseEstimator):
    """Hysteresis cell labelling of a parameter-estimate series.

    predict assigns each sample the flat index of the occupied cell under
    the same chattering-suppressed automaton the engine uses; fit records
    the detected change points as boundaries_.
    """

    def __init__(self, lo=(0.0,), hi=(1.0,), counts=(10,), margin=0.05):
        self.lo = lo
        self.hi = hi
        self.counts = counts
        self.margin = margin

    def _complex(self) -> CellComplex:
        return CellComplex(
            lo=np.asarray(self.lo, dtype=float),
            hi=np.asarray(self.hi, dtype=float),
            counts=tuple(int(c) for c in self.counts),
            margin=self.margin,
        )

    def _partition(self, X):
        X = check_array(X, ensure_2d=True)
        n = X.shape[0]
        trace = EpsilonTrace(
            values=X, residual=np.zeros(n), valid=np.ones(n, dtype=bool), dt=1.0
        )
        return detect_cell_transitions(trace, self._complex()), X

    def fit(self, X, y=None):
        partition, X = self._partition(X)
        self.n_features_in_ = X.shape[1]
        self.boundaries_ = partition.ticks[1:].copy()
        self.cells_ = list(partition.cells)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "boundaries_")
        partition, X = self._partition(X)
        grid = self._complex()
        labels = np.empty(X.shape[0], dtype=int)
        starts = list(partition.ticks) + [X.shape[0]]
        for k in range(partition.n_intervals):
            labels[starts[k] : starts[k + 1]] = grid.flat_index(partition.cells[k])
        return labels

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).predict(X)


class CorrelationIntegralMiner(BaseEstimator, TransformerMixin):
    """Null-space relation mining on a basis sample matrix.

    fit finds unit-norm directions c with RMS(X @ c) within tolerance,
    ordered best first (components_, residuals_); transform projects samples
    onto the found relations, which should be numerically zero series.
    """

    def __init__(self, tolerance=1e-6):
        self.tolerance = tolerance

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=True)
        n, p = X.shape
        if n < p:
            raise UnderDetermined(f"{n} samples cannot determine relations over {p} basis functions")
        _, sing, vt = np.linalg.svd(X, full_matrices=True)
        keep = []
        for k in range(p):
            rms = float(sing[k] / np.sqrt(n)) if k < sing.size else 0.0
            if rms <= self.tolerance:
                vec = vt[k].copy()
                nz = np.flatnonzero(np.abs(vec) > 1e-12)
                if nz.size and vec[nz[0]] < 0:
                    vec = -vec
                keep.append((rms, vec))
        keep.sort(key=lambda t: t[0])
        self.n_features_in_ = p
        self.components_ = (
            np.stack([v for _, v in keep]) if keep else np.zeros((0, p))
        )
        self.residuals_ = np.asarray([r for r, _ in keep])
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "components_")
        X = check_array(X, ensure_2d=True)
        return X @ self.components_.T


class RecursionRegressor(BaseEstimator, RegressorMixin):
    """Affine fit of the dialogue recursion in regressor form.

    X rows are [omega_prev, v, phibar] per step, y rows the next omega.
    score returns the verbalizability score (1 - normalized RMSE, clamped
    to [0, 1]) rather than R^2.
    """

    def __init__(self, min_steps=3):
        self.min_steps = min_steps

    def fit(self, X, y):
        X = check_array(X, ensure_2d=True)
        y = check_array(y, ensure_2d=False)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        required = max(self.min_steps, X.shape[1] + 1)
        if X.shape[0] < required:
            raise UnderDetermined(f"recursion fit needs at least {required} steps")
        Xa = np.hstack([X, np.ones((X.shape[0], 1))])
        theta, *_ = np.linalg.lstsq(Xa, y, rcond=None)
        self.coef_ = theta[:-1].T
        self.intercept_ = theta[-1]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_2d=True)
        return X @ self.coef_.T + self.intercept_

    def score(self, X, y, sample_weight=None) -> float:
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        resid = np.linalg.norm(y - self.predict(X), axis=1)
        rmse = float(np.sqrt(np.mean(resid**2)))
        scale = float(np.sqrt(np.mean(np.sum((y - y.mean(axis=0)) ** 2, axis=1))))
        nrmse = 0.0 if rmse < 1e-15 else rmse / max(scale, 1e-15)
        return float(np.clip(1.0 - nrmse, 0.0, 1.0))

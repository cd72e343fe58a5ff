"""Quadratic binary surrogate: feature expansion and Bayesian ridge posterior.

The surrogate models an objective over bit vectors as

    E(x) = a0 + sum_i a_i x_i + sum_{i<j} a_ij x_i x_j

which is linear in the coefficient vector once each x is expanded into
the feature row (1, x_1..x_N, x_1 x_2, x_1 x_3, ..., x_{N-1} x_N).
Fitting is ridge regression; with a Gaussian prior on the coefficients
the ridge solution is the posterior mean, and drawing coefficient
vectors from the posterior (Thompson sampling) is what turns the model
into an acquisition strategy.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import (
    DegenerateTargetError,
    DimensionMismatchError,
    FactorizationError,
)

__all__ = ["FeatureMap", "QuboRidge", "n_coefficients"]


def n_coefficients(n_bits: int) -> int:
    """Length of the coefficient vector for ``n_bits`` variables."""
    return 1 + n_bits + n_bits * (n_bits - 1) // 2


class FeatureMap:
    """Expansion of bit vectors into constant, linear and pair columns.

    Column order is fixed: the constant, then ``x_1..x_N``, then the
    pairs ``(i, j)`` with ``i < j`` in lexicographic order.  All other
    modules (acquisition construction in particular) rely on this order.
    """

    def __init__(self, n_bits: int):
        if n_bits < 1:
            raise ValueError(f"n_bits must be >= 1, got {n_bits}")
        self.n_bits = n_bits
        self.pair_i, self.pair_j = np.triu_indices(n_bits, k=1)
        self.n_features = n_coefficients(n_bits)

    def _validate_bits(self, X) -> np.ndarray:
        arr = np.asarray(X)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.n_bits:
            raise DimensionMismatchError(
                f"expected bit vectors of length {self.n_bits}, got shape {np.asarray(X).shape}"
            )
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bit vectors must contain only 0 and 1")
        return arr.astype(np.float64, copy=False)

    def expand(self, X) -> np.ndarray:
        """Design matrix of shape ``(m, n_features)`` for bit rows ``X``."""
        arr = self._validate_bits(np.atleast_2d(np.asarray(X)))
        m = arr.shape[0]
        out = np.empty((m, self.n_features), dtype=np.float64)
        out[:, 0] = 1.0
        out[:, 1 : 1 + self.n_bits] = arr
        out[:, 1 + self.n_bits :] = arr[:, self.pair_i] * arr[:, self.pair_j]
        return out

    def pair_column(self, i: int, j: int) -> int:
        """Column index of the pair term (i, j), i < j."""
        n = self.n_bits
        if not (0 <= i < j < n):
            raise DimensionMismatchError(f"invalid pair ({i}, {j}) for {n} bits")
        return 1 + n + i * (2 * n - i - 1) // 2 + (j - i - 1)

    def split(self, alpha) -> tuple[float, np.ndarray, dict[tuple[int, int], float]]:
        """Split a coefficient vector into (constant, linear, pair dict)."""
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.shape != (self.n_features,):
            raise DimensionMismatchError(
                f"expected {self.n_features} coefficients, got shape {alpha.shape}"
            )
        const = float(alpha[0])
        linear = alpha[1 : 1 + self.n_bits].copy()
        pairs = {
            (int(i), int(j)): float(v)
            for i, j, v in zip(self.pair_i, self.pair_j, alpha[1 + self.n_bits :])
        }
        return const, linear, pairs

    def predict(self, alpha, X) -> np.ndarray | float:
        """Evaluate a coefficient vector on bit rows: ``expand(X) @ alpha``."""
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.shape != (self.n_features,):
            raise DimensionMismatchError(
                f"expected {self.n_features} coefficients, got shape {alpha.shape}"
            )
        single = np.asarray(X).ndim == 1
        vals = self.expand(X) @ alpha
        return float(vals[0]) if single else vals


class QuboRidge(RegressorMixin, BaseEstimator):
    """Bayesian ridge regression on quadratic binary features.

    Fitting solves the normal equations ``(Phi^T Phi + lam I) mu = Phi^T y``
    via a Cholesky factorization; the posterior covariance is
    ``sigma2 * (Phi^T Phi + lam I)^{-1}``.  ``sample`` draws coefficient
    vectors from that posterior (exactly the mean when ``sigma2 == 0``),
    which is the Thompson-sampling step of the optimization loop.

    Parameters
    ----------
    lam : float, default=1e-2
        Ridge strength; the ratio of observation variance to prior
        coefficient variance.  Must be positive.
    sigma2 : float, default=0.0
        Posterior scale used by ``sample``.  Zero collapses sampling onto
        the posterior mean.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Posterior mean, ordered as (constant, linear terms, pair terms).
    feature_map_ : FeatureMap
        The expansion used at fit time.
    chol_lower_ : ndarray of shape (n_features, n_features)
        Lower Cholesky factor C of the normal matrix A = Phi^T Phi + lam I,
        so C C^T = A and samples are mu + sqrt(sigma2) * C^{-T} z.
    """

    def __init__(self, lam: float = 1e-2, sigma2: float = 0.0):
        self.lam = lam
        self.sigma2 = sigma2

    def _check_params(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")

    def fit(self, X, y) -> "QuboRidge":
        self._check_params()
        X = check_array(X, dtype="numeric")
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != X.shape[0]:
            raise DimensionMismatchError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} values"
            )
        fm = FeatureMap(X.shape[1])
        phi = fm.expand(X)
        a = phi.T @ phi
        a[np.diag_indices_from(a)] += self.lam
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as err:
            raise FactorizationError(
                f"normal matrix is not positive definite (lam={self.lam})"
            ) from err
        self.coef_ = linalg.cho_solve((chol, True), phi.T @ y)
        self.chol_lower_ = chol
        self.feature_map_ = fm
        self.n_features_in_ = X.shape[1]
        self.n_bits_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        """Posterior-mean prediction for bit rows ``X``."""
        check_is_fitted(self, "coef_")
        return self.feature_map_.expand(X) @ self.coef_

    def sample(self, rng=None, size: int | None = None) -> np.ndarray:
        """Draw coefficient vectors from the posterior.

        Parameters
        ----------
        rng : int, Generator or None
            Seed or generator; passed through ``np.random.default_rng``.
        size : int, optional
            Number of draws.  Default is a single vector of shape
            ``(n_features,)``; with ``size`` given, shape ``(size, n_features)``.

        With ``sigma2 == 0`` this returns the posterior mean exactly
        (bit-for-bit), so a zero-variance run degenerates to plain ridge.
        """
        check_is_fitted(self, "coef_")
        self._check_params()
        p = self.coef_.shape[0]
        m = 1 if size is None else int(size)
        if self.sigma2 == 0.0:
            out = np.tile(self.coef_, (m, 1))
            return out[0] if size is None else out
        rng = np.random.default_rng(rng)
        z = rng.standard_normal((p, m))
        # C^{-T} z has covariance (C C^T)^{-1} = A^{-1}
        shift = linalg.solve_triangular(self.chol_lower_, z, lower=True, trans="T")
        out = self.coef_[None, :] + np.sqrt(self.sigma2) * shift.T
        return out[0] if size is None else out

    def score(self, X, y, sample_weight=None) -> float:
        """In-sample R^2 of the posterior mean.

        Raises
        ------
        DegenerateTargetError
            If every target value is identical (R^2 undefined).
        """
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.size == 0 or np.all(y == y[0]):
            raise DegenerateTargetError("R^2 undefined: all target values identical")
        resid = y - self.predict(X)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        return 1.0 - float(np.sum(resid**2)) / ss_tot

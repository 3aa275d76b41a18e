"""scikit-learn compatible front end for stable random projections."""

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import estimators
from ._validation import DomainError
from .projector import DENSE, SPARSE, ProjectionSpec, rows_block
from .sparsity import recommend_beta

_CHUNK_CELLS = 1 << 20


class StableRandomProjection(TransformerMixin, BaseEstimator):
    """Project rows of X with a regenerable alpha-stable (or sparse Pareto) matrix.

    Parameters
    ----------
    n_components : int
        Number of projections k.
    alpha : float
        Index of the l_alpha norm to preserve, in (0, 2].
    mode : {"dense-stable", "sparse-pareto"}
    beta : float or "auto"
        Nonzero probability for sparse mode; "auto" uses D^-1/2.
    mu : float
        Pareto lower bound for sparse mode.
    random_state : int
        Seed of the projection. Required; there is no wall-clock seeding.

    Attributes
    ----------
    spec_ : ProjectionSpec
    n_features_in_ : int
    """

    def __init__(self, n_components=100, alpha=1.0, mode=DENSE, beta="auto", mu=1.0, random_state=0):
        self.n_components = n_components
        self.alpha = alpha
        self.mode = mode
        self.beta = beta
        self.mu = mu
        self.random_state = random_state

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.sparse = True
        return tags

    def fit(self, X, y=None):
        X = validate_data(self, X, accept_sparse="csr")
        if self.random_state is None or isinstance(self.random_state, np.random.RandomState):
            raise DomainError("random_state must be an integer seed")
        D = X.shape[1]
        beta = 1.0
        if self.mode == SPARSE:
            beta = recommend_beta(max(D, 2), self.alpha).beta if self.beta == "auto" else self.beta
        self.spec_ = ProjectionSpec(
            self.alpha, self.n_components, D, int(self.random_state), self.mode, beta, self.mu
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = validate_data(self, X, accept_sparse="csr", reset=False)
        if sp.issparse(X):
            cols = np.unique(X.indices)
        else:
            cols = np.flatnonzero(np.any(X != 0, axis=0))
        out = np.zeros((X.shape[0], self.spec_.k))
        step = max(1, _CHUNK_CELLS // self.spec_.k)
        for start in range(0, cols.size, step):
            chunk = cols[start:start + step]
            out += np.asarray(X[:, chunk] @ rows_block(self.spec_, chunk + 1))
        return out

    def _estimate_rows(self, diffs, method, calibration):
        check_is_fitted(self, "spec_")
        beta = self.spec_.beta if self.spec_.sparse else None
        return np.array([
            estimators.estimate(
                row, self.spec_.alpha, method, beta=beta, mu=self.spec_.mu, calibration=calibration
            ).value
            for row in np.atleast_2d(diffs)
        ])

    def estimate_norms(self, V, method=estimators.GM, calibration=None):
        """Estimated l_alpha norms of the original rows from their projections ``V``."""
        return self._estimate_rows(np.asarray(V, dtype=np.float64), method, calibration)

    def pairwise_distances(self, V, method=estimators.GM, calibration=None):
        """Symmetric matrix of estimated l_alpha distances between rows of ``V``."""
        V = np.asarray(V, dtype=np.float64)
        n = V.shape[0]
        out = np.zeros((n, n))
        for i in range(n):
            if i + 1 < n:
                out[i, i + 1:] = self._estimate_rows(V[i] - V[i + 1:], method, calibration)
        return out + out.T

"""Zero-mean Gaussian-process regression with a squared-exponential kernel."""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist, pdist

from .errors import InputError, NumericalError

MAX_JITTER = 1e-4


def sq_exp_kernel(A, B, length_scale: float, signal_variance: float) -> np.ndarray:
    K = cdist(np.atleast_2d(A), np.atleast_2d(B), "sqeuclidean")
    K *= -0.5 / length_scale**2
    np.exp(K, out=K)
    K *= signal_variance
    return K


def median_length_scale(X) -> float:
    """Median pairwise distance; 1.0 when it is undefined or zero."""
    if len(X) < 2:
        return 1.0
    med = float(np.median(pdist(X)))
    return med if med > 0 else 1.0


class GPRegressor:
    """Exact GP posterior via a Cholesky factor of ``K + noise * I``.

    Unset hyperparameters follow the data: length-scale from the median
    pairwise distance of the inputs, signal variance from the target variance.
    If the factorisation fails, jitter starting at 1e-8 is added and grown
    tenfold up to 1e-4 before giving up.
    """

    def __init__(self, length_scale=None, signal_variance=None, noise_variance=1e-2):
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.noise_variance = noise_variance

    def fit(self, X, y):
        X = np.atleast_2d(np.asarray(X, float))
        y = np.asarray(y, float)
        if len(X) < 1 or len(X) != len(y):
            raise InputError("GP needs at least one training point and matching targets")
        self.X_, self.y_ = X, y
        self.length_scale_ = self.length_scale or median_length_scale(X)
        if self.signal_variance is not None:
            self.signal_variance_ = self.signal_variance
        else:
            v = float(np.var(y))
            self.signal_variance_ = v if v > 0 else 1.0
        K = sq_exp_kernel(X, X, self.length_scale_, self.signal_variance_)
        K[np.diag_indices_from(K)] += self.noise_variance
        jitter = 0.0
        while True:
            try:
                self.L_ = cholesky(K + jitter * np.eye(len(X)), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter = 1e-8 if jitter == 0 else jitter * 10
                if jitter > MAX_JITTER * (1 + 1e-9):
                    raise NumericalError("kernel matrix not positive definite after jitter") from None
        self.jitter_ = jitter
        self.alpha_ = cho_solve((self.L_, True), y)
        return self

    @property
    def prior_variance(self) -> float:
        return self.signal_variance_

    def predict_mean(self, X):
        Ks = sq_exp_kernel(X, self.X_, self.length_scale_, self.signal_variance_)
        return Ks @ self.alpha_

    def predict(self, X):
        """Posterior mean and (latent, noise-free) variance at ``X``."""
        Ks = sq_exp_kernel(X, self.X_, self.length_scale_, self.signal_variance_)
        mean = Ks @ self.alpha_
        V = solve_triangular(self.L_, Ks.T, lower=True, check_finite=False)
        var = self.signal_variance_ - np.sum(V**2, axis=0)
        return mean, np.maximum(var, 0.0)

    predict_value = predict_mean


def gp_fit(inputs, targets, length_scale=None, signal_variance=None,
           noise_variance=1e-2) -> GPRegressor:
    return GPRegressor(length_scale, signal_variance, noise_variance).fit(inputs, targets)


def gp_predict(gp: GPRegressor, x):
    return gp.predict(x)

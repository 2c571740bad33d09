"""Kernel ridge regression.

Solves ``min_g sum_t (y_t - g(x_t))^2 + gamma ||g||_H^2`` whose minimizer is
``g(x) = sum_j w_j kappa(x, x_j)`` with ``(K + gamma I) w = Y``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .kernels import KernelSpec, as_inputs, cross_gram, gram_matrix, kernel_row
from .linalg import SPDSolver


@dataclass(frozen=True)
class KrrModel:
    spec: KernelSpec
    X_train: np.ndarray
    omega: np.ndarray
    gamma: float

    def predict(self, X):
        """Vectorized prediction on a batch of inputs."""
        return cross_gram(self.spec, X, self.X_train) @ self.omega

    def rkhs_norm2(self, K=None):
        if K is None:
            K = gram_matrix(self.spec, self.X_train)
        return float(self.omega @ K @ self.omega)


def regularized_system(K, gamma):
    """Factorization of ``K + gamma I``, reused by every solve on the same data."""
    if not gamma > 0:
        raise InvalidArgument("gamma must be positive")
    return SPDSolver(K + gamma * np.eye(K.shape[0]))


def fit_krr(X, Y, spec, gamma, K=None, system=None):
    """Fit KRR weights by a Cholesky solve of ``(K + gamma I) w = Y``.

    ``K`` and ``system`` may be passed to reuse a Gram matrix or factorization.
    """
    X = as_inputs(X)
    Y = np.asarray(Y, dtype=float).ravel()
    if X.shape[0] != Y.shape[0] or Y.shape[0] < 1:
        raise InvalidArgument(f"need matching non-empty inputs/targets, got {X.shape[0]} and {Y.shape[0]}")
    if not gamma > 0:
        raise InvalidArgument("gamma must be positive")
    if system is None:
        if K is None:
            K = gram_matrix(spec, X)
        system = regularized_system(K, gamma)
    omega = system.solve(Y)
    return KrrModel(spec=spec, X_train=X, omega=omega, gamma=float(gamma))


def predict_krr(model, x):
    """Prediction at a single input vector."""
    return float(kernel_row(model.spec, model.X_train, x) @ model.omega)

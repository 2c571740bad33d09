"""Kernel functions and Gram matrices.

Four families are supported, all evaluated on raw (unscaled) inputs::

    gaussian     exp(-||x - x'||_2^2 / (2 sigma^2))
    laplacian    exp(-||x - x'||_1 / sigma)
    polynomial   (x . x' + c)^d
    linear       x^T P x'

Inputs are arrays of shape ``(T, d)``; a 1-D array of length ``T`` is read as
``T`` scalar inputs.
"""
from dataclasses import dataclass, field

import numpy as np

from ._accel import HAVE_NUMBA, njit
from .errors import InvalidArgument

FAMILIES = ("gaussian", "laplacian", "polynomial", "linear")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    sigma: float = 1.0
    c: float = 0.0
    d: int = 1
    P: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown kernel family {self.family!r}")
        if self.family in ("gaussian", "laplacian") and not self.sigma > 0:
            raise InvalidArgument("bandwidth sigma must be positive")
        if self.family == "polynomial" and (int(self.d) != self.d or self.d < 1):
            raise InvalidArgument("polynomial degree must be a positive integer")
        if self.family == "linear":
            P = np.atleast_2d(np.asarray(self.P, dtype=float))
            if P.shape[0] != P.shape[1] or not np.allclose(P, P.T, atol=1e-12):
                raise InvalidArgument("P must be a symmetric square matrix")
            if np.linalg.eigvalsh(P).min() < -1e-10 * max(1.0, np.abs(P).max()):
                raise InvalidArgument("P must be positive semidefinite")
            object.__setattr__(self, "P", P)

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def laplacian(cls, sigma):
        return cls("laplacian", sigma=float(sigma))

    @classmethod
    def polynomial(cls, c, d):
        return cls("polynomial", c=float(c), d=int(d))

    @classmethod
    def linear(cls, P):
        return cls("linear", P=P)

    def describe(self):
        if self.family in ("gaussian", "laplacian"):
            return f"{self.family}(sigma={self.sigma:g})"
        if self.family == "polynomial":
            return f"polynomial(c={self.c:g}, d={self.d})"
        return f"linear(P={self.P.shape[0]}x{self.P.shape[1]})"


def as_inputs(X):
    """Return ``X`` as a float array of shape ``(T, d)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X[:, None]
    elif X.ndim != 2:
        raise InvalidArgument(f"inputs must be 1-D or 2-D, got shape {X.shape}")
    return X


@njit
def _sqdist_sym_nb(X):
    T, d = X.shape
    out = np.zeros((T, T))
    for i in range(T):
        for j in range(i + 1, T):
            s = 0.0
            for k in range(d):
                diff = X[i, k] - X[j, k]
                s += diff * diff
            out[i, j] = s
            out[j, i] = s
    return out


@njit
def _l1dist_sym_nb(X):
    T, d = X.shape
    out = np.zeros((T, T))
    for i in range(T):
        for j in range(i + 1, T):
            s = 0.0
            for k in range(d):
                s += abs(X[i, k] - X[j, k])
            out[i, j] = s
            out[j, i] = s
    return out


@njit
def _sqdist_cross_nb(A, B):
    n, d = A.shape
    m = B.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                diff = A[i, k] - B[j, k]
                s += diff * diff
            out[i, j] = s
    return out


@njit
def _l1dist_cross_nb(A, B):
    n, d = A.shape
    m = B.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                s += abs(A[i, k] - B[j, k])
            out[i, j] = s
    return out


def _sqdist_sym_np(X):
    D = _sqdist_cross_np(X, X)
    np.fill_diagonal(D, 0.0)
    return D


def _l1dist_sym_np(X):
    return _l1dist_cross_np(X, X)


def _sqdist_cross_np(A, B):
    # (a - b)^2 summed per pair; exact symmetry since (a-b)^2 == (b-a)^2
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _l1dist_cross_np(A, B):
    return np.abs(A[:, None, :] - B[None, :, :]).sum(axis=2)


if HAVE_NUMBA:
    _sqdist_sym, _l1dist_sym = _sqdist_sym_nb, _l1dist_sym_nb
    _sqdist_cross, _l1dist_cross = _sqdist_cross_nb, _l1dist_cross_nb
else:
    _sqdist_sym, _l1dist_sym = _sqdist_sym_np, _l1dist_sym_np
    _sqdist_cross, _l1dist_cross = _sqdist_cross_np, _l1dist_cross_np


def _check_dims(spec, A, B):
    if A.shape[1] != B.shape[1]:
        raise InvalidArgument(f"input dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.family == "linear" and spec.P.shape[0] != A.shape[1]:
        raise InvalidArgument(f"P is {spec.P.shape[0]}x{spec.P.shape[0]} but inputs have dimension {A.shape[1]}")


def _from_distance(spec, D):
    if spec.family == "gaussian":
        return np.exp(-D / (2.0 * spec.sigma ** 2))
    return np.exp(-D / spec.sigma)


def _inner(spec, A, B):
    if spec.family == "linear":
        return A @ spec.P @ B.T
    return (A @ B.T + spec.c) ** spec.d


def gram_matrix(spec, X):
    """Symmetric ``(T, T)`` kernel matrix of the inputs ``X``."""
    X = as_inputs(X)
    if X.shape[0] == 0:
        raise InvalidArgument("gram_matrix needs at least one input")
    _check_dims(spec, X, X)
    if spec.family == "gaussian":
        return _from_distance(spec, _sqdist_sym(X))
    if spec.family == "laplacian":
        return _from_distance(spec, _l1dist_sym(X))
    K = _inner(spec, X, X)
    return 0.5 * (K + K.T)


def cross_gram(spec, A, B):
    """Matrix of ``kappa(a_i, b_j)`` with shape ``(len(A), len(B))``."""
    A, B = as_inputs(A), as_inputs(B)
    _check_dims(spec, A, B)
    if spec.family == "gaussian":
        return _from_distance(spec, _sqdist_cross(A, B))
    if spec.family == "laplacian":
        return _from_distance(spec, _l1dist_cross(A, B))
    return _inner(spec, A, B)


def kernel_row(spec, X_train, x):
    """Vector ``[kappa(x, x_1), ..., kappa(x, x_T)]``."""
    X_train = as_inputs(X_train)
    x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    return cross_gram(spec, x, X_train)[0]


def eval_kernel(spec, x, x_prime):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape != x_prime.shape or x.ndim != 1:
        raise InvalidArgument(f"input shapes differ: {x.shape} vs {x_prime.shape}")
    return float(cross_gram(spec, x[None, :], x_prime[None, :])[0, 0])

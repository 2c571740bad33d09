"""Unscented Kalman filter and unscented Rauch-Tung-Striebel smoother.

Conventions: the state model is ``x_{t+1} = f(x_t, u_t, theta) + e_t`` and
``y_t = g(x_t, u_t, theta) + w_t`` with scalar output. The filter starts
from ``(x0, P0)`` at ``t = 0`` and produces ``x_1 .. x_T``; the smoother
returns ``x_0 .. x_T`` where the last entry equals the filtered one.
"""
from dataclasses import dataclass

import numpy as np

from .errors import Diverged, InvalidArgument
from .linalg import cholesky


@dataclass
class StateSpaceModel:
    """Transition ``f(x, u, theta) -> (n,)`` and output ``g(x, u, theta) -> float``.

    With ``vectorized=True`` both callables receive a stack of states of shape
    ``(m, n)`` and must return ``(m, n)`` and ``(m,)`` respectively.
    """

    f: callable
    g: callable
    n: int
    n_u: int = 1
    vectorized: bool = False

    def propagate(self, X, u, theta):
        if self.vectorized:
            return np.asarray(self.f(X, u, theta), dtype=float).reshape(X.shape[0], self.n)
        return np.array([np.asarray(self.f(x, u, theta), dtype=float).reshape(self.n) for x in X])

    def observe(self, X, u, theta):
        if self.vectorized:
            return np.asarray(self.g(X, u, theta), dtype=float).reshape(X.shape[0])
        return np.array([float(self.g(x, u, theta)) for x in X])


@dataclass
class NoiseConfig:
    Pe: np.ndarray
    Pw: float
    P0: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        n = self.x0.size
        self.Pe = _psd(self.Pe, n, "Pe")
        self.P0 = _psd(self.P0, n, "P0")
        self.Pw = float(self.Pw)
        if self.Pw < 0:
            raise InvalidArgument("measurement noise variance must be non-negative")


def _psd(M, n, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape != (n, n):
        raise InvalidArgument(f"{name} must be {n}x{n}, got {M.shape}")
    if not np.allclose(M, M.T, atol=1e-12):
        raise InvalidArgument(f"{name} must be symmetric")
    if np.linalg.eigvalsh(M).min() < -1e-12 * max(1.0, np.abs(M).max()):
        raise InvalidArgument(f"{name} must be positive semidefinite")
    return M


@dataclass
class UtWeights:
    """Sigma-point scaling ``a`` with mean and covariance weights (``2n + 1`` each)."""

    a: float
    wm: np.ndarray
    wc: np.ndarray

    @property
    def n(self):
        return (self.wm.size - 1) // 2

    @classmethod
    def from_params(cls, n, alpha=1.0, beta=2.0, kappa=None):
        """Scaled unscented transform; ``kappa`` defaults to ``3 - n``."""
        if kappa is None:
            kappa = 3.0 - n
        lam = alpha ** 2 * (n + kappa) - n
        if not n + lam > 0:
            raise InvalidArgument("n + lambda must be positive")
        wm = np.full(2 * n + 1, 0.5 / (n + lam))
        wm[0] = lam / (n + lam)
        wc = wm.copy()
        wc[0] += 1.0 - alpha ** 2 + beta
        return cls(a=float(np.sqrt(n + lam)), wm=wm, wc=wc)

    @classmethod
    def tank_preset(cls, n=2):
        """Fixed tank-benchmark values (a=2.74, 0.33 / 2.33 / 0.67); they are not a normalized transform."""
        wm = np.full(2 * n + 1, 0.67)
        wm[0] = 0.33
        wc = wm.copy()
        wc[0] = 2.33
        return cls(a=2.74, wm=wm, wc=wc)


@dataclass
class SmoothedTrajectory:
    filtered_means: np.ndarray   # (T, n), t = 1..T
    filtered_covs: np.ndarray    # (T, n, n)
    smoothed_means: np.ndarray   # (T + 1, n), t = 0..T
    smoothed_covs: np.ndarray    # (T + 1, n, n)

    @property
    def horizon(self):
        return self.filtered_means.shape[0]


def sigma_points(mean, cov, weights):
    """Rows ``mean``, ``mean + a L[:, i]``, ``mean - a L[:, i]`` with ``L`` lower Cholesky."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    L, _ = cholesky(cov)
    A = weights.a * L.T
    return np.vstack([mean, mean + A, mean - A])


def _moments(points, weights):
    m = weights.wm @ points
    d = points - m
    return m, d


def _sym(P):
    return 0.5 * (P + P.T)


def _split_data(u, y):
    u = np.asarray(u, dtype=float)
    u = u[:, None] if u.ndim == 1 else u
    y = np.asarray(y, dtype=float).ravel()
    T = y.size
    if T < 1:
        raise InvalidArgument("need at least one measurement")
    if u.shape[0] not in (T, T + 1):
        raise InvalidArgument(f"inputs must have length T or T+1 (T={T}), got {u.shape[0]}")
    return u, y, T


def _output_input(u, t, T):
    # u has entries for t = 0..T-1 and optionally T; without u_T the last update reuses u_{T-1}
    return u[t] if t < u.shape[0] else u[u.shape[0] - 1]


def _squeeze_input(u_t, model):
    return u_t[0] if model.n_u == 1 else u_t


def ukf_filter(model, theta, noise, weights, u, y):
    """Forward pass. ``y`` holds ``y_1 .. y_T``; ``u`` holds ``u_0 .. u_{T-1}`` (optionally ``u_T``).

    Returns filtered means ``(T, n)`` and covariances ``(T, n, n)``.
    """
    u, y, T = _split_data(u, y)
    n = model.n
    if noise.x0.size != n or weights.wm.size != 2 * n + 1:
        raise InvalidArgument("state dimension mismatch between model, noise and weights")
    means = np.empty((T, n))
    covs = np.empty((T, n, n))
    x, P = noise.x0.copy(), noise.P0.copy()
    wm, wc = weights.wm, weights.wc
    for k in range(T):
        t = k + 1
        S = sigma_points(x, P, weights)
        X = model.propagate(S, _squeeze_input(u[t - 1], model), theta)
        if not np.all(np.isfinite(X)):
            raise Diverged(f"state propagation produced non-finite values at step {t}", step=t)
        m, d = _moments(X, weights)
        Pp = _sym((wc[:, None] * d).T @ d + noise.Pe)
        # redraw so the output transform sees the process noise as well
        Xp = sigma_points(m, Pp, weights)
        d = Xp - m
        Yp = model.observe(Xp, _squeeze_input(_output_input(u, t, T), model), theta)
        if not np.all(np.isfinite(Yp)):
            raise Diverged(f"output map produced non-finite values at step {t}", step=t)
        yh = wm @ Yp
        dy = Yp - yh
        Py = wc @ (dy * dy) + noise.Pw
        C = (wc * dy) @ d
        if Py > 0:
            gain = C / Py
            x = m + gain * (y[k] - yh)
            P = _sym(Pp - np.outer(gain, gain) * Py)
        else:
            x, P = m, Pp
        means[k], covs[k] = x, P
    return means, covs


def urtss_smooth(model, theta, noise, weights, filtered, u):
    """Backward pass from ``t = T - 1`` down to ``0`` over the filtered estimates."""
    fm, fc = filtered
    fm = np.asarray(fm, dtype=float)
    T, n = fm.shape
    u = np.asarray(u, dtype=float)
    u = u[:, None] if u.ndim == 1 else u
    if u.shape[0] < T:
        raise InvalidArgument(f"need inputs u_0 .. u_(T-1), got {u.shape[0]} for T={T}")
    means = np.empty((T + 1, n))
    covs = np.empty((T + 1, n, n))
    means[0], covs[0] = noise.x0, noise.P0
    means[1:], covs[1:] = fm, fc
    sm, sc = means.copy(), covs.copy()
    wc = weights.wc
    for t in range(T - 1, -1, -1):
        S = sigma_points(means[t], covs[t], weights)
        X = model.propagate(S, _squeeze_input(u[t], model), theta)
        if not np.all(np.isfinite(X)):
            raise Diverged(f"state propagation produced non-finite values at step {t}", step=t)
        m, d = _moments(X, weights)
        Pp = _sym((wc[:, None] * d).T @ d + noise.Pe)
        C = (wc[:, None] * (S - means[t])).T @ d
        G = np.linalg.solve(Pp.T, C.T).T
        sm[t] = means[t] + G @ (sm[t + 1] - m)
        sc[t] = _sym(covs[t] - G @ (Pp - sc[t + 1]) @ G.T)
    return SmoothedTrajectory(filtered_means=fm, filtered_covs=np.asarray(fc), smoothed_means=sm,
                              smoothed_covs=sc)


def smooth(model, theta, noise, weights, u, y):
    """Filter then smooth; ``y`` is ``y_1 .. y_T``."""
    filtered = ukf_filter(model, theta, noise, weights, u, y)
    return urtss_smooth(model, theta, noise, weights, filtered, u)

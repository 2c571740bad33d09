"""Reference solutions used to check the numerical routines.

These are deliberately written from the textbook recursions, without sharing
code with the production paths.
"""
import numpy as np


def gauss_solve(A, b):
    """Gaussian elimination with partial pivoting."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    M = np.hstack([A, b.reshape(n, -1)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        M[[col, piv]] = M[[piv, col]]
        for row in range(col + 1, n):
            M[row] -= (M[row, col] / M[col, col]) * M[col]
    x = np.zeros((n, M.shape[1] - n))
    for row in range(n - 1, -1, -1):
        x[row] = (M[row, n:] - M[row, row + 1:n] @ x[row + 1:]) / M[row, row]
    return x.reshape(b.shape)


def kalman_filter(A, B, C, D, Pe, Pw, x0, P0, u, y):
    """Exact filter for ``x_t = A x_{t-1} + B u_{t-1}``, ``y_t = C x_t + D u_t``.

    ``y`` holds ``y_1 .. y_T`` and ``u`` holds ``u_0 .. u_T``.
    """
    T = len(y)
    n = A.shape[0]
    ms = np.zeros((T, n))
    Ps = np.zeros((T, n, n))
    m, P = np.array(x0, dtype=float), np.array(P0, dtype=float)
    for k in range(T):
        m_pred = A @ m + B * u[k]
        P_pred = A @ P @ A.T + Pe
        S = C @ P_pred @ C + Pw
        gain = P_pred @ C / S
        m = m_pred + gain * (y[k] - C @ m_pred - D * u[k + 1])
        P = P_pred - np.outer(gain, gain) * S
        ms[k], Ps[k] = m, P
    return ms, Ps


def rts_smoother(A, B, Pe, x0, P0, u, ms, Ps):
    """Exact backward pass; returns smoothed means and covariances for ``t = 0..T``."""
    T, n = ms.shape
    means = np.vstack([x0, ms])
    covs = np.concatenate([np.array(P0)[None], Ps])
    sm, sP = means.copy(), covs.copy()
    for t in range(T - 1, -1, -1):
        m_pred = A @ means[t] + B * u[t]
        P_pred = A @ covs[t] @ A.T + Pe
        G = covs[t] @ A.T @ np.linalg.inv(P_pred)
        sm[t] = means[t] + G @ (sm[t + 1] - m_pred)
        sP[t] = covs[t] + G @ (sP[t + 1] - P_pred) @ G.T
    return sm, sP

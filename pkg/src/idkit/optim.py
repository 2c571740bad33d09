"""Box-constrained BFGS with projected backtracking line search."""
from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    converged: bool
    n_iter: int
    message: str
    trace: list = field(default_factory=list)


def central_gradient(fun, x, lower=None, upper=None, f0=None):
    """Central finite differences with step ``max(1e-6, 1e-6 |x_i|)``.

    Falls back to a one-sided difference when the central stencil would leave
    the box.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else lower
    upper = np.full(n, np.inf) if upper is None else upper
    g = np.empty(n)
    for i in range(n):
        h = max(1e-6, 1e-6 * abs(x[i]))
        hi_ok = x[i] + h <= upper[i]
        lo_ok = x[i] - h >= lower[i]
        e = np.zeros(n)
        e[i] = h
        if hi_ok and lo_ok:
            g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
        else:
            fx = fun(x) if f0 is None else f0
            g[i] = (fun(x + e) - fx) / h if hi_ok else (fx - fun(x - e)) / h
    return g


def projected_gradient(x, g, lower, upper):
    return x - np.clip(x - g, lower, upper)


def minimize_box_bfgs(fun, x0, lower=None, upper=None, grad=None, max_iters=500,
                      gradient_tolerance=1e-8, step_tolerance=1e-10, c1=1e-4,
                      max_backtracks=60):
    """Minimize ``fun`` over the box ``[lower, upper]``.

    Variables sitting on a bound with the gradient pushing outward are frozen
    for the current iteration; the BFGS direction on the free variables is
    projected back into the box and shortened until the Armijo condition
    holds. ``trace`` records the objective at every accepted iterate and is
    non-increasing by construction.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lower, upper)
    if grad is None:
        def grad(z, fz=None):
            return central_gradient(fun, z, lower, upper, f0=fz)
    else:
        user_grad = grad

        def grad(z, fz=None):
            return np.asarray(user_grad(z), dtype=float)

    f = float(fun(x))
    trace = [f]
    if not np.isfinite(f):
        return OptimizeResult(x, f, False, 0, "non-finite objective at start", trace)
    if n == 0:
        return OptimizeResult(x, f, True, 0, "no free parameters", trace)

    g = grad(x, f)
    H = np.eye(n)
    message = "iteration budget exhausted"
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        pg = projected_gradient(x, g, lower, upper)
        if np.max(np.abs(pg)) <= gradient_tolerance:
            converged, message = True, "projected gradient below tolerance"
            it -= 1
            break
        active = ((x <= lower) & (g > 0)) | ((x >= upper) & (g < 0))
        free = ~active
        d = np.zeros(n)
        Hf = H[np.ix_(free, free)]
        d[free] = -Hf @ g[free]
        if g @ d >= 0:
            H = np.eye(n)
            d = np.where(free, -g, 0.0)

        alpha = 1.0
        accepted = False
        for _ in range(max_backtracks):
            x_new = np.clip(x + alpha * d, lower, upper)
            f_new = float(fun(x_new))
            if np.isfinite(f_new) and f_new <= f + c1 * (g @ (x_new - x)):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            message = "line search could not decrease the objective"
            it -= 1
            break

        s = x_new - x
        g_new = grad(x_new, f_new)
        y = g_new - g
        x, f, g = x_new, f_new, g_new
        trace.append(f)

        if np.max(np.abs(s)) <= step_tolerance:
            converged, message = True, "step below tolerance"
            break
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if it == 1:
                H = np.eye(n) * (sy / (y @ y))
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
    return OptimizeResult(x=x, fun=f, converged=converged, n_iter=it, message=message, trace=trace)

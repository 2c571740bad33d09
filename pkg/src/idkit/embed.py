"""Joint estimation of physical parameters and a kernel correction.

The model is ``y = f(x, theta) + delta(x) + e`` with ``delta`` in the RKHS of a
kernel. For fixed ``theta`` the optimal correction is a KRR fit of the physics
residual, so the problem reduces to minimizing over ``theta`` alone::

    w(theta) = (K + gamma I)^{-1} (Y - Gamma(theta))
    p(theta) = ||Y - Gamma(theta) - K w(theta)||^2 + gamma w(theta)^T K w(theta)

When ``f`` is affine in ``theta`` the minimizer has a closed form, see
:func:`fit_affine`.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, NumericalFailure
from .kernels import as_inputs, cross_gram, gram_matrix, kernel_row
from .krr import fit_krr, regularized_system
from .optim import minimize_box_bfgs

METHODS = ("nonlinear", "affine_closed_form", "ls", "dm", "krr_only")


@dataclass
class PhysicsModel:
    """Parametric prior ``f(X, theta)`` evaluated row-wise on a batch ``X``.

    For affine models pass ``features`` (``X -> (T, n_theta)``) and optionally
    ``offset`` (``X -> (T,)``) via :meth:`affine`; ``f`` is then derived.
    ``jacobian`` (``(X, theta) -> (T, n_theta)``) is optional and replaces
    finite differences in :func:`fit_nonlinear`.
    """

    f: callable
    n_theta: int
    features: callable = None
    offset: callable = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    jacobian: callable = None

    def __post_init__(self):
        n = self.n_theta
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise InvalidArgument("bounds must have one entry per parameter")
        if np.any(self.lower > self.upper):
            raise InvalidArgument("lower bound exceeds upper bound")

    @classmethod
    def affine(cls, features, n_theta, offset=None, lower=None, upper=None):
        def f(X, theta):
            out = features(X) @ np.asarray(theta, dtype=float)
            return out if offset is None else out + offset(X)

        return cls(f=f, n_theta=n_theta, features=features, offset=offset,
                   lower=lower, upper=upper, jacobian=lambda X, theta: features(X))

    @classmethod
    def empty(cls):
        """No physics at all; embedding reduces to plain KRR."""
        return cls.affine(lambda X: np.zeros((as_inputs(X).shape[0], 0)), 0)

    @property
    def is_affine(self):
        return self.features is not None

    def predict(self, X, theta):
        return np.asarray(self.f(as_inputs(X), np.asarray(theta, dtype=float)), dtype=float).ravel()

    def feature_matrix(self, X):
        X = as_inputs(X)
        return np.asarray(self.features(X), dtype=float).reshape(X.shape[0], self.n_theta)

    def centered_targets(self, X, Y):
        Y = np.asarray(Y, dtype=float).ravel()
        if self.offset is None:
            return Y
        return Y - np.asarray(self.offset(as_inputs(X)), dtype=float).ravel()

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.n_theta,) and np.all(theta >= self.lower) and np.all(theta <= self.upper)


@dataclass
class OptimizerConfig:
    max_iters: int = 500
    gradient_tolerance: float = 1e-8
    step_tolerance: float = 1e-10


@dataclass
class EmbedConfig:
    gamma: float
    spec: object
    theta0: np.ndarray
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidArgument("gamma must be positive")
        self.theta0 = np.asarray(self.theta0, dtype=float).ravel()


@dataclass
class EmbedResult:
    theta: np.ndarray
    omega: np.ndarray
    support: np.ndarray
    spec: object
    gamma: float
    method: str
    objective_trace: list = field(default_factory=list)
    converged: bool = True
    rank_deficient: bool = False
    n_iter: int = 0
    message: str = ""

    def correction(self, X):
        """Kernel term ``delta(X)``; identically zero when no kernel was fitted."""
        X = as_inputs(X)
        if self.spec is None or not np.any(self.omega):
            return np.zeros(X.shape[0])
        return cross_gram(self.spec, X, self.support) @ self.omega

    def predict(self, physics, X):
        X = as_inputs(X)
        base = np.zeros(X.shape[0]) if self.theta.size == 0 else physics.predict(X, self.theta)
        return base + self.correction(X)

    def rkhs_norm2(self, K=None):
        if self.spec is None:
            return 0.0
        if K is None:
            K = gram_matrix(self.spec, self.support)
        return float(self.omega @ K @ self.omega)


def _prepare(X, Y):
    X = as_inputs(X)
    Y = np.asarray(Y, dtype=float).ravel()
    if X.shape[0] != Y.shape[0] or Y.size == 0:
        raise InvalidArgument(f"need matching non-empty inputs/targets, got {X.shape[0]} and {Y.size}")
    return X, Y


def _system(K, gamma, system):
    return regularized_system(K, gamma) if system is None else system


def residual_weights(theta, X, Y, K, physics, gamma, system=None):
    """Kernel weights of the optimal correction for a fixed ``theta``."""
    X, Y = _prepare(X, Y)
    system = _system(K, gamma, system)
    r = Y - (physics.predict(X, theta) if physics.n_theta else 0.0)
    return system.solve(r)


def reduced_objective(theta, X, Y, K, physics, gamma, system=None):
    """Profile objective ``p(theta)`` with the correction optimized out."""
    X, Y = _prepare(X, Y)
    system = _system(K, gamma, system)
    r = Y - (physics.predict(X, theta) if physics.n_theta else 0.0)
    w = system.solve(r)
    Kw = K @ w
    e = r - Kw
    return float(e @ e + gamma * (w @ Kw))


def psi_matrix(K, gamma, system=None):
    """Explicit ``(K + gamma I)^{-1}``, symmetrized."""
    return _system(K, gamma, system).inverse()


def _physics_only_objective(X, Y, physics):
    def p(theta):
        r = Y - physics.predict(X, theta)
        return float(r @ r)

    def grad(theta):
        r = Y - physics.predict(X, theta)
        return -2.0 * np.asarray(physics.jacobian(X, theta)).T @ r

    return p, (grad if physics.jacobian is not None else None)


def fit_nonlinear(X, Y, physics, config, K=None, system=None):
    """Minimize ``p(theta)`` with box-constrained BFGS, then assemble the weights.

    ``config.spec = None`` disables the kernel: the objective becomes the plain
    squared residual and the returned weights are zero (``method='ls'``).
    """
    X, Y = _prepare(X, Y)
    theta0 = config.theta0
    if theta0.shape != (physics.n_theta,):
        raise InvalidArgument(f"theta0 has shape {theta0.shape}, expected ({physics.n_theta},)")
    if not physics.contains(theta0):
        raise InvalidArgument("theta0 lies outside the parameter box")
    opt = config.optimizer
    use_kernel = config.spec is not None

    if use_kernel:
        if K is None:
            K = gram_matrix(config.spec, X)
        system = _system(K, config.gamma, system)

        def p(theta):
            return reduced_objective(theta, X, Y, K, physics, config.gamma, system)

        grad = None
        if physics.jacobian is not None and physics.n_theta:
            def grad(theta):
                # p = gamma r^T (K + gamma I)^{-1} r, so dp = -2 gamma J^T w
                w = residual_weights(theta, X, Y, K, physics, config.gamma, system)
                return -2.0 * config.gamma * np.asarray(physics.jacobian(X, theta)).T @ w
    else:
        p, grad = _physics_only_objective(X, Y, physics)

    f0 = p(theta0)
    if not np.isfinite(f0):
        raise InvalidArgument("objective is not finite at theta0")
    res = minimize_box_bfgs(p, theta0, physics.lower, physics.upper, grad=grad,
                            max_iters=opt.max_iters, gradient_tolerance=opt.gradient_tolerance,
                            step_tolerance=opt.step_tolerance)
    if use_kernel:
        omega = residual_weights(res.x, X, Y, K, physics, config.gamma, system)
    else:
        omega = np.zeros(X.shape[0])
    return EmbedResult(theta=res.x, omega=omega, support=X, spec=config.spec, gamma=config.gamma,
                       method="nonlinear" if use_kernel else "ls", objective_trace=res.trace,
                       converged=res.converged, n_iter=res.n_iter, message=res.message)


def _rank_deficient(F):
    if F.shape[1] == 0:
        return False
    s = np.linalg.svd(F, compute_uv=False)
    return F.shape[0] < F.shape[1] or s[-1] <= 1e-10 * s[0]


def fit_affine(X, Y, physics, spec, gamma, K=None, system=None):
    """Closed-form joint estimate for a model affine in ``theta``.

    ``theta = (F^T Psi F)^{-1} F^T Psi Y0`` with ``Psi = (K + gamma I)^{-1}``;
    the pseudoinverse is used (and ``rank_deficient`` set) when ``F`` is
    numerically rank deficient.
    """
    if not physics.is_affine:
        raise InvalidArgument("fit_affine needs a physics model with an affine feature map")
    X, Y = _prepare(X, Y)
    if K is None:
        K = gram_matrix(spec, X)
    system = _system(K, gamma, system)
    F = physics.feature_matrix(X)
    Y0 = physics.centered_targets(X, Y)
    deficient = _rank_deficient(F)
    PF = system.solve(F)
    A = F.T @ PF
    b = PF.T @ Y0
    if F.shape[1] == 0:
        theta = np.zeros(0)
    elif deficient:
        theta = np.linalg.pinv(A, rcond=1e-10, hermitian=True) @ b
    else:
        try:
            theta = np.linalg.solve(0.5 * (A + A.T), b)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("normal matrix of the closed form is singular") from exc
    omega = system.solve(Y0 - F @ theta)
    result = EmbedResult(theta=theta, omega=omega, support=X, spec=spec, gamma=float(gamma),
                         method="affine_closed_form", rank_deficient=deficient)
    result.objective_trace = [reduced_objective(theta, X, Y, K, physics, gamma, system)]
    return result


def fit_ls(X, Y, physics):
    """Ordinary least squares on the affine features, no correction."""
    if not physics.is_affine:
        raise InvalidArgument("fit_ls needs a physics model with an affine feature map")
    X, Y = _prepare(X, Y)
    F = physics.feature_matrix(X)
    Y0 = physics.centered_targets(X, Y)
    theta = np.linalg.lstsq(F, Y0, rcond=None)[0] if F.shape[1] else np.zeros(0)
    return EmbedResult(theta=theta, omega=np.zeros(X.shape[0]), support=X, spec=None, gamma=0.0,
                       method="ls", rank_deficient=_rank_deficient(F))


def fit_dm(X, Y, physics, spec, gamma, K=None, system=None):
    """Two-step discrepancy modeling: least squares first, then KRR on its residuals."""
    X, Y = _prepare(X, Y)
    ls = fit_ls(X, Y, physics)
    resid = Y - (physics.predict(X, ls.theta) if physics.n_theta else 0.0)
    krr = fit_krr(X, resid, spec, gamma, K=K, system=system)
    return EmbedResult(theta=ls.theta, omega=krr.omega, support=X, spec=spec, gamma=float(gamma),
                       method="dm", rank_deficient=ls.rank_deficient)


def fit_krr_only(X, Y, spec, gamma, K=None, system=None):
    """Pure KRR baseline wrapped as an :class:`EmbedResult` with no parameters."""
    X, Y = _prepare(X, Y)
    krr = fit_krr(X, Y, spec, gamma, K=K, system=system)
    return EmbedResult(theta=np.zeros(0), omega=krr.omega, support=X, spec=spec,
                       gamma=float(gamma), method="krr_only")


def predict_embed(result, physics, spec, x):
    """``f(x, theta*) + sum_j w_j kappa(x, x_j)`` at a single input."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    base = 0.0 if result.theta.size == 0 else float(physics.predict(x[None, :], result.theta)[0])
    if spec is None or not np.any(result.omega):
        return base
    return base + float(kernel_row(spec, result.support, x) @ result.omega)

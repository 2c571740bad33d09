"""Quick oracle checks runnable from the command line."""
import numpy as np

from .embed import EmbedConfig, PhysicsModel, fit_affine, fit_nonlinear, psi_matrix, reduced_objective
from .kernels import KernelSpec, gram_matrix
from .linalg import SPDSolver
from .optim import central_gradient
from .oracles import kalman_filter, rts_smoother
from .smoother import NoiseConfig, StateSpaceModel, UtWeights, smooth


def random_spec(rng, d):
    family = ("gaussian", "laplacian", "polynomial", "linear")[rng.integers(4)]
    if family in ("gaussian", "laplacian"):
        return KernelSpec(family, sigma=float(rng.uniform(0.3, 3.0)))
    if family == "polynomial":
        return KernelSpec.polynomial(float(rng.uniform(0.5, 2.0)), int(rng.integers(1, 4)))
    M = rng.standard_normal((d, d))
    return KernelSpec.linear(M @ M.T / d)


def psi_identity_error(K, gamma):
    """Relative residuals of ``(K + gamma I) Psi = I`` and ``Psi1^T Psi1 + Psi2 = gamma Psi``."""
    T = K.shape[0]
    Psi = psi_matrix(K, gamma)
    I = np.eye(T)
    inv_err = np.linalg.norm((K + gamma * I) @ Psi - I) / np.linalg.norm(I)
    Psi1 = I - K @ Psi
    Psi2 = gamma * Psi.T @ K @ Psi
    lhs = Psi1.T @ Psi1 + Psi2
    id_err = np.linalg.norm(lhs - gamma * Psi) / np.linalg.norm(gamma * Psi)
    return float(inv_err), float(id_err)


def random_affine_instance(rng, T=None, n_theta=None):
    T = T or int(rng.integers(15, 40))
    n_theta = n_theta or int(rng.integers(1, 4))
    d = int(rng.integers(1, 3))
    X = rng.uniform(-2, 2, (T, d))
    W = rng.standard_normal((d, n_theta))
    offset_w = rng.standard_normal(d)

    def features(Z):
        return np.tanh(np.atleast_2d(Z) @ W) + 0.1 * np.atleast_2d(Z)[:, :1]

    def offset(Z):
        return np.atleast_2d(Z) @ offset_w * 0.3

    physics = PhysicsModel.affine(features, n_theta, offset=offset)
    theta = rng.standard_normal(n_theta)
    Y = physics.predict(X, theta) + 0.3 * np.sin(3 * X[:, 0]) + 0.05 * rng.standard_normal(T)
    spec = random_spec(rng, d)
    if spec.family in ("polynomial", "linear"):
        spec = KernelSpec.gaussian(1.0)
    gamma = float(10 ** rng.uniform(-1, 0.5))
    return X, Y, physics, spec, gamma


def random_linear_system(rng, T=50):
    A = rng.standard_normal((2, 2))
    A *= 0.9 / max(1.0, np.max(np.abs(np.linalg.eigvals(A))))
    B = rng.standard_normal(2)
    C = rng.standard_normal(2)
    D = float(rng.standard_normal())
    M = rng.standard_normal((2, 2))
    Pe = 0.05 * (M @ M.T) + 0.01 * np.eye(2)
    Pw = float(rng.uniform(0.05, 0.5))
    x0 = rng.standard_normal(2)
    P0 = 0.5 * np.eye(2)
    u = rng.standard_normal(T + 1)
    x = x0 + rng.multivariate_normal(np.zeros(2), P0)
    y = np.empty(T)
    for k in range(T):
        x = A @ x + B * u[k] + rng.multivariate_normal(np.zeros(2), Pe)
        y[k] = C @ x + D * u[k + 1] + np.sqrt(Pw) * rng.standard_normal()
    return dict(A=A, B=B, C=C, D=D, Pe=Pe, Pw=Pw, x0=x0, P0=P0, u=u, y=y)


def linear_ss_model(sys):
    A, B, C, D = sys["A"], sys["B"], sys["C"], sys["D"]
    return StateSpaceModel(f=lambda X, u, th: X @ A.T + np.outer(np.ones(len(X)), B) * u,
                           g=lambda X, u, th: X @ C + D * u, n=2, n_u=1, vectorized=True)


def smoother_oracle_error(sys):
    model = linear_ss_model(sys)
    noise = NoiseConfig(Pe=sys["Pe"], Pw=sys["Pw"], P0=sys["P0"], x0=sys["x0"])
    traj = smooth(model, None, noise, UtWeights.from_params(2), sys["u"], sys["y"])
    ms, Ps = kalman_filter(sys["A"], sys["B"], sys["C"], sys["D"], sys["Pe"], sys["Pw"], sys["x0"],
                           sys["P0"], sys["u"], sys["y"])
    sm, _ = rts_smoother(sys["A"], sys["B"], sys["Pe"], sys["x0"], sys["P0"], sys["u"], ms, Ps)
    return (float(np.max(np.abs(traj.filtered_means - ms))),
            float(np.max(np.abs(traj.smoothed_means - sm))))


def run_selftest(seed=0):
    """Returns a list of ``(name, passed, detail)``."""
    rng = np.random.default_rng([seed, 99])
    results = []

    worst = 0.0
    for _ in range(20):
        T = int(rng.integers(2, 30))
        d = int(rng.integers(1, 4))
        X = rng.standard_normal((T, d))
        K = gram_matrix(random_spec(rng, d), X)
        worst = max(worst, *psi_identity_error(K, float(10 ** rng.uniform(-2, 1))))
    results.append(("psi identities", worst <= 1e-9, f"max rel err {worst:.2e}"))

    worst = 0.0
    for _ in range(5):
        err_f, err_s = smoother_oracle_error(random_linear_system(rng))
        worst = max(worst, err_f, err_s)
    results.append(("unscented vs exact Kalman/RTS", worst <= 1e-8, f"max abs err {worst:.2e}"))

    worst = 0.0
    for _ in range(5):
        X, Y, physics, spec, gamma = random_affine_instance(rng)
        closed = fit_affine(X, Y, physics, spec, gamma)
        it = fit_nonlinear(X, Y, physics, EmbedConfig(gamma, spec, np.zeros(physics.n_theta)))
        worst = max(worst, np.linalg.norm(closed.theta - it.theta) / (1 + np.linalg.norm(closed.theta)))
    results.append(("closed form vs iterative", worst <= 1e-5, f"max rel diff {worst:.2e}"))

    worst = 0.0
    for _ in range(5):
        X, Y, physics, spec, gamma = random_affine_instance(rng)
        K = gram_matrix(spec, X)
        system = SPDSolver(K + gamma * np.eye(len(Y)))
        th = rng.standard_normal(physics.n_theta)
        p = lambda t: reduced_objective(t, X, Y, K, physics, gamma, system)
        g_fd = central_gradient(p, th)
        w = system.solve(Y - physics.predict(X, th))
        g_an = -2 * gamma * physics.feature_matrix(X).T @ w
        worst = max(worst, np.linalg.norm(g_fd - g_an) / max(1e-12, np.linalg.norm(g_an)))
    results.append(("objective gradient", worst <= 1e-4, f"max rel err {worst:.2e}"))
    return results

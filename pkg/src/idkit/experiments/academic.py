"""Static academic example: affine physics plus a smooth unmodeled term.

All randomness flows from a master seed through named streams:
``np.random.default_rng([master, STREAM_ID, run])``.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..embed import PhysicsModel, fit_affine, fit_dm, fit_krr_only, fit_ls
from ..errors import IdkitError, InvalidArgument, NumericalFailure
from ..kernels import KernelSpec, gram_matrix
from ..krr import regularized_system
from ..metrics import fit_percent, rmse

THETA_BAR = np.array([2.0, 3.0, 4.0, 1.5, -0.8])
METHODS = ("True", "LS", "DM", "KRR", "Proposed")

# reference hyperparameters for the fixed-hyperparameter comparison
PROPOSED_HP = (0.54, 0.11)
DM_HP = (0.1, 1e-2)
KRR_HP = (10.0, 1e-2)

STREAMS = {"data": 1, "perturb": 2}


def excitation(x):
    return np.sin(2 * np.pi * x) + 0.5 * np.cos(3 * np.pi * x)


def unmodeled(x):
    x = np.asarray(x, dtype=float)
    return (0.7 * np.sin(5 * x) + 0.5 * np.cos(3 * x) + 0.4 * x ** 2 + 0.3 * x ** 3
            - 0.2 * np.sin(7 * x) * np.cos(2 * x))


def features(X):
    x = np.asarray(X, dtype=float).reshape(-1)
    u = excitation(x)
    return np.column_stack([np.ones_like(x), x, u, x ** 2, u ** 2])


def physics_model():
    return PhysicsModel.affine(features, 5)


@dataclass
class Split:
    x: np.ndarray
    y: np.ndarray

    @property
    def X(self):
        return self.x[:, None]


@dataclass
class AcademicConfig:
    theta_bar: np.ndarray = field(default_factory=lambda: THETA_BAR.copy())
    noise_std: float = 0.1
    n_train: int = 500
    n_val: int = 250
    n_test: int = 250
    train_range: tuple = (-1.0, 1.0)
    val_range: tuple = (1.0, 2.0)
    test_range: tuple = (-2.0, -1.0)
    seed: int = 0
    include_delta: bool = True

    def __post_init__(self):
        self.theta_bar = np.asarray(self.theta_bar, dtype=float)
        if min(self.n_train, self.n_val, self.n_test) <= 0:
            raise InvalidArgument("split sizes must be positive")
        if self.noise_std < 0:
            raise InvalidArgument("noise_std must be non-negative")


def true_output(x, theta_bar, include_delta=True):
    out = features(x) @ theta_bar
    return out + unmodeled(x) if include_delta else out


def gen_academic(config, rng=None):
    """Draw the train/validation/test splits; deterministic under ``config.seed``."""
    if rng is None:
        rng = np.random.default_rng([config.seed, STREAMS["data"]])
    splits = []
    for n, (lo, hi) in ((config.n_train, config.train_range), (config.n_val, config.val_range),
                        (config.n_test, config.test_range)):
        x = rng.uniform(lo, hi, n)
        y = true_output(x, config.theta_bar, config.include_delta) + config.noise_std * rng.standard_normal(n)
        splits.append(Split(x, y))
    return tuple(splits)


@dataclass
class GridConfig:
    sigmas: np.ndarray = field(default_factory=lambda: np.logspace(-1, 1, 50))
    gammas: np.ndarray = field(default_factory=lambda: np.logspace(-3, 1, 50))

    def __post_init__(self):
        self.sigmas = np.atleast_1d(np.asarray(self.sigmas, dtype=float))
        self.gammas = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        for g in (self.sigmas, self.gammas):
            if g.size == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
                raise InvalidArgument("grids must be non-empty, positive and strictly increasing")

    @classmethod
    def sized(cls, n_sigma, n_gamma):
        return cls(np.logspace(-1, 1, n_sigma), np.logspace(-3, 1, n_gamma))


def _fitter(method):
    physics = physics_model()
    if method == "Proposed":
        return lambda tr, spec, gamma, K, system: fit_affine(tr.X, tr.y, physics, spec, gamma, K, system)
    if method == "DM":
        return lambda tr, spec, gamma, K, system: fit_dm(tr.X, tr.y, physics, spec, gamma, K, system)
    if method == "KRR":
        return lambda tr, spec, gamma, K, system: fit_krr_only(tr.X, tr.y, spec, gamma, K, system)
    raise InvalidArgument(f"no tunable fitter for {method!r}")


def grid_surfaces(train, val, grids, methods=("Proposed",), kernel="laplacian"):
    """Validation-RMSE surfaces for several methods sharing one factorization per cell.

    ``surfaces[m][i, j]`` is the RMSE of method ``m`` at ``(sigmas[i], gammas[j])``;
    cells that fail numerically stay at +inf.
    """
    physics = physics_model()
    fitters = {m: _fitter(m) for m in methods}
    surfaces = {m: np.full((grids.sigmas.size, grids.gammas.size), np.inf) for m in methods}
    for i, s in enumerate(grids.sigmas):
        spec = KernelSpec(kernel, sigma=s)
        K = gram_matrix(spec, train.X)
        for j, g in enumerate(grids.gammas):
            try:
                system = regularized_system(K, g)
            except IdkitError:
                continue
            for m, fit in fitters.items():
                try:
                    res = fit(train, spec, g, K, system)
                    r = rmse(val.y, res.predict(physics, val.X))
                except (IdkitError, np.linalg.LinAlgError):
                    continue
                if np.isfinite(r):
                    surfaces[m][i, j] = r
    return surfaces


def grid_search(train, val, grids, method="Proposed", kernel="laplacian"):
    """Validation-RMSE grid search over ``(sigma, gamma)``.

    Returns ``(sigma_star, gamma_star, surface)`` with ``surface[i, j]`` the
    RMSE at ``(sigmas[i], gammas[j])``. Ties prefer the larger gamma, then the
    larger sigma.
    """
    surface = grid_surfaces(train, val, grids, (method,), kernel)[method]
    i, j = select_cell(surface)
    return float(grids.sigmas[i]), float(grids.gammas[j]), surface


def select_cell(surface):
    """Index of the minimum; ties go to larger gamma (column), then larger sigma (row)."""
    best = np.min(surface)
    if not np.isfinite(best):
        raise NumericalFailure("every grid cell failed")
    rows, cols = np.nonzero(surface == best)
    order = np.lexsort((rows, cols))
    k = order[-1]
    return int(rows[k]), int(cols[k])


def gamma_sweep(train, val, sigma, gammas, kernel="laplacian"):
    """Validation RMSE of the proposed estimator against gamma at fixed sigma."""
    grids = GridConfig(np.array([sigma]), gammas)
    _, _, surface = grid_search(train, val, grids, "Proposed", kernel)
    return surface[0]


def evaluate_methods(train, test, theta_bar, hyper, kernel="laplacian", include_delta=True):
    """Fit every method and score it on ``test``.

    ``hyper`` maps method name to ``(sigma, gamma)``. Returns
    ``{method: {"theta": ..., "rmse": ..., "fit": ..., "theta_err": ...}}``.
    """
    physics = physics_model()
    out = {}
    y_true = true_output(test.x, theta_bar, include_delta)
    out["True"] = _scores(test.y, y_true, theta_bar, theta_bar)
    ls = fit_ls(train.X, train.y, physics)
    out["LS"] = _scores(test.y, ls.predict(physics, test.X), ls.theta, theta_bar)
    for method in ("DM", "KRR", "Proposed"):
        s, g = hyper[method]
        res = _fitter(method)(train, KernelSpec(kernel, sigma=s), g, None, None)
        theta = res.theta if res.theta.size else None
        out[method] = _scores(test.y, res.predict(physics, test.X), theta, theta_bar)
    return out


def _scores(y, y_hat, theta, theta_bar):
    err = float(np.linalg.norm(theta_bar - theta)) if theta is not None else float("nan")
    return {"theta": None if theta is None else np.asarray(theta, dtype=float), "rmse": rmse(y, y_hat),
            "fit": fit_percent(y, y_hat), "theta_err": err}


def table1(config=None, hyper=None, kernel="laplacian"):
    """Table-I style comparison at fixed hyperparameters on one data draw."""
    config = config or AcademicConfig()
    hyper = hyper or {"Proposed": PROPOSED_HP, "DM": DM_HP, "KRR": KRR_HP}
    train, _, test = gen_academic(config)
    return evaluate_methods(train, test, config.theta_bar, hyper, kernel, config.include_delta)


def perturbed_theta(theta_bar, rng):
    return theta_bar + rng.uniform(-0.5, 0.5, theta_bar.size) * np.abs(theta_bar)


def mc_run(args):
    """One Monte Carlo replicate; module-level so it can cross a process boundary."""
    master, run, base, grids, kernel = args
    rng_theta = np.random.default_rng([master, STREAMS["perturb"], run])
    theta = perturbed_theta(base.theta_bar, rng_theta)
    cfg = replace(base, theta_bar=theta)
    train, val, test = gen_academic(cfg, np.random.default_rng([master, STREAMS["data"], run]))
    hyper = {}
    for method, surface in grid_surfaces(train, val, grids, ("Proposed", "DM", "KRR"), kernel).items():
        i, j = select_cell(surface)
        hyper[method] = (float(grids.sigmas[i]), float(grids.gammas[j]))
    scores = evaluate_methods(train, test, theta, hyper, kernel, base.include_delta)
    return {"run": run, "hyper": hyper, "scores": scores}


def monte_carlo(n_runs, base=None, grids=None, master_seed=0, jobs=1, kernel="laplacian",
                max_failure_rate=0.01):
    """Replicates with perturbed true parameters and per-run hyperparameter tuning.

    Returns ``(summary, runs, n_failed)`` where ``summary[method][metric]`` is
    ``(mean, std)`` over successful runs.
    """
    if n_runs < 1:
        raise InvalidArgument("n_runs must be at least 1")
    base = base or AcademicConfig()
    grids = grids or GridConfig.sized(10, 10)
    tasks = [(master_seed, r, base, grids, kernel) for r in range(n_runs)]
    runs, failed = [], 0
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(mc_run, t) for t in tasks]
            outcomes = []
            for fut in futures:
                try:
                    outcomes.append(fut.result())
                except IdkitError:
                    outcomes.append(None)
    else:
        outcomes = []
        for t in tasks:
            try:
                outcomes.append(mc_run(t))
            except IdkitError:
                outcomes.append(None)
    for o in outcomes:
        if o is None:
            failed += 1
        else:
            runs.append(o)
    if failed > max_failure_rate * n_runs:
        raise NumericalFailure(f"{failed} of {n_runs} Monte Carlo runs failed")
    return summarize(runs), runs, failed


def summarize(runs):
    summary = {}
    for method in METHODS:
        summary[method] = {}
        for metric in ("theta_err", "fit", "rmse"):
            vals = np.array([r["scores"][method][metric] for r in runs], dtype=float)
            if np.all(np.isnan(vals)):
                summary[method][metric] = (float("nan"), float("nan"))
            else:
                summary[method][metric] = (float(np.nanmean(vals)), float(np.nanstd(vals)))
    return summary

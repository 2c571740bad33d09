"""Cascaded two-tank benchmark.

Discretized model with sampling time ``Ts``::

    x1' = x1 + Ts (-k1 sqrt(x1) + k4 u)
    x2' = x2 + Ts ( k2 sqrt(x1) - k3 sqrt(x2))
    y   = x2

The upper-tank level ``x1`` is hidden. The output predictor uses
``z_t = [x1_{t-1}, y_t, u_{t-1}]`` and targets ``y_{t+1}``, substituting the
measured ``y_t`` for the lower-tank level.
"""
import csv
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..embed import EmbedConfig, OptimizerConfig, PhysicsModel
from ..errors import InvalidArgument
from ..kernels import KernelSpec
from ..smoother import NoiseConfig, StateSpaceModel, UtWeights
from ..ss_pipeline import CtsLayout, IOData, evaluate_prediction, evaluate_simulation, run_algorithm1

TS = 4.0
THETA0 = np.full(4, 0.05)


class CascadedTanks:
    """Tank dynamics with a counted guard on square roots of negative levels."""

    def __init__(self, Ts=TS):
        self.Ts = float(Ts)
        self.guard_hits = 0

    def sqrt(self, v):
        v = np.asarray(v, dtype=float)
        neg = v < 0
        if np.any(neg):
            self.guard_hits += int(np.count_nonzero(neg))
            v = np.where(neg, 0.0, v)
        return np.sqrt(v)

    def f(self, X, u, k):
        X = np.atleast_2d(X)
        x1, x2 = X[:, 0], X[:, 1]
        Ts = self.Ts
        return np.column_stack([x1 + Ts * (-k[0] * self.sqrt(x1) + k[3] * u),
                                x2 + Ts * (k[1] * self.sqrt(x1) - k[2] * self.sqrt(x2))])

    def g(self, X, u, k):
        return np.atleast_2d(X)[:, 1]

    def xi(self, Z, k):
        Z = np.atleast_2d(Z)
        x1, y, u = Z[:, 0], Z[:, 1], Z[:, 2]
        Ts = self.Ts
        x1_next = x1 + Ts * (-k[0] * self.sqrt(x1) + k[3] * u)
        return y + Ts * k[1] * self.sqrt(x1_next) - Ts * k[2] * self.sqrt(y)

    def state_space_model(self):
        return StateSpaceModel(f=self.f, g=self.g, n=2, n_u=1, vectorized=True)

    def physics_model(self, lower=None, upper=None):
        return PhysicsModel(f=self.xi, n_theta=4, lower=lower, upper=upper)


@dataclass
class CtsDataset:
    u_est: np.ndarray
    y_est: np.ndarray
    u_val: np.ndarray
    y_val: np.ndarray
    Ts: float = TS

    def __post_init__(self):
        for name in ("u_est", "y_est", "u_val", "y_val"):
            arr = np.asarray(getattr(self, name), dtype=float).ravel()
            if not np.all(np.isfinite(arr)):
                raise InvalidArgument(f"{name} contains non-finite values")
            setattr(self, name, arr)
        if self.u_est.size != self.y_est.size or self.u_val.size != self.y_val.size:
            raise InvalidArgument("inputs and outputs must have equal lengths")

    @property
    def estimation(self):
        return IOData(self.u_est, self.y_est)

    @property
    def validation(self):
        return IOData(self.u_val, self.y_val)


def read_io_csv(path):
    """Two-column ``u,y`` CSV with one header line."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        if "u" not in header or "y" not in header:
            raise InvalidArgument(f"{path}: header must contain columns u and y")
        iu, iy = header.index("u"), header.index("y")
        rows = [(float(r[iu]), float(r[iy])) for r in reader if r]
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def load_cts(data_dir):
    u_est, y_est = read_io_csv(os.path.join(data_dir, "cts_est.csv"))
    u_val, y_val = read_io_csv(os.path.join(data_dir, "cts_val.csv"))
    return CtsDataset(u_est, y_est, u_val, y_val)


def has_cts_data(data_dir):
    return data_dir is not None and all(
        os.path.isfile(os.path.join(data_dir, f)) for f in ("cts_est.csv", "cts_val.csv"))


@dataclass
class CtsConfig:
    gamma: float = 0.1
    sigma: float = 11.0
    theta0: np.ndarray = field(default_factory=lambda: THETA0.copy())
    Pe: np.ndarray = field(default_factory=lambda: 1e-3 * np.eye(2))
    Pw: float = 1e-2
    P0: np.ndarray = field(default_factory=lambda: 0.5 * np.eye(2))
    weights: UtWeights = None
    state_params: str = "nominal"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    Ts: float = TS


@dataclass
class CtsVariant:
    name: str
    theta: np.ndarray
    x0_smoothed: np.ndarray
    converged: bool
    est_prediction_rmse: float
    val_prediction_rmse: float
    est_simulation: tuple
    val_simulation: tuple

    def rows(self):
        return [
            ("estimation", "prediction", self.est_prediction_rmse, float("nan")),
            ("estimation", "simulation", *self.est_simulation),
            ("validation", "prediction", self.val_prediction_rmse, float("nan")),
            ("validation", "simulation", *self.val_simulation),
        ]


def run_variant(dataset, config, use_kernel, tanks=None):
    tanks = tanks or CascadedTanks(config.Ts)
    est, val = dataset.estimation, dataset.validation
    y0 = est.y[0]
    noise = NoiseConfig(Pe=config.Pe, Pw=config.Pw, P0=config.P0, x0=np.array([y0, y0]))
    weights = config.weights or UtWeights.from_params(2)
    spec = KernelSpec.gaussian(config.sigma) if use_kernel else None
    embed_cfg = EmbedConfig(gamma=config.gamma, spec=spec, theta0=config.theta0, optimizer=config.optimizer)
    predictor, smoothed, result = run_algorithm1(
        est, tanks.state_space_model(), noise, weights, embed_cfg, layout=CtsLayout(),
        physics=tanks.physics_model(), state_params=config.state_params)
    x1_est = smoothed.smoothed_means[0, 0]
    # validation has no smoothed states; the hidden level starts from the first measurement
    x1_val = val.y[0]
    return CtsVariant(
        name="kernel" if use_kernel else "physics-only",
        theta=result.theta,
        x0_smoothed=smoothed.smoothed_means[0].copy(),
        converged=result.converged,
        est_prediction_rmse=evaluate_prediction(predictor, est, states=smoothed),
        val_prediction_rmse=evaluate_prediction(predictor, val, x0=x1_val),
        est_simulation=evaluate_simulation(predictor, est, x1_est),
        val_simulation=evaluate_simulation(predictor, val, x1_val),
    ), predictor, smoothed


def run_cts(dataset, config=None, variants=("physics-only", "kernel")):
    """Both model variants on estimation and validation data.

    Returns ``{variant_name: CtsVariant}``. Square-root guard activations are
    reported as a single warning.
    """
    config = config or CtsConfig()
    tanks = CascadedTanks(config.Ts)
    out = {}
    for name in variants:
        out[name] = run_variant(dataset, config, name == "kernel", tanks)[0]
    if tanks.guard_hits:
        warnings.warn(f"square root of a negative level clipped {tanks.guard_hits} times", RuntimeWarning)
    return out


# synthetic benchmark used when the public recordings are not available

SYNTH_THETA = THETA0.copy()


def synthetic_delta(x, u, Ts=TS, c=0.02, level=7.0):
    """Smooth extra outflow from the lower tank once it fills past ``level``."""
    return np.array([0.0, -Ts * c * 0.5 * np.logaddexp(0.0, 2.0 * (x[1] - level))])


def gen_synthetic_cts(seed=0, theta=None, delta=synthetic_delta, n=1024, process_std=1e-3,
                      meas_std=5e-3, u_range=(1.0, 4.0), hold=10, Ts=TS):
    """Estimation and validation records simulated from the tank model plus ``delta``.

    The input is piecewise constant with random levels held for ``hold``
    samples; both tanks start at the steady state of the first input level.
    The default true parameters equal the nominal ones, so the smoother's model
    is exact up to ``delta``.
    """
    theta = SYNTH_THETA if theta is None else np.asarray(theta, dtype=float)
    tanks = CascadedTanks(Ts)
    rng = np.random.default_rng([seed, 3])
    records = []
    for _ in range(2):
        u = np.repeat(rng.uniform(*u_range, n // hold + 1), hold)[:n]
        x = np.empty((n, 2))
        s1 = (theta[3] * u[0] / theta[0]) ** 2
        x[0] = [s1, s1 * (theta[1] / theta[2]) ** 2]
        for t in range(n - 1):
            x[t + 1] = (tanks.f(x[t], u[t], theta)[0] + delta(x[t], u[t], Ts)
                        + process_std * rng.standard_normal(2))
        y = x[:, 1] + meas_std * rng.standard_normal(n)
        records.append((u, y))
    (u_est, y_est), (u_val, y_val) = records
    return CtsDataset(u_est, y_est, u_val, y_val, Ts=Ts)

"""Identification of partially observed state-space models.

Pipeline: smooth the hidden states with the nominal model, build regressors
from the smoothed states and the measured signals, then fit the output
predictor ``y_t = xi(z_t, theta) + delta(z_t)`` with the embedding estimator.

Two regressor layouts are provided. ``general`` uses
``z_t = [x_{t-1}, u_{t-1}, u_t]`` with target ``y_t``; ``cts`` uses
``z_t = [x_{1,t-1}, y_t, u_{t-1}]`` with target ``y_{t+1}`` for models whose
second state is measured directly.
"""
from dataclasses import dataclass, field

import numpy as np

from .embed import PhysicsModel, fit_affine, fit_nonlinear
from .errors import IdkitError, InvalidArgument
from .kernels import kernel_row
from .metrics import fit_percent, rmse
from .smoother import SmoothedTrajectory, smooth


@dataclass
class IOData:
    u: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.u.shape[0] != self.y.size:
            raise InvalidArgument("u and y must have the same number of samples")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.y))):
            raise InvalidArgument("data contains non-finite samples")

    def __len__(self):
        return self.y.size

    @property
    def u2(self):
        return self.u[:, None] if self.u.ndim == 1 else self.u


def _states2(states):
    if isinstance(states, SmoothedTrajectory):
        states = states.smoothed_means
    states = np.asarray(states, dtype=float)
    return states[:, None] if states.ndim == 1 else states


class GeneralLayout:
    name = "general"
    min_samples = 2

    def build(self, states, u, y):
        X, u, y = _states2(states), _u2(u), np.asarray(y, dtype=float).ravel()
        N = y.size
        last = min(N - 1, u.shape[0] - 1, X.shape[0])
        if N < self.min_samples or last < 1:
            raise InvalidArgument("horizon too short to form lagged regressors")
        t = np.arange(1, last + 1)
        Z = np.column_stack([X[t - 1], u[t - 1], u[t]])
        return Z, y[t], t

    def open_loop_states(self, model, theta, x0, u, y):
        u = _u2(u)
        X = np.empty((u.shape[0], model.n))
        X[0] = x0
        for t in range(1, u.shape[0]):
            X[t] = model.propagate(X[t - 1][None, :], _squeeze(u[t - 1]), theta)[0]
        return X

    def simulate(self, predictor, data, x0):
        # outputs never enter z here, so free run equals prediction on open-loop states
        X = self.open_loop_states(predictor.ss_model, predictor.state_theta, x0, data.u2, data.y)
        Z, target, t = self.build(X, data.u2, data.y)
        return predictor.predict(Z), target


class CtsLayout:
    """Hidden first state, measured second state: ``z_t = [x_{1,t-1}, y_t, u_{t-1}]``."""

    name = "cts"
    min_samples = 3

    def __init__(self, hidden=0, measured=1):
        self.hidden = hidden
        self.measured = measured

    def build(self, states, u, y):
        X, u, y = _states2(states), _u2(u), np.asarray(y, dtype=float).ravel()
        N = y.size
        if N < self.min_samples:
            raise InvalidArgument("horizon too short to form lagged regressors")
        t = np.arange(1, N - 1)
        hidden = X[:, self.hidden] if X.shape[1] > self.hidden else X[:, 0]
        Z = np.column_stack([hidden[t - 1], y[t], u[t - 1]])
        return Z, y[t + 1], t + 1

    def _step_hidden(self, model, theta, x1, y_prev, u_prev):
        x = np.zeros(model.n)
        x[self.hidden], x[self.measured] = x1, y_prev
        return model.propagate(x[None, :], _squeeze(u_prev), theta)[0][self.hidden]

    def open_loop_states(self, model, theta, x0, u, y):
        u = _u2(u)
        N = u.shape[0]
        x1 = np.empty(N)
        x1[0] = x0
        for t in range(1, N):
            x1[t] = self._step_hidden(model, theta, x1[t - 1], y[t - 1], u[t - 1])
        return x1[:, None]

    def simulate(self, predictor, data, x0):
        u, y = data.u2, data.y
        N = y.size
        if N < self.min_samples:
            raise InvalidArgument("horizon too short to simulate")
        y_hat = np.empty(N)
        y_hat[:2] = y[:2]
        x1 = float(x0)
        model, theta = predictor.ss_model, predictor.state_theta
        for t in range(1, N - 1):
            z = np.concatenate([[x1, y_hat[t]], u[t - 1]])
            y_hat[t + 1] = predictor.predict_one(z)
            x1 = self._step_hidden(model, theta, x1, y_hat[t - 1], u[t - 1])
            if not np.isfinite(x1) or not np.isfinite(y_hat[t + 1]):
                y_hat[t + 2:] = np.nan
                break
        return y_hat[2:], y[2:]


LAYOUTS = {"general": GeneralLayout, "cts": CtsLayout}


def _u2(u):
    u = np.asarray(u, dtype=float)
    return u[:, None] if u.ndim == 1 else u


def _squeeze(u_t):
    return u_t[0] if u_t.size == 1 else u_t


def _layout(layout):
    if isinstance(layout, str):
        if layout not in LAYOUTS:
            raise InvalidArgument(f"unknown layout {layout!r}")
        return LAYOUTS[layout]()
    return layout


def build_regressors(smoothed, u, y, layout="general"):
    """Return ``(Z, targets, target_index)`` for the chosen layout."""
    return _layout(layout).build(smoothed, u, y)


def compose_xi(ss_model, layout):
    """``xi(z, theta) = g(f(x, u_{t-1}, theta), u_t, theta)`` for the general layout."""
    if _layout(layout).name != "general":
        raise InvalidArgument("an explicit xi is required for non-general layouts")
    n, n_u = ss_model.n, ss_model.n_u

    def xi(Z, theta):
        out = np.empty(Z.shape[0])
        for i, z in enumerate(Z):
            x, u_prev, u_now = z[:n], z[n:n + n_u], z[n + n_u:]
            x_next = ss_model.propagate(x[None, :], _squeeze(u_prev), theta)
            out[i] = ss_model.observe(x_next, _squeeze(u_now), theta)[0]
        return out

    return xi


@dataclass
class PredictorModel:
    """Fitted output predictor plus what is needed to run it in free simulation."""

    physics: PhysicsModel
    result: object
    layout: object
    ss_model: object
    state_theta: np.ndarray
    notes: dict = field(default_factory=dict)

    @property
    def theta(self):
        return self.result.theta

    def predict(self, Z):
        return self.result.predict(self.physics, Z)

    def predict_one(self, z):
        z = np.asarray(z, dtype=float)
        val = float(self.physics.predict(z[None, :], self.result.theta)[0]) if self.result.theta.size else 0.0
        if self.result.spec is not None and np.any(self.result.omega):
            val += float(kernel_row(self.result.spec, self.result.support, z) @ self.result.omega)
        return val

    def physics_only(self):
        """Same parameters with the kernel correction dropped."""
        stripped = type(self.result)(**{**self.result.__dict__, "omega": np.zeros_like(self.result.omega)})
        return PredictorModel(self.physics, stripped, self.layout, self.ss_model, self.state_theta, dict(self.notes))


def _stage(label, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except IdkitError as exc:
        exc.args = (f"[{label}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


def run_algorithm1(data, ss_model, noise, weights, config, layout="general", physics=None,
                   state_params="nominal"):
    """Smooth, build regressors, and fit ``theta`` and ``delta`` jointly.

    ``physics`` maps regressors to outputs; when omitted it is composed from the
    state-space model (general layout only). An affine ``physics`` is solved in
    closed form. ``state_params`` selects the parameters used later to
    propagate hidden states open loop: ``"nominal"`` keeps ``config.theta0``
    (the smoothing model), ``"identified"`` uses the fitted ``theta``.
    Returns ``(predictor, smoothed, result)``.
    """
    layout = _layout(layout)
    if len(data) < layout.min_samples:
        raise InvalidArgument("horizon too short")
    if state_params not in ("nominal", "identified"):
        raise InvalidArgument("state_params must be 'nominal' or 'identified'")
    theta0 = np.asarray(config.theta0, dtype=float)
    smoothed = _stage("smoothing", smooth, ss_model, theta0, noise, weights, data.u2, data.y[1:])
    Z, target, _ = _stage("regressors", layout.build, smoothed, data.u2, data.y)
    if physics is None:
        physics = PhysicsModel(f=compose_xi(ss_model, layout), n_theta=theta0.size)
    if physics.is_affine and config.spec is not None:
        result = _stage("identification", fit_affine, Z, target, physics, config.spec, config.gamma)
    else:
        result = _stage("identification", fit_nonlinear, Z, target, physics, config)
    state_theta = theta0 if state_params == "nominal" else result.theta
    predictor = PredictorModel(physics=physics, result=result, layout=layout, ss_model=ss_model,
                               state_theta=np.array(state_theta, dtype=float),
                               notes={"state_params": state_params})
    return predictor, smoothed, result


def prediction_regressors(model, data, states=None, x0=None):
    """Regressors for one-step prediction.

    ``states`` (e.g. smoothed training states) are used when given; otherwise
    hidden states are propagated open loop from ``x0`` with the measured outputs.
    """
    if states is None:
        if x0 is None:
            raise InvalidArgument("need either states or an initial hidden state")
        states = model.layout.open_loop_states(model.ss_model, model.state_theta, x0, data.u2, data.y)
    return model.layout.build(states, data.u2, data.y)


def evaluate_prediction(model, data, states=None, x0=None):
    """One-step-ahead RMSE with measured outputs inside the regressors."""
    Z, target, _ = prediction_regressors(model, data, states, x0)
    return rmse(target, model.predict(Z))


def evaluate_simulation(model, data, x0):
    """Free-run simulation from hidden initial state ``x0``; returns ``(rmse, fit)``.

    A diverged run scores ``(inf, -inf)``.
    """
    y_hat, target = model.layout.simulate(model, data, x0)
    if not np.all(np.isfinite(y_hat)):
        return float("inf"), float("-inf")
    return rmse(target, y_hat), fit_percent(target, y_hat)


def simulate(model, data, x0):
    """Free-run output trajectory aligned with the layout's targets."""
    return model.layout.simulate(model, data, x0)

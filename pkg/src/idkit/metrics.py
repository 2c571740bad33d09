import numpy as np

from .errors import DegenerateDenominator, InvalidArgument


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape or y.size == 0:
        raise InvalidArgument(f"need equal non-empty lengths, got {y.size} and {y_hat.size}")
    return y, y_hat


def rmse(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def fit_percent(y, y_hat):
    """``100 (1 - ||y - y_hat|| / ||y - mean(y)||)``.

    A constant target is scored 100 when matched exactly and rejected otherwise.
    """
    y, y_hat = _pair(y, y_hat)
    err = np.linalg.norm(y - y_hat)
    spread = np.linalg.norm(y - y.mean())
    if spread == 0:
        if err == 0:
            return 100.0
        raise DegenerateDenominator("target has zero spread; fit percentage undefined")
    return float(100.0 * (1.0 - err / spread))

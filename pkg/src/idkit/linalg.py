"""Cholesky factorization with a jitter-escalation ladder."""
import numpy as np
import scipy.linalg as sla

from .errors import NumericalFailure

MAX_RETRIES = 3


def default_jitter(A):
    n = A.shape[0]
    return 1e-10 * max(np.trace(A) / n, np.finfo(float).tiny)


def cholesky(A, jitter=0.0, lower=True):
    """Cholesky factor of a symmetric matrix, retrying with added diagonal jitter.

    The first attempt uses ``jitter`` (default 0). On failure the jitter is set
    to ``1e-10 * trace(A) / n`` and multiplied by 10 per retry, at most three
    retries. Returns ``(L, jitter_used)``.
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("matrix contains non-finite entries")
    eye = np.eye(A.shape[0])
    j = float(jitter)
    for attempt in range(MAX_RETRIES + 1):
        try:
            L = sla.cholesky(A + j * eye if j else A, lower=lower, check_finite=False)
            return L, j
        except np.linalg.LinAlgError:
            j = default_jitter(A) if j == 0 else j * 10.0
    raise NumericalFailure(f"Cholesky failed after {MAX_RETRIES} jitter retries (last jitter {j:.3g})")


class SPDSolver:
    """Cached factorization of a symmetric positive-definite matrix."""

    def __init__(self, A, jitter=0.0):
        L, self.jitter = cholesky(A, jitter=jitter, lower=True)
        self._factor = (L, True)
        self.n = L.shape[0]

    def solve(self, b):
        return sla.cho_solve(self._factor, b, check_finite=False)

    def inverse(self):
        inv = self.solve(np.eye(self.n))
        return 0.5 * (inv + inv.T)

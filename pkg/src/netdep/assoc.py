"""Association measures and tests for a pair of vectors."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba
import numpy as np
from scipy import stats

from .errors import DegenerateRegressorError, ParameterError


class Method(str, enum.Enum):
    OLS_T = "OLS_T"
    DCORR_PERM = "DCORR_PERM"
    NAM_WALD = "NAM_WALD"
    NAM_LR = "NAM_LR"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: Method

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ParameterError(f"p-value must lie in [0, 1], got {self.p_value}")
        object.__setattr__(self, "method", Method(self.method))

    def to_json(self) -> dict:
        return {"method": self.method.value, "statistic": self.statistic, "p_value": self.p_value}


def _vector(v, name: str) -> np.ndarray:
    out = np.asarray(v, dtype=float)
    if out.ndim != 1:
        raise ParameterError(f"{name} must be one-dimensional, got shape {out.shape}")
    return out


def ols_test(X, Y) -> TestResult:
    """Two-sided t-test of the slope in ``Y = a + b X + e``.

    The statistic is the slope estimate; the p-value uses ``n - 2`` degrees
    of freedom.
    """
    x, y = _vector(X, "X"), _vector(Y, "Y")
    n = x.shape[0]
    if y.shape[0] != n:
        raise ParameterError("X and Y must have the same length")
    if n < 3:
        raise ParameterError(f"need at least 3 observations, got {n}")
    xc, yc = x - x.mean(), y - y.mean()
    sxx = xc @ xc
    if sxx <= 1e-300 or np.ptp(x) == 0:
        raise DegenerateRegressorError("X is constant; the slope is not identified")
    slope = (xc @ yc) / sxx
    resid = yc - slope * xc
    s2 = (resid @ resid) / (n - 2)
    se = np.sqrt(s2 / sxx)
    if se == 0:
        p = 0.0
    else:
        p = float(2.0 * stats.t.sf(abs(slope / se), n - 2))
    return TestResult(float(slope), min(max(p, 0.0), 1.0), Method.OLS_T)


def _centered_distances(v: np.ndarray) -> np.ndarray:
    d = np.abs(v[:, None] - v[None, :])
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def distance_correlation(X, Y) -> float:
    """Sample distance correlation of two univariate samples.

    Built from the double-centred absolute-difference matrices; returns 0 when
    either sample has zero distance variance.
    """
    x, y = _vector(X, "X"), _vector(Y, "Y")
    if x.shape[0] != y.shape[0]:
        raise ParameterError("X and Y must have the same length")
    if x.shape[0] < 2:
        raise ParameterError("need at least 2 observations")
    a, b = _centered_distances(x), _centered_distances(y)
    dvar_x, dvar_y = np.vdot(a, a), np.vdot(b, b)
    if dvar_x <= 0 or dvar_y <= 0:
        return 0.0
    dcov = max(np.vdot(a, b), 0.0)
    return float(min(np.sqrt(dcov / np.sqrt(dvar_x * dvar_y)), 1.0))


@numba.njit(cache=True)
def _permuted_cross_sums(centered_x, y, perms):  # pragma: no cover - compiled
    # sum_ij Ax[i, j] |y[p[i]] - y[p[j]]| for each permutation row p
    n_perm, n = perms.shape
    out = np.empty(n_perm)
    for b in range(n_perm):
        p = perms[b]
        s = 0.0
        for i in range(n):
            yi = y[p[i]]
            row = centered_x[i]
            for j in range(i + 1, n):
                s += row[j] * abs(yi - y[p[j]])
        out[b] = 2.0 * s
    return out


def dcorr_test(X, Y, permutations: int = 199, seed=None) -> TestResult:
    """Permutation test of independence based on distance correlation.

    ``Y`` is shuffled ``permutations`` times; the p-value is
    ``(1 + #{permuted >= observed}) / (permutations + 1)``. Because the
    distance variance of ``Y`` is permutation invariant only the cross term
    ``sum_ij A_ij |y_pi(i) - y_pi(j)|`` has to be recomputed.
    """
    if permutations < 99:
        raise ParameterError(f"at least 99 permutations are required, got {permutations}")
    x, y = _vector(X, "X"), _vector(Y, "Y")
    observed = distance_correlation(x, y)
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    perms = np.empty((permutations + 1, n), dtype=np.int64)
    perms[0] = np.arange(n)
    for b in range(1, permutations + 1):
        perms[b] = rng.permutation(n)
    sums = _permuted_cross_sums(np.ascontiguousarray(_centered_distances(x)), y, perms)
    # ties within rounding of the observed sum count as exceedances
    threshold = sums[0] - 1e-12 * max(abs(sums[0]), 1.0)
    exceed = int(np.count_nonzero(sums[1:] >= threshold))
    return TestResult(observed, (1 + exceed) / (permutations + 1), Method.DCORR_PERM)

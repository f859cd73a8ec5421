"""Linear mixed model with a polynomial-in-adjacency covariance.

``Y = beta X + u + eps`` with ``Var(Y) = V = s0 I + s1 A + ... + sd A^d``.

With ``A = U diag(lambda) U^T`` the covariance is diagonal in the rotated
coordinates ``Z = U^T (Y - beta X)``, so after one eigendecomposition each
likelihood evaluation costs ``O(n d)``:

    l = -(n/2) ln(2 pi) - 1/2 sum_i ln p(lambda_i) - 1/2 sum_i Z_i^2 / p(lambda_i)

where ``p(lambda) = s0 + s1 lambda + ... + sd lambda^d``.

Fitting profiles ``beta`` out by generalized least squares and searches the
variance components with Nelder-Mead in an unconstrained parameterization
(``log`` of ``s0`` above a floor of ``1e-10 * s2``, inverse softplus for
``s1..sd``), restarted from three starting points:

``equal``
    every component equal to ``0.1 * s2``;
``s0-dominant``
    ``s0 = s2`` and every other component ``1e-3 * s2``;
``moments``
    least-squares regression of ``Z_i^2`` on ``(1, lambda_i, ..., lambda_i^d)``,
    clipped to the admissible region (replaced by ``s0-dominant`` if the
    clipped point is not positive definite);

where ``s2`` is the mean square of the OLS residual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .covariance import PolynomialCovarianceSpec, polynomial_covariance, spectral_whiten
from .errors import ContractViolation, DefinitenessError, ParameterError
from .graph import AdjacencyMatrix, SpectralDecomposition, eigendecompose

log = logging.getLogger(__name__)

MAX_ITERATIONS = 500
LOGLIK_TOLERANCE = 1e-8
_LOG_2PI = math.log(2.0 * math.pi)
_PENALTY = 1e300
#: Lower bound on s0 relative to the mean square of the OLS residual.
S0_RELATIVE_FLOOR = 1e-10


@dataclass(frozen=True)
class LmmFit:
    beta: float
    variance_components: tuple[float, ...]
    loglik: float
    converged: bool
    iterations: int
    d: int
    start_logliks: dict = field(default_factory=dict, compare=False)

    @property
    def spec(self) -> PolynomialCovarianceSpec:
        return PolynomialCovarianceSpec(self.variance_components)

    def to_json(self) -> dict:
        return {
            "beta": self.beta,
            "variance_components": list(self.variance_components),
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "d": self.d,
        }


def _residual(Y, X, beta) -> np.ndarray:
    y = np.asarray(Y, dtype=float)
    if y.ndim != 1:
        raise ParameterError("Y must be one-dimensional")
    if X is None:
        return y
    x = np.asarray(X, dtype=float)
    if x.shape != y.shape:
        raise ParameterError("X and Y must have the same length")
    return y - beta * x


def lmm_loglik_direct(Y, X, beta: float, spec: PolynomialCovarianceSpec, A: AdjacencyMatrix) -> float:
    """Gaussian log-likelihood with ``V`` assembled densely and Cholesky-factored."""
    r = _residual(Y, X, beta)
    if r.shape[0] != A.n:
        raise ParameterError(f"network has {A.n} nodes but Y has length {r.shape[0]}")
    v = polynomial_covariance(A, spec, method="direct")
    factor = scipy.linalg.cho_factor(v, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    quad = r @ scipy.linalg.cho_solve(factor, r)
    return float(-0.5 * (r.shape[0] * _LOG_2PI + logdet + quad))


def _spectral_loglik(z: np.ndarray, s: np.ndarray) -> float:
    return float(-0.5 * (z.shape[0] * _LOG_2PI + np.sum(np.log(s)) + np.sum(z * z / s)))


def lmm_loglik_spectral(Y, X, beta: float, spec: PolynomialCovarianceSpec, decomp: SpectralDecomposition) -> float:
    """The same log-likelihood evaluated in the eigenbasis of ``A``; no matrix is inverted."""
    r = _residual(Y, X, beta)
    if r.shape[0] != decomp.n:
        raise ParameterError(f"decomposition has {decomp.n} nodes but Y has length {r.shape[0]}")
    s = spec.check_definite(decomp.eigenvalues)
    return _spectral_loglik(decomp.rotate(r), s)


def _softplus(t):
    return np.logaddexp(0.0, t)


def _softplus_inv(c: float) -> float:
    if c <= 0:
        return -745.0
    if c > 30:
        return c
    return math.log(math.expm1(c)) if c > 1e-300 else math.log(c)


class _Problem:
    """Rotated data and eigenvalue powers for repeated likelihood evaluation."""

    def __init__(self, zy, zx, lam, d):
        self.zy, self.zx = zy, zx
        self.powers = np.vander(lam, d + 1, increasing=True)
        self.d = d
        self.scale = max(float(np.mean(self.ols_residual() ** 2)), 1e-12)
        # s0 = floor + exp(theta0); without the floor exp underflows to 0 on small networks
        self.floor = S0_RELATIVE_FLOOR * self.scale

    def ols_residual(self) -> np.ndarray:
        if self.zx is None:
            return self.zy
        return self.zy - (self.zx @ self.zy) / (self.zx @ self.zx) * self.zx

    def spectrum(self, c) -> np.ndarray:
        return self.powers @ c

    def beta(self, s) -> float:
        if self.zx is None:
            return 0.0
        w = self.zx / s
        return float((w @ self.zy) / (w @ self.zx))

    def profile(self, c) -> tuple[float, float]:
        s = self.spectrum(c)
        if not np.all(s > 0):
            return 0.0, -math.inf
        beta = self.beta(s)
        z = self.zy if self.zx is None else self.zy - beta * self.zx
        return beta, _spectral_loglik(z, s)

    def to_components(self, theta) -> np.ndarray:
        c = np.empty_like(theta)
        c[0] = self.floor + math.exp(min(theta[0], 700.0))
        c[1:] = _softplus(theta[1:])
        return c

    def to_theta(self, c) -> np.ndarray:
        return np.array([math.log(c[0] - self.floor)] + [_softplus_inv(x) for x in c[1:]])

    def objective(self, theta) -> float:
        ll = self.profile(self.to_components(theta))[1]
        # finite penalty keeps the simplex spread arithmetic free of inf - inf
        return -ll if math.isfinite(ll) else _PENALTY


def _starting_points(problem: _Problem) -> dict[str, np.ndarray]:
    d = problem.d
    resid = problem.ols_residual()
    s2 = problem.scale
    equal = np.full(d + 1, 0.1 * s2)
    dominant = np.concatenate([[s2], np.full(d, 1e-3 * s2)])
    coef, *_ = np.linalg.lstsq(problem.powers, resid**2, rcond=None)
    moments = np.concatenate([[max(coef[0], 0.05 * s2)], np.maximum(coef[1:], 1e-4 * s2)])
    if not np.all(problem.spectrum(moments) > 0):
        moments = dominant.copy()
    return {"equal": equal, "s0-dominant": dominant, "moments": moments}


def fit_lmm(
    Y,
    X,
    A: AdjacencyMatrix,
    d: int = 2,
    decomp: SpectralDecomposition | None = None,
    maxiter: int = MAX_ITERATIONS,
    fatol: float = LOGLIK_TOLERANCE,
) -> LmmFit:
    """Maximum-likelihood fit of ``beta`` and ``(s0, ..., sd)``.

    Parameters
    ----------
    Y : array_like
        Response, length ``n``.
    X : array_like or None
        Single fixed-effect covariate (no intercept). ``None`` fixes the mean
        at zero.
    A : AdjacencyMatrix
        Symmetric network.
    d : int
        Polynomial order of the covariance.
    decomp : SpectralDecomposition, optional
        Eigendecomposition of ``A`` to reuse across fits.

    Returns
    -------
    LmmFit
        ``converged`` is False if the best restart hit ``maxiter`` before the
        simplex log-likelihood spread fell below ``fatol``.
    """
    if not A.symmetric:
        raise ContractViolation("fit_lmm requires a symmetric adjacency matrix")
    if d < 0:
        raise ParameterError(f"order d must be nonnegative, got {d}")
    y = np.asarray(Y, dtype=float)
    if y.shape != (A.n,):
        raise ParameterError(f"Y must have length {A.n}")
    if A.n < d + 3:
        raise ParameterError(f"need n >= d + 3 observations, got n={A.n}, d={d}")
    decomp = eigendecompose(A) if decomp is None else decomp
    zx = None
    if X is not None:
        x = np.asarray(X, dtype=float)
        if x.shape != y.shape:
            raise ParameterError("X and Y must have the same length")
        if not np.any(x):
            raise ParameterError("X is identically zero")
        zx = decomp.rotate(x)
    problem = _Problem(decomp.rotate(y), zx, decomp.eigenvalues, d)

    best = None
    start_logliks = {}
    for label, c0 in _starting_points(problem).items():
        theta0 = problem.to_theta(c0)
        start_logliks[label] = problem.profile(problem.to_components(theta0))[1]
        simplex = np.vstack([theta0, theta0 + np.eye(d + 1)])
        res = scipy.optimize.minimize(
            problem.objective,
            theta0,
            method="Nelder-Mead",
            options={"maxiter": maxiter, "fatol": fatol, "xatol": np.inf, "initial_simplex": simplex},
        )
        if best is None or res.fun < best.fun:
            best = res
    c = problem.to_components(best.x)
    beta, ll = problem.profile(c)
    if not math.isfinite(ll):
        raise DefinitenessError("no starting point produced a positive definite covariance")
    converged = bool(best.success)
    if not converged:
        log.info("LMM fit stopped after %d iterations without meeting the tolerance", best.nit)
    return LmmFit(
        beta=beta,
        variance_components=tuple(float(v) for v in c),
        loglik=ll,
        converged=converged,
        iterations=int(best.nit),
        d=d,
        start_logliks=start_logliks,
    )


def marginal_fit_and_whiten(
    v,
    A: AdjacencyMatrix,
    d: int = 2,
    decomp: SpectralDecomposition | None = None,
) -> tuple[np.ndarray, LmmFit]:
    """Fit the zero-mean model to a single variable and return ``V_hat^{-1/2} v``."""
    decomp = eigendecompose(A) if decomp is None else decomp
    fit = fit_lmm(v, None, A, d, decomp)
    s = fit.spec.check_definite(decomp.eigenvalues)
    return spectral_whiten(decomp, s, v), fit

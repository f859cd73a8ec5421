"""Network autocorrelation model ``Y = rho W Y + beta X + eps``, ``eps ~ N(0, sigma2 I)``.

Estimation maximizes the likelihood

    l = -(n/2) ln(2 pi sigma2) + ln|det(I - rho W)| - |(I - rho W) Y - beta X|^2 / (2 sigma2)

after concentrating out ``beta`` and ``sigma2``: for fixed ``rho`` they are the
OLS slope of ``(I - rho W) Y`` on ``X`` (no intercept) and ``RSS / n``. The
remaining one-dimensional problem in ``rho`` is solved by golden-section
search over the feasible interval. The log-determinant is evaluated from the
eigenvalues of ``W`` as ``sum_i ln(1 - rho lambda_i)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .assoc import Method, TestResult
from .covariance import inverse_sqrt, nam_covariance
from .errors import (
    ContractViolation,
    DefinitenessError,
    DegenerateNetworkError,
    ParameterError,
    SingularityError,
)
from .graph import AdjacencyMatrix, SpectralDecomposition

log = logging.getLogger(__name__)

#: Distance kept between the search interval and the singular endpoints.
INTERIOR_MARGIN = 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class NamFit:
    rho: float
    beta_nam: float
    sigma2: float
    loglik: float
    rho_range: tuple[float, float]
    converged: bool
    iterations: int = 0
    with_covariate: bool = True

    def to_json(self) -> dict:
        lo, hi = self.rho_range
        return {
            "rho": self.rho,
            "beta_nam": self.beta_nam,
            "sigma2": self.sigma2,
            "loglik": self.loglik,
            "rho_range": [None if math.isinf(lo) else lo, None if math.isinf(hi) else hi],
            "converged": self.converged,
        }


def _weights(W) -> np.ndarray:
    w = W.as_float() if isinstance(W, AdjacencyMatrix) else np.asarray(W, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ContractViolation(f"W must be square, got shape {w.shape}")
    return w


def weight_eigenvalues(W, decomp: SpectralDecomposition | None = None) -> np.ndarray:
    """Real eigenvalues of ``W`` in descending order.

    Symmetric adjacency matrices reuse ``decomp`` when given. Other weight
    matrices must have a real spectrum (true for row-normalized symmetric
    networks, which are similar to a symmetric matrix).
    """
    if decomp is not None:
        return np.asarray(decomp.eigenvalues, dtype=float)
    w = _weights(W)
    if np.array_equal(w, w.T):
        lam = np.linalg.eigvalsh(w)
    else:
        lam = np.linalg.eigvals(w)
        scale = max(np.max(np.abs(lam)), 1.0)
        if np.max(np.abs(lam.imag)) > 1e-8 * scale:
            raise ContractViolation("W has a complex spectrum; the feasible rho range is undefined")
        lam = lam.real
    return np.sort(lam)[::-1]


def rho_feasible_range(W, decomp: SpectralDecomposition | None = None) -> tuple[float, float]:
    """Open interval ``(1/lambda_min, 1/lambda_max)`` on which ``1 - rho lambda_i > 0`` for all ``i``.

    An endpoint is infinite when no eigenvalue of the matching sign exists.
    """
    lam = weight_eigenvalues(W, decomp)
    scale = max(np.max(np.abs(lam)), 0.0)
    if scale == 0.0:
        raise DegenerateNetworkError("W has no nonzero eigenvalue (empty network)")
    tol = 1e-10 * scale
    lmax, lmin = lam[0], lam[-1]
    hi = 1.0 / float(lmax) if lmax > tol else math.inf
    lo = 1.0 / float(lmin) if lmin < -tol else -math.inf
    return (lo, hi)


def _logdet(rho: float, lam: np.ndarray) -> float:
    g = 1.0 - rho * lam
    if np.any(g <= 0):
        raise SingularityError(f"rho={rho} is outside the feasible range: 1 - rho*lambda <= 0")
    return float(np.sum(np.log(g)))


def _prepare(Y, X, W):
    y = np.asarray(Y, dtype=float)
    if y.ndim != 1:
        raise ParameterError("Y must be one-dimensional")
    w = _weights(W)
    if w.shape[0] != y.shape[0]:
        raise ParameterError(f"W is {w.shape[0]}x{w.shape[0]} but Y has length {y.shape[0]}")
    x = None
    if X is not None:
        x = np.asarray(X, dtype=float)
        if x.shape != y.shape:
            raise ParameterError("X and Y must have the same length")
    return y, x, w


def nam_loglik(Y, X, rho, beta_nam, sigma2, W, decomp: SpectralDecomposition | None = None) -> float:
    """Log-likelihood of the network autocorrelation model.

    ``X=None`` drops the covariate term. ``decomp`` (the eigendecomposition of
    a symmetric ``W``) avoids recomputing the spectrum.
    """
    y, x, w = _prepare(Y, X, W)
    if sigma2 <= 0:
        raise ParameterError(f"sigma2 must be positive, got {sigma2}")
    n = y.shape[0]
    lam = weight_eigenvalues(w, decomp)
    resid = y - rho * (w @ y)
    if x is not None:
        resid = resid - beta_nam * x
    return float(-0.5 * n * math.log(2.0 * math.pi * sigma2) + _logdet(rho, lam) - (resid @ resid) / (2.0 * sigma2))


class _Concentrated:
    """Profile likelihood in ``rho`` with ``beta`` and ``sigma2`` at their closed forms."""

    def __init__(self, y, x, wy, lam):
        self.y, self.x, self.wy, self.lam = y, x, wy, lam
        self.n = y.shape[0]
        self.xx = None if x is None else float(x @ x)
        if self.xx is not None and self.xx == 0:
            raise ParameterError("X is identically zero")

    def parts(self, rho: float) -> tuple[float, float, float]:
        r = self.y - rho * self.wy
        beta = 0.0
        if self.x is not None:
            beta = float(self.x @ r) / self.xx
            r = r - beta * self.x
        sigma2 = float(r @ r) / self.n
        if sigma2 <= 0:
            return beta, sigma2, -math.inf
        ll = -0.5 * self.n * (math.log(2.0 * math.pi * sigma2) + 1.0) + _logdet(rho, self.lam)
        return beta, sigma2, ll

    def __call__(self, rho: float) -> float:
        return self.parts(rho)[2]


def concentrated_loglik(Y, X, rho, W, decomp: SpectralDecomposition | None = None) -> tuple[float, float, float]:
    """``(beta(rho), sigma2(rho), l(rho))`` with ``beta`` and ``sigma2`` profiled out."""
    y, x, w = _prepare(Y, X, W)
    return _Concentrated(y, x, w @ y, weight_eigenvalues(w, decomp)).parts(rho)


def _golden_max(f, a: float, b: float, tol: float, maxiter: int):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < maxiter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        it += 1
    x = c if fc >= fd else d
    return x, b - a <= tol, it


def _search_interval(rho_range) -> tuple[float, float]:
    lo, hi = rho_range
    if math.isinf(lo):
        lo = -hi
    if math.isinf(hi):
        hi = -lo
    return lo + INTERIOR_MARGIN, hi - INTERIOR_MARGIN


def fit_nam(
    Y,
    X,
    W,
    decomp: SpectralDecomposition | None = None,
    tol: float = 1e-10,
    maxiter: int = 200,
) -> NamFit:
    """Maximum-likelihood fit of the network autocorrelation model.

    Parameters
    ----------
    Y : array_like
        Response, length ``n``.
    X : array_like or None
        Single covariate (no intercept). ``None`` fits ``Y = rho W Y + eps``.
    W : AdjacencyMatrix or ndarray
        Weight matrix; raw adjacency by default, or e.g.
        :func:`netdep.graph.row_normalize` output.
    decomp : SpectralDecomposition, optional
        Precomputed eigendecomposition of a symmetric ``W``.

    Returns
    -------
    NamFit
        ``converged`` is False when the search ends on the edge of the
        interval (flat or monotone profile) or fails to shrink below ``tol``.
    """
    y, x, w = _prepare(Y, X, W)
    n = y.shape[0]
    if n < 3:
        raise ParameterError(f"need at least 3 observations, got {n}")
    lam = weight_eigenvalues(w, decomp)
    rho_range = rho_feasible_range(w, decomp)
    a, b = _search_interval(rho_range)
    prof = _Concentrated(y, x, w @ y, lam)
    rho, shrunk, iterations = _golden_max(prof, a, b, tol, maxiter)
    beta, sigma2, ll = prof.parts(rho)
    at_edge = min(rho - a, b - rho) <= 2 * tol
    converged = bool(shrunk and not at_edge and math.isfinite(ll) and sigma2 > 0)
    if not converged:
        log.info("NAM fit did not converge (rho=%.6g, interval=[%.6g, %.6g])", rho, a, b)
    if sigma2 <= 0:
        raise DefinitenessError("residual variance is zero; Y is fit exactly")
    ll = nam_loglik(y, x, rho, beta, sigma2, w, decomp)
    return NamFit(
        rho=float(rho),
        beta_nam=float(beta),
        sigma2=float(sigma2),
        loglik=ll,
        rho_range=rho_range,
        converged=converged,
        iterations=iterations,
        with_covariate=x is not None,
    )


def _observed_information(f, theta: np.ndarray, rel_step: float) -> np.ndarray:
    k = theta.size
    h = rel_step * np.maximum(np.abs(theta), 1.0)
    f0 = f(theta)
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return -hess


def nam_beta_test(
    fit: NamFit,
    Y,
    X,
    W,
    decomp: SpectralDecomposition | None = None,
    rel_step: float = 1e-5,
) -> TestResult:
    """Two-sided test of ``beta_nam = 0``.

    The Wald standard error comes from the inverse of the observed
    information, obtained by central differences of :func:`nam_loglik` in
    ``(rho, beta, sigma2)``. If that matrix is not positive definite (or the
    difference stencil leaves the feasible range) the likelihood-ratio test
    against the covariate-free fit is used instead and reported as
    ``Method.NAM_LR``.
    """
    if not fit.with_covariate:
        raise ParameterError("fit has no covariate to test")
    if not fit.converged:
        raise ParameterError("nam_beta_test requires a converged fit")
    y, x, w = _prepare(Y, X, W)
    if x is None:
        raise ParameterError("X is required")
    lam = weight_eigenvalues(w, decomp)
    wy = w @ y
    n = y.shape[0]

    def loglik(theta):
        rho, beta, sigma2 = theta
        if sigma2 <= 0:
            raise SingularityError("sigma2 left the parameter space")
        r = y - rho * wy - beta * x
        return -0.5 * n * math.log(2.0 * math.pi * sigma2) + _logdet(rho, lam) - (r @ r) / (2.0 * sigma2)

    theta = np.array([fit.rho, fit.beta_nam, fit.sigma2])
    try:
        info = _observed_information(loglik, theta, rel_step)
        info = 0.5 * (info + info.T)
        np.linalg.cholesky(info)
        cov = np.linalg.inv(info)
        se = math.sqrt(cov[1, 1])
        if not se > 0:
            raise np.linalg.LinAlgError("nonpositive variance")
    except (np.linalg.LinAlgError, SingularityError, ValueError):
        log.info("observed information not positive definite; using likelihood-ratio test")
        return nam_lr_test(fit, y, w, decomp)
    z = fit.beta_nam / se
    return TestResult(float(z), float(min(1.0, 2.0 * stats.norm.sf(abs(z)))), Method.NAM_WALD)


def nam_lr_test(fit: NamFit, Y, W, decomp: SpectralDecomposition | None = None) -> TestResult:
    """Likelihood-ratio test of ``beta_nam = 0`` against the covariate-free model."""
    null = fit_nam(Y, None, W, decomp)
    lr = max(2.0 * (fit.loglik - null.loglik), 0.0)
    return TestResult(lr, float(stats.chi2.sf(lr, 1)), Method.NAM_LR)


def nam_prewhiten(v, A, decomp: SpectralDecomposition | None = None) -> tuple[np.ndarray, NamFit]:
    """Whiten ``v`` with the covariance implied by a covariate-free fit.

    Fits ``v = rho A v + eps`` and applies ``V^{-1/2}`` for
    ``V = sigma2 (I - rho A)^{-1} (I - rho A)^{-T}``. For symmetric ``A`` and
    ``rho`` inside the feasible range the symmetric inverse square root is
    exactly ``(I - rho A) / sigma``, so no factorization is needed.
    """
    fit = fit_nam(v, None, A, decomp)
    y = np.asarray(v, dtype=float)
    symmetric = isinstance(A, AdjacencyMatrix) and A.symmetric
    if symmetric:
        w = A.as_float()
        whitened = (y - fit.rho * (w @ y)) / math.sqrt(fit.sigma2)
    else:
        whitened = inverse_sqrt(nam_covariance(A, fit.rho, fit.sigma2)) @ y
    return whitened, fit

"""Theoretical covariance matrices built from the adjacency matrix, and whitening.

Three families are provided:

* the one-step direct transmission covariance ``b (kA + aI)(kA + aI)^T + e I``,
* the polynomial family ``V = s0 I + s1 A + ... + sd A^d``,
* the covariance implied by the network autocorrelation model,
  ``s2 (I - rA)^{-1} (I - rA)^{-T}``.

For symmetric ``A`` all of them are diagonal in the eigenbasis of ``A``;
:func:`polynomial_spectrum` and :func:`nam_spectrum` return those diagonals so
callers holding a :class:`~netdep.graph.SpectralDecomposition` never need to
form or factor ``V``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolation, DefinitenessError, ParameterError, SingularityError
from .graph import AdjacencyMatrix, SpectralDecomposition, eigendecompose

#: Relative floor on the smallest eigenvalue accepted by :func:`inverse_sqrt`.
DEFINITENESS_FLOOR = 1e-10


@dataclass(frozen=True)
class PolynomialCovarianceSpec:
    """Coefficients ``(s0, s1, ..., sd)`` of ``V = sum_m s_m A^m``.

    ``s0`` must be positive and the higher-order coefficients nonnegative.
    Positive definiteness against a particular network is checked separately
    by :meth:`check_definite`.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in np.ravel(self.coefficients))
        if not c:
            raise ParameterError("at least one coefficient (s0) is required")
        if not np.all(np.isfinite(c)):
            raise ParameterError("coefficients must be finite")
        if c[0] <= 0:
            raise ParameterError(f"s0 must be positive, got {c[0]}")
        if any(x < 0 for x in c[1:]):
            raise ParameterError(f"higher-order coefficients must be nonnegative, got {c[1:]}")
        object.__setattr__(self, "coefficients", c)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def spectrum(self, eigenvalues) -> np.ndarray:
        """Eigenvalues of ``V``: ``sum_m s_m lambda^m`` for each eigenvalue of ``A``."""
        return polynomial_spectrum(self.coefficients, eigenvalues)

    def check_definite(self, eigenvalues) -> np.ndarray:
        """Return the spectrum of ``V``, raising if any term is not positive."""
        lam = np.asarray(eigenvalues, dtype=float)
        s = self.spectrum(lam)
        bad = np.flatnonzero(~(s > 0))
        if bad.size:
            i = bad[np.argmin(s[bad])]
            raise DefinitenessError(
                f"V is not positive definite: eigenvalue lambda={lam[i]:.6g} of A gives "
                f"spectral variance {s[i]:.6g}"
            )
        return s

    def to_json(self) -> dict:
        return {"order": self.order, "coefficients": list(self.coefficients)}

    @classmethod
    def from_json(cls, payload: dict) -> "PolynomialCovarianceSpec":
        try:
            coefficients = payload["coefficients"]
            order = int(payload["order"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"covariance spec JSON needs 'order' and 'coefficients': {exc}") from None
        if len(coefficients) != order + 1:
            raise ParameterError(f"order {order} requires {order + 1} coefficients, got {len(coefficients)}")
        return cls(tuple(coefficients))


def polynomial_spectrum(coefficients, eigenvalues) -> np.ndarray:
    """Evaluate ``sum_m c_m lambda^m`` elementwise by Horner's rule."""
    lam = np.asarray(eigenvalues, dtype=float)
    out = np.zeros_like(lam)
    for c in reversed(tuple(coefficients)):
        out = out * lam + c
    return out


def _require_symmetric(A: AdjacencyMatrix, what: str, hint: str = "") -> None:
    if not A.symmetric:
        raise ContractViolation(f"{what} requires a symmetric adjacency matrix{hint}")


def _decomp(A: AdjacencyMatrix, decomp: SpectralDecomposition | None) -> SpectralDecomposition:
    return eigendecompose(A) if decomp is None else decomp


def direct_t1_covariance(
    A: AdjacencyMatrix,
    kappa: float,
    alpha: float,
    baseline_var: float = 1.0,
    noise_var: float = 1.0,
) -> np.ndarray:
    """Covariance of one direct transmission step from an i.i.d. baseline.

    ``Y1 = (kappa A + alpha I) Y0 + eps`` with ``Var(Y0) = baseline_var I`` and
    ``Var(eps) = noise_var I`` gives ``baseline_var (kappa A + alpha I)^2 + noise_var I``.
    With unit variances this is ``kappa^2 A^2 + 2 alpha kappa A + (alpha^2 + 1) I``.
    """
    _require_symmetric(A, "direct_t1_covariance", "; use direct_t1_covariance_asymmetric for directed networks")
    return direct_t1_covariance_asymmetric(A, kappa, alpha, baseline_var, noise_var)


def direct_t1_covariance_asymmetric(
    A: AdjacencyMatrix,
    kappa: float,
    alpha: float,
    baseline_var: float = 1.0,
    noise_var: float = 1.0,
) -> np.ndarray:
    """``baseline_var (kappa A + alpha I)(kappa A + alpha I)^T + noise_var I`` for any ``A``."""
    if baseline_var <= 0 or noise_var < 0:
        raise ParameterError("baseline_var must be positive and noise_var nonnegative")
    m = kappa * A.as_float() + alpha * np.eye(A.n)
    v = baseline_var * (m @ m.T) + noise_var * np.eye(A.n)
    return 0.5 * (v + v.T)


def polynomial_covariance(
    A: AdjacencyMatrix,
    spec: PolynomialCovarianceSpec,
    decomp: SpectralDecomposition | None = None,
    method: str = "spectral",
) -> np.ndarray:
    """Assemble ``V = s0 I + s1 A + ... + sd A^d``.

    Parameters
    ----------
    method : {"spectral", "direct"}
        ``"spectral"`` evaluates ``U diag(p(lambda)) U^T`` and names the
        offending eigenvalue if ``V`` is not positive definite. ``"direct"``
        sums dense matrix powers (Horner form) and checks definiteness with a
        Cholesky factorization; it is the reference path.
    """
    _require_symmetric(A, "polynomial_covariance")
    if method == "spectral":
        d = _decomp(A, decomp)
        return d.matrix(spec.check_definite(d.eigenvalues))
    if method == "direct":
        a = A.as_float()
        v = np.zeros((A.n, A.n))
        for c in reversed(spec.coefficients):
            v = v @ a
            v[np.diag_indices(A.n)] += c
        v = 0.5 * (v + v.T)
        try:
            np.linalg.cholesky(v)
        except np.linalg.LinAlgError:
            raise DefinitenessError("V is not positive definite (Cholesky factorization failed)") from None
        return v
    raise ParameterError(f"unknown method {method!r}; expected 'spectral' or 'direct'")


def nam_spectrum(rho: float, sigma2: float, eigenvalues) -> np.ndarray:
    """Eigenvalues ``sigma2 / (1 - rho lambda)^2`` of the model-implied covariance."""
    if sigma2 <= 0:
        raise ParameterError(f"sigma2 must be positive, got {sigma2}")
    g = 1.0 - rho * np.asarray(eigenvalues, dtype=float)
    if np.any(np.abs(g) < 1e-12):
        raise SingularityError(f"I - rho A is singular at rho={rho}")
    return sigma2 / g**2


def nam_covariance(
    A: AdjacencyMatrix | np.ndarray,
    rho: float,
    sigma2: float,
    decomp: SpectralDecomposition | None = None,
) -> np.ndarray:
    """``sigma2 (I - rho W)^{-1} (I - rho W)^{-T}``, the covariance implied by ``Y = rho W Y + eps``.

    Symmetric adjacency matrices use the spectral form; general weight
    matrices (e.g. row-normalized) go through an LU solve.
    """
    if isinstance(A, AdjacencyMatrix) and A.symmetric:
        d = _decomp(A, decomp)
        return d.matrix(nam_spectrum(rho, sigma2, d.eigenvalues))
    if sigma2 <= 0:
        raise ParameterError(f"sigma2 must be positive, got {sigma2}")
    w = A.as_float() if isinstance(A, AdjacencyMatrix) else np.asarray(A, dtype=float)
    n = w.shape[0]
    try:
        with warnings.catch_warnings():
            # a zero pivot is reported as SingularityError below
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(np.eye(n) - rho * w, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        raise SingularityError(f"I - rho W is singular at rho={rho}") from None
    if np.any(np.abs(np.diag(lu[0])) < 1e-12):
        raise SingularityError(f"I - rho W is singular at rho={rho}")
    b = scipy.linalg.lu_solve(lu, np.eye(n))
    v = sigma2 * (b @ b.T)
    return 0.5 * (v + v.T)


def inverse_sqrt(V) -> np.ndarray:
    """Symmetric inverse square root ``W`` with ``W V W = I``.

    Raises
    ------
    DefinitenessError
        If the smallest eigenvalue of ``V`` is below ``1e-10`` times the
        largest.
    """
    v = np.asarray(V, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ContractViolation(f"V must be square, got shape {v.shape}")
    scale = max(np.max(np.abs(v)), 1.0)
    if np.max(np.abs(v - v.T)) > 1e-10 * scale:
        raise ContractViolation("V must be symmetric")
    w, u = np.linalg.eigh(0.5 * (v + v.T))
    if w[-1] <= 0 or w[0] <= DEFINITENESS_FLOOR * w[-1]:
        raise DefinitenessError(
            f"V is not positive definite: smallest eigenvalue {w[0]:.6g} vs largest {w[-1]:.6g}"
        )
    out = (u * w**-0.5) @ u.T
    return 0.5 * (out + out.T)


def spectral_whiten(decomp: SpectralDecomposition, variances, v) -> np.ndarray:
    """Apply ``V^{-1/2}`` to ``v`` where ``V = U diag(variances) U^T``.

    Equals ``inverse_sqrt(V) @ v`` without refactorizing ``V``.
    """
    s = np.asarray(variances, dtype=float)
    if np.any(~(s > 0)) or s.min() <= DEFINITENESS_FLOOR * s.max():
        raise DefinitenessError(f"spectral variances must be positive; min is {s.min():.6g}")
    return decomp.apply(s**-0.5, v)

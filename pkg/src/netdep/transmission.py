"""Data-generating processes that induce network dependence.

Two processes are simulated:

direct transmission
    ``Y^t = kappa A Y^{t-1} + alpha Y^{t-1} + eps^t`` for ``t = 1..T`` from an
    i.i.d. Gaussian baseline ``Y^0``.
equilibrium transmission
    ``Y = (I - rho A)^{-1} (Y^0 + eps)``, the long-run limit of the same
    update with ``alpha = 0``.

Single draws take a ``seed`` (anything accepted by
:func:`numpy.random.default_rng`). Ensembles draw all replicates from one
stream seeded by ``seed``; row ``r`` of an ensemble of size ``R`` therefore
matches the single draw only for ``R = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ParameterError, SingularityError
from .graph import AdjacencyMatrix, SpectralDecomposition
from .nam import rho_feasible_range


@dataclass(frozen=True)
class DirectProcessConfig:
    kappa: float
    alpha: float
    steps: int = 1
    noise_sd: float = 1.0
    baseline_sd: float = 1.0

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ParameterError(f"steps must be a positive integer, got {self.steps}")
        if not self.noise_sd > 0:
            raise ParameterError(f"noise_sd must be positive, got {self.noise_sd}")
        if not self.baseline_sd > 0:
            raise ParameterError(f"baseline_sd must be positive, got {self.baseline_sd}")


@dataclass(frozen=True)
class EquilibriumProcessConfig:
    rho: float
    noise_sd: float = 1.0
    baseline_sd: float = 1.0

    def __post_init__(self):
        # noise_sd = 0 is allowed: the equilibrium map is still well defined
        if not self.noise_sd >= 0:
            raise ParameterError(f"noise_sd must be nonnegative, got {self.noise_sd}")
        if not self.baseline_sd > 0:
            raise ParameterError(f"baseline_sd must be positive, got {self.baseline_sd}")


def simulate_direct_ensemble(A: AdjacencyMatrix, cfg: DirectProcessConfig, replicates: int, seed) -> np.ndarray:
    """``replicates x n`` array of independent direct-process outcomes ``Y^T``."""
    if replicates < 1:
        raise ParameterError(f"replicates must be positive, got {replicates}")
    rng = np.random.default_rng(seed)
    a = A.as_float()
    y = rng.normal(0.0, cfg.baseline_sd, size=(replicates, A.n))
    for _ in range(int(cfg.steps)):
        eps = rng.normal(0.0, cfg.noise_sd, size=(replicates, A.n))
        # rows are replicates, so A Y becomes Y A^T
        y = cfg.kappa * (y @ a.T) + cfg.alpha * y + eps
    return y


def simulate_direct(A: AdjacencyMatrix, cfg: DirectProcessConfig, seed) -> np.ndarray:
    """One outcome vector ``Y^T`` of the direct transmission process."""
    return simulate_direct_ensemble(A, cfg, 1, seed)[0]


def _check_rho(A: AdjacencyMatrix, rho: float, decomp: SpectralDecomposition | None) -> None:
    if rho == 0:
        return
    lo, hi = rho_feasible_range(A, decomp)
    if not lo < rho < hi:
        raise SingularityError(f"rho={rho} lies outside the feasible range ({lo:.6g}, {hi:.6g})")


def simulate_equilibrium_ensemble(
    A: AdjacencyMatrix,
    cfg: EquilibriumProcessConfig,
    replicates: int,
    seed,
    decomp: SpectralDecomposition | None = None,
) -> np.ndarray:
    """``replicates x n`` array of equilibrium outcomes, one LU factorization for all rows."""
    if replicates < 1:
        raise ParameterError(f"replicates must be positive, got {replicates}")
    _check_rho(A, cfg.rho, decomp)
    rng = np.random.default_rng(seed)
    y0 = rng.normal(0.0, cfg.baseline_sd, size=(replicates, A.n))
    eps = rng.normal(0.0, cfg.noise_sd, size=(replicates, A.n)) if cfg.noise_sd > 0 else 0.0
    rhs = (y0 + eps).T
    if cfg.rho == 0:
        return rhs.T.copy()
    m = np.eye(A.n) - cfg.rho * A.as_float()
    lu = scipy.linalg.lu_factor(m, check_finite=False)
    return scipy.linalg.lu_solve(lu, rhs, check_finite=False).T


def simulate_equilibrium(
    A: AdjacencyMatrix,
    cfg: EquilibriumProcessConfig,
    seed,
    decomp: SpectralDecomposition | None = None,
) -> np.ndarray:
    """One equilibrium outcome ``(I - rho A)^{-1} (Y^0 + eps)``, solved as a linear system.

    Raises
    ------
    SingularityError
        If ``rho`` is outside :func:`netdep.nam.rho_feasible_range` of ``A``.
    """
    return simulate_equilibrium_ensemble(A, cfg, 1, seed, decomp)[0]


def empirical_covariance(samples) -> np.ndarray:
    """Unbiased sample covariance (divisor ``R - 1``) of ``R`` replicate vectors."""
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    if s.shape[0] < 2:
        raise ParameterError(f"need at least 2 samples, got {s.shape[0]}")
    c = s - s.mean(axis=0)
    return (c.T @ c) / (s.shape[0] - 1)


def covariance_standard_errors(samples) -> np.ndarray:
    """Monte-Carlo standard error of each entry of :func:`empirical_covariance`.

    Uses the sample standard deviation of the centred cross products
    divided by ``sqrt(R)``.
    """
    s = np.atleast_2d(np.asarray(samples, dtype=float))
    r = s.shape[0]
    if r < 2:
        raise ParameterError(f"need at least 2 samples, got {r}")
    c = s - s.mean(axis=0)
    mean_prod = (c.T @ c) / r
    mean_sq = ((c**2).T @ (c**2)) / r
    var = np.maximum(mean_sq - mean_prod**2, 0.0) * r / (r - 1)
    return np.sqrt(var / r)

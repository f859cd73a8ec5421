"""Tools for detecting and removing shared network dependence before association testing."""

from .assoc import Method, TestResult, dcorr_test, distance_correlation, ols_test
from .covariance import (
    PolynomialCovarianceSpec,
    direct_t1_covariance,
    direct_t1_covariance_asymmetric,
    inverse_sqrt,
    nam_covariance,
    polynomial_covariance,
)
from .errors import (
    ContractViolation,
    DefinitenessError,
    DegenerateNetworkError,
    DegenerateRegressorError,
    FormatError,
    NetdepError,
    ParameterError,
    SingularityError,
)
from .graph import (
    AdjacencyMatrix,
    GeodesicMatrix,
    SpectralDecomposition,
    eigendecompose,
    erdos_renyi_gnm,
    geodesic_distances,
    matrix_power,
)
from .lmm import LmmFit, fit_lmm, lmm_loglik_direct, lmm_loglik_spectral, marginal_fit_and_whiten
from .nam import NamFit, fit_nam, nam_beta_test, nam_loglik, nam_lr_test, nam_prewhiten, rho_feasible_range
from .simharness import RejectionReport, ScenarioConfig, TableConfig, run_replicate, run_table
from .transmission import (
    DirectProcessConfig,
    EquilibriumProcessConfig,
    simulate_direct,
    simulate_equilibrium,
)

__version__ = "0.1.0"

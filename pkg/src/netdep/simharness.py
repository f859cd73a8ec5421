"""Monte-Carlo rejection-rate experiment for independently generated network-dependent pairs.

Each replicate draws a ``G(n, ties)`` network, generates ``X`` and ``Y``
independently from the same transmission process on it, and records whether
seven tests reject the null of no association:

============  ==========  ================================================
pipeline      measure     computed on
============  ==========  ================================================
``raw``       beta_ols    ``(X, Y)``, simple regression slope t-test
``raw``       dcorr       ``(X, Y)``, distance-correlation permutation test
``raw``       beta_nam    ``Y = rho A Y + beta X + eps``, Wald test of beta
``lmm``       beta_ols    each variable whitened by its own fitted order-d LMM
``lmm``       dcorr       same
``nam``       beta_ols    each variable whitened by its own covariate-free NAM fit
``nam``       dcorr       same
============  ==========  ================================================

Networks: replicate ``r`` uses one network for every scenario, drawn from
``derive_seed(base_seed, "network", r, attempt)``. The equilibrium process
needs ``rho < 1/lambda_max``, so draws are rejected until
``feasibility_rho * lambda_max < 1``; the default ``feasibility_rho`` is the
largest equilibrium ``rho`` (0.29), which makes the shared network valid for
every scenario. With ``feasibility_rho=None`` each equilibrium scenario only
requires its own ``rho`` and direct scenarios accept any draw.
``regenerate_network=False`` drops ``r`` from the key (one network for the
whole table).

Data: every other random quantity of replicate ``r`` in scenario ``s`` comes
from ``derive_seed(base_seed, s, r, tag)`` with a distinct ``tag`` per use
(``x``, ``y``, ``perm-<pipeline>``), so ``X`` and ``Y`` are independent by
construction and a report is reproducible bit for bit.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import asdict, dataclass

from joblib import Parallel, delayed

from ._seeding import derive_seed
from .assoc import dcorr_test, ols_test
from .errors import NetdepError, ParameterError
from .graph import eigendecompose, erdos_renyi_gnm
from .lmm import marginal_fit_and_whiten
from .nam import fit_nam, nam_beta_test, nam_prewhiten
from .transmission import (
    DirectProcessConfig,
    EquilibriumProcessConfig,
    simulate_direct,
    simulate_equilibrium,
)

log = logging.getLogger(__name__)


class Process(str, enum.Enum):
    DIRECT_T1 = "DIRECT_T1"
    EQUILIBRIUM = "EQUILIBRIUM"


class Strength(str, enum.Enum):
    WEAK = "WEAK"
    MEDIUM = "MEDIUM"
    STRONG = "STRONG"


#: (kappa, alpha) of the one-step direct process per strength.
DIRECT_PARAMETERS = {
    Strength.WEAK: (0.7, 0.3),
    Strength.MEDIUM: (0.8, 0.2),
    Strength.STRONG: (0.9, 0.1),
}
#: rho of the equilibrium process per strength.
EQUILIBRIUM_RHO = {
    Strength.WEAK: 0.25,
    Strength.MEDIUM: 0.27,
    Strength.STRONG: 0.29,
}

CELLS = (
    ("raw", "beta_ols"),
    ("raw", "dcorr"),
    ("raw", "beta_nam"),
    ("lmm", "beta_ols"),
    ("lmm", "dcorr"),
    ("nam", "beta_ols"),
    ("nam", "dcorr"),
)

ALL_SCENARIOS = tuple((p, s) for p in Process for s in Strength)
MAX_EQUILIBRIUM_RHO = max(EQUILIBRIUM_RHO.values())

_MAX_NETWORK_DRAWS = 1000


@dataclass(frozen=True)
class ScenarioConfig:
    process: Process
    strength: Strength
    n: int = 500
    ties: int = 500
    replicates: int = 500
    alpha_level: float = 0.05
    base_seed: int = 2024
    d: int = 2
    permutations: int = 199
    noise_sd: float = 0.1
    baseline_sd: float = 1.0
    regenerate_network: bool = True
    feasibility_rho: float | None = MAX_EQUILIBRIUM_RHO
    diagnostic_identical: bool = False

    def __post_init__(self):
        object.__setattr__(self, "process", Process(self.process))
        object.__setattr__(self, "strength", Strength(self.strength))
        if self.replicates < 1:
            raise ParameterError(f"replicates must be >= 1, got {self.replicates}")
        if not 0.0 < self.alpha_level < 1.0:
            raise ParameterError(f"alpha_level must lie in (0, 1), got {self.alpha_level}")
        if self.n < 3:
            raise ParameterError(f"n must be >= 3, got {self.n}")
        if (
            self.process is Process.EQUILIBRIUM
            and self.feasibility_rho is not None
            and self.feasibility_rho < EQUILIBRIUM_RHO[self.strength]
        ):
            raise ParameterError(
                f"feasibility_rho={self.feasibility_rho} is below the scenario's rho "
                f"{EQUILIBRIUM_RHO[self.strength]}"
            )

    @property
    def name(self) -> str:
        return f"{self.process.value.lower()}/{self.strength.value.lower()}"

    def generator_config(self):
        if self.process is Process.DIRECT_T1:
            kappa, alpha = DIRECT_PARAMETERS[self.strength]
            return DirectProcessConfig(kappa, alpha, 1, self.noise_sd, self.baseline_sd)
        return EquilibriumProcessConfig(EQUILIBRIUM_RHO[self.strength], self.noise_sd, self.baseline_sd)


def _network(cfg: ScenarioConfig, replicate_index: int):
    key = ("network", replicate_index) if cfg.regenerate_network else ("network",)
    rho = cfg.feasibility_rho
    if rho is None and cfg.process is Process.EQUILIBRIUM:
        rho = EQUILIBRIUM_RHO[cfg.strength]
    for attempt in range(_MAX_NETWORK_DRAWS):
        A = erdos_renyi_gnm(cfg.n, cfg.ties, derive_seed(cfg.base_seed, *key, attempt))
        decomp = eigendecompose(A)
        if rho is None or rho * decomp.eigenvalues[0] < 1.0:
            if attempt:
                log.debug("%s replicate %d: network redrawn %d times", cfg.name, replicate_index, attempt)
            return A, decomp
    raise ParameterError(f"no network with rho inside the feasible range after {_MAX_NETWORK_DRAWS} draws")


def _simulate(cfg: ScenarioConfig, A, decomp, seed):
    gen = cfg.generator_config()
    if cfg.process is Process.DIRECT_T1:
        return simulate_direct(A, gen, seed)
    return simulate_equilibrium(A, gen, seed, decomp)


def replicate_pvalues(cfg: ScenarioConfig, replicate_index: int) -> dict[tuple[str, str], float | None]:
    """P-value of each of the seven tests; ``None`` where a fit failed to converge."""
    A, decomp = _network(cfg, replicate_index)
    seed = lambda tag: derive_seed(cfg.base_seed, cfg.name, replicate_index, tag)  # noqa: E731
    x = _simulate(cfg, A, decomp, seed("x"))
    y = x.copy() if cfg.diagnostic_identical else _simulate(cfg, A, decomp, seed("y"))

    out: dict[tuple[str, str], float | None] = dict.fromkeys(CELLS)
    out["raw", "beta_ols"] = ols_test(x, y).p_value
    out["raw", "dcorr"] = dcorr_test(x, y, cfg.permutations, seed("perm-raw")).p_value
    try:
        fit = fit_nam(y, x, A, decomp)
        if fit.converged:
            out["raw", "beta_nam"] = nam_beta_test(fit, y, x, A, decomp).p_value
    except NetdepError as exc:
        log.info("%s replicate %d: NAM fit failed: %s", cfg.name, replicate_index, exc)

    for pipeline in ("lmm", "nam"):
        try:
            if pipeline == "lmm":
                (wx, fx), (wy, fy) = (marginal_fit_and_whiten(v, A, cfg.d, decomp) for v in (x, y))
            else:
                (wx, fx), (wy, fy) = (nam_prewhiten(v, A, decomp) for v in (x, y))
        except NetdepError as exc:
            log.info("%s replicate %d: %s whitening failed: %s", cfg.name, replicate_index, pipeline, exc)
            continue
        if not (fx.converged and fy.converged):
            log.info("%s replicate %d: %s fit did not converge", cfg.name, replicate_index, pipeline)
            continue
        out[pipeline, "beta_ols"] = ols_test(wx, wy).p_value
        out[pipeline, "dcorr"] = dcorr_test(wx, wy, cfg.permutations, seed(f"perm-{pipeline}")).p_value
    return out


def run_replicate(cfg: ScenarioConfig, replicate_index: int) -> dict[tuple[str, str], bool | None]:
    """Rejection indicator (``p <= alpha_level``) per cell; ``None`` for excluded cells."""
    return {
        cell: None if p is None else bool(p <= cfg.alpha_level)
        for cell, p in replicate_pvalues(cfg, replicate_index).items()
    }


@dataclass(frozen=True)
class Cell:
    scenario: str
    process: Process
    strength: Strength
    pipeline: str
    measure: str
    rejections: int
    n_converged: int
    replicates: int

    @property
    def rate(self) -> float:
        return self.rejections / self.n_converged if self.n_converged else math.nan

    @property
    def mc_se(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.n_converged) if self.n_converged else math.nan


CSV_COLUMNS = ("scenario", "process", "strength", "pipeline", "measure", "rate", "mc_se", "n_converged")


@dataclass(frozen=True)
class RejectionReport:
    cells: tuple[Cell, ...]

    def cell(self, process, strength, pipeline: str, measure: str) -> Cell:
        process, strength = Process(process), Strength(strength)
        for c in self.cells:
            if (c.process, c.strength, c.pipeline, c.measure) == (process, strength, pipeline, measure):
                return c
        raise KeyError((process, strength, pipeline, measure))

    def rate(self, process, strength, pipeline: str, measure: str) -> float:
        return self.cell(process, strength, pipeline, measure).rate

    def rows(self) -> list[dict]:
        return [
            {
                "scenario": c.scenario,
                "process": c.process.value,
                "strength": c.strength.value,
                "pipeline": c.pipeline,
                "measure": c.measure,
                "rate": repr(c.rate),
                "mc_se": repr(c.mc_se),
                "n_converged": str(c.n_converged),
            }
            for c in self.cells
        ]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows())

    def format_table(self) -> str:
        """Rates laid out like the published table: one row per scenario, seven columns."""
        header = "process      strength  " + "  ".join(f"{p}:{m}".rjust(13) for p, m in CELLS)
        lines = [header, "-" * len(header)]
        scenarios = dict.fromkeys((c.process, c.strength) for c in self.cells)
        for process, strength in scenarios:
            vals = []
            for p, m in CELLS:
                c = self.cell(process, strength, p, m)
                vals.append(f"{c.rate:.3f}".rjust(13) + ("*" if c.n_converged < c.replicates else " "))
            lines.append(f"{process.value:<12} {strength.value:<9}" + " ".join(vals))
        return "\n".join(lines)


@dataclass(frozen=True)
class TableConfig:
    """Settings shared by every scenario of a table run, plus the scenario list."""

    n: int = 500
    ties: int = 500
    replicates: int = 500
    alpha_level: float = 0.05
    base_seed: int = 2024
    d: int = 2
    permutations: int = 199
    noise_sd: float = 0.1
    baseline_sd: float = 1.0
    regenerate_network: bool = True
    feasibility_rho: float | None = MAX_EQUILIBRIUM_RHO
    scenarios: tuple[tuple[Process, Strength], ...] = ALL_SCENARIOS
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(
            self, "scenarios", tuple((Process(p), Strength(s)) for p, s in self.scenarios)
        )
        if not self.scenarios:
            raise ParameterError("at least one scenario is required")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")

    def scenario_configs(self) -> list[ScenarioConfig]:
        shared = {k: v for k, v in asdict(self).items() if k not in ("scenarios", "workers")}
        return [ScenarioConfig(process=p, strength=s, **shared) for p, s in self.scenarios]

    @classmethod
    def from_json(cls, payload: dict) -> "TableConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(payload)
        if "scenarios" in kwargs:
            try:
                kwargs["scenarios"] = tuple((s["process"], s["strength"]) for s in kwargs["scenarios"])
            except (KeyError, TypeError):
                raise ParameterError("each scenario needs 'process' and 'strength'") from None
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"invalid table config: {exc}") from None

    def to_json(self) -> dict:
        payload = asdict(self)
        payload["scenarios"] = [{"process": p.value, "strength": s.value} for p, s in self.scenarios]
        return payload


def run_table(config: TableConfig) -> RejectionReport:
    """Run every scenario of ``config`` and aggregate rejection rates.

    Replicates run in ``config.workers`` processes; aggregation follows the
    fixed scenario/replicate order so the report does not depend on the
    worker count.
    """
    scenarios = config.scenario_configs()
    tasks = [(s, r) for s in scenarios for r in range(s.replicates)]
    if config.workers == 1:
        results = [run_replicate(s, r) for s, r in tasks]
    else:
        results = Parallel(n_jobs=config.workers)(delayed(run_replicate)(s, r) for s, r in tasks)

    cells = []
    offset = 0
    for s in scenarios:
        chunk = results[offset : offset + s.replicates]
        offset += s.replicates
        for pipeline, measure in CELLS:
            flags = [res[pipeline, measure] for res in chunk]
            valid = [f for f in flags if f is not None]
            if len(valid) < len(flags):
                log.warning("%s %s/%s: %d of %d replicates excluded (non-convergence)",
                            s.name, pipeline, measure, len(flags) - len(valid), len(flags))
            cells.append(Cell(s.name, s.process, s.strength, pipeline, measure,
                              rejections=sum(valid), n_converged=len(valid), replicates=s.replicates))
    return RejectionReport(tuple(cells))

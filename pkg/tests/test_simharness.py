import csv
import math

import pytest

from netdep.errors import ParameterError
from netdep.simharness import (
    ALL_SCENARIOS,
    CELLS,
    CSV_COLUMNS,
    DIRECT_PARAMETERS,
    EQUILIBRIUM_RHO,
    Cell,
    Process,
    ScenarioConfig,
    Strength,
    TableConfig,
    _network,
    replicate_pvalues,
    run_replicate,
    run_table,
)
from netdep.transmission import DirectProcessConfig, EquilibriumProcessConfig

SMALL = dict(n=60, ties=60, replicates=2, permutations=99)


def test_parameter_tables():
    assert DIRECT_PARAMETERS == {
        Strength.WEAK: (0.7, 0.3),
        Strength.MEDIUM: (0.8, 0.2),
        Strength.STRONG: (0.9, 0.1),
    }
    assert EQUILIBRIUM_RHO == {Strength.WEAK: 0.25, Strength.MEDIUM: 0.27, Strength.STRONG: 0.29}


def test_generator_configs():
    assert ScenarioConfig("DIRECT_T1", "WEAK").generator_config() == DirectProcessConfig(0.7, 0.3, 1, 0.1, 1.0)
    assert ScenarioConfig("EQUILIBRIUM", "MEDIUM").generator_config() == EquilibriumProcessConfig(0.27, 0.1, 1.0)


def test_config_validation():
    with pytest.raises(ParameterError):
        ScenarioConfig("DIRECT_T1", "WEAK", replicates=0)
    with pytest.raises(ParameterError):
        ScenarioConfig("DIRECT_T1", "WEAK", alpha_level=1.0)
    with pytest.raises(ValueError):
        ScenarioConfig("DIRECT_T1", "HUGE")


def test_equilibrium_network_is_feasible():
    cfg = ScenarioConfig("EQUILIBRIUM", "STRONG")
    for r in range(5):
        _, decomp = _network(cfg, r)
        assert 0.29 * decomp.eigenvalues[0] < 1


def test_fixed_network_option():
    cfg = ScenarioConfig("DIRECT_T1", "WEAK", regenerate_network=False, **SMALL)
    assert (_network(cfg, 0)[0].entries == _network(cfg, 1)[0].entries).all()
    fresh = ScenarioConfig("DIRECT_T1", "WEAK", **SMALL)
    assert not (_network(fresh, 0)[0].entries == _network(fresh, 1)[0].entries).all()


def test_scenarios_share_the_replicate_network():
    nets = [_network(ScenarioConfig(p, s, **SMALL), 3)[0].entries for p, s in ALL_SCENARIOS]
    assert all((net == nets[0]).all() for net in nets[1:])


def test_feasibility_rho_none_uses_scenario_rho():
    direct = ScenarioConfig("DIRECT_T1", "WEAK", feasibility_rho=None)
    weak = ScenarioConfig("EQUILIBRIUM", "WEAK", feasibility_rho=None)
    draws = [_network(direct, r)[1].eigenvalues[0] for r in range(40)]
    assert max(draws) * 0.29 >= 1  # some unconditioned draw would be infeasible at 0.29
    assert all(0.25 * _network(weak, r)[1].eigenvalues[0] < 1 for r in range(5))
    with pytest.raises(ParameterError):
        ScenarioConfig("EQUILIBRIUM", "STRONG", feasibility_rho=0.25)


def test_replicate_covers_all_cells():
    out = replicate_pvalues(ScenarioConfig("DIRECT_T1", "MEDIUM", **SMALL), 0)
    assert set(out) == set(CELLS)
    assert all(p is None or 0 <= p <= 1 for p in out.values())


@pytest.mark.parametrize("process", ["DIRECT_T1", "EQUILIBRIUM"])
def test_identical_pair_rejects_everywhere(process):
    cfg = ScenarioConfig(process, "WEAK", diagnostic_identical=True, **SMALL)
    flags = run_replicate(cfg, 0)
    assert all(f is True for f in flags.values()), flags


def test_x_and_y_streams_differ():
    cfg = ScenarioConfig("DIRECT_T1", "WEAK", **SMALL)
    out = replicate_pvalues(cfg, 0)
    assert out["raw", "beta_ols"] > 0


def test_cell_rate_and_se():
    c = Cell("s", Process.DIRECT_T1, Strength.WEAK, "raw", "dcorr", rejections=3, n_converged=12, replicates=12)
    assert c.rate == 0.25
    assert c.mc_se == pytest.approx(math.sqrt(0.25 * 0.75 / 12))


def test_smoke_table_shape(tmp_path):
    report = run_table(TableConfig(replicates=1, n=60, ties=60, permutations=99))
    assert len(report.cells) == len(ALL_SCENARIOS) * len(CELLS) == 42
    for c in report.cells:
        assert c.rate in (0.0, 1.0) or c.n_converged == 0
    path = tmp_path / "r.csv"
    report.to_csv(path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 42
    assert "process" in report.format_table()


def test_reproducible_and_worker_independent(tmp_path):
    cfg = dict(replicates=2, n=60, ties=60, permutations=99, scenarios=(("EQUILIBRIUM", "WEAK"),))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_table(TableConfig(**cfg)).to_csv(a)
    run_table(TableConfig(workers=2, **cfg)).to_csv(b)
    assert a.read_bytes() == b.read_bytes()


def test_table_config_json_round_trip():
    cfg = TableConfig(replicates=3, scenarios=(("DIRECT_T1", "STRONG"),))
    assert TableConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ParameterError):
        TableConfig.from_json({"bogus": 1})
    with pytest.raises(ParameterError):
        TableConfig.from_json({"scenarios": [{"process": "DIRECT_T1"}]})

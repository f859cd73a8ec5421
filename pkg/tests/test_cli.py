import json

import numpy as np
import pytest

from netdep import io
from netdep.assoc import dcorr_test, ols_test
from netdep.cli import main
from netdep.graph import erdos_renyi_gnm, read_dense, read_edge_list
from netdep.lmm import fit_lmm
from netdep.nam import fit_nam, nam_prewhiten
from netdep.transmission import DirectProcessConfig, EquilibriumProcessConfig, simulate_direct, simulate_equilibrium


@pytest.fixture
def net(tmp_path):
    path = tmp_path / "net.csv"
    assert main(["gen-network", "--n", "80", "--ties", "100", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_gen_network(tmp_path):
    path = tmp_path / "net.csv"
    assert main(["gen-network", "--n", "500", "--ties", "500", "--seed", "1", "--out", str(path)]) == 0
    A = read_edge_list(path)
    assert A.n == 500 and A.n_edges == 500
    assert (A.entries == erdos_renyi_gnm(500, 500, 1).entries).all()
    dense = tmp_path / "dense.csv"
    main(["gen-network", "--n", "10", "--ties", "5", "--seed", "2", "--format", "dense", "--out", str(dense)])
    assert read_dense(dense).n_edges == 5


def test_simulate_matches_library(tmp_path, net):
    out = tmp_path / "y.csv"
    args = ["simulate", "--network", str(net), "--process", "equilibrium", "--rho", "0.1"]
    assert main(args + ["--noise-sd", "0.1", "--seed", "5", "--out", str(out)]) == 0
    expected = simulate_equilibrium(read_edge_list(net), EquilibriumProcessConfig(0.1, 0.1), 5)
    np.testing.assert_array_equal(io.read_vector(out), expected)


def test_simulate_ensemble(tmp_path, net):
    out = tmp_path / "e.csv"
    args = ["simulate", "--network", str(net), "--process", "direct", "--kappa", "0.5", "--alpha", "0.5"]
    assert main(args + ["--replicates", "4", "--seed", "2", "--out", str(out)]) == 0
    assert io.read_ensemble(out).shape == (4, 80)


def test_stochastic_commands_require_seed(tmp_path, net, capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--network", str(net), "--process", "direct", "--out", str(tmp_path / "y.csv")])
    assert info.value.code != 0
    with pytest.raises(SystemExit):
        main(["gen-network", "--n", "5", "--ties", "2", "--out", str(tmp_path / "g.csv")])


def test_fit_whiten_assoc_match_library(tmp_path, net, capsys):
    A = read_edge_list(net)
    x = simulate_direct(A, DirectProcessConfig(0.8, 0.2, noise_sd=0.1), 1)
    y = simulate_direct(A, DirectProcessConfig(0.8, 0.2, noise_sd=0.1), 2)
    xp, yp = tmp_path / "x.csv", tmp_path / "y.csv"
    io.write_vector(xp, x)
    io.write_vector(yp, y)

    fit_path = tmp_path / "lmm.json"
    assert main(["fit-lmm", "--network", str(net), "--y", str(yp), "--x", str(xp), "--out", str(fit_path)]) == 0
    assert io.read_json(fit_path) == fit_lmm(y, x, A, 2).to_json()

    assert main(["fit-nam", "--network", str(net), "--y", str(yp)]) == 0
    assert json.loads(capsys.readouterr().out) == fit_nam(y, None, A).to_json()

    wp = tmp_path / "w.csv"
    assert main(["whiten", "--network", str(net), "--input", str(xp), "--method", "nam", "--out", str(wp)]) == 0
    np.testing.assert_array_equal(io.read_vector(wp), nam_prewhiten(x, A)[0])

    assert main(["assoc", "--x", str(xp), "--y", str(yp), "--measure", "dcorr", "--perms", "199", "--seed", "9"]) == 0
    assert json.loads(capsys.readouterr().out) == dcorr_test(x, y, 199, 9).to_json()
    assert main(["assoc", "--x", str(xp), "--y", str(yp), "--measure", "ols"]) == 0
    assert json.loads(capsys.readouterr().out) == ols_test(x, y).to_json()


def test_dcorr_without_seed_fails(tmp_path, capsys):
    xp = tmp_path / "x.csv"
    io.write_vector(xp, np.arange(5.0))
    assert main(["assoc", "--x", str(xp), "--y", str(xp), "--measure", "dcorr"]) == 1
    assert "--seed" in capsys.readouterr().err


def test_malformed_input_names_file_and_line(tmp_path, net, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("value\n1.0\noops\n")
    assert main(["whiten", "--network", str(net), "--input", str(bad), "--method", "lmm", "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert f"{bad}:3:" in err and err.count("\n") == 1


def test_bad_network_line(tmp_path, capsys):
    bad = tmp_path / "net.csv"
    bad.write_text("src,dst\n0,1\n2,2\n")
    assert main(["fit-nam", "--network", str(bad), "--y", str(bad)]) == 1
    assert f"{bad}:3:" in capsys.readouterr().err


def test_length_mismatch(tmp_path, net, capsys):
    short = tmp_path / "s.csv"
    io.write_vector(short, np.ones(3))
    assert main(["fit-lmm", "--network", str(net), "--y", str(short)]) == 1
    assert str(short) in capsys.readouterr().err


def test_reproduce_table1(tmp_path):
    config = tmp_path / "c.json"
    io.write_json(config, {"replicates": 1, "n": 50, "ties": 50, "permutations": 99, "base_seed": 3})
    out = tmp_path / "t.csv"
    assert main(["reproduce-table1", "--config", str(config), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 43


def test_reproduce_table1_bad_config(tmp_path, capsys):
    config = tmp_path / "c.json"
    config.write_text('{"replicates": 1,\n "nope": 2}\n')
    assert main(["reproduce-table1", "--config", str(config), "--out", str(tmp_path / "t.csv")]) == 1
    assert str(config) in capsys.readouterr().err
    config.write_text('{"replicates": 1,\n')
    assert main(["reproduce-table1", "--config", str(config), "--out", str(tmp_path / "t.csv")]) == 1


def test_config_without_seed_refused(tmp_path, capsys):
    config = tmp_path / "c.json"
    io.write_json(config, {"replicates": 1})
    assert main(["reproduce-table1", "--config", str(config), "--out", str(tmp_path / "t.csv")]) == 1
    assert "seed" in capsys.readouterr().err


@pytest.mark.parametrize(
    "command",
    ["gen-network", "simulate", "fit-lmm", "fit-nam", "whiten", "assoc", "reproduce-table1"],
)
def test_help_documents_flags(command, capsys):
    with pytest.raises(SystemExit) as info:
        main([command, "--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    assert "--" in text and "usage" in text

"""Command-line interface tests: exit codes, artifacts, and byte-for-byte
determinism of seeded runs."""

import io
import json

from caperc.cli import main
from caperc.graph import EdgeColoredGraph, dump_graph, load_graph


def test_invalid_config_exits_2(capsys):
    # lambda length does not match k
    assert main(["analytic", "--k", "3", "--lambda", "2,2"]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_kind_protected_by_argparse():
    import pytest
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_near_critical_cli(capsys):
    assert main(["near-critical", "--k", "2"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["checks_passed"] is True
    assert abs(record["results"]["estimate"] - 4.0) < 0.1


def test_analytic_cli_infers_k(capsys):
    assert main(["analytic", "--lambda", "2,2"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["config"]["k"] == "2"
    assert record["results"]["regime"]["fully_supercritical"]


def test_ecbp_mc_cli(capsys):
    assert main(["ecbp-mc", "--lambda", "2,2", "--samples", "1000",
                 "--seed", "3"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["results"]["samples"] == 1000
    assert 0.0 < record["results"]["censored_mass"] < 1.0


def test_convergence_cli_deterministic_csv(tmp_path, capsys):
    args = ["convergence", "--lambda", "2,2", "--n", "200,400",
            "--replicas", "2", "--seed", "5"]
    outs = []
    for sub in ("a", "b"):
        out_dir = tmp_path / sub
        assert main(args + ["--out", str(out_dir)]) == 0
        capsys.readouterr()
        csv_files = list(out_dir.glob("*/convergence.csv"))
        assert len(csv_files) == 1
        outs.append(csv_files[0].read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"# schema: caperc-convergence-v1\n")


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("lambda=2,2\nsamples=400\nseed=1\n")
    assert main(["ecbp-mc", "--config", str(cfg), "--samples", "600"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["config"]["samples"] == "600"
    assert record["config"]["seed"] == "1"


def test_sample_ecer_cli(tmp_path, capsys):
    args = ["sample-ecer", "--lambda", "1.5,0.5", "--n", "300",
            "--seed", "4", "--out", str(tmp_path)]
    assert main(args) == 0
    capsys.readouterr()
    path = tmp_path / "ecer-n300-seed4.txt"
    with path.open() as fh:
        g = load_graph(fh)
    assert g.n == 300 and g.k == 2
    first = path.read_bytes()
    assert main(args) == 0
    capsys.readouterr()
    assert path.read_bytes() == first


def test_sample_ecer_cli_stdout(capsys):
    assert main(["sample-ecer", "--lambda", "1,1", "--n", "50",
                 "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "50 2"


def test_components_cli(tmp_path, capsys):
    g = EdgeColoredGraph(3, [[(0, 1), (0, 2)], [(1, 2)]])
    graph_path = tmp_path / "tri.txt"
    with graph_path.open("w") as fh:
        dump_graph(g, fh)
    assert main(["components", str(graph_path), "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    csv_path = tmp_path / "tri-components.csv"
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "# schema: cap-sizes-v1"
    fracs = [float(line.split(",")[1]) for line in lines[2:]]
    assert abs(sum(fracs) - 1.0) < 1e-12


def test_components_cli_missing_file(capsys):
    assert main(["components", "/nonexistent/path.txt"]) == 2
    assert "config error" in capsys.readouterr().err

import json
from pathlib import Path

from anisowalk.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tree_calc_uniform_values(capsys):
    code, out, _ = run(
        ["tree-calc", "--d", "3", "--inv", "id", "--p", "uniform", "--seed", "1"],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["rho"] - 0.9428090415820635) < 1e-9
    assert abs(doc["entropy"]["green"] - 0.23105) < 0.01
    assert doc["stopping_set"]["size"] > 0
    assert doc["backbone"]["max_q"] <= 1.0 / doc["stopping_set"]["k"] + 1e-12


def test_gen_and_mix_pipeline(tmp_path, capsys):
    graph_file = str(tmp_path / "k4.graph")
    Path(graph_file).write_text(
        "schreier n=4 d=3 inv=1,2,3\n"
        "perm 1: 2 1 4 3\n"
        "perm 2: 3 4 1 2\n"
        "perm 3: 4 3 2 1\n"
    )
    code, out, _ = run(
        ["mix", "--file", graph_file, "--p", "uniform", "--eps", "0.25"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    # K4 has d(1) = 1/4 exactly (an ulp-level tie against eps) and d(2) = 1/12
    assert doc["t_mix"]["0.25"] in (1, 2)


def test_gen_random_graph(tmp_path, capsys):
    out_file = str(tmp_path / "g.graph")
    code, _, _ = run(
        ["gen", "--family", "schreier", "--d", "3", "--inv", "id", "--n", "8",
         "--seed", "2", "--out", out_file],
        capsys,
    )
    assert code == 0
    header = Path(out_file).read_text().splitlines()[0]
    assert header == "schreier n=8 d=3 inv=1,2,3"


def test_verify_qnormal_suite(capsys):
    code, out, _ = run(["verify", "--suite", "qnormal"], capsys)
    assert code == 0
    assert "PASS qnormal.z1" in out


def test_usage_exit_code(capsys):
    code, _, err = run(["no-such-command"], capsys)
    assert code == 1
    assert json.loads(err.strip())["error"] == "usage"


def test_validation_exit_code(capsys):
    code, _, err = run(["tree-calc", "--d", "2"], capsys)
    assert code == 2
    assert json.loads(err.strip())["error"] == "DegreeTooSmall"


def test_mix_requires_valid_eps(capsys, tmp_path):
    graph_file = str(tmp_path / "g.graph")
    run(["gen", "--family", "schreier", "--d", "3", "--n", "4", "--seed", "3",
         "--out", graph_file], capsys)
    code, _, err = run(
        ["mix", "--file", graph_file, "--p", "0.5,0.5", "--eps", "0.25"], capsys
    )
    assert code == 2  # wrong mass count for d=3


def test_cutoff_determinism_across_runs_and_threads(tmp_path, capsys):
    args = ["cutoff", "--sizes", "64", "--seeds", "1,2", "--d", "3",
            "--seed", "9", "--eps", "0.25,0.1,0.9"]
    outs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "8")):
        out_dir = tmp_path / name
        code, _, _ = run(args + ["--out", str(out_dir), "--threads", threads], capsys)
        assert code == 0
        outs.append(out_dir)

    def stripped(path: Path) -> dict:
        lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
        return "\n".join(lines)

    for d2 in outs[1:]:
        for f in sorted(outs[0].iterdir()):
            assert stripped(f) == stripped(d2 / f.name)


def test_cutoff_config_file(tmp_path, capsys):
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[experiment]\n"
        "family = schreier\n"
        "d = 3\n"
        "involution = id\n"
        "p = uniform\n"
        "sizes = 64\n"
        "seeds = 4\n"
        "eps = 0.25,0.5\n"
        f"out = {tmp_path / 'runs'}\n"
    )
    code, _, _ = run(["cutoff", "--config", str(cfg), "--seed", "2"], capsys)
    assert code == 0
    summary = json.loads(
        "\n".join(
            l for l in (tmp_path / "runs" / "summary.json").read_text().splitlines()
            if not l.startswith("#")
        )
    )
    assert summary["cells"][0]["n"] == 64
    assert summary["root_seed"] == 2


def test_mix_numerical_exit_on_periodic_graph(tmp_path, capsys):
    # two odd shifts on Z_10: bipartite, never mixes
    graph_file = str(tmp_path / "bip.graph")
    Path(graph_file).write_text(
        "schreier n=10 d=4 inv=2,1,4,3\n"
        "perm 1: 2 3 4 5 6 7 8 9 10 1\n"
        "perm 2: 10 1 2 3 4 5 6 7 8 9\n"
        "perm 3: 4 5 6 7 8 9 10 1 2 3\n"
        "perm 4: 8 9 10 1 2 3 4 5 6 7\n"
    )
    code, out, _ = run(
        ["mix", "--file", graph_file, "--p", "uniform", "--eps", "0.25",
         "--t-max", "100"],
        capsys,
    )
    assert code == 3
    assert json.loads(out)["parity_suspected"] is True


def test_mix_csv_format(tmp_path, capsys):
    graph_file = str(tmp_path / "k4.graph")
    Path(graph_file).write_text(
        "schreier n=4 d=3 inv=1,2,3\n"
        "perm 1: 2 1 4 3\n"
        "perm 2: 3 4 1 2\n"
        "perm 3: 4 3 2 1\n"
    )
    code, out, _ = run(
        ["mix", "--file", graph_file, "--eps", "0.25", "--format", "csv"], capsys
    )
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0] == "t,tv"
    assert lines[1] == "0,0.75"


def test_cutoff_explicit_file_family(tmp_path, capsys):
    graph_file = tmp_path / "k4.graph"
    graph_file.write_text(
        "schreier n=4 d=3 inv=1,2,3\n"
        "perm 1: 2 1 4 3\n"
        "perm 2: 3 4 1 2\n"
        "perm 3: 4 3 2 1\n"
    )
    cfg = tmp_path / "exp.ini"
    cfg.write_text(
        "[experiment]\n"
        "family = explicit-file\n"
        f"file = {graph_file}\n"
        "p = uniform\n"
        "sizes = 4\n"
        "seeds = 1\n"
        "eps = 0.5\n"
        f"out = {tmp_path / 'runs'}\n"
    )
    code, _, _ = run(["cutoff", "--config", str(cfg), "--seed", "3"], capsys)
    assert code == 0
    summary = json.loads(
        "\n".join(
            l for l in (tmp_path / "runs" / "summary.json").read_text().splitlines()
            if not l.startswith("#")
        )
    )
    assert summary["cells"][0]["n_states"] == 4


def test_nb_subcommand(tmp_path, capsys):
    graph_file = str(tmp_path / "k4.graph")
    Path(graph_file).write_text(
        "schreier n=4 d=3 inv=1,2,3\n"
        "perm 1: 2 1 4 3\n"
        "perm 2: 3 4 1 2\n"
        "perm 3: 4 3 2 1\n"
    )
    code, out, _ = run(["nb", "--file", graph_file, "--k", "2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["distribution"][0] == 0.0
    assert abs(sum(doc["distribution"]) - 1.0) < 1e-12


def test_spectra_subcommand(tmp_path, capsys):
    graph_file = str(tmp_path / "g.graph")
    run(["gen", "--family", "schreier", "--d", "3", "--n", "32", "--seed", "6",
         "--out", graph_file], capsys)
    code, out, _ = run(
        ["spectra", "--file", graph_file, "--t", "1,2", "--dense"], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert "1" in doc["sigma_t"] and "2" in doc["sigma_t"]
    assert doc["dense"]["reversible"] is True

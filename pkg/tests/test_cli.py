import pytest

from intree.cli import SweepSpec, UsageError, main, sweep_csv
from intree.config import MB, SimConfig
from intree.scenarios import clustered_scenario


@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo")
    assert main(["synth", "--out-dir", str(d), "--duration", "4000", "--nodes", "12"]) == 0
    return d


def sim_args(d, *extra):
    return ["--trace", str(d / "trace.csv"), "--tree", str(d / "tree.csv"), *extra]


def test_run_prints_one_aggregate_row_per_router(demo, capsys):
    assert main(["run", *sim_args(demo, "--router", "all", "--runs", "2", "--duration", "4000")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("router,run,created")
    assert [line.split(",")[:2] for line in out[1:]] == [["int-tree", "mean"], ["epidemic", "mean"], ["prophet", "mean"]]


def test_flags_override_config_file(demo, tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("router = prophet\nbuffer = 5MB\nduration = 4000\nruns = 1\n")
    assert main(["run", *sim_args(demo, "--config", str(cfg), "--router", "epidemic", "--buffer", "30MB")]) == 0
    err = capsys.readouterr().err
    assert "buffer_capacity = 31457280" in err
    assert "router = epidemic" in err


def test_missing_trace_exit_2(demo, capsys):
    assert main(["run", "--trace", "nowhere.csv", "--tree", str(demo / "tree.csv")]) == 2
    assert "nowhere.csv" in capsys.readouterr().err


def test_unknown_router_exit_2(demo):
    assert main(["run", *sim_args(demo, "--router", "bubble")]) == 2


def test_bad_flag_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["run", "--bogus"])
    assert info.value.code == 2


def test_run_is_byte_identical(demo, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.csv"
        assert main(["run", *sim_args(demo, "--runs", "2", "--duration", "4000", "--out", str(path))]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_sweep_rows(demo, capsys):
    argv = ["sweep", *sim_args(demo, "--router", "int-tree,epidemic", "--runs", "2", "--duration", "3000",
                               "--sweep-var", "buffer", "--sweep-values", "5MB,10MB")]
    assert main(argv) == 0
    rows = capsys.readouterr().out.splitlines()
    header, body = rows[0], [r.split(",") for r in rows[1:]]
    assert header.startswith("variable,value,router,run,aggregate")
    assert len(body) == 2 * 2 * 2 + 2 * 2
    assert sum(r[4] == "1" for r in body) == 4
    assert body[0][:5] == ["buffer", "5MB", "int-tree", "0", "0"]
    assert body[2][:5] == ["buffer", "5MB", "int-tree", "mean", "1"]


def test_sweep_errors(demo):
    base = sim_args(demo, "--duration", "3000")
    assert main(["sweep", *base, "--sweep-var", "colour", "--sweep-values", "1,2"]) == 2
    assert main(["sweep", *base, "--sweep-var", "beta", "--sweep-values", "0.5,0.2"]) == 2


def test_sweep_row_arithmetic():
    sc = clustered_scenario(duration=2000, seed=4)
    plan = SweepSpec("gamma", [0.1 * i for i in range(1, 10)], SimConfig(duration=2000, runs=1), ["int-tree"])
    body = sweep_csv(plan, sc.trace, sc.tree, workers=1).splitlines()[1:]
    assert sum(r.split(",")[4] == "1" for r in body) == 9
    plan = SweepSpec("buffer", [b * MB for b in (5, 10, 15, 20, 25, 30)], SimConfig(runs=10), ["int-tree", "epidemic", "prophet"])
    assert len(plan.configs()) * 10 == 180 and len(plan.configs()) == 18
    with pytest.raises(UsageError):
        SweepSpec("buffer", [], SimConfig())


def test_build_tree_report(tmp_path, capsys):
    f = tmp_path / "interests.csv"
    f.write_text("node_id,interest_id\n0,1\n1,1\n2,1\n0,2\n1,3\n")
    out = tmp_path / "tree.csv"
    assert main(["build-tree", str(f), "--out", str(out)]) == 0
    report = capsys.readouterr().out
    assert "# 3 layers, 3 interests" in report
    assert out.read_text().startswith("community_id,parent_id,members")
    assert (tmp_path / "tree.csv.majors").exists()


def test_build_tree_empty_file(tmp_path):
    f = tmp_path / "empty.csv"
    f.write_text("")
    assert main(["build-tree", str(f)]) == 2


def test_validate_trace(tmp_path, capsys):
    good = tmp_path / "log.txt"
    good.write_text("100;3;7\n160;3;7\n")
    assert main(["validate-trace", str(good), "--trace-format", "sightings"]) == 0
    assert "1 contacts" in capsys.readouterr().out
    bad = tmp_path / "bad.csv"
    bad.write_text("time,kind,a,b\n1,UP,0\n")
    assert main(["validate-trace", str(bad)]) == 1
    assert main(["validate-trace", str(tmp_path / "none.csv")]) == 2


def test_decision_trace(demo, tmp_path):
    path = tmp_path / "dec.csv"
    assert main(["run", *sim_args(demo, "--runs", "1", "--duration", "3000", "--decisions", str(path))]) == 0
    assert path.read_text().splitlines()[0] == "time,holder,peer,msg_id,verdict,rule"

import json

import httpx
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from vplt.cli import main
from vplt.service import app


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def test_exact_exit_codes(runner, files):
    ok = files("ok.txt", "0 1 0' 0'\n")
    bad = files("bad.txt", "1 1' \n")
    unbalanced = files("unb.txt", "0 0\n")
    junk = files("junk.txt", "0 q 0'\n")
    assert runner.invoke(main, ["exact", "--vpa", "disj", "--input", ok]).exit_code == 0
    assert runner.invoke(main, ["exact", "--vpa", "disj", "--input", bad]).exit_code == 1
    res = runner.invoke(main, ["exact", "--vpa", "disj", "--input", unbalanced])
    assert res.exit_code == 1 and "unbalanced" in res.output
    assert runner.invoke(main, ["exact", "--vpa", "disj", "--input", junk]).exit_code == 2
    assert runner.invoke(main, ["exact", "--vpa", "nowhere.vpa", "--input", ok]).exit_code == 2


def test_exact_reads_stdin_and_stats(runner):
    res = runner.invoke(main, ["exact", "--vpa", "nest4", "--stats"], input="< x x > y\n")
    assert res.exit_code == 0
    stats = json.loads(res.output)
    assert stats["n"] == 5 and stats["max_stack"] >= 0 and "max_depth" in stats


def test_machine_file(runner, files, tmp_path):
    from vplt.api import builtin_machine

    path = files("m.vpa", builtin_machine("paren"))
    assert runner.invoke(main, ["exact", "--vpa", path], input="( [ ] )").exit_code == 0


def test_tester_report(runner, files):
    stream = files("s.txt", "%n 4\n0 1 0' 0'\n")
    out = files("r.json", "")
    res = runner.invoke(main, ["test", "--vpa", "disj", "--input", stream, "--seed", "3", "--out", out])
    assert res.exit_code == 0
    rep = json.loads(open(out).read())
    assert rep["verdict"] == "accept" and rep["n"] == 4 and rep["seed"] == 3


def test_tester_needs_length(runner):
    res = runner.invoke(main, ["test", "--vpa", "disj"], input="0 0'")
    assert res.exit_code == 2 and "n" in res.output


def test_tester_length_mismatch(runner):
    res = runner.invoke(main, ["test", "--vpa", "disj", "--n", "5"], input="0 0'")
    assert res.exit_code == 2


def test_tester_rejects_far_word(runner):
    gen = runner.invoke(main, ["gen", "disj", "--n", "400", "--mode", "far", "--seed", "1"])
    assert gen.exit_code == 0 and "certificate" in gen.stderr
    res = runner.invoke(main, ["test", "--vpa", "disj", "--seed", "2"], input=gen.stdout)
    assert res.exit_code == 1 and json.loads(res.stdout)["verdict"] == "reject"


def test_oracle_commands(runner, files):
    u = files("u.txt", "0 0'")
    v = files("v.txt", "1 a 1'")
    res = runner.invoke(main, ["oracle", "bdist", u, v])
    assert res.exit_code == 0 and res.output.strip() == "5"
    res = runner.invoke(main, ["oracle", "bdist", u, v, "--vpa", "disj"])
    assert res.output.strip() == "5"
    res = runner.invoke(main, ["oracle", "fardist", "--vpa", "disj", "--input", v, "--bound", "2"])
    assert res.output.strip() == "> 2"
    res = runner.invoke(main, ["oracle", "fardist", "--vpa", "disj", "--input", u, "--bound", "2"])
    assert res.output.strip() == "0"


def test_gen_member(runner, tmp_path):
    out = tmp_path / "w.txt"
    res = runner.invoke(main, ["gen", "member", "--vpa", "nest4", "--n", "50", "--seed", "1", "--out", str(out)])
    assert res.exit_code == 0
    assert runner.invoke(main, ["exact", "--vpa", "nest4", "--input", str(out)]).exit_code == 0
    res = runner.invoke(main, ["gen", "member", "--vpa", "paren", "--n", "3"])
    assert res.exit_code == 2


def test_run_config(runner, tmp_path):
    cfg = {"vpa": "disj", "generator": {"kind": "disj", "mode": "member"}, "n": [32, 64], "trials": 2}
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    res = runner.invoke(main, ["run", "--config", str(path), "--output", str(tmp_path / "rep")])
    assert res.exit_code == 0, res.output
    assert "memory fit" in res.stdout
    assert (tmp_path / "rep.csv").read_text().startswith("n,seed,verdict")
    path.write_text("{not json")
    assert runner.invoke(main, ["run", "--config", str(path)]).exit_code == 2


@pytest.fixture
def forwarded(monkeypatch):
    client = TestClient(app)
    calls = []

    def post(url, json=None, timeout=None):
        calls.append(url)
        return client.post(url.replace("http://vplt.test", ""), json=json)

    monkeypatch.setattr(httpx, "post", post)
    return calls


def test_server_forwarding(runner, forwarded):
    base = ["--server", "http://vplt.test/"]
    assert runner.invoke(main, base + ["exact", "--vpa", "disj"], input="0 0'").exit_code == 0
    assert runner.invoke(main, base + ["exact", "--vpa", "disj"], input="0 q").exit_code == 2
    res = runner.invoke(main, base + ["gen", "disj", "--n", "10", "--seed", "1"])
    assert res.exit_code == 0
    assert forwarded == ["http://vplt.test/exact", "http://vplt.test/exact", "http://vplt.test/gen/disj"]


def test_server_unreachable(runner):
    res = runner.invoke(main, ["--server", "http://127.0.0.1:9", "exact", "--vpa", "disj"], input="0 0'")
    assert res.exit_code != 0 and "cannot reach" in res.output

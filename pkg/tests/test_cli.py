import csv
import io
import json

import pytest

from pebblehash.cli import main
from pebblehash.graph import deserialize


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [l for l in text.splitlines() if "," in l and not l.startswith(("PSTRAT1", "+", "-", ">"))]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


@pytest.fixture
def c3(tmp_path, capsys):
    f = tmp_path / "c3.pgraph"
    assert run(capsys, "gen", "--family", "cylinder", "--h", "3", "--out", str(f))[0] == 0
    return f


def test_gen_cylinder3(c3, capsys):
    d = deserialize(c3.read_bytes())
    assert d.node_count == 18


def test_gen_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for f in (a, b):
        run(capsys, "--seed", "4", "gen", "--family", "time-optimal", "--h", "3", "--out", str(f))
    assert a.read_bytes() == b.read_bytes()


def test_solve_magic(tmp_path, capsys):
    f = tmp_path / "c2.pgraph"
    run(capsys, "gen", "--family", "cylinder", "--h", "2", "--out", str(f))
    code, out, _ = run(capsys, "solve", "--graph", str(f), "--game", "magic", "--mbound", "2",
                       "--mode", "par")
    assert code == 0
    assert out.splitlines()[0] == "magic_space=2"
    assert "PSTRAT1 magic 2" in out


def test_solve_then_pebble(tmp_path, capsys):
    f = tmp_path / "p.pgraph"
    w = tmp_path / "w.pstrat"
    run(capsys, "gen", "--family", "pyramid", "--h", "3", "--out", str(f))
    code, out, _ = run(capsys, "solve", "--graph", str(f), "--witness", str(w), "--csv", str(tmp_path / "s.csv"))
    assert code == 0 and out.startswith("space=3")
    assert (tmp_path / "s.csv").read_text().startswith("game,mode,space")
    code, out, _ = run(capsys, "pebble", "--graph", str(f), "--strategy", str(w), "--alphas", "1,2")
    r = rows(out)[0]
    assert code == 0 and r["space"] == "3" and int(r["pcc_2"]) > int(r["pcc_1"])


def test_pebble_violation_exit_2(tmp_path, capsys):
    f = tmp_path / "p.pgraph"
    run(capsys, "gen", "--family", "pyramid", "--h", "2", "--out", str(f))
    s = tmp_path / "bad.pstrat"
    s.write_text("PSTRAT1 standard\n+b 2\n")
    assert run(capsys, "pebble", "--graph", str(f), "--strategy", str(s))[0] == 2
    s.write_text("garbage\n")
    assert run(capsys, "pebble", "--graph", str(f), "--strategy", str(s))[0] == 2


def test_budget_exit_3(c3, capsys):
    assert run(capsys, "solve", "--graph", str(c3), "--max-states", "5")[0] == 3


def test_usage_exit_1(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "gen", "--family", "cylinder", "--bogus", "1", "--out", "x")[0] == 1
    assert run(capsys, "gen", "--family", "nope", "--out", "x")[0] == 1


def test_bad_graph_exit_2(tmp_path, capsys):
    f = tmp_path / "bad.pgraph"
    f.write_text("PGRAPH1 2 1 2\nS 0\nT 1\n1 0\n")
    assert run(capsys, "solve", "--graph", str(f))[0] == 2


def test_shf_setup_and_eval(tmp_path, capsys):
    t = tmp_path / "R.shfr"
    code, out, _ = run(capsys, "--seed", "3", "shf-setup", "--family", "cylinder", "--h", "3",
                       "--hash", "test", "--w", "64", "--out", str(t))
    assert code == 0 and rows(out)[0]["labels"] == "3"
    x = "00" * 7 + "01"
    outs = [run(capsys, "--seed", "3", "shf-eval", "--table", str(t), "--x", x, "--hash", "test")
            for _ in range(2)]
    assert outs[0] == outs[1] and outs[0][0] == 0
    r = rows(outs[0][1])[0]
    assert r["oracle_calls"] == "2" and len(r["output"]) == 16
    other = run(capsys, "--seed", "4", "shf-eval", "--table", str(t), "--x", x, "--hash", "test")
    assert other[1] != outs[0][1]
    assert run(capsys, "shf-eval", "--table", str(t), "--x", "00")[0] == 1


def test_shf_eval_qprime(tmp_path, capsys):
    t = tmp_path / "R.shfr"
    run(capsys, "shf-setup", "--family", "cylinder", "--h", "4", "--truncate", "128", "--out", str(t))
    code, out, _ = run(capsys, "shf-eval", "--table", str(t), "--x", "00" * 64, "--qprime", "4")
    r = rows(out)[0]
    assert code == 0 and len(r["output"]) == 128 and len(r["indices"].split()) == 4
    assert int(r["oracle_calls"]) >= 2


def test_audit_record_and_replay(c3, tmp_path, capsys):
    tr = tmp_path / "t.ptrace"
    code, out, _ = run(capsys, "audit", "--graph", str(c3), "--record", "adversary", "--inject", "3,4,5",
                       "--declared-bits", "1024", "--save-trace", str(tr))
    r = rows(out)[0]
    assert code == 0 and r["magic_used"] == "3" and r["flagged"] == "True"
    code, out2, _ = run(capsys, "audit", "--graph", str(c3), "--trace", str(tr))
    assert code == 0 and rows(out2)[0]["magic_used"] == "3"
    code, out3, _ = run(capsys, "audit", "--graph", str(c3), "--record", "honest")
    assert rows(out3)[0]["magic_used"] == "0"
    assert run(capsys, "audit", "--graph", str(c3))[0] == 1


def test_bench_counts(capsys):
    code, out, _ = run(capsys, "bench", "--row-bits", "256,512", "--evals", "10")
    r = rows(out)
    assert code == 0
    assert [x["hash_calls"] for x in r] == ["16", "64"]
    assert all(x["hash_calls"] == x["expected_calls"] for x in r)
    assert all(float(x["h2_calls"]) == 2.0 for x in r)


def test_json_mirrors_csv(capsys):
    args = ["measure", "--family", "cc-alpha-crossover", "--n", "16", "--a", "1/4", "--b", "2/3",
            "--c", "2/3", "--strategy", "p2"]
    _, c, _ = run(capsys, *args)
    _, j, _ = run(capsys, "--format", "json", *args)
    crow, jrow = rows(c)[0], json.loads(j)[0]
    assert list(crow) == list(jrow)
    assert {k: str(v) for k, v in jrow.items()} == crow


def test_measure_crossover_and_genpeb(capsys):
    code, out, _ = run(capsys, "measure", "--family", "cc-alpha-crossover", "--n", "16", "--a", "1/4",
                       "--b", "2/3", "--c", "2/3", "--strategy", "p1", "--crossover")
    r = rows(out)[0]
    assert code == 0 and 1 < float(r["crossover_alpha"]) < 10
    code, out, _ = run(capsys, "measure", "--family", "cylinder", "--h", "3", "--strategy", "wavefront")
    assert code == 0 and rows(out)[0]["time"] == "6"
    assert run(capsys, "measure", "--family", "pyramid", "--h", "3", "--strategy", "p2")[0] == 1


def test_out_dir(tmp_path, capsys):
    code, _, _ = run(capsys, "--out-dir", str(tmp_path / "o"), "gen", "--family", "pyramid", "--h", "2",
                     "--out", "p.pgraph")
    assert code == 0 and (tmp_path / "o" / "p.pgraph").exists()


def test_help_lists_formats(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    for token in ("PGRAPH1", "PSTRAT1", "SHFR1", "PTRACE1", "csv", "json"):
        assert token in out

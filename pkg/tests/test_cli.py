import json
import subprocess
import sys

import pytest

from kcrb.cli import main


def kcrb(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def cfg(example1_path):
    return example1_path


def test_validate(capsys, cfg, tmp_path):
    assert kcrb(capsys, "validate", "--config", cfg)[0] == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"processes": ["a", "b"],
                               "quorums": {"a": [["a"]], "b": [["a"]]}}))
    code, out, _ = kcrb(capsys, "validate", "--config", bad)
    assert code == 1 and "self-inclusion" in out
    assert kcrb(capsys, "validate", "--config", tmp_path / "missing.json")[0] == 2
    (tmp_path / "junk.json").write_text("{not json")
    code, _, err = kcrb(capsys, "validate", "--config", tmp_path / "junk.json")
    assert code == 2 and "invalid JSON" in err


def test_analyze(capsys, cfg, tmp_path):
    out_json = tmp_path / "w.json"
    code, out, _ = kcrb(capsys, "analyze", "--config", cfg, "--json", out_json)
    assert code == 0 and "k_max = 2" in out and "{p1,p4}" in out
    doc = json.loads(out_json.read_text())
    assert doc["k_max"] == 2 and doc["faulty"] == ["p3"]
    again = tmp_path / "w2.json"
    kcrb(capsys, "analyze", "--config", cfg, "--json", again, "--no-dedup")
    plain = json.loads(again.read_text())
    doc["stats"].pop("dedup"), plain["stats"].pop("dedup")
    assert plain == doc


def test_analyze_invalid_config(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"processes": ["a"], "quorums": {"a": []}}))
    assert kcrb(capsys, "analyze", "--config", bad)[0] == 1


def test_analyze_json_is_stable(capsys, cfg, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    kcrb(capsys, "analyze", "--config", cfg, "--json", a)
    kcrb(capsys, "analyze", "--config", cfg, "--json", b)
    assert a.read_bytes() == b.read_bytes()


def test_attack(capsys, cfg, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, out, _ = kcrb(capsys, "attack", "--config", cfg, "--trace", trace, "--seed", 4)
    assert code == 0 and "distinct delivered values = 2" in out
    assert "p1 delivered m1" in out and "p4 delivered m2" in out
    first = trace.read_bytes()
    kcrb(capsys, "attack", "--config", cfg, "--trace", trace, "--seed", 4)
    assert trace.read_bytes() == first
    code, _, err = kcrb(capsys, "attack", "--config", cfg, "--values", "x", "x")
    assert code == 2 and "distinct" in err


def test_attack_on_uniform_degenerates(capsys, tmp_path):
    u = tmp_path / "u.json"
    assert kcrb(capsys, "gen", "--uniform", 4, 1, "--out", u)[0] == 0
    code, out, _ = kcrb(capsys, "attack", "--config", u, "--trace", tmp_path / "t.jsonl")
    assert code == 0 and "distinct delivered values = 1" in out


def test_simulate(capsys, cfg):
    code, out, _ = kcrb(capsys, "simulate", "--config", cfg, "--source", "p1",
                        "--adversary", "silent", "--seed", 0, "--runs", 100)
    assert code == 0 and "100 pass, 0 fail" in out
    code, out, _ = kcrb(capsys, "simulate", "--config", cfg, "--source", "p3", "--faulty", "p3",
                        "--adversary", "equivocate_split", "--seed", 0, "--runs", 30)
    assert code == 0 and "k_bound=2" in out
    code, _, err = kcrb(capsys, "simulate", "--config", cfg, "--source", "p1",
                        "--faulty", "p1,p2", "--adversary", "silent", "--seed", 0)
    assert code == 1 and "does not comply" in err
    assert kcrb(capsys, "simulate", "--config", cfg, "--source", "p9")[0] == 2


def test_probe(capsys, cfg):
    code, out, _ = kcrb(capsys, "probe", "--config", cfg)
    assert code == 0 and out.count("delivers") == 9
    code, out, _ = kcrb(capsys, "probe", "--config", cfg, "--process", "p4", "--quorum", "p2,p4")
    assert code == 0 and out.count("delivers") == 1
    assert kcrb(capsys, "probe", "--config", cfg, "--process", "p4", "--quorum", "p1,p4")[0] == 2


def test_gen(capsys, tmp_path):
    c = tmp_path / "c.json"
    assert kcrb(capsys, "gen", "--clusters", 2, 2, "--out", c)[0] == 0
    assert "k_max = 2" in kcrb(capsys, "analyze", "--config", c)[1]
    code, out, _ = kcrb(capsys, "gen", "--uniform", 1, 0)
    assert code == 0 and json.loads(out)["processes"] == ["p0"]
    assert kcrb(capsys, "gen", "--uniform", 2, 2)[0] == 2
    assert kcrb(capsys, "gen", "--clusters", 0, 2)[0] == 2


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["gen", "--uniform", "4", "1", "--clusters", "2", "2"])
    assert e.value.code == 2


def test_console_entry_point(cfg):
    r = subprocess.run([sys.executable, "-m", "kcrb.cli", "validate", "--config", cfg],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "valid" in r.stdout

import json

from qmlab.cli import main


def run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def test_pipeline_trivial(capsys):
    status, out, _ = run(capsys, "pipeline", "--action", "trivial-z")
    rep = json.loads(out)
    assert status == 0 and rep["verdict"] == "pass"
    assert rep["observed_root_B"] == "0" and rep["claimed_defect"] == "1"
    assert rep["bound"].endswith("= 1")
    assert rep["sample_certified"] is True


def test_equiv_counting(capsys):
    status, out, _ = run(capsys, "equiv", "--group", "F2", "--qm", "count:a", "--qm2", "count:b", "--max-length", "2")
    rep = json.loads(out)
    assert status == 0 and rep["verdict"] == "inequivalent"
    assert rep["witness"] == {"g": "a", "n": 11}


def test_malformed_json_config(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    target = tmp_path / "out.json"
    status, out, err = run(capsys, "--config", str(cfg), "--output", str(target))
    assert status == 2 and out == "" and "malformed" in err
    assert not target.exists()


def test_malformed_json_flag(capsys):
    status, out, _ = run(capsys, "defect", "--qm", '{"kind": ')
    assert status == 2 and out == ""


def test_bad_budget(capsys):
    status, out, _ = run(capsys, "defect", "--max-length", "0")
    assert status == 2 and out == ""


def test_bad_threads(capsys, monkeypatch):
    monkeypatch.setenv("QMLAB_THREADS", "lots")
    status, out, _ = run(capsys, "rotnum", "--lift", "rot:1/2")
    assert status == 2 and out == ""


def test_threads_reported(capsys, monkeypatch):
    monkeypatch.setenv("QMLAB_THREADS", "4")
    _, out, _ = run(capsys, "rotnum", "--lift", "rot:1/2")
    assert json.loads(out)["budgets"]["threads"] == {"requested": 4, "used": 1}


def test_config_file_and_output(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "embed", "group": "F2", "qm": "hom:a=1", "budgets": {"max_length": 1}}))
    target = tmp_path / "levels.csv"
    status, out, _ = run(capsys, "--config", str(cfg), "--output", str(target))
    assert status == 0 and out == ""
    assert target.read_text().splitlines() == ["word,level,slot", "1,0,0", "a,1,0", "a^-1,-1,0", "b,0,1", "b^-1,0,2"]


def test_deterministic(capsys):
    argv = ("homog", "--group", "F2", "--qm", "count:ab", "--word", "aab", "--doublings", "6")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_homog_csv(capsys):
    status, out, _ = run(capsys, "homog", "--group", "F2", "--qm", "count:ab", "--word", "ab", "--doublings", "3", "--format", "csv")
    assert status == 0
    assert out.splitlines()[0] == "k,n,value,gap,allowed"
    assert out.splitlines()[-1] == "3,8,1,0,1/4"


def test_orbit_csv(capsys):
    status, out, _ = run(capsys, "orbit", "--group", "F2", "--qm", "count:ab", "--word", "ab", "--iters", "4", "--max-length", "2")
    assert status == 0
    assert out.splitlines() == ["n,level", "0,0", "1,1", "2,2", "3,3", "4,4"]


def test_psl2z_commands(capsys):
    status, out, _ = run(capsys, "psl2z", "count", "--word", "S R S R S R")
    assert status == 0 and json.loads(out)["count"] == 3
    status, out, _ = run(capsys, "psl2z", "homog", "--word", "R")
    rep = json.loads(out)
    assert rep["torsion"] is True and rep["value"] == "0"
    status, out, _ = run(capsys, "psl2z", "defect", "--max-length", "3")
    assert status == 0 and json.loads(out)["observed_defect"] == "3"
    status, _, _ = run(capsys, "psl2z")
    assert status == 2


def test_verify_triple_density(capsys):
    density = json.dumps({"kind": "step", "pieces": [[0, "1/2"], ["1/2", "3/2"]]})
    status, out, _ = run(capsys, "verify-triple", "--density", density, "--truncation", "2")
    assert status == 0 and json.loads(out)["max_abs_b"] == "0"


def test_defect_violation_exits_one(capsys):
    status, out, _ = run(capsys, "defect", "--qm", '{"kind": "counting", "pattern": "ab", "defect": "1/2"}', "--max-length", "2")
    rep = json.loads(out)
    assert status == 1 and rep["verdict"] == "fail"
    assert rep["observed_defect"] == "1" and rep["witness"] == ["a", "b"]


def test_rotnum_power(capsys):
    status, out, _ = run(capsys, "rotnum", "--lift", "rot:2/5", "--power", "3")
    rep = json.loads(out)
    assert status == 0 and rep["tau"] == "2/5" and rep["homogeneity"]["observed"] == "0"


def test_unknown_command_in_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "serve"}))
    assert run(capsys, "--config", str(cfg))[0] == 2


def test_missing_word(capsys):
    status, out, err = run(capsys, "orbit", "--max-length", "1")
    assert status == 2 and out == "" and "--word" in err

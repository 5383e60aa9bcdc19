import csv
import io
import json

import pytest

from cohomflow.cli import main
from cohomflow.superpotential import ansatz_to_dict, search
from cohomflow.weight_config import catalog_entry, config_hash, config_to_dict


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def manifest_of(out):
    return json.loads(open(out + ".manifest.json").read())


def test_verify_exit_codes(tmp_path, capsys):
    code, out, err = run(["verify", "bbc-case5", "case5"], capsys)
    assert code == 0 and json.loads(out)["satisfied"]
    man = json.loads(err)
    assert man["command"] == "verify"
    assert man["config_hash"] == config_hash(catalog_entry("bbc-case5"))
    for key in ("tool_version", "wall_time", "parameters", "results"):
        assert key in man

    bad = config_to_dict(catalog_entry("bbc-case5"))
    bad["weights"][2]["A"] = "-1/4"
    code, out, _ = run(["verify", write(tmp_path / "bad.json", bad), "case5"], capsys)
    assert code == 1 and json.loads(out)["violated_b"]

    bad["E"] = "1/0"
    assert run(["verify", write(tmp_path / "bad2.json", bad), "case5"], capsys)[0] == 2
    bad["E"] = 0.5
    assert run(["verify", write(tmp_path / "bad3.json", bad), "case5"], capsys)[0] == 2
    assert run(["verify", str(tmp_path / "missing.json"), "case5"], capsys)[0] == 2
    (tmp_path / "junk.json").write_text("{not json")
    assert run(["verify", str(tmp_path / "junk.json"), "case5"], capsys)[0] == 2
    assert run(["verify", "bbc-case5", str(tmp_path / "junk.json")], capsys)[0] == 2


def test_verify_ansatz_file(tmp_path, capsys):
    ans = search(catalog_entry("bryant5")).found[0]
    path = write(tmp_path / "a.json", ansatz_to_dict(ans))
    assert run(["verify", "bryant5", path], capsys)[0] == 0
    assert run(["verify", "bryant-n3", path], capsys)[0] in (1, 2)


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 2
    assert run(["nonsense"], capsys)[0] == 2
    assert run(["integrate", "bbc-case5", "--tol", "1e-3"], capsys)[0] == 2
    assert run(["classify", "bbc-case5", "--lattice-bound", "5"], capsys)[0] == 2
    assert run(["classify", "bbc-case5", "--max-extra", "5"], capsys)[0] == 2
    assert run(["--version"], capsys)[0] == 0


def test_classify_idempotent_and_threads(tmp_path, capsys, monkeypatch):
    outs = []
    for i, threads in enumerate(["1", "4", "4"]):
        out = str(tmp_path / f"c{i}.json")
        assert run(["classify", "warped-2x2", "--threads", threads, "--out", out], capsys)[0] == 0
        outs.append(open(out).read())
        man = manifest_of(out)
        assert man["results"]["found"] == 1 and not man["results"]["partial"]
    assert outs[0] == outs[1] == outs[2]
    monkeypatch.setenv("COHOMFLOW_THREADS", "3")
    out = str(tmp_path / "env.json")
    assert run(["classify", "warped-2x2", "--out", out], capsys)[0] == 0
    assert open(out).read() == outs[0]
    monkeypatch.setenv("COHOMFLOW_THREADS", "x")
    assert run(["classify", "warped-2x2"], capsys)[0] == 2


def test_classify_budget(capsys):
    code, out, _ = run(["classify", "bbc-case5", "--budget", "10"], capsys)
    assert code == 3 and json.loads(out)["partial"]


def test_classify_negative_control(capsys):
    code, out, _ = run(["classify", "bryant-n3"], capsys)
    assert code == 0 and json.loads(out)["found"] == []


def test_integrate_case5(tmp_path, capsys):
    out = str(tmp_path / "t.csv")
    assert run(["integrate", "bbc-case5", "--check-closed-form", "--out", out], capsys)[0] == 0
    rows = list(csv.reader(open(out)))
    assert rows[0][:7] == ["t", "q1", "q2", "q3", "u", "H", "graph_defect"]
    assert any(h.startswith("dev_") for h in rows[0])
    man = manifest_of(out)
    assert man["results"]["max_rel_deviation"] < 1e-8
    assert man["results"]["truncated"] is None
    out2 = str(tmp_path / "t2.csv")
    assert run(["integrate", "bbc-case5", "--coordinate", "t", "--s-max", "2", "--out", out2], capsys)[0] == 0
    assert manifest_of(out2)["results"]["max_rel_deviation"] < 1e-7


def test_integrate_wrong_config(capsys):
    assert run(["integrate", "warped-2x2"], capsys)[0] == 2


def test_integrate_bryant_n1(capsys):
    code, out, err = run(["integrate", "bryant-n1", "--solution", "bryant-n1", "--t-max", "5"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["t", "q1", "u"]
    assert json.loads(err)["results"]["max_second_order_residual"] < 1e-8


def test_integrate_ansatz_and_truncation(tmp_path, capsys):
    path = write(tmp_path / "a.json", ansatz_to_dict(search(catalog_entry("bryant5")).found[0]))
    base = ["integrate", "bryant5", "--solution", "ansatz", "--ansatz", path, "--start=0,0"]
    code, _, err = run(base + ["--t-max", "2", "--full-flow"], capsys)
    assert code == 0
    res = json.loads(err)["results"]
    assert res["max_abs_H"] < 1e-8 and res["max_graph_defect"] < 1e-7
    # backwards the fibre collapses in finite time
    code, _, err = run(base + ["--t-max=-10"], capsys)
    assert code == 4 and "underflow" in json.loads(err)["results"]["truncated"]
    assert run(["integrate", "bryant5", "--solution", "ansatz", "--ansatz", path], capsys)[0] == 2
    assert run(["integrate", "bryant5", "--solution", "ansatz", "--ansatz", path, "--start=0"], capsys)[0] == 2


def test_check_gfi(tmp_path, capsys):
    code, out, _ = run(["check-gfi", "bryant5", "bryant-difference"], capsys)
    assert code == 0 and json.loads(out)["phi"] == "(1/2*p1 + phi)*exp(-3*q1 + u)"
    (tmp_path / "F.txt").write_text("p1")
    assert run(["check-gfi", "bryant5", str(tmp_path / "F.txt")], capsys)[0] == 1
    (tmp_path / "G.txt").write_text("p1 +* (")
    assert run(["check-gfi", "bryant5", str(tmp_path / "G.txt")], capsys)[0] == 2


def test_smoothness(capsys):
    code, out, _ = run(["smoothness"], capsys)
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(["smoothness", "--A=-1"], capsys)
    assert code == 1 and not json.loads(out)["checks"]["f'(0)"]["pass"]
    assert run(["smoothness", "--A=1"], capsys)[0] == 2
    assert run(["smoothness", "--E", "abc"], capsys)[0] == 2


def test_catalog(capsys):
    code, out, _ = run(["catalog"], capsys)
    items = json.loads(out)
    assert code == 0 and len(items) == 8
    assert {i["group"] for i in items} == {"catalog", "negative_control"}


def test_classify_rank_limit(tmp_path, capsys):
    cfg = {"r": 5, "dims": [1, 1, 1, 1, 1], "E": "1", "lambda": "0", "weights": []}
    assert run(["classify", write(tmp_path / "r5.json", cfg)], capsys)[0] == 2

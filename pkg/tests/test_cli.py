import json

from krep.cli import main
from krep.cover import CoverMultiset
from krep.graph import Graph


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_gen_exact_convert(tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["gen", "--n", "6", "--seed", "3", "--out", str(out)]) == 0
    assert main(["exact", "--graph", str(out), "--k", "2"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["valid"] and res["phi"] >= 2
    cover = write(tmp_path, "c.txt", CoverMultiset.from_sets([(0, 1, 2), (2, 3)]).to_text())
    assert main(["convert", "--cover", cover, "--n", "4"]) == 0
    rep = write(tmp_path, "r.json", capsys.readouterr().out)
    assert main(["convert", "--representation", rep]) == 0
    assert CoverMultiset.from_text(capsys.readouterr().out) == CoverMultiset.from_sets([(0, 1, 2), (2, 3)])


def test_convert_certificate_failure(tmp_path, capsys):
    g = write(tmp_path, "g.txt", Graph.path(4).to_text())
    cover = write(tmp_path, "c.txt", CoverMultiset.from_sets([(0, 1)]).to_text())
    assert main(["convert", "--cover", cover, "--graph", g, "--k", "1"]) == 2


def test_infeasible_exit_code(tmp_path, capsys):
    g = write(tmp_path, "g.txt", Graph.complete(10).to_text())
    assert main(["construct", "--graph", g, "--k", "2", "--alpha", "1/2", "--t", "4"]) == 3
    assert main(["construct", "--graph", g, "--k", "2", "--epsilon", "0.1"]) == 3


def test_construct_and_fpc(tmp_path, capsys):
    gpath = tmp_path / "g.txt"
    main(["gen", "--n", "40", "--seed", "1", "--out", str(gpath)])
    assert main(["construct", "--graph", str(gpath), "--k", "2", "--alpha", "1/2", "--t", "4"]) == 0
    tr = json.loads(capsys.readouterr().out)
    assert tr["certified"]
    fpc = write(tmp_path, "a.json", json.dumps({"n": 100, "k": 2, "items": [
        {"x": "28", "w": "1"}, {"x": "7", "w": "200"}]}))
    status = main(["fpc", "--fpc", fpc, "--eliminate"])
    res = json.loads(capsys.readouterr().out)
    assert status == 0 and res["trace"]["iterations"] == 1
    empty = write(tmp_path, "e.json", json.dumps({"n": 100, "k": 2, "items": []}))
    assert main(["fpc", "--fpc", empty]) == 2


def test_tails_csv(tmp_path, capsys):
    assert main(["tails", "--samples", "2000", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "eps,mean,frequency,bound,pass" and len(lines) == 4


def test_experiment_command(tmp_path, capsys):
    spec = write(tmp_path, "s.json", json.dumps({"kind": "tails", "trials": 1000, "params": {}}))
    assert main(["experiment", "--spec", spec, "--seed", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["master_seed"] == 4

import csv
import json

import pytest

from uavgather.cli import EXIT_EMPTY, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from uavgather.instance import FleetParams, load_instance, make_instance, save_instance


@pytest.fixture
def corpus(tmp_path):
    out = tmp_path / "corpus"
    assert main(["generate", "--n", "4", "--count", "4", "--seed", "10", "--out", str(out)]) == EXIT_OK
    return out


def test_generate_writes_loadable_instances(corpus):
    files = sorted(corpus.glob("*.json"))
    assert len(files) == 4
    assert all(load_instance(f).n == 4 for f in files)


def test_solve_writes_report_and_plan(corpus, tmp_path, capsys):
    out = tmp_path / "sol.json"
    lp = tmp_path / "m.lp"
    inst = sorted(corpus.glob("*.json"))[0]
    code = main(["solve", str(inst), "--model", "3index", "--alpha", "0.6", "--out", str(out), "--lp-out", str(lp)])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["report"]["status"] == "optimal"
    assert doc["plan"]["tours"][0][0] == 0
    assert lp.read_text().startswith("\\ ")
    assert "status=optimal" in capsys.readouterr().out


def test_solve_infeasible_exit_code(tmp_path, capsys):
    path = tmp_path / "iso.json"
    save_instance(make_instance([(500, 0)], 5.0, fleet=FleetParams(max_tour_length=100)), path)
    assert main(["solve", str(path)]) == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_missing_file_is_usage_error(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "nope.json")]) == EXIT_USAGE
    assert "nope.json" in capsys.readouterr().err


def test_bad_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == EXIT_USAGE


def test_compare_table(corpus, tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["compare", str(corpus), "--heuristic", "20", "50", "--jobs", "2", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert [r["model"] for r in rows] == ["2index", "3index", "heuristic20-2index", "heuristic50-2index"]
    assert rows[0]["p_opt"] == rows[1]["p_opt"] == "100"
    assert all(r["instances"] == "4" for r in rows)
    assert "P_opt%" in capsys.readouterr().out


def test_compare_empty_corpus(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["compare", str(empty)]) == EXIT_EMPTY


def test_lifetime_and_plot_data(tmp_path, capsys):
    path = tmp_path / "i.json"
    save_instance(make_instance([(10, 0), (20, 0)], 0.03), path)
    trace = tmp_path / "tr.csv"
    assert main(["lifetime", str(path), "--planner", "oracle", "--out", str(trace)]) == EXIT_OK
    assert main(["lifetime", str(path), "--planner", "chp", "--seed", "3", "--out", str(tmp_path / "c.csv")]) == EXIT_OK
    merged = tmp_path / "plot.csv"
    assert main(["plot-data", str(trace), str(tmp_path / "c.csv"), "--out", str(merged)]) == EXIT_OK
    rows = list(csv.DictReader(merged.open()))
    assert {r["planner"] for r in rows} == {"oracle", "chp"}


def test_alpha_sweep(tmp_path):
    path = tmp_path / "i.json"
    save_instance(make_instance([(10, 0), (20, 0), (10, 10)], 0.02, bits=10_000), path)
    out = tmp_path / "sweep.csv"
    code = main(["alpha-sweep", str(path), "--planner", "milp-2index", "--alphas", "0", "0.6", "--out", str(out)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert [r["alpha"] for r in rows] == ["0", "0.6"]
    assert all(int(r["lifetime_rounds"]) > 0 for r in rows)


def test_stats(corpus, capsys):
    f = str(sorted(corpus.glob("*.json"))[0])
    assert main(["stats", f, "--no-prune"]) == EXIT_OK
    line = capsys.readouterr().out.splitlines()[1]
    assert line.split(",")[1:3] == ["2index", "61"]

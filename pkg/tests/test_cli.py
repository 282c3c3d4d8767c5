import json

import pytest

from bidscreen import __version__
from bidscreen.cli import fmt6, main, read_table
from bidscreen.nonparam import SUITE_HEADER
from bidscreen.screens import RATIO_SCREENS
from bidscreen.synthetic import two_period_market
from bidscreen.tender import write_csv


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    coll, comp = two_period_market(1, 30, 30)
    write_csv(coll.union(comp), d / "bids.csv")
    write_csv(coll, d / "coll.csv")
    write_csv(comp, d / "comp.csv")
    return d


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(path):
    return read_table(path)


def test_fmt6():
    assert fmt6(1 / 3) == "0.333333"
    assert fmt6(float("nan")) == ""
    assert fmt6(123456789.0) == "1.23457e+08"


def test_version(capsys):
    code, out, _ = run(["--version"], capsys)
    assert code == 0
    assert __version__ in out and "vote_tie" in out and "kurtosis_default" in out


def test_unknown_flag_is_usage_error(capsys, data):
    code, _, err = run(["screens", "--in", data / "bids.csv", "--out", data / "x.csv", "--bogus"], capsys)
    assert code == 2
    assert "usage" in err
    assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 2
    assert run(["nosuch"], capsys)[0] == 2
    assert run([], capsys)[0] == 2


def test_data_error_exit(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("tender_id,bid\nA,100\nA,-1\n")
    code, _, err = run(["screens", "--in", bad, "--out", tmp_path / "o.csv"], capsys)
    assert code == 3
    assert json.loads(err)["error"] == "NonPositiveBid"
    assert run(["screens", "--in", tmp_path / "missing.csv", "--out", tmp_path / "o.csv"], capsys)[0] == 3


def test_numeric_error_exit(capsys, tmp_path):
    coll, comp = two_period_market(2, 5, 5)
    write_csv(coll.union(comp), tmp_path / "few.csv")
    code, _, err = run(["train", "--in", tmp_path / "few.csv", "--learner", "lasso", "--model", "M1",
                        "--out", tmp_path / "m.json"], capsys)
    assert code == 4
    assert json.loads(err)["error"] == "DegenerateFold"


def test_screens(capsys, data, tmp_path):
    out = tmp_path / "screens.csv"
    code, stdout, _ = run(["screens", "--in", data / "bids.csv", "--out", out], capsys)
    assert code == 0 and json.loads(stdout)["result"]["tenders"] == 60
    first = out.read_text().splitlines()[0]
    assert first.startswith("# config: ") and json.loads(first[len("# config: "):])["seed"] == 0
    header, rows = rows_of(out)
    assert header[:2] == ["tender_id", "label"] and set(RATIO_SCREENS) <= set(header)
    assert len(rows) == 60
    code, _, _ = run(["screens", "--in", data / "bids.csv", "--out", tmp_path / "s.json", "--format", "json"],
                     capsys)
    payload = json.loads((tmp_path / "s.json").read_text())
    assert code == 0 and len(payload["rows"]) == 60 and payload["config"]["format"] == "json"


def test_features_and_describe(capsys, data, tmp_path):
    code, _, _ = run(["features", "--in", data / "bids.csv", "--model", "M2", "--impute",
                      "--out", tmp_path / "f.csv", "--describe", tmp_path / "d.csv"], capsys)
    assert code == 0
    header, rows = rows_of(tmp_path / "f.csv")
    assert len(header) == 2 + 32 and len(rows) == 60
    assert all(cell != "" for r in rows for cell in r[2:])
    dh, drows = rows_of(tmp_path / "d.csv")
    assert dh == ["Predictor", "Mean", "Std", "Min", "Lower Q.", "Median", "Upper Q.", "Max", "N"]
    assert len(drows) == 32


def test_simulate(capsys, data, tmp_path):
    code, stdout, _ = run(["simulate", "--competitive", data / "comp.csv", "--collusive", data / "coll.csv",
                           "--out-dir", tmp_path, "--seed", 3], capsys)
    assert code == 0
    assert json.loads(stdout)["result"]["rungs"] == 6
    for m in range(6):
        assert (tmp_path / f"rung_{m}.csv").exists()
    cfg = json.loads((tmp_path / "simulate_config.json").read_text())
    assert cfg["config"]["seed"] == 3 and cfg["pool_size"] > 0


@pytest.mark.parametrize("learner", ["forest", "tree", "lasso", "benchmark"])
def test_train_predict_round_trip(capsys, data, tmp_path, learner):
    model = tmp_path / "model.json"
    code, _, err = run(["train", "--in", data / "bids.csv", "--learner", learner, "--model", "M1",
                        "--trees", 30, "--out", model, "--seed", 5], capsys)
    assert code == 0, err
    payload = json.loads(model.read_text())
    assert payload["format"] == "bidscreen-model" and payload["learner"] == learner
    assert len(payload["predictors"]) == 9
    code, stdout, _ = run(["predict", "--model-file", model, "--in", data / "bids.csv",
                           "--out", tmp_path / "p.csv"], capsys)
    assert code == 0
    header, rows = rows_of(tmp_path / "p.csv")
    assert header == ["tender_id", "prediction", "collusive"] and len(rows) == 60
    assert {r[1] for r in rows} <= {"Collusive", "Competitive"}


def test_predict_from_feature_csv(capsys, data, tmp_path):
    run(["features", "--in", data / "bids.csv", "--model", "M1", "--out", tmp_path / "f.csv"], capsys)
    run(["train", "--features", tmp_path / "f.csv", "--learner", "tree", "--model", "M1",
         "--out", tmp_path / "m.json"], capsys)
    code, _, _ = run(["predict", "--model-file", tmp_path / "m.json", "--features", tmp_path / "f.csv",
                      "--out", tmp_path / "p1.csv"], capsys)
    assert code == 0
    run(["predict", "--model-file", tmp_path / "m.json", "--in", data / "bids.csv",
         "--out", tmp_path / "p2.csv"], capsys)
    assert rows_of(tmp_path / "p1.csv")[1] == rows_of(tmp_path / "p2.csv")[1]


def test_predict_rejects_foreign_file(capsys, tmp_path, data):
    (tmp_path / "m.json").write_text('{"format": "other"}')
    code, _, _ = run(["predict", "--model-file", tmp_path / "m.json", "--in", data / "bids.csv",
                      "--out", tmp_path / "p.csv"], capsys)
    assert code == 3


def test_evaluate_byte_identical(capsys, data, tmp_path):
    outs = []
    j, c = tmp_path / "e0.json", tmp_path / "e0.csv"
    for _ in range(2):
        code, _, _ = run(["evaluate", "--in", data / "bids.csv", "--model", "M1", "--trees", 20,
                          "--repetitions", 3, "--seed", 8, "--out-json", j, "--out-csv", c], capsys)
        assert code == 0
        outs.append((j.read_bytes(), c.read_bytes()))
    assert outs[0] == outs[1]
    rep = json.loads((tmp_path / "e0.json").read_text())
    assert rep["n_repetitions"] == 3 and len(rep["per_repetition"]) == 3
    assert rep["config"]["seed"] == 8 and rep["config"]["evaluation"]["learner"] == "forest"
    header, rows = rows_of(tmp_path / "e0.csv")
    assert header == ["Tenders", "M1"] and [r[0] for r in rows] == ["All", "Comp.", "Coll."]


def test_evaluate_filters(capsys, data, tmp_path):
    code, _, err = run(["evaluate", "--in", data / "bids.csv", "--model", "M1", "--learner", "benchmark",
                        "--cartel-more-than", 50, "--out-json", tmp_path / "e.json"], capsys)
    # only competitive tenders survive a cartel-size filter nobody meets
    assert code == 3 and json.loads(err)["error"] == "SingleClassDataset"
    (tmp_path / "untyped.csv").write_text("tender_id,bid,label\nA,1,1\nA,2,1\nB,3,0\nB,5,0\n")
    code, _, err = run(["evaluate", "--in", tmp_path / "untyped.csv", "--model", "M1", "--learner", "benchmark",
                        "--contract-type", 1, "--out-json", tmp_path / "e.json"], capsys)
    assert code == 3 and json.loads(err)["error"] == "EmptyAfterFilter"


def test_importance(capsys, data, tmp_path):
    code, stdout, _ = run(["importance", "--in", data / "bids.csv", "--model", "M1", "--trees", 30,
                           "--repetitions", 2, "--top", 4, "--out", tmp_path / "i.csv"], capsys)
    assert code == 0
    header, rows = rows_of(tmp_path / "i.csv")
    assert header == ["Rank", "IV", "MDG"] and [r[0] for r in rows] == ["1", "2", "3", "4"]
    mdg = [float(r[2]) for r in rows]
    assert mdg == sorted(mdg, reverse=True)
    assert run(["importance", "--in", data / "bids.csv", "--learner", "benchmark", "--model", "M1",
                "--repetitions", 1, "--out", tmp_path / "j.csv"], capsys)[0] == 3


def test_nonparametric_suite(capsys, data, tmp_path):
    run(["screens", "--in", data / "comp.csv", "--out", tmp_path / "a.csv"], capsys)
    code, stdout, _ = run(["test", "--sim", tmp_path / "a.csv", "--real", tmp_path / "a.csv",
                           "--out", tmp_path / "t.csv"], capsys)
    assert code == 0
    assert json.loads(stdout)["result"] == {"mw_rejections": 0, "ks_rejections": 0}
    header, rows = rows_of(tmp_path / "t.csv")
    assert tuple(header) == SUITE_HEADER and len(rows) == 9


def test_benchmark(capsys, tmp_path):
    (tmp_path / "b.csv").write_text("tender_id,bid\nA,100\nA,110\nA,111\nA,112\nB,100\nB,130\nB,160\nB,190\n")
    code, _, _ = run(["benchmark", "--in", tmp_path / "b.csv", "--out", tmp_path / "o.csv"], capsys)
    assert code == 0
    header, rows = rows_of(tmp_path / "o.csv")
    assert header == ["tender_id", "CV", "RD", "prediction"]
    assert [r[3] for r in rows] == ["Collusive", "Competitive"]


def test_config_precedence(capsys, data, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nseed = 4\nrepetitions = 2\nlearner = benchmark\nmodel = M1\n")
    code, stdout, _ = run(["evaluate", "--in", data / "bids.csv", "--config", cfg, "--seed", 9,
                           "--out-json", tmp_path / "e.json"], capsys)
    assert code == 0
    echo = json.loads(stdout)["config"]
    assert echo["seed"] == 9 and echo["repetitions"] == 2 and echo["learner"] == "benchmark"
    cfg.write_text("no_such_key = 1\n")
    assert run(["evaluate", "--in", data / "bids.csv", "--config", cfg, "--out-json", tmp_path / "e.json"],
               capsys)[0] == 2


def test_column_mapping(capsys, tmp_path):
    (tmp_path / "m.csv").write_text("id,amount\nA,100\nA,110\nA,120\n")
    code, _, _ = run(["screens", "--in", tmp_path / "m.csv", "--col-tender", "id", "--col-bid", "amount",
                      "--out", tmp_path / "o.csv"], capsys)
    assert code == 0 and len(rows_of(tmp_path / "o.csv")[1]) == 1


def test_reproduce_synthetic(capsys, tmp_path):
    argv = ["reproduce-synthetic", "--seed", 7, "--collusive", 25, "--competitive", 25, "--repetitions", 2,
            "--trees", 20, "--models", "M1", "M4"]
    code, _, _ = run(argv + ["--out-dir", tmp_path / "a"], capsys)
    assert code == 0
    header, rows = rows_of(tmp_path / "a" / "ladder.csv")
    assert header == ["Comp.B", "Tenders", "Rule", "M1", "M4"] and len(rows) == 18
    first = (tmp_path / "a" / "ladder.csv").read_bytes(), (tmp_path / "a" / "ladder.json").read_bytes()
    run(argv + ["--out-dir", tmp_path / "a"], capsys)
    assert first == ((tmp_path / "a" / "ladder.csv").read_bytes(), (tmp_path / "a" / "ladder.json").read_bytes())
    ladder = json.loads((tmp_path / "a" / "ladder.json").read_text())
    assert set(ladder["columns"]) == {"Rule", "M1", "M4"}

import json

import numpy as np
import pytest

from twoseel.cli import main, read_csv
from twoseel.errors import InputError
from twoseel.regions import RegionContour
from twoseel.simulate import draw_scenario


def _write(path, rows, header=None):
    lines = [",".join(header)] if header else []
    lines += [",".join(repr(float(v)) for v in np.atleast_1d(r)) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def incomes(tmp_path):
    rng = np.random.default_rng(11)
    return (_write(tmp_path / "x.csv", rng.lognormal(size=30), ["income"]),
            _write(tmp_path / "y.csv", rng.chisquare(1, size=30), ["income"]))


def test_read_csv_header_and_errors(tmp_path):
    a = read_csv(_write(tmp_path / "a.csv", [[1, 2], [3, 4]], ["p", "q"]))
    b = read_csv(_write(tmp_path / "b.csv", [[1, 2], [3, 4]]))
    np.testing.assert_array_equal(a, b)
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    with pytest.raises(InputError, match="row 2"):
        read_csv(str(bad))
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(InputError):
        read_csv(str(ragged))


def test_infer_gini_json(capsys, incomes):
    code, out, _ = _run(capsys, "infer", "--x", incomes[0], "--y", incomes[1], "--ef", "gini",
                        "--methods", "oel,eel1", "--levels", "0.95")
    assert code == 0
    rep = json.loads(out)
    assert len(rep["results"]) == 2 and "eta" in rep
    pt = rep["pi_tilde"][0]
    for r in rep["results"]:
        assert r["lower"] <= pt <= r["upper"]
    assert {r["method"] for r in rep["results"]} == {"OEL", "EEL1"}


def test_infer_csv_format(capsys, incomes, tmp_path):
    out_path = tmp_path / "ci.csv"
    code, _, _ = _run(capsys, "infer", "--x", incomes[0], "--y", incomes[1], "--ef", "gini",
                      "--levels", "0.9,0.95", "--format", "csv", "--out", str(out_path))
    assert code == 0
    raw = out_path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0].startswith("method,level,critical,pi_tilde,eta,lower,upper")
    assert len(lines) == 1 + 4 * 2


def test_infer_identical_samples(capsys, tmp_path):
    rng = np.random.default_rng(2)
    f = _write(tmp_path / "s.csv", rng.normal(size=25))
    code, out, _ = _run(capsys, "infer", "--x", f, "--y", f, "--ef", "mean", "--levels", "0.9,0.99")
    assert code == 0
    rep = json.loads(out)
    assert rep["pi_tilde"] == [0.0]
    assert all(r["lower"] <= 0.0 <= r["upper"] for r in rep["results"])


def test_infer_regression_contour_encloses_mele(capsys, tmp_path):
    _, data = draw_scenario("Example3", 20, 20, np.random.default_rng(8))
    # the intercept is an explicit column of ones
    fx = _write(tmp_path / "x.csv", data.X, ["one", "x1", "y"])
    fy = _write(tmp_path / "y.csv", data.Y, ["one", "x1", "y"])
    code, out, _ = _run(capsys, "infer", "--x", fx, "--y", fy, "--ef", "regression",
                        "--methods", "oel,eel1", "--levels", "0.9")
    assert code == 0
    rep = json.loads(out)
    for r in rep["results"]:
        rc = RegionContour(None, 0.9, np.array(r["vertices"]), np.array(rep["pi_tilde"]), r["critical"])
        assert len(r["vertices"]) >= 58
        assert rc.contains(rep["pi_tilde"])


def test_infer_input_errors_exit_2(capsys, tmp_path, incomes):
    bad = tmp_path / "bad.csv"
    bad.write_text("income\n1.0\nabc\n")
    code, _, err = _run(capsys, "infer", "--x", str(bad), "--y", incomes[1], "--ef", "gini")
    assert code == 2 and "row" in err
    neg = _write(tmp_path / "neg.csv", [1.0, -2.0, 3.0, 4.0])
    assert _run(capsys, "infer", "--x", neg, "--y", incomes[1], "--ef", "gini")[0] == 2
    assert _run(capsys, "infer", "--x", str(tmp_path / "missing.csv"), "--y", incomes[1], "--ef", "gini")[0] == 2
    assert _run(capsys, "infer", "--x", incomes[0], "--y", incomes[1], "--ef", "gini", "--levels", "0.3")[0] == 2
    two = _write(tmp_path / "two.csv", [[1, 2], [3, 4], [5, 7]])
    assert _run(capsys, "infer", "--x", two, "--y", incomes[1], "--ef", "mean")[0] == 2
    tiny = _write(tmp_path / "tiny.csv", [1.0])
    assert _run(capsys, "infer", "--x", tiny, "--y", incomes[1], "--ef", "mean")[0] == 2


def _config(tmp_path, **kw):
    cfg = {"scenario": "Example1", "m": 20, "n": 20, "replicates": 100, "seed": 7}
    cfg.update(kw)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_simulate_layout_determinism_and_sidecar(capsys, tmp_path):
    cfg = _config(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(capsys, "simulate", "--config", cfg, "--out", str(a))[0] == 0
    assert _run(capsys, "simulate", "--config", cfg, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == ("m,n,OEL_90,EEL1_90,BEL_90,EEL2_90,OEL_95,EEL1_95,BEL_95,EEL2_95,"
                        "OEL_99,EEL1_99,BEL_99,EEL2_99")
    row = lines[1].split(",")
    assert row[:2] == ["20", "20"] and len(row) == 14
    for cell in row[2:]:
        assert 0.0 <= float(cell) <= 100.0 and len(cell.split(".")[1]) == 1
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["seed"] == 7 and meta["seed_source"] == "config"
    assert meta["rows"][0]["replicates"] == 100 and set(meta["rows"][0]["failed"]) == set(lines[0].split(",")[2:])


def test_simulate_entropy_seed_is_recorded(capsys, tmp_path):
    cfg = {"scenario": "MeanNormal", "m": 10, "n": 10, "replicates": 100, "methods": ["oel"], "levels": [0.9]}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    code, out, err = _run(capsys, "simulate", "--config", str(p))
    assert code == 0
    meta = json.loads(err)
    assert meta["seed_source"] == "entropy"
    cfg["seed"] = meta["seed"]
    p.write_text(json.dumps(cfg))
    assert _run(capsys, "simulate", "--config", str(p))[1] == out


def test_simulate_config_errors(capsys, tmp_path):
    assert _run(capsys, "simulate", "--config", _config(tmp_path, scenario="Example9"))[0] == 2
    assert _run(capsys, "simulate", "--config", _config(tmp_path, bogus=1))[0] == 2
    assert _run(capsys, "simulate", "--config", _config(tmp_path, replicates=10))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(capsys, "simulate", "--config", str(bad))[0] == 2


@pytest.mark.slow
def test_simulate_table1_grid(capsys, tmp_path):
    sizes = [[m, n] for m in (20, 30, 40, 60) for n in (20, 30, 40, 60)]
    cfg = _config(tmp_path, sizes=sizes, methods=["oel"], levels=[0.9])
    code, out, _ = _run(capsys, "simulate", "--config", cfg)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "m,n,OEL_90" and len(lines) == 17
    assert [tuple(map(int, ln.split(",")[:2])) for ln in lines[1:]] == [tuple(s) for s in sizes]


def test_diagnose(capsys, tmp_path):
    rng = np.random.default_rng(4)
    fx = _write(tmp_path / "x.csv", rng.normal(size=30))
    fy = _write(tmp_path / "y.csv", rng.normal(size=30))
    code, out, _ = _run(capsys, "diagnose", "--x", fx, "--y", fy, "--ef", "mean", "--rays", "4")
    assert code == 0
    rep = json.loads(out)
    assert rep["violations"] == 0 and len(rep["rays"]) == 4
    assert all(0 < r["t_max"] <= 1 for r in rep["rays"])
    assert sum(rep["newton_iterations"].values()) > 0
    assert _run(capsys, "diagnose", "--x", fx, "--y", fy, "--ef", "mean", "--rays", "0")[0] == 2

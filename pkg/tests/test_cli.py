import csv
import json

import numpy as np
import pytest

from wavemesh import errors
from wavemesh.cli import load_model, main, model_predict, read_csv


def _write(path, header, cols, newline="\n"):
    lines = [",".join(header)] + [",".join(repr(float(v)) for v in row) for row in zip(*cols)]
    path.write_bytes((newline.join(lines) + newline).encode())
    return path


def _read_col(path, name):
    with open(path, newline="") as fh:
        return np.array([float(r[name]) for r in csv.DictReader(fh)])


@pytest.fixture
def sine_csv(tmp_path):
    x = np.arange(1, 201) / 200
    return _write(tmp_path / "train.csv", ["x", "y"], [x, np.sin(2 * np.pi * x)])


def test_noiseless_sine_interpolates(tmp_path, sine_csv, capsys):
    code = main(["fit", "--data", str(sine_csv), "--lambda1", "0", "--out",
                 str(tmp_path / "m.json"), "--report", str(tmp_path / "r.json")])
    assert code == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["training_mse"] < 1e-6
    assert report["K"] == 256
    assert "active_set" in capsys.readouterr().out


def test_round_trip_is_bit_identical(tmp_path, rng):
    x = rng.uniform(3, 9, 120)
    z = rng.uniform(-1, 1, 120)
    y = np.cos(x) + z ** 2 + 0.1 * rng.standard_normal(120)
    data = _write(tmp_path / "d.csv", ["x", "y", "z"], [x, y, z])
    for extra in ([], ["--lambda2", "0.5"]):
        model = tmp_path / "m.json"
        assert main(["fit", "--data", str(data), "--lambda1", "0.05", "--out", str(model),
                     "--report", str(tmp_path / "r.json"), *extra]) == 0
        out = tmp_path / "p.csv"
        assert main(["predict", "--model", str(model), "--data", str(data), "--out", str(out)]) == 0
        pred = _read_col(out, "prediction")
        m, _ = load_model(model)
        _, arr = read_csv(data)
        np.testing.assert_array_equal(pred, model_predict(m, arr[:, [0, 2]]))
        fitted = np.array(json.loads((tmp_path / "r.json").read_text())["fitted"])
        np.testing.assert_allclose(pred, fitted, atol=1e-12)


def test_crlf_and_lf_agree(tmp_path, rng):
    x = rng.uniform(size=50)
    y = np.sin(5 * x)
    a = _write(tmp_path / "lf.csv", ["x", "y"], [x, y])
    b = _write(tmp_path / "crlf.csv", ["x", "y"], [x, y], "\r\n")
    ha, da = read_csv(a)
    hb, db = read_csv(b)
    assert ha == hb
    np.testing.assert_array_equal(da, db)


@pytest.mark.parametrize("bad", ["nan", "inf", "abc"])
def test_bad_numbers_exit_2(tmp_path, bad):
    p = tmp_path / "bad.csv"
    p.write_text(f"x,y\n0.1,1\n0.5,{bad}\n")
    assert main(["fit", "--data", str(p), "--lambda1", "1", "--out", str(tmp_path / "m")]) == 2


def test_input_errors_exit_2(tmp_path, sine_csv):
    out = str(tmp_path / "m.json")
    assert main(["fit", "--data", str(sine_csv), "--lambda1", "1", "--k", "48", "--out", out]) == 2
    assert main(["fit", "--data", str(sine_csv), "--lambda1", "1", "--k", "512", "--out", out]) == 2
    assert main(["fit", "--data", str(sine_csv), "--out", out]) == 2
    assert main(["fit", "--data", str(sine_csv), "--response", "q", "--lambda1", "1",
                 "--out", out]) == 2
    (tmp_path / "nohead.csv").write_text("")
    assert main(["fit", "--data", str(tmp_path / "nohead.csv"), "--lambda1", "1",
                 "--out", out]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--data", str(sine_csv), "--loss", "hinge", "--out", out])
    assert exc.value.code == 2


def test_adaptive_with_j0_one_exits_3(tmp_path, sine_csv):
    assert main(["fit", "--data", str(sine_csv), "--lambda1", "0.1", "--penalty", "adaptive",
                 "--j0", "1", "--out", str(tmp_path / "m.json")]) == 3
    assert main(["fit", "--data", str(sine_csv), "--lambda1", "0.1", "--penalty", "adaptive",
                 "--j0", "2", "--out", str(tmp_path / "m.json")]) == 0


def test_strict_nonconvergence_exits_4(tmp_path, rng):
    x = rng.uniform(size=300)
    data = _write(tmp_path / "d.csv", ["x", "y"], [x, np.sin(9 * x) + rng.standard_normal(300)])
    args = ["fit", "--data", str(data), "--lambda1", "1e-4", "--max-iter", "2",
            "--out", str(tmp_path / "m.json")]
    assert main(args) == 0
    assert main(args + ["--strict"]) == 4


def test_bad_model_files(tmp_path, sine_csv):
    model = tmp_path / "m.json"
    assert main(["fit", "--data", str(sine_csv), "--lambda1", "0.1", "--out", str(model)]) == 0
    doc = json.loads(model.read_text())
    doc["format_version"] = 99
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(errors.ModelFormatError):
        load_model(bad)
    assert main(["predict", "--model", str(bad), "--data", str(sine_csv)]) == 2
    other = _write(tmp_path / "o.csv", ["w"], [np.array([0.5])])
    assert main(["predict", "--model", str(model), "--data", str(other)]) == 3


def test_empty_input_and_clamping(tmp_path, sine_csv, capsys):
    model = tmp_path / "m.json"
    assert main(["fit", "--data", str(sine_csv), "--lambda1", "0.01", "--out", str(model)]) == 0
    empty = tmp_path / "e.csv"
    empty.write_text("x\n")
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--data", str(empty), "--out", str(out)]) == 0
    assert out.read_text() == "prediction\n"
    far = _write(tmp_path / "far.csv", ["x"], [np.array([1.0, 7.0])])
    capsys.readouterr()
    assert main(["predict", "--model", str(model), "--data", str(far), "--out", str(out)]) == 0
    assert "clamped" in capsys.readouterr().err
    pred = _read_col(out, "prediction")
    assert pred[0] == pred[1]


def test_logistic_fit_and_probabilities(tmp_path, rng):
    x = rng.uniform(size=200)
    y = (x > 0.45).astype(float)
    data = _write(tmp_path / "d.csv", ["x", "y"], [x, y])
    model = tmp_path / "m.json"
    rep = tmp_path / "r.json"
    # lambda_max is about 0.012 here; a tenth of it is moderate shrinkage.
    assert main(["fit", "--data", str(data), "--loss", "logistic", "--lambda1", "0.001",
                 "--out", str(model), "--report", str(rep)]) == 0
    assert json.loads(rep.read_text())["training_accuracy"] > 0.95
    out = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--data", str(data), "--out", str(out)]) == 0
    score, prob = _read_col(out, "prediction"), _read_col(out, "probability")
    np.testing.assert_allclose(prob, 1 / (1 + np.exp(-score)), rtol=1e-15)
    two = _write(tmp_path / "two.csv", ["x", "z", "y"], [x, x, y])
    assert main(["fit", "--data", str(two), "--loss", "logistic", "--lambda1", "0.01",
                 "--out", str(model)]) == 2


def test_cv_fit_is_seeded(tmp_path, rng, capsys):
    x = rng.uniform(size=80)
    data = _write(tmp_path / "d.csv", ["x", "y"], [x, np.sin(6 * x) + 0.3 * rng.standard_normal(80)])
    reports = []
    for i in range(2):
        rep = tmp_path / f"r{i}.json"
        assert main(["fit", "--data", str(data), "--cv", "5", "--seed", "3", "--k", "32",
                     "--out", str(tmp_path / "m.json"), "--report", str(rep)]) == 0
        reports.append(json.loads(rep.read_text()))
    assert reports[0]["cv"] == reports[1]["cv"]
    assert reports[0]["fitted"] == reports[1]["fitted"]
    assert main(["fit", "--data", str(data), "--cv", "1", "--out", str(tmp_path / "m")]) == 2


def _simulate(out_dir, *extra):
    return main(["simulate", "--study", "k-effect", "--function", "heavysine", "--n", "512",
                 "--seed", "7", "--k-list", "64", "--grid-size", "10", "--out-dir", str(out_dir),
                 *extra])


def test_simulate_table_shape_and_determinism(tmp_path):
    assert _simulate(tmp_path / "a", "--replicates", "3") == 0
    assert _simulate(tmp_path / "b", "--replicates", "3", "--threads", "2") == 0
    for name in ("k-effect_ratios.csv", "k-effect_mse.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    with open(tmp_path / "a" / "k-effect_ratios.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["function", "n", "K=2^6", "full"]
    assert rows[0]["full"] == "1.00 (0.00)"
    assert not (tmp_path / "a" / "k-effect_timing.csv").exists()


def test_simulate_single_replicate_zero_se(tmp_path):
    assert _simulate(tmp_path, "--replicates", "1", "--timing") == 0
    with open(tmp_path / "k-effect_mse.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["se_mse"]) == 0.0 and float(r["se_ratio"]) == 0.0 for r in rows)
    assert (tmp_path / "k-effect_timing.csv").exists()


def test_simulate_other_studies(tmp_path):
    assert main(["simulate", "--study", "univariate", "--function", "sine,doppler", "--n", "64",
                 "--replicates", "2", "--grid-size", "8", "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "univariate.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["function"] for r in rows] == ["sine", "doppler"]
    assert main(["simulate", "--study", "adaptive", "--function", "sine", "--n", "128",
                 "--replicates", "2", "--grid-size", "8", "--out-dir", str(tmp_path)]) == 0
    with open(tmp_path / "adaptive_ratios.csv", newline="") as fh:
        assert list(next(csv.DictReader(fh))) == ["function", "n", "plain", "adaptive"]


def test_simulate_invalid_flags_exit_2(tmp_path):
    base = ["simulate", "--study", "k-effect", "--out-dir", str(tmp_path)]
    assert main(base + ["--replicates", "0"]) == 2
    assert main(base + ["--k-list", "48"]) == 2
    assert main(base + ["--n", "4"]) == 2
    assert main(base + ["--function", "blocks"]) == 2
    assert main(base + ["--n", "a,b"]) == 2

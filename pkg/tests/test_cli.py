import csv
import shutil
import subprocess
import sys

import numpy as np
import pytest

from nsc.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main, read_config
from nsc.errors import ConfigError


@pytest.fixture
def d1(tmp_path):
    assert main(["generate", "--dataset", "D1", "--n-train", "60", "--n-test", "40", "--out-dir", str(tmp_path)]) == 0
    return tmp_path


def test_generate_files(d1):
    train = list(csv.reader((d1 / "D1_train.csv").open()))
    test = list(csv.reader((d1 / "D1_test.csv").open()))
    assert train[0] == ["x0", "x1", "label"]
    assert len(train) == 121 and len(test) == 81


def test_fit_predict_export(d1, tmp_path, capsys):
    model = tmp_path / "m.npz"
    assert main(["fit", "--train", str(d1 / "D1_train.csv"), "--model", str(model), "--set", "R_max=0.5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "# resolved config" in out and "R_max = 0.5" in out and "R* =" in out
    pred = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(model), "--data", str(d1 / "D1_test.csv"), "--out", str(pred)]) == EXIT_OK
    rows = list(csv.DictReader(pred.open()))
    assert len(rows) == 80 and {"predicted", "label", "dist_class0", "dist_class1"} <= set(rows[0])
    assert "error rate" in capsys.readouterr().out
    exp = tmp_path / "exp"
    assert main(["export", "--model", str(model), "--out-dir", str(exp), "--barcode"]) == EXIT_OK
    assert (exp / "class0_edges.csv").exists() and (exp / "class_complex.svg").exists()
    assert (exp / "class_barcode.csv").exists()


def test_eval_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# quick run\ndataset = iris\nmethods = nsc;1-nn\nrepetitions = 2\nf = 2  # witnesses\n")
    code = main(["eval", "--config", str(cfg), "--ttest", "nsc,1-nn", "--out-dir", str(tmp_path / "o")])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "dataset = iris" in out and "paired t-test nsc vs 1-nn" in out
    lines = [l for l in out.splitlines() if l.startswith("nsc ")]
    assert lines and len(lines[0].split()[1].split(".")[1]) == 4
    assert (tmp_path / "o" / "summary.csv").exists() and (tmp_path / "o" / "repetitions.csv").exists()


def test_read_config_errors(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("f 2\n")
    with pytest.raises(ConfigError):
        read_config(p)


@pytest.mark.parametrize("argv", [
    ["fit"],
    ["nonsense"],
    ["eval", "--dataset", "iris", "--set", "unknown_key=1"],
    ["eval", "--dataset", "iris", "--methods", "svm"],
    ["eval", "--dataset", "iris", "--set", "gamma=-1"],
])
def test_usage_errors(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_USAGE


def test_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,0\n3,0\n")
    assert main(["fit", "--train", str(bad), "--model", str(tmp_path / "m.npz")]) == EXIT_DATA
    assert "row 2" in capsys.readouterr().err
    assert main(["fit", "--train", str(tmp_path / "nope.csv"), "--model", str(tmp_path / "m.npz")]) == EXIT_DATA
    assert main(["predict", "--model", str(tmp_path / "nope.npz"), "--data", str(bad)]) == EXIT_DATA
    assert main(["eval", "--dataset", "no_such_data", "--repetitions", "1"]) == EXIT_DATA


def test_numerical_failure(tmp_path, capsys):
    rng = np.random.default_rng(0)
    p = tmp_path / "wide.csv"
    rows = np.c_[rng.normal(size=(10, 12)), np.repeat([0, 1], 5)]
    np.savetxt(p, rows, delimiter=",", fmt="%.6f")
    assert main(["fit", "--train", str(p), "--model", str(tmp_path / "m.npz"), "--set", "metric=mahalanobis"]) == EXIT_NUMERICAL
    assert "ill-posed covariance" in capsys.readouterr().err
    assert main(["eval", "--dataset", str(p), "--methods", "nsc-m", "--repetitions", "1"]) == EXIT_NUMERICAL


@pytest.mark.skipif(shutil.which("nsc") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["nsc", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "generate" in res.stdout
    res = subprocess.run([sys.executable, "-m", "nsc.cli", "eval", "--bogus"], capture_output=True, text=True)
    assert res.returncode == EXIT_USAGE

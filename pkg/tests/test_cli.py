import csv
import subprocess
import sys

import pytest

from mixsdca.cli import (EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main,
                         parse_args)
from mixsdca.data import DatasetFile, load, save, two_gaussians
from mixsdca.kernels import load_model


@pytest.fixture
def data_file(tmp_path):
    path = tmp_path / "base.csv"
    save(two_gaussians(16, d=2, seed=0), str(path))
    return str(path)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_augment(tmp_path, data_file, capsys):
    out = str(tmp_path / "aug.csv")
    assert main(["augment", data_file, out, "--count", "3", "--seed", "5"]) == 0
    ds = load(out)
    assert len(ds) == 19
    line = capsys.readouterr().out
    assert "n_before=16 n_after=19 label_range=[" in line
    out2 = str(tmp_path / "aug2.csv")
    main(["augment", data_file, out2, "--count", "3", "--seed", "5"])
    assert open(out).read() == open(out2).read()


def test_augment_zero_copies(tmp_path, data_file):
    out = str(tmp_path / "same.csv")
    assert main(["augment", data_file, out]) == 0
    assert open(out).read() == open(data_file).read()


def test_augment_libsvm_output(tmp_path, data_file):
    out = str(tmp_path / "aug.svm")
    assert main(["augment", data_file, out, "--count", "2",
                 "--out-format", "libsvm"]) == 0
    assert len(load(DatasetFile(out, format="libsvm"))) == 18


def test_augment_errors(tmp_path, data_file, capsys):
    assert main(["augment", data_file, str(tmp_path / "x"), "--count",
                 "-1"]) == EXIT_ERROR
    assert main(["augment", str(tmp_path / "missing.csv"),
                 str(tmp_path / "x")]) == EXIT_ERROR
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n-1,oops\n")
    assert main(["augment", str(bad), str(tmp_path / "x")]) == EXIT_ERROR
    assert "line 2" in capsys.readouterr().err


def test_unknown_flag_and_command(data_file):
    assert main(["train", data_file, "--bogus"]) == EXIT_ERROR
    assert main(["fly"]) == EXIT_ERROR
    assert main([]) == EXIT_ERROR


def test_train_outputs(tmp_path, data_file, capsys):
    trace, model = str(tmp_path / "t.csv"), str(tmp_path / "m.txt")
    rc = main(["train", data_file, "--mixup-count", "8", "--solver", "approx",
               "--trace-out", trace, "--model-out", model])
    assert rc == EXIT_OK
    rows = _rows(trace)
    assert rows[0] == ["epoch", "wall_seconds", "primal", "dual", "gap",
                       "n_steps"]
    assert float(rows[-1][4]) <= 1e-5
    m = load_model(model)
    assert m.coeffs.shape == (24,)
    assert "status=Converged" in capsys.readouterr().out


@pytest.mark.parametrize("solver", ["naive", "approx", "decomp"])
def test_train_trace_deterministic(tmp_path, data_file, solver):
    outs = []
    for k in range(2):
        path = str(tmp_path / f"t{k}.csv")
        main(["train", data_file, "--mixup-count", "8", "--solver", solver,
              "--seed", "3", "--freeze-clock", "--trace-out", path])
        outs.append(open(path, "rb").read())
    assert outs[0] == outs[1]
    assert all(r[1] == "0.0" for r in _rows(path)[1:])


def test_train_not_converged_exit(data_file):
    rc = main(["train", data_file, "--epochs", "1", "--gap-threshold",
               "1e-12"])
    assert rc == EXIT_NOT_CONVERGED
    rc = main(["train", data_file, "--solver", "sgd", "--sgd-eta", "0.01",
               "--epochs", "2"])
    assert rc == EXIT_NOT_CONVERGED


def test_train_sgd_eta_rules(data_file):
    assert main(["train", data_file, "--solver", "sgd"]) == EXIT_ERROR
    assert main(["train", data_file, "--sgd-eta", "0.1"]) == EXIT_ERROR


def test_train_lambda_flags_exclusive(data_file):
    assert main(["train", data_file, "--lambda", "0.1",
                 "--lambda-over-n", "1"]) == EXIT_ERROR


def test_train_invalid_values(data_file):
    assert main(["train", data_file, "--epochs", "0"]) == EXIT_ERROR
    assert main(["train", data_file, "--loss", "smoothed-hinge",
                 "--gamma-sm", "1.5"]) == EXIT_ERROR
    assert main(["train", data_file, "--rbf-width", "-1"]) == EXIT_ERROR


def test_train_synthetic_source(capsys):
    assert main(["train", "synthetic:gaussians:12"]) == EXIT_OK
    assert "n=12" in capsys.readouterr().out
    assert main(["train", "synthetic:nothing"]) == EXIT_ERROR


def test_config_precedence(tmp_path, data_file, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("solver = decomp\nepochs = 7\ntight_zeta = true\n")
    ns = parse_args(["train", data_file, "--config", str(cfg)])
    assert ns.solver == "decomp" and ns.epochs == 7 and ns.tight_zeta
    ns = parse_args(["train", data_file, "--config", str(cfg),
                     "--solver", "naive"])
    assert ns.solver == "naive" and ns.epochs == 7
    assert main(["train", data_file, "--config", str(cfg),
                 "--print-config"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "solver = decomp" in text and "epochs = 7" in text


def test_config_errors(tmp_path, data_file):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("not_an_option = 3\n")
    assert main(["train", data_file, "--config", str(cfg)]) == EXIT_ERROR
    assert main(["train", data_file, "--config",
                 str(tmp_path / "nope.cfg")]) == EXIT_ERROR


def test_bench(tmp_path, data_file, capsys):
    out, summ = str(tmp_path / "b.csv"), str(tmp_path / "s.csv")
    args = ["bench", data_file, "--mixup-count", "8", "--solvers",
            "naive,approx,decomp", "--lambda-over-n", "1,0.1", "--seeds",
            "0,1", "--freeze-clock", "--out", out, "--summary-out", summ]
    assert main(args) == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["solver", "lambda", "seed", "converged", "epochs",
                       "wall_seconds", "final_gap"]
    assert len(rows) == 1 + 3 * 2 * 2
    first = open(out, "rb").read()
    assert main(args) == EXIT_OK
    assert open(out, "rb").read() == first
    assert "converged=2/2" in capsys.readouterr().out
    assert len(_rows(summ)) == 4


def test_bench_sgd_requires_eta(tmp_path, data_file):
    assert main(["bench", data_file, "--solvers", "sgd", "--out",
                 str(tmp_path / "b.csv")]) == EXIT_ERROR


def test_eval_auroc_small(tmp_path, capsys):
    out, met = str(tmp_path / "a.csv"), str(tmp_path / "m.csv")
    rc = main(["eval-auroc", "synthetic:gaussians:10", "--losses", "bce",
               "--lambda-over-n", "1", "--width-factors", "1",
               "--mixup-count", "4", "--trials", "1", "--out", out,
               "--metrics-out", met])
    assert rc == EXIT_OK
    rows = _rows(out)
    assert rows[0] == ["loss", "classical", "mixup"]
    assert rows[1][0] == "bce"
    assert all(0.0 <= float(v) <= 1.0 for v in rows[1][1:])
    mrows = _rows(met)
    assert mrows[0] == ["loss", "method", "trial", "fold", "auroc",
                        "n_train", "n_aug", "seed"]
    assert {r[1] for r in mrows[1:]} == {"classical", "mixup"}


def test_eval_auroc_rejects_fractional_labels(tmp_path):
    path = tmp_path / "frac.csv"
    save(two_gaussians(6, seed=1), str(path))
    text = path.read_text().replace("-1,", "-0.5,", 1)
    path.write_text(text)
    assert main(["eval-auroc", str(path), "--out",
                 str(tmp_path / "a.csv")]) == EXIT_ERROR


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mixsdca", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("augment", "train", "bench", "eval-auroc", "selfcheck"):
        assert cmd in proc.stdout


def test_selfcheck(capsys):
    assert main(["selfcheck"]) == EXIT_OK
    assert "selfcheck passed" in capsys.readouterr().out

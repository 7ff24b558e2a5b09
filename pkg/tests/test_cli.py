import csv
import json

import numpy as np
import pytest

from boostnpmle import cli
from boostnpmle.boosting import Ensemble


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def samples(tmp_path):
    path = tmp_path / "u.csv"
    assert run("simulate", "--dist", "uniform", "-n", 500, "--seed", 1, "-o", path) == 0
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_simulate_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run("simulate", "--dist", "gmm", "--beta", 0.3, "-n", 50, "--seed", 9, "-o", p) == 0
    assert a.read_bytes() == b.read_bytes()
    m = json.loads(cli.manifest_path(a).read_text())
    assert m["seeds"] == [9] and m["config"]["distribution"]["params"]["beta"] == 0.3


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "42")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("simulate", "--dist", "exponential", "-n", 20, "-o", a)
    run("simulate", "--dist", "exponential", "-n", 20, "--seed", 42, "-o", b)
    assert a.read_bytes() == b.read_bytes()
    m = json.loads(cli.manifest_path(a).read_text())
    assert m["argv"][-2:] == ["--seed", "42"]
    monkeypatch.setenv(cli.SEED_ENV, "x")
    assert run("simulate", "--dist", "exponential", "-n", 20, "-o", a) == cli.EXIT_INPUT


def test_fit_roundtrip_and_determinism(tmp_path, samples, capsys):
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    assert run("fit", samples, "--learner", "gaussian-kernel", "-M", 1, "-o", m1) == 0
    out = capsys.readouterr().out
    assert "loglik=" in out and "surrogate=" in out and "Z=" in out
    assert run("fit", samples, "--learner", "gaussian-kernel", "-M", 1, "-o", m2) == 0
    assert m1.read_bytes() == m2.read_bytes()
    ens = Ensemble.load(m1)
    x = np.linspace(*ens.support, 11)
    assert ens.M == 1
    manifest = json.loads(cli.manifest_path(m1).read_text())
    assert manifest["command"] == "fit"
    assert manifest["inputs"][str(samples)] == cli.sha256(samples)
    assert manifest["outputs"][str(m1)] == cli.sha256(m1)
    assert manifest["config"]["fit"]["learner"]["kind"] == "gaussian-kernel"
    assert ens.density(x).min() > 0


def test_fit_too_few_knots_is_input_error(tmp_path, capsys):
    p = tmp_path / "tiny.csv"
    p.write_text("1\n2\n2\n3\n")
    assert run("fit", p, "-o", tmp_path / "m.json") == cli.EXIT_INPUT
    assert "4 distinct knots" in capsys.readouterr().err


def test_missing_file_is_input_error(tmp_path):
    assert run("fit", tmp_path / "nope.csv", "-o", tmp_path / "m.json") == cli.EXIT_INPUT


def test_numerical_failure_exit_code(tmp_path, samples, monkeypatch):
    from boostnpmle.errors import SolveFailureError

    def broken(*a, **k):
        raise SolveFailureError("forced")

    monkeypatch.setattr(cli, "fit", broken)
    assert run("fit", samples, "-o", tmp_path / "m.json") == cli.EXIT_NUMERICAL


def test_density_grid(tmp_path, samples):
    model = tmp_path / "m.json"
    run("fit", samples, "-M", 50, "-o", model)
    ens = Ensemble.load(model)
    small = tmp_path / "g3.csv"
    assert run("density-grid", model, "--points", 3, "-o", small) == 0
    rows = read_rows(small)
    lo, hi = ens.support
    assert [float(r["x"]) for r in rows] == [lo, lo + (hi - lo) / 2, hi]
    fine = tmp_path / "g.csv"
    run("density-grid", model, "--points", 4001, "-o", fine)
    rows = read_rows(fine)
    x = np.array([float(r["x"]) for r in rows])
    p = np.array([float(r["density"]) for r in rows])
    assert p.min() >= 0
    assert abs(np.trapezoid(p, x) - 1) < 5e-3
    # 17 significant digits reproduce the doubles exactly
    np.testing.assert_array_equal(p, ens.density(x))


def test_kl_sweep_single_row(tmp_path):
    out = tmp_path / "k.csv"
    assert run("kl-sweep", "--betas", 0.5, "--Ms", 1, "--replicates", 1, "-n", 200, "-o", out) == 0
    rows = read_rows(out)
    assert len(rows) == 1 and rows[0]["beta"] == "0.5" and rows[0]["M"] == "1"
    assert len(read_rows(str(out) + ".aggregate.csv")) == 1


def test_classify_synthetic(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert run("classify", "--synthetic-size", 300, "--splits", 2, "-M", 20, "-o", out) == 0
    rows = read_rows(out)
    errs = [float(r["test_error"]) for r in rows if r["split"].isdigit()]
    assert len(errs) == 2 and all(0 <= e <= 1 for e in errs)
    m = json.loads(cli.manifest_path(out).read_text())
    assert m["seeds"] == [0, 1] and "bayes_error" in m["config"]["synthetic"]


def test_classify_csv(tmp_path):
    r = np.random.default_rng(0)
    data = tmp_path / "heart.csv"
    with open(data, "w") as fh:
        fh.write("age,chd\n")
        for _ in range(120):
            y = int(r.random() < 0.4)
            fh.write(f"{int(r.normal(40 + 10 * y, 10))},{y}\n")
    out = tmp_path / "c.csv"
    assert run("classify", data, "--splits", 2, "-M", 10, "--learner", "gaussian-kernel", "-o", out) == 0
    m = json.loads(cli.manifest_path(out).read_text())
    assert m["inputs"][str(data)] == cli.sha256(data)


def test_replay_reproduces_outputs(tmp_path, samples):
    model = tmp_path / "m.json"
    run("fit", samples, "--learner", "cart", "-M", 5, "-o", model)
    first = model.read_bytes()
    model.unlink()
    assert run("replay", cli.manifest_path(model)) == 0
    assert model.read_bytes() == first


def test_help_lists_table_flags(capsys):
    with pytest.raises(SystemExit):
        run("fit", "--help")
    text = capsys.readouterr().out
    for flag in ("--df", "--lambda", "--kernel", "--minsplit", "--bandwidth", "-M"):
        assert flag in text

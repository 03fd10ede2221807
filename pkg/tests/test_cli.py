"""End-to-end checks of the command line entry points.

Every subcommand is exercised through main(argv) with temp files,
checking payloads on stdout and the exit code contract (0 success,
2 validation failure, 3 non-convergence).
"""

import json

import numpy as np
import pytest

from dsnorm import kdnorm
from dsnorm.cli import EXIT_ASSERTION, EXIT_NONCONVERGENCE, EXIT_OK, main
from dsnorm.vecnorms import NormDescriptor, eval_norm


def _write_vec(path, vec):
    path.write_text("\n".join(format(float(x), ".17g") for x in vec) + "\n")


def _write_mat(path, mat):
    path.write_text("\n".join(",".join(format(float(x), ".17g") for x in row)
                              for row in np.asarray(mat)) + "\n")


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out.strip()
    # subcommands that also write files emit a trailing status object;
    # parse the first JSON document on stdout
    decoder = json.JSONDecoder()
    payload, _ = decoder.raw_decode(out)
    return code, payload


def test_project(tmp_path, capsys):
    theta = np.array([3.0, -1.0, 0.5, 2.0, -0.25])
    infile = tmp_path / "theta.csv"
    outfile = tmp_path / "proj.csv"
    _write_vec(infile, theta)
    code, payload = _run(capsys, ["project", "--k", "3", "--d", "2",
                                  "--in", str(infile), "--out", str(outfile)])
    assert code == EXIT_OK
    ref = kdnorm.project_skd(theta, 3, 2)
    assert payload["sq_dual_norm"] == pytest.approx(ref.sq_dual_norm, rel=1e-12)
    got = np.loadtxt(outfile)
    np.testing.assert_allclose(got, ref.projected, atol=1e-15)


def test_dualnorm(tmp_path, capsys):
    theta = np.array([1.0, -2.0, 0.5, 4.0])
    infile = tmp_path / "theta.csv"
    _write_vec(infile, theta)
    code, payload = _run(capsys, ["dualnorm", "--k", "2", "--d", "1",
                                  "--in", str(infile)])
    assert code == EXIT_OK
    assert payload["value"] == pytest.approx(kdnorm.dual_norm_kd(theta, 2, 1),
                                             rel=1e-12)


def test_norm_kinds(tmp_path, capsys):
    beta = np.array([1.0, -2.0, 3.0])
    infile = tmp_path / "beta.csv"
    _write_vec(infile, beta)
    code, payload = _run(capsys, ["norm", "--norm", "l1", "--in", str(infile)])
    assert code == EXIT_OK
    assert payload["value"] == pytest.approx(6.0)
    family = json.dumps([[1.0, 1.0, 1.0], [0.5, 2.0, 0.5]])
    code, payload = _run(capsys, ["norm", "--norm", "max_weighted_l1",
                                  "--weight-family", family, "--in", str(infile)])
    assert code == EXIT_OK
    assert payload["value"] == pytest.approx(6.0)  # max(6, 6)


def test_prox_with_certificate(tmp_path, capsys):
    x = np.array([2.0, -1.5, 0.3, 0.9, -0.1, 1.1])
    infile = tmp_path / "x.csv"
    outfile = tmp_path / "prox.csv"
    cert = tmp_path / "cert.json"
    _write_vec(infile, x)
    code, _ = _run(capsys, ["prox", "--norm", "kd", "--k", "3", "--d", "2",
                            "--lambda", "0.4", "--in", str(infile),
                            "--out", str(outfile), "--cert", str(cert)])
    assert code == EXIT_OK
    rep = json.load(open(cert))
    assert rep["reconstruction_residual"] <= 1e-8
    assert rep["pairing_gap"] <= 1e-6
    prox = np.loadtxt(outfile)
    assert prox.shape == x.shape
    assert np.linalg.norm(prox) < np.linalg.norm(x)


def _small_problem(tmp_path, seed=0, n=30, p=6):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:2] = (1.5, -1.0)
    y = X @ beta + 0.05 * rng.standard_normal(n)
    xf = tmp_path / "X.csv"
    yf = tmp_path / "y.csv"
    _write_mat(xf, X)
    _write_vec(yf, y)
    return xf, yf


def test_solve_writes_result(tmp_path, capsys):
    xf, yf = _small_problem(tmp_path)
    out = tmp_path / "result.json"
    code, _ = _run(capsys, ["solve", "--norm", "kd", "--k", "2", "--d", "1",
                            "--lambda", "0.05", "--X", str(xf), "--y", str(yf),
                            "--solver", "fista", "--out", str(out)])
    assert code == EXIT_OK
    result = json.load(open(out))
    assert result["converged"]
    assert len(result["beta_hat"]) == 6
    assert result["certificate"]["pairing_gap"] <= 1e-4
    assert result["certificate"]["dual_norm_ratio"] <= 1.0 + 1e-4


def test_solve_nonconvergence_exit_code(tmp_path, capsys):
    xf, yf = _small_problem(tmp_path)
    code, payload = _run(capsys, ["solve", "--norm", "l1", "--lambda", "0.05",
                                  "--X", str(xf), "--y", str(yf),
                                  "--tol", "1e-14", "--max-iters", "2"])
    assert code == EXIT_NONCONVERGENCE
    assert payload["converged"] is False


def test_varphi_methods(tmp_path, capsys):
    beta = np.array([0.0, 2.0, 0.0, -1.0])
    bf = tmp_path / "beta.csv"
    _write_vec(bf, beta)
    values = {}
    for method in ("exact", "numeric"):
        code, payload = _run(capsys, ["varphi", "--norm", "l1",
                                      "--beta", str(bf), "--method", method])
        assert code == EXIT_OK
        values[method] = payload["value"]
    # l1 with two active coordinates: exact formula gives 2 sqrt(|S|)
    assert values["exact"] == pytest.approx(2.0 * np.sqrt(2.0), rel=1e-12)
    assert values["numeric"] == pytest.approx(values["exact"], rel=1e-6)
    # the bound method covers the dual family: 2 sqrt(kstar / k)
    code, payload = _run(capsys, ["varphi", "--norm", "kd_dual", "--k", "4",
                                  "--d", "1", "--beta", str(bf),
                                  "--method", "bound"])
    assert code == EXIT_OK
    assert payload["value"] == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert payload["method"] == "upper_bound"


def test_psi(tmp_path, capsys):
    beta = np.array([1.0, 0.0, 0.0])
    bf = tmp_path / "beta.csv"
    _write_vec(bf, beta)
    code, p2 = _run(capsys, ["psi", "--norm", "l1", "--beta", str(bf),
                             "--q", "2", "--dirs", "5000", "--seed", "1"])
    assert code == EXIT_OK
    code, pinf = _run(capsys, ["psi", "--norm", "l1", "--beta", str(bf),
                               "--q", "inf", "--dirs", "5000", "--seed", "1"])
    assert code == EXIT_OK
    assert pinf["value"] <= p2["value"] + 1e-9


def test_lambda_aggregate_and_kd(tmp_path, capsys):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((25, 5))
    y = rng.standard_normal(25)
    xf = tmp_path / "X.csv"
    yf = tmp_path / "y.csv"
    sf = tmp_path / "sigma.json"
    _write_mat(xf, X)
    _write_vec(yf, y)
    sf.write_text(json.dumps({"sigma": 0.25}))
    code, payload = _run(capsys, ["lambda", "--norm", "kd_dual", "--k", "2",
                                  "--d", "1", "--X", str(xf),
                                  "--y", str(yf), "--sigma", str(sf)])
    assert code == EXIT_OK
    assert payload["Lambda"] > 0
    assert payload["lambda_upper"] > 0
    code, payload = _run(capsys, ["lambda", "--norm", "kd", "--k", "3",
                                  "--d", "2", "--X", str(xf), "--sigma", str(sf)])
    assert code == EXIT_OK
    assert payload["phi"] > 0 and payload["exact"]


def test_bounds_report(tmp_path, capsys):
    norm = NormDescriptor(kind="weighted_l1", weights=(1.0, 0.5, 2.0))
    beta_star = np.array([1.0, -0.5, 0.0])
    result = tmp_path / "result.json"
    result.write_text(json.dumps({
        "norm": json.loads(norm.to_json()),
        "lam": 0.2,
        "beta_star": beta_star.tolist(),
        "alpha": 0.8,
        "theta": 0.05,
    }))
    code, payload = _run(capsys, ["bounds", "--result", str(result)])
    assert code == EXIT_OK
    assert payload["prediction_bound"] == pytest.approx(
        3 * 0.2 * eval_norm(norm, beta_star), rel=1e-12)
    assert payload["phi"] == pytest.approx(2.0 * np.hypot(1.0, 0.5), rel=1e-9)
    assert "refined_prediction_bound" in payload


def test_bench_subcommand(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "n": 30, "p": 8, "k_star": 2, "d_star": 1, "k": 2, "d": 1,
        "sigma": 0.3, "trials": 2, "solver_tol": 1e-6,
        "solver_max_iters": 2000,
    }))
    out_csv = tmp_path / "report.csv"
    out_json = tmp_path / "report.json"
    code, payload = _run(capsys, ["bench", "--config", str(cfg),
                                  "--out-csv", str(out_csv),
                                  "--out-json", str(out_json)])
    assert code == EXIT_OK
    assert payload["summary"]["converged_both"] == 2
    assert out_csv.exists() and out_json.exists()
    # missing config is a usage error
    assert main(["bench"]) == EXIT_ASSERTION
    capsys.readouterr()


def test_fig_subcommands(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, payload = _run(capsys, ["fig-maxwl1", "--out", str(out),
                                  "--dirs", "2000", "--gamma-min", "0.01",
                                  "--gamma-max", "100", "--gamma-num", "3"])
    assert code == EXIT_OK
    assert payload["out"] == str(out)
    text = out.read_text()
    assert text.splitlines()[0].startswith("gamma,")
    out2 = tmp_path / "rand.csv"
    code, _ = _run(capsys, ["fig-randnorms", "--out", str(out2),
                            "--count", "2", "--seed", "4", "--dirs", "2000"])
    assert code == EXIT_OK
    assert len(out2.read_text().splitlines()) == 3


def test_config_fills_unset_options(tmp_path, capsys):
    beta = np.array([0.0, 1.0])
    bf = tmp_path / "beta.csv"
    _write_vec(bf, beta)
    cfg = tmp_path / "defaults.json"
    cfg.write_text(json.dumps({"method": "exact", "norm": "l1"}))
    code, payload = _run(capsys, ["--config", str(cfg), "varphi",
                                  "--beta", str(bf)])
    assert code == EXIT_OK
    assert payload["method"] == "exact_formula"
    # explicit flags win over the config file
    code, payload = _run(capsys, ["--config", str(cfg), "varphi",
                                  "--beta", str(bf), "--method", "numeric"])
    assert code == EXIT_OK
    assert payload["method"] == "numeric"


def test_exit_codes_on_bad_input(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["dualnorm", "--k", "2", "--d", "1",
                 "--in", str(missing)]) == EXIT_ASSERTION
    capsys.readouterr()
    infile = tmp_path / "v.csv"
    _write_vec(infile, np.array([1.0, 2.0, 3.0]))
    # d > k is invalid
    assert main(["dualnorm", "--k", "1", "--d", "2",
                 "--in", str(infile)]) == EXIT_ASSERTION
    capsys.readouterr()

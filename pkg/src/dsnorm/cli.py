"""Command-line interface.

Subcommands mirror the library modules: project / dualnorm / norm
(kdnorm), prox (proxops), solve (solvers), varphi / psi (geometry),
lambda / bounds (statbounds), bench / fig-maxwl1 / fig-randnorms
(bench). Vectors travel as single-column CSV of decimal floats,
matrices as header-free row-major CSV; reports are JSON on stdout or
in files. Exit codes: 0 success, 2 assertion/validation failure, 3
solver or evaluator non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench, geometry, kdnorm, proxops, statbounds
from .solvers import RegressionProblem, admm, lasso_baseline, optimality_certificate, prox_gradient
from .vecnorms import NormDescriptor, eval_dual_norm, eval_norm

EXIT_OK = 0
EXIT_ASSERTION = 2
EXIT_NONCONVERGENCE = 3


class CliAssertionError(RuntimeError):
    pass


# ---------------------------------------------------------------------
# small I/O helpers
# ---------------------------------------------------------------------


def _read_vector(path: str) -> np.ndarray:
    return np.atleast_1d(np.loadtxt(path, delimiter=",", dtype=float, ndmin=1))


def _write_vector(path: str, vec: np.ndarray):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x in np.asarray(vec, dtype=float):
            fh.write(format(float(x), ".17g") + "\n")


def _read_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)


def _emit(payload: dict, path=None):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _apply_config(args: argparse.Namespace):
    """Fill unset arguments from the JSON file given by --config."""
    path = getattr(args, "config", None)
    if not path:
        return
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise CliAssertionError("--config must hold a JSON object")
    for key, value in payload.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is None:
            setattr(args, attr, value)


def _norm_from_args(args: argparse.Namespace) -> NormDescriptor:
    kind = getattr(args, "norm", None) or "kd"
    weights = getattr(args, "weights", None)
    if isinstance(weights, str):
        weights = tuple(float(x) for x in weights.split(","))
    family = getattr(args, "weight_family", None)
    if isinstance(family, str):
        family = tuple(tuple(float(x) for x in w) for w in json.loads(family))
    elif family is not None:
        family = tuple(tuple(float(x) for x in w) for w in family)
    return NormDescriptor(kind=kind, weights=weights, k=getattr(args, "k", None),
                          d=getattr(args, "d", None), weight_family=family)


# ---------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------


def _cmd_project(args) -> int:
    theta = _read_vector(args.infile)
    out = kdnorm.project_skd(theta, args.k, args.d)
    if args.out:
        _write_vector(args.out, out.projected)
    _emit({
        "sq_dual_norm": out.sq_dual_norm,
        "support": list(out.support),
        "partition_boundaries": list(out.partition.boundaries),
        "projected": None if args.out else out.projected,
        "out": args.out,
    })
    return EXIT_OK


def _cmd_dualnorm(args) -> int:
    theta = _read_vector(args.infile)
    _emit({"value": kdnorm.dual_norm_kd(theta, args.k, args.d), "k": args.k, "d": args.d})
    return EXIT_OK


def _cmd_norm(args) -> int:
    beta = _read_vector(args.infile)
    norm = _norm_from_args(args)
    _emit({"value": eval_norm(norm, beta), "norm": json.loads(norm.to_json())})
    return EXIT_OK


def _cmd_prox(args) -> int:
    x = _read_vector(args.infile)
    norm = _norm_from_args(args)
    out = proxops.prox_norm(x, norm, args.lam)
    if args.out:
        _write_vector(args.out, out)
    if args.cert:
        rep = proxops.moreau_check(x, norm, args.lam)
        _emit({
            "reconstruction_residual": rep.reconstruction_residual,
            "dual_feasibility_gap": rep.dual_feasibility_gap,
            "pairing_gap": rep.pairing_gap,
        }, path=args.cert)
    _emit({"out": args.out, "cert": args.cert,
           "prox": None if args.out else out})
    return EXIT_OK


def _cmd_solve(args) -> int:
    X = _read_matrix(args.X)
    y = _read_vector(args.y)
    problem = RegressionProblem(X, y)
    norm = _norm_from_args(args)
    solver = args.solver or "fista"
    if solver == "pg":
        res = prox_gradient(problem, norm, args.lam, accel=False,
                            tol=args.tol, max_iters=args.max_iters)
    elif solver == "fista":
        res = prox_gradient(problem, norm, args.lam, accel=True,
                            tol=args.tol, max_iters=args.max_iters)
    elif solver == "admm":
        res = admm(problem, norm, args.lam, tol=args.tol, max_iters=args.max_iters)
    else:
        raise CliAssertionError(f"unknown solver {solver!r}")
    cert = optimality_certificate(problem, norm, args.lam, res.beta_hat)
    payload = {
        "beta_hat": res.beta_hat,
        "objective": res.objective_trace[-1],
        "iterations": res.iterations,
        "converged": res.converged,
        "solver": solver,
        "lam": args.lam,
        "norm": json.loads(norm.to_json()),
        "certificate": cert,
    }
    _emit(payload, path=args.out)
    if args.out:
        _emit({"out": args.out, "converged": res.converged})
    if not res.converged:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _cmd_varphi(args) -> int:
    beta = _read_vector(args.beta)
    norm = _norm_from_args(args)
    method = args.method or "numeric"
    if method == "exact":
        rep = geometry.varphi_exact(norm, beta)
    elif method == "bound":
        rep = geometry.varphi_bound(norm, beta)
    else:
        rep = geometry.varphi_numeric(norm, beta)
    _emit({
        "value": rep.value,
        "method": rep.method,
        "formula_id": rep.formula_id,
        "achieving_z": rep.achieving_z,
        "extras": rep.extras,
    })
    return EXIT_OK


def _cmd_psi(args) -> int:
    beta = _read_vector(args.beta)
    norm = _norm_from_args(args)
    q = np.inf if str(args.q) in ("inf", "oo") else float(args.q)
    value = geometry.psi_estimate(norm, beta, q, n_dirs=args.dirs, seed=args.seed)
    _emit({"value": value, "q": str(args.q), "dirs": args.dirs, "seed": args.seed})
    return EXIT_OK


def _read_sigma(path):
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = payload.get("sigma", payload.get("sigma_cov"))
    if payload is None:
        return None
    arr = np.asarray(payload, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _cmd_lambda(args) -> int:
    X = _read_matrix(args.X)
    sigma = _read_sigma(args.sigma)
    norm = _norm_from_args(args)
    payload = {"norm": json.loads(norm.to_json()), "p0": args.p0}
    if norm.kind in ("kd", "ksupport"):
        mode = "exact" if statbounds.math.comb(X.shape[1], norm.k) <= statbounds.ENUM_GUARD else "greedy"
        meas = statbounds.kd_phi_measures(X, sigma, norm.k, norm.d, p0=args.p0,
                                          c_hw=args.c_hw, mode=mode)
        payload.update({"phi0": meas.phi0, "phi1": meas.phi1, "phi": meas.phi,
                        "exact": meas.exact, "phi1_upper": meas.phi1_upper,
                        "lambda_lower": meas.phi})
    else:
        mset = statbounds.build_mset(norm, X.shape[1])
        agg = statbounds.aggregate_measures(X, sigma, mset, p0=args.p0, c_hw=args.c_hw)
        payload.update({"lambda0": agg.lambda0, "lambda1": agg.lambda1,
                        "lambda2": agg.lambda2, "kappa": agg.kappa,
                        "Lambda": agg.Lambda, "lambda_lower": agg.Lambda})
    if args.y:
        y = _read_vector(args.y)
        payload["lambda_upper"] = float(eval_dual_norm(norm, X.T @ y) / X.shape[0])
    _emit(payload)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    with open(args.result, "r", encoding="utf-8") as fh:
        result = json.load(fh)
    norm = NormDescriptor.from_json(json.dumps(result["norm"]))
    beta_star = np.asarray(result["beta_star"], dtype=float)
    lam = float(result["lam"])
    phi_from = args.phi_from or "exact"
    rep = (geometry.varphi_exact(norm, beta_star) if phi_from == "exact"
           else geometry.varphi_numeric(norm, beta_star))
    alpha = float(result.get("alpha", 1.0))
    theta = result.get("theta")
    report = statbounds.error_bound_report(
        lam, eval_norm(norm, beta_star), rep.value, alpha,
        theta=None if theta is None else float(theta))
    report.update({"phi": rep.value, "phi_method": rep.method, "alpha": alpha})
    _emit(report, path=args.out)
    if args.out:
        _emit({"out": args.out})
    return EXIT_OK


def _cmd_bench(args) -> int:
    if not args.config:
        raise CliAssertionError("bench requires --config")
    with open(args.config, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    for key in ("psi_cov",):
        if key in payload and payload[key] is not None:
            payload[key] = list(payload[key])
    for key in ("freq_range", "value_range"):
        if key in payload and payload[key] is not None:
            payload[key] = tuple(payload[key])
    config = bench.ExperimentConfig(**payload)
    report = bench.run_experiment(config)
    if args.out_csv:
        bench.write_report_csv(report, args.out_csv)
    if args.out_json:
        bench.write_report_json(report, args.out_json)
    _emit({"summary": report.summary, "out_csv": args.out_csv, "out_json": args.out_json})
    return EXIT_OK


def _cmd_fig_maxwl1(args) -> int:
    grid = None
    if args.gamma_min is not None and args.gamma_max is not None:
        grid = np.geomspace(args.gamma_min, args.gamma_max, args.gamma_num)
    path = bench.fig_maxwl1_sweep(gamma_grid=grid, out_csv=args.out, n_dirs=args.dirs)
    _emit({"out": path})
    return EXIT_OK


def _cmd_fig_randnorms(args) -> int:
    path = bench.fig_random_norms(count=args.count, seed=args.seed,
                                  out_csv=args.out, n_dirs=args.dirs)
    _emit({"out": path})
    return EXIT_OK


# ---------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------


def _add_norm_args(sub, default_kind=None):
    sub.add_argument("--norm", default=default_kind,
                     help="norm kind (l1, l2, linf, weighted_l1, weighted_linf, "
                          "owl, ksupport, kd, kd_dual, max_weighted_l1)")
    sub.add_argument("--k", type=int, default=None)
    sub.add_argument("--d", type=int, default=None)
    sub.add_argument("--weights", default=None, help="comma-separated weights")
    sub.add_argument("--weight-family", dest="weight_family", default=None,
                     help="JSON list of weight lists (max_weighted_l1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsnorm",
                                     description="doubly-sparse norm toolkit")
    parser.add_argument("--config", default=None,
                        help="JSON file supplying defaults for unset options")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("project", help="projection onto S_{k,d}")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_project)

    sp = subs.add_parser("dualnorm", help="dual norm via the interval DP")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--in", dest="infile", required=True)
    sp.set_defaults(func=_cmd_dualnorm)

    sp = subs.add_parser("norm", help="primal norm evaluation")
    _add_norm_args(sp, default_kind="kd")
    sp.add_argument("--in", dest="infile", required=True)
    sp.set_defaults(func=_cmd_norm)

    sp = subs.add_parser("prox", help="proximal operator")
    _add_norm_args(sp, default_kind="kd")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", default=None)
    sp.add_argument("--cert", default=None, help="write a Moreau certificate JSON")
    sp.set_defaults(func=_cmd_prox)

    sp = subs.add_parser("solve", help="penalized least squares")
    _add_norm_args(sp, default_kind="kd")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--X", required=True, help="header-free row-major CSV")
    sp.add_argument("--y", required=True)
    sp.add_argument("--solver", choices=("pg", "fista", "admm"), default=None)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iters", dest="max_iters", type=int, default=5000)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_solve)

    sp = subs.add_parser("varphi", help="relative diameter of the error set")
    _add_norm_args(sp)
    sp.add_argument("--beta", required=True)
    sp.add_argument("--method", choices=("exact", "bound", "numeric"), default=None)
    sp.set_defaults(func=_cmd_varphi)

    sp = subs.add_parser("psi", help="restricted-set surrogate estimate")
    _add_norm_args(sp)
    sp.add_argument("--beta", required=True)
    sp.add_argument("--q", default="2", help="2 or inf")
    sp.add_argument("--dirs", type=int, default=100000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_psi)

    sp = subs.add_parser("lambda", help="design-dependent lambda recommendations")
    _add_norm_args(sp, default_kind="kd")
    sp.add_argument("--p0", type=float, default=0.05)
    sp.add_argument("--c-hw", dest="c_hw", type=float, default=2.1)
    sp.add_argument("--X", required=True)
    sp.add_argument("--y", default=None)
    sp.add_argument("--sigma", default=None, help="JSON noise variance or covariance")
    sp.set_defaults(func=_cmd_lambda)

    sp = subs.add_parser("bounds", help="error bounds from a solve result")
    sp.add_argument("--result", required=True,
                    help="JSON with norm, lam, beta_star and optional theta/alpha")
    sp.add_argument("--phi-from", dest="phi_from", choices=("exact", "numeric"), default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_bounds)

    sp = subs.add_parser("bench", help="DS-vs-Lasso experiment")
    sp.add_argument("--config", required=False, default=None)
    sp.add_argument("--out-csv", dest="out_csv", default=None)
    sp.add_argument("--out-json", dest="out_json", default=None)
    sp.set_defaults(func=_cmd_bench)

    sp = subs.add_parser("fig-maxwl1", help="gamma sweep figure data")
    sp.add_argument("--out", default="maxwl1.csv")
    sp.add_argument("--dirs", type=int, default=100000)
    sp.add_argument("--gamma-min", dest="gamma_min", type=float, default=None)
    sp.add_argument("--gamma-max", dest="gamma_max", type=float, default=None)
    sp.add_argument("--gamma-num", dest="gamma_num", type=int, default=81)
    sp.set_defaults(func=_cmd_fig_maxwl1)

    sp = subs.add_parser("fig-randnorms", help="random norm family figure data")
    sp.add_argument("--out", default="randnorms.csv")
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dirs", type=int, default=100000)
    sp.set_defaults(func=_cmd_fig_randnorms)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except kdnorm.NonConvergence as exc:
        print(json.dumps({"error": str(exc), "gap": exc.gap, "value": exc.value}),
              file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (CliAssertionError, ValueError, KeyError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_ASSERTION
    except OSError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())

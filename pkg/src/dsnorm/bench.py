"""Synthetic benchmarks for the doubly-sparse estimator.

Data generation (doubly-sparse ground truth, Gaussian and rare-feature
designs), the DS-vs-Lasso experiment harness with per-trial bound
assertions, and the two figure-data sweeps for the max-of-weighted-l1
norm family. All randomness derives from (master_seed, trial_index)
through numpy SeedSequence, so reports are pure functions of their
configuration.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import geometry, kdnorm, statbounds
from .solvers import RegressionProblem, lasso_baseline, prox_gradient
from .vecnorms import NormDescriptor, eval_dual_norm, eval_norm

DESIGNS = ("gaussian_iso", "gaussian_cov", "rare_bernoulli")
LAMBDA_RULES = ("phi_formula", "oracle_dual_norm", "grid")


@dataclass
class ExperimentConfig:
    n: int
    p: int
    k_star: int
    d_star: int
    k: int
    d: int
    sigma: float
    design: str = "gaussian_iso"
    psi_cov: Optional[list] = None  # row covariance for gaussian_cov
    freq_range: tuple = (0.01, 0.2)  # rare_bernoulli column frequencies
    lambda_rule: str = "oracle_dual_norm"
    lambda_value: Optional[float] = None  # used by the grid rule
    trials: int = 200
    master_seed: int = 0
    p0: float = 0.05
    c_hw: float = 2.1
    normalize_columns: bool = True
    value_range: tuple = (0.5, 2.0)
    solver_tol: float = 1e-7
    solver_max_iters: int = 4000
    # errset/cone checks need iterative norm evaluations when d > 1,
    # which dominate the runtime at bench scale; they are skipped when
    # p exceeds this limit (d = 1 has closed forms and is always kept)
    exact_check_limit: int = 40

    def __post_init__(self):
        if not (1 <= self.d_star <= self.k_star <= self.p):
            raise ValueError("need 1 <= d_star <= k_star <= p")
        if not (1 <= self.d <= self.k <= self.p):
            raise ValueError("need 1 <= d <= k <= p")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.lambda_rule not in LAMBDA_RULES:
            raise ValueError(f"unknown lambda rule {self.lambda_rule!r}")
        if self.lambda_rule == "grid" and self.lambda_value is None:
            raise ValueError("grid rule requires lambda_value")


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list
    summary: dict


def _trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, trial)))


def gen_beta_star(p: int, k_star: int, d_star: int, value_range=(0.5, 2.0), seed=0) -> np.ndarray:
    """Ground truth with exactly k_star nonzeros on d_star magnitude levels.

    Levels are drawn in value_range with pairwise gaps at least 1e-3 of
    the range; each level is used at least once and signs are
    independent fair coin flips.
    """
    if not (1 <= d_star <= k_star <= p):
        raise ValueError("need 1 <= d_star <= k_star <= p")
    lo, hi = value_range
    if not (0 < lo < hi):
        raise ValueError("value_range must satisfy 0 < lo < hi")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    min_gap = 1e-3 * (hi - lo)
    while True:
        levels = np.sort(rng.uniform(lo, hi, size=d_star))
        if d_star == 1 or np.min(np.diff(levels)) > min_gap:
            break
    # every level appears at least once; remaining slots draw uniformly
    assignment = np.concatenate([
        np.arange(d_star),
        rng.integers(0, d_star, size=k_star - d_star),
    ])
    rng.shuffle(assignment)
    support = rng.choice(p, size=k_star, replace=False)
    beta = np.zeros(p)
    beta[support] = levels[assignment] * rng.choice([-1.0, 1.0], size=k_star)
    return beta


def gen_design(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    n, p = config.n, config.p
    if config.design == "gaussian_iso":
        X = rng.standard_normal((n, p))
    elif config.design == "gaussian_cov":
        Psi = np.asarray(config.psi_cov, dtype=float)
        if Psi.shape != (p, p):
            raise ValueError("psi_cov must be p x p")
        evals, evecs = np.linalg.eigh(Psi)
        if np.min(evals) < -1e-10:
            raise ValueError("psi_cov must be positive semidefinite")
        root = evecs @ np.diag(np.sqrt(np.maximum(evals, 0.0))) @ evecs.T
        X = rng.standard_normal((n, p)) @ root
    else:
        lo, hi = config.freq_range
        freqs = np.geomspace(lo, hi, p)
        X = (rng.random((n, p)) < freqs).astype(float)
        # redraw constant columns; they cannot be centered and scaled
        for j in range(p):
            while np.ptp(X[:, j]) == 0.0:
                X[:, j] = (rng.random(n) < freqs[j]).astype(float)
        X = X - np.mean(X, axis=0)
    if config.normalize_columns:
        norms = np.linalg.norm(X, axis=0)
        X = X * (np.sqrt(n) / norms)
    return X


def _norm_kd_value(beta: np.ndarray, k: int, d: int) -> float:
    """k-square-d norm, using the membership shortcut when it applies."""
    if kdnorm.check_membership_skd(beta, k, d, tol=0.0):
        return float(np.linalg.norm(beta))
    if d == 1:
        return kdnorm.norm_k1_closed_form(beta, k)
    return kdnorm.eval_norm_kd(beta, k, d, tol=1e-6)


def _phi_for_cone(config: ExperimentConfig, beta_star: np.ndarray):
    """(phi value, method) for the DS-arm cone test.

    Exact for d = 1 via the two-branch formula; otherwise the valid
    but loose dual-ball radius bound 2*sqrt(p/k) is reported as such.
    """
    if config.d == 1:
        norm = NormDescriptor(kind="kd", k=config.k, d=1)
        rep = geometry.varphi_exact(norm, beta_star)
        return rep.value, rep.method
    return 2.0 * np.sqrt(config.p / config.k), "upper_bound"


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    norm_ds = NormDescriptor(kind="kd", k=config.k, d=config.d)
    norm_l1 = NormDescriptor(kind="l1")
    rows = []
    for trial in range(config.trials):
        rng = _trial_rng(config.master_seed, trial)
        beta_star = gen_beta_star(config.p, config.k_star, config.d_star,
                                  config.value_range, rng)
        X = gen_design(config, rng)
        eps = config.sigma * rng.standard_normal(config.n)
        y = X @ beta_star + eps
        problem = RegressionProblem(X, y, beta_star=beta_star,
                                    sigma_cov=config.sigma**2 or None)
        grad_noise = X.T @ eps / config.n
        theta_kd = eval_dual_norm(norm_ds, grad_noise)
        theta_l1 = float(np.max(np.abs(grad_noise)))
        if config.lambda_rule == "oracle_dual_norm":
            lam_ds, lam_l1 = 2.0 * theta_kd, 2.0 * theta_l1
        elif config.lambda_rule == "phi_formula":
            mode = "exact" if math.comb(config.p, config.k) <= statbounds.ENUM_GUARD else "greedy"
            lam_ds = statbounds.kd_phi_measures(
                X, config.sigma**2, config.k, config.d,
                p0=config.p0, c_hw=config.c_hw, mode=mode).phi
            lam_l1 = statbounds.kd_phi_measures(
                X, config.sigma**2, 1, 1, p0=config.p0, c_hw=config.c_hw).phi
        else:
            lam_ds = lam_l1 = float(config.lambda_value)
        t0 = time.perf_counter()
        try:
            res_ds = prox_gradient(problem, norm_ds, lam_ds, accel=True,
                                   tol=config.solver_tol,
                                   max_iters=config.solver_max_iters)
            ds_converged = res_ds.converged
        except FloatingPointError:
            res_ds, ds_converged = None, False
        t_ds = time.perf_counter() - t0
        t0 = time.perf_counter()
        res_l1 = lasso_baseline(problem, lam_l1, tol=config.solver_tol,
                                max_iters=config.solver_max_iters)
        t_l1 = time.perf_counter() - t0
        norm_beta_star_kd = _norm_kd_value(beta_star, config.k, config.d)
        row = {
            "trial": trial,
            "lambda_ds": lam_ds,
            "lambda_lasso": lam_l1,
            "theta_kd": theta_kd,
            "theta_l1": theta_l1,
            "norm_beta_star_kd": norm_beta_star_kd,
            "ds_converged": ds_converged,
            "lasso_converged": res_l1.converged,
            "runtime_ds": t_ds,
            "runtime_lasso": t_l1,
            "prediction_error_lasso": res_l1.prediction_error,
            "est_error_l2_lasso": res_l1.estimation_error_l2,
        }
        # Lasso-arm checks with the exact l1 relative diameter
        v1 = res_l1.beta_hat - beta_star
        phi_l1 = 2.0 * np.sqrt(config.k_star)
        row["lambda_valid_lasso"] = lam_l1 >= 2.0 * theta_l1 - 1e-12
        row["oracle_bound_lasso"] = bool(
            res_l1.prediction_error <= 3.0 * lam_l1 * float(np.sum(np.abs(beta_star))) + 1e-9
        )
        row["cone_lasso"] = geometry.cone_membership(
            v1, geometry.ConeSpec(phi=phi_l1, factor=2.0), norm_l1)
        if res_ds is not None:
            v = res_ds.beta_hat - beta_star
            row.update({
                "prediction_error_ds": res_ds.prediction_error,
                "est_error_l2_ds": res_ds.estimation_error_l2,
                "lambda_valid_ds": lam_ds >= 2.0 * theta_kd - 1e-12,
                "oracle_bound_ds": bool(
                    res_ds.prediction_error <= 3.0 * lam_ds * norm_beta_star_kd + 1e-9
                ),
            })
            if config.d == 1 or config.p <= config.exact_check_limit:
                row["errset_ds"] = bool(
                    0.5 * _norm_kd_value(v, config.k, config.d) + norm_beta_star_kd
                    >= _norm_kd_value(res_ds.beta_hat, config.k, config.d) - 1e-7
                )
                phi_ds, phi_method = _phi_for_cone(config, beta_star)
                row["cone_ds"] = geometry.cone_membership(
                    v, geometry.ConeSpec(phi=phi_ds, factor=2.0), norm_ds,
                    tol=1e-7)
                row["cone_phi_method"] = phi_method
        rows.append(row)
    summary = _summarize(rows)
    return ExperimentReport(config=config, rows=rows, summary=summary)


def _summarize(rows: list) -> dict:
    def _stats(key, flt=None):
        vals = [r[key] for r in rows if key in r and r[key] is not None
                and (flt is None or flt(r))]
        if not vals:
            return None, None
        arr = np.asarray(vals, dtype=float)
        return float(np.mean(arr)), float(np.std(arr) / np.sqrt(arr.size))

    conv = [r for r in rows if r.get("ds_converged") and r.get("lasso_converged")]
    summary = {"trials": len(rows), "converged_both": len(conv)}
    for key in ("prediction_error_ds", "prediction_error_lasso",
                "est_error_l2_ds", "est_error_l2_lasso"):
        m, se = _stats(key)
        summary[key + "_mean"], summary[key + "_se"] = m, se
    ratios = [r["prediction_error_ds"] / r["prediction_error_lasso"]
              for r in conv if r.get("prediction_error_lasso", 0) and r["prediction_error_lasso"] > 0]
    if ratios:
        arr = np.asarray(ratios)
        summary["gain_ratio_mean"] = float(np.mean(arr))
        summary["gain_ratio_se"] = float(np.std(arr, ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else None
    for flag in ("oracle_bound_ds", "oracle_bound_lasso", "cone_ds",
                 "cone_lasso", "errset_ds", "lambda_valid_ds", "lambda_valid_lasso"):
        vals = [bool(r[flag]) for r in rows if flag in r]
        summary[flag + "_frequency"] = float(np.mean(vals)) if vals else None
    return summary


# ---------------------------------------------------------------------
# figure data for the max-of-weighted-l1 family
# ---------------------------------------------------------------------


def _maxwl1_norm(gamma: float) -> NormDescriptor:
    family = (
        (1.0, 0.75),
        (gamma / (gamma + 4.0), 0.9),
        (gamma / (gamma + 5.0), 4.5),
    )
    return NormDescriptor(kind="max_weighted_l1", weight_family=family)


def _regime_id(norm: NormDescriptor, z: np.ndarray) -> int:
    """Index of the component box whose corner the achieving z is."""
    az = np.abs(z)
    for j, w in enumerate(norm.weight_family):
        if np.allclose(az, 1.0 / np.asarray(w), rtol=1e-8, atol=1e-10):
            return j
    return -1


def _fmt(x) -> str:
    return format(float(x), ".12g")


def fig_maxwl1_sweep(gamma_grid=None, out_csv: str = "maxwl1.csv",
                     n_dirs: int = 100000) -> str:
    """gamma sweep of phi, psi(Xi), psi(Xi_inf) at beta = (0, 1)."""
    if gamma_grid is None:
        gamma_grid = np.geomspace(1e-2, 1e2, 81)
    beta = np.array([0.0, 1.0])
    with open(out_csv, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gamma", "phi", "psi_xi", "psi_xi_inf", "regime",
                         "phi_over_psi_inf"])
        for gamma in gamma_grid:
            norm = _maxwl1_norm(float(gamma))
            rep = geometry.varphi_numeric(norm, beta)
            psi2 = geometry.psi_estimate(norm, beta, 2, n_dirs=n_dirs)
            psiinf = geometry.psi_estimate(norm, beta, np.inf, n_dirs=n_dirs)
            writer.writerow([
                _fmt(gamma), _fmt(rep.value), _fmt(psi2), _fmt(psiinf),
                _regime_id(norm, rep.achieving_z), _fmt(rep.value / psiinf),
            ])
    return out_csv


def fig_random_norms(count: int = 100, seed: int = 0,
                     out_csv: str = "randnorms.csv", n_dirs: int = 100000) -> str:
    """Random max-of-weighted-l1 norms in the plane at beta = (0, 1).

    Each family contains w = (1, 1) plus up to three extra weight pairs
    to the right of and below it (w1 >= 1, w2 <= 1).
    """
    rng = np.random.default_rng(seed)
    beta = np.array([0.0, 1.0])
    with open(out_csv, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "n_components", "phi", "two_phi", "psi_xi",
                         "psi_xi_inf", "phi_over_psi_inf", "lower_bound"])
        for i in range(count):
            extras = rng.integers(1, 4)
            family = [(1.0, 1.0)] + [
                (float(np.exp(rng.uniform(0.0, np.log(2.0)))),
                 float(rng.uniform(0.3, 0.9)))
                for _ in range(extras)
            ]
            norm = NormDescriptor(kind="max_weighted_l1", weight_family=tuple(family))
            rep = geometry.varphi_numeric(norm, beta)
            psi2 = geometry.psi_estimate(norm, beta, 2, n_dirs=n_dirs)
            psiinf = geometry.psi_estimate(norm, beta, np.inf, n_dirs=n_dirs)
            lower = 2.0 * geometry.min_norm_subdiff(norm, beta)
            writer.writerow([
                i, len(family), _fmt(rep.value), _fmt(2.0 * rep.value),
                _fmt(psi2), _fmt(psiinf), _fmt(rep.value / psiinf), _fmt(lower),
            ])
    return out_csv


# ---------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------

REPORT_COLUMNS = (
    "trial", "lambda_ds", "lambda_lasso", "theta_kd", "theta_l1",
    "norm_beta_star_kd", "ds_converged", "lasso_converged",
    "prediction_error_ds", "prediction_error_lasso",
    "est_error_l2_ds", "est_error_l2_lasso",
    "lambda_valid_ds", "lambda_valid_lasso",
    "oracle_bound_ds", "oracle_bound_lasso",
    "cone_ds", "cone_lasso", "cone_phi_method", "errset_ds",
    "runtime_ds", "runtime_lasso",
)


def write_report_csv(report: ExperimentReport, out_csv: str) -> str:
    with open(out_csv, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            out = []
            for col in REPORT_COLUMNS:
                val = row.get(col)
                if val is None:
                    out.append("")
                elif isinstance(val, bool):
                    out.append(str(int(val)))
                elif isinstance(val, (int, np.integer)):
                    out.append(str(int(val)))
                elif isinstance(val, str):
                    out.append(val)
                else:
                    out.append(_fmt(val))
            writer.writerow(out)
    return out_csv


def write_report_json(report: ExperimentReport, out_json: str) -> str:
    payload = {"config": asdict(report.config), "summary": report.summary}
    with open(out_json, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_json

"""Regularized least-squares solvers.

minimize (1/2n)||y - X b||_2^2 + lam * ||b||

via proximal gradient (optionally accelerated with restart on objective
increase) or ADMM, plus a dedicated soft-threshold path for the Lasso
baseline. Initialization is always b = 0 so the lam kill switch is an
exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import proxops
from .vecnorms import NormDescriptor, eval_dual_norm, eval_norm


@dataclass
class RegressionProblem:
    X: np.ndarray
    y: np.ndarray
    beta_star: Optional[np.ndarray] = None
    sigma_cov: Optional[np.ndarray] = None  # noise covariance descriptor (dense)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.size:
            raise ValueError("inconsistent problem dimensions")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("non-finite problem data")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass
class SolveResult:
    beta_hat: np.ndarray
    objective_trace: list
    iterations: int
    converged: bool
    prediction_error: Optional[float] = None
    estimation_error_l2: Optional[float] = None
    estimation_error_norm: Optional[float] = None


def _objective(problem: RegressionProblem, norm: Optional[NormDescriptor], lam: float, b: np.ndarray,
               norm_value: Optional[float] = None) -> float:
    r = problem.y - problem.X @ b
    val = 0.5 * float(np.dot(r, r)) / problem.n
    if lam > 0 and norm is not None:
        val += lam * (norm_value if norm_value is not None else eval_norm(norm, b))
    return val


def _iterative_norm(norm: Optional[NormDescriptor]) -> bool:
    """Kinds whose primal evaluation needs the iterative ascent."""
    return norm is not None and norm.kind == "kd" and 1 < norm.d < norm.k


def _pairing_norm_value(prox_input: np.ndarray, prox_output: np.ndarray, scale: float) -> float:
    """||b|| from the Moreau pairing <x - b, b> = scale * ||b|| at prox(x).

    Exact at the prox optimum; used for the objective trace of norms
    without a closed-form evaluation, where the trace would otherwise
    dominate the runtime.
    """
    return max(0.0, float(np.dot(prox_input - prox_output, prox_output))) / scale


def _lipschitz(X: np.ndarray, n: int, tol: float = 1e-8) -> float:
    """Largest eigenvalue of X'X/n by power iteration."""
    p = X.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(p)
    v /= np.linalg.norm(v)
    lam_old = 0.0
    for _ in range(10000):
        w = X.T @ (X @ v) / n
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
        if abs(lam - lam_old) <= tol * lam:
            break
        lam_old = lam
    return lam


def _finalize(problem: RegressionProblem, norm: Optional[NormDescriptor], result: SolveResult) -> SolveResult:
    if problem.beta_star is not None:
        v = problem.beta_star - result.beta_hat
        result.prediction_error = float(np.dot(problem.X @ v, problem.X @ v)) / problem.n
        result.estimation_error_l2 = float(np.linalg.norm(v))
        if norm is not None and not (_iterative_norm(norm) and problem.p > 40):
            result.estimation_error_norm = eval_norm(norm, v)
    return result


def prox_gradient(
    problem: RegressionProblem,
    norm: NormDescriptor,
    lam: float,
    step: Optional[float] = None,
    accel: bool = False,
    tol: float = 1e-8,
    max_iters: int = 5000,
    backtracking: bool = False,
) -> SolveResult:
    """Proximal gradient descent from b = 0 with fixed step 1/L.

    With accel=True uses FISTA momentum, restarting on objective
    increase. The prox tolerance for iterative (doubly-sparse) proximal
    maps follows the 1/t^2 schedule.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    X, y, n = problem.X, problem.y, problem.n
    L = _lipschitz(X, n)
    eta = step if step is not None else (1.0 / L if L > 0 else 1.0)
    b = np.zeros(problem.p)
    z = b.copy()
    t_mom = 1.0
    trace = [_objective(problem, norm, lam, b)]
    Xty = X.T @ y / n
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        point = z if accel else b
        grad = X.T @ (X @ point) / n - Xty
        sched = max(1e-10, proxops.inner_tolerance_schedule(it))
        cfg = proxops.ProxConfig(objective_tol=sched, feasibility_tol=sched)
        use_pairing = _iterative_norm(norm) and lam > 0
        if backtracking:
            eta_t = eta
            f_point = _objective(problem, None, 0.0, point)
            while True:
                x_in = point - eta_t * grad
                cand = proxops.prox_norm(x_in, norm, eta_t * lam, cfg)
                dv = cand - point
                f_cand = _objective(problem, None, 0.0, cand)
                if f_cand <= f_point + float(np.dot(grad, dv)) + 0.5 / eta_t * float(np.dot(dv, dv)) + 1e-4 * abs(f_point):
                    break
                eta_t *= 0.5
            b_new = cand
        else:
            eta_t = eta
            x_in = point - eta_t * grad
            b_new = proxops.prox_norm(x_in, norm, eta_t * lam, cfg)
        if not np.all(np.isfinite(b_new)):
            raise FloatingPointError("diverging iterates; reduce the step size")
        nrm = _pairing_norm_value(x_in, b_new, eta_t * lam) if use_pairing else None
        obj = _objective(problem, norm, lam, b_new, norm_value=nrm)
        if accel:
            if obj > trace[-1]:
                # momentum restart
                t_mom = 1.0
                z = b.copy()
                grad = X.T @ (X @ z) / n - Xty
                x_in = z - eta_t * grad
                b_new = proxops.prox_norm(x_in, norm, eta_t * lam, cfg)
                nrm = _pairing_norm_value(x_in, b_new, eta_t * lam) if use_pairing else None
                obj = _objective(problem, norm, lam, b_new, norm_value=nrm)
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom**2))
            z = b_new + ((t_mom - 1.0) / t_next) * (b_new - b)
            t_mom = t_next
        shift = float(np.linalg.norm(b_new - b)) / eta_t
        b = b_new
        trace.append(obj)
        if shift <= tol:
            converged = True
            break
    return _finalize(
        problem, norm, SolveResult(beta_hat=b, objective_trace=trace, iterations=it, converged=converged)
    )


def admm(
    problem: RegressionProblem,
    norm: NormDescriptor,
    lam: float,
    rho: Optional[float] = None,
    tol: float = 1e-8,
    max_iters: int = 5000,
) -> SolveResult:
    """ADMM splitting on b = z with penalty rho (default: rho = lam)."""
    if rho is None:
        rho = lam if lam > 0 else 1.0
    if rho <= 0:
        raise ValueError("rho must be positive")
    X, y, n, p = problem.X, problem.y, problem.n, problem.p
    A = X.T @ X / n + rho * np.eye(p)
    chol = scipy.linalg.cho_factor(A)
    Xty = X.T @ y / n
    z = np.zeros(p)
    w = np.zeros(p)
    trace = [_objective(problem, norm, lam, z)]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        b = scipy.linalg.cho_solve(chol, Xty + rho * (z - w))
        sched = max(1e-10, proxops.inner_tolerance_schedule(it))
        cfg = proxops.ProxConfig(objective_tol=sched, feasibility_tol=sched)
        x_in = b + w
        z_new = proxops.prox_norm(x_in, norm, lam / rho, cfg)
        primal = float(np.linalg.norm(b - z_new))
        dual = rho * float(np.linalg.norm(z_new - z))
        nrm = (_pairing_norm_value(x_in, z_new, lam / rho)
               if _iterative_norm(norm) and lam > 0 else None)
        z = z_new
        w = w + b - z
        trace.append(_objective(problem, norm, lam, z, norm_value=nrm))
        if primal <= tol and dual <= tol:
            converged = True
            break
    return _finalize(
        problem, norm, SolveResult(beta_hat=z, objective_trace=trace, iterations=it, converged=converged)
    )


def lasso_baseline(
    problem: RegressionProblem,
    lam: float,
    tol: float = 1e-10,
    max_iters: int = 20000,
    accel: bool = True,
) -> SolveResult:
    """Dedicated soft-threshold proximal-gradient path for the Lasso arm."""
    norm = NormDescriptor(kind="l1")
    return prox_gradient(problem, norm, lam, accel=accel, tol=tol, max_iters=max_iters)


def optimality_certificate(problem: RegressionProblem, norm: NormDescriptor, lam: float, b: np.ndarray) -> dict:
    """Exit check: (1/n) X'(y - Xb) should lie in lam * subdifferential."""
    g = problem.X.T @ (problem.y - problem.X @ b) / problem.n
    dual = eval_dual_norm(norm, g)
    pairing = abs(float(np.dot(g, b)) - lam * eval_norm(norm, b))
    return {"dual_norm_ratio": dual / lam if lam > 0 else np.inf, "pairing_gap": pairing}

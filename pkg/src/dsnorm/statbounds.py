"""Design-dependent regularization bounds.

The squared dual norm of each supported regularizer is a maximum of
quadratic forms theta' A theta over a finite family of PSD matrices
(the M-set). Every element here is represented by a factor U with
A = U U', which makes traces, operator norms, and Frobenius norms of
X~ A X~' computable on the small matrix U' X~' X~ U. On top of the
family sit the aggregate measures Lambda0/Lambda1/Lambda2/kappa/Lambda
driving the Hanson-Wright regularization bound, the doubly-sparse
specialization phi0/phi1/phi, lambda grid endpoints, and the error and
gain-ratio report.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from . import kdnorm
from .vecnorms import NormDescriptor, UnsupportedNorm, _as_vector, eval_dual_norm

ENUM_GUARD = 10**6


@dataclass
class MSet:
    """Finite family of PSD matrices A = U U' realizing the squared dual norm.

    elements holds the factors U (p x r arrays) or, past the enumeration
    guard, a zero-argument callable returning a fresh factor iterator.
    use_abs marks families exact on magnitudes only (the sign orbit is
    folded in by evaluating quadratic forms at |theta|).
    """

    kind: str
    p: int
    elements: object
    count: Optional[int]
    cardinality_bound: float
    use_abs: bool = False

    def iter_factors(self) -> Iterator[np.ndarray]:
        if callable(self.elements):
            return self.elements()
        return iter(self.elements)

    def quad(self, theta) -> float:
        t = np.abs(_as_vector(theta)) if self.use_abs else _as_vector(theta)
        return max(float(np.sum((U.T @ t) ** 2)) for U in self.iter_factors())

    def matrices(self) -> Iterator[np.ndarray]:
        for U in self.iter_factors():
            yield U @ U.T


def _set_partitions(items: tuple, d: int) -> Iterator[list]:
    """All partitions of items into exactly d non-empty unordered blocks."""
    n = len(items)
    if d == 1:
        yield [list(items)]
        return
    if d == n:
        yield [[x] for x in items]
        return
    first, rest = items[0], items[1:]
    # first stays alone in a new block
    for part in _set_partitions(rest, d - 1):
        yield [[first]] + part
    # first joins an existing block
    for part in _set_partitions(rest, d):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def _kd_factor_count(p: int, k: int, d: int) -> int:
    stirling = sum(
        (-1) ** j * math.comb(d, j) * (d - j) ** k for j in range(d + 1)
    ) // math.factorial(d)
    return math.comb(p, k) * stirling * 2 ** (k - d)


def _kd_factors(p: int, k: int, d: int) -> Iterator[np.ndarray]:
    """Signed block-averaging factors over all supports and groupings."""
    for sup in itertools.combinations(range(p), k):
        for blocks in _set_partitions(sup, d):
            sign_spaces = [itertools.product((1.0, -1.0), repeat=len(b) - 1) for b in blocks]
            for signs in itertools.product(*sign_spaces):
                U = np.zeros((p, d))
                for t, (blk, sg) in enumerate(zip(blocks, signs)):
                    s = np.concatenate([[1.0], np.asarray(sg)])
                    U[list(blk), t] = s / np.sqrt(len(blk))
                yield U


def build_mset(norm: NormDescriptor, p: int, groups=None) -> MSet:
    """Variational family for the squared dual norm of the given kind.

    groups (list of index tuples) selects the non-overlapping group-l1
    family regardless of norm. KD families past the enumeration guard
    come back as a lazy factor stream.
    """
    if groups is not None:
        factors = [np.eye(p)[:, list(g)] for g in groups]
        return MSet(kind="group_l1", p=p, elements=factors, count=len(groups),
                    cardinality_bound=float(len(groups)))
    kind = norm.kind
    if kind == "ksupport" or (kind == "kd" and norm.d == norm.k):
        k = norm.k
        count = math.comb(p, k)
        if count > ENUM_GUARD:
            raise kdnorm.GuardExceeded("k-support M-set guard exceeded")
        eye = np.eye(p)
        factors = [eye[:, list(s)] for s in itertools.combinations(range(p), k)]
        return MSet(kind="ksupport", p=p, elements=factors, count=count,
                    cardinality_bound=float(count))
    if kind == "kd_dual":
        if norm.d != 1:
            raise UnsupportedNorm("kd_dual M-set available for d=1 only")
        k = norm.k
        factors = [np.sqrt(k) * np.eye(p)[:, [i]] for i in range(p)]
        factors.append(np.full((p, 1), 1.0 / np.sqrt(k)))
        return MSet(kind="kd_dual", p=p, elements=factors, count=p + 1,
                    cardinality_bound=float(p + 1), use_abs=True)
    if kind == "kd":
        k, d = norm.k, norm.d
        count = _kd_factor_count(p, k, d)
        bound = kdnorm.bd_size_bound(p, k, d)
        if count > ENUM_GUARD:
            return MSet(kind="kd", p=p, elements=lambda: _kd_factors(p, k, d),
                        count=None, cardinality_bound=bound)
        return MSet(kind="kd", p=p, elements=list(_kd_factors(p, k, d)),
                    count=count, cardinality_bound=bound)
    raise UnsupportedNorm(f"no M-set for kind {kind!r}")


@dataclass(frozen=True)
class AggregateMeasures:
    lambda0: float
    lambda1: float
    lambda2: float
    kappa: float
    Lambda: float
    c_hw: float
    p0: float
    eta: float
    mset_count: Optional[int] = None
    mset_bound: Optional[float] = None


def _sigma_matrix(sigma_cov, n: int) -> np.ndarray:
    if sigma_cov is None:
        return np.eye(n)
    if np.isscalar(sigma_cov):
        if sigma_cov < 0:
            raise ValueError("scalar noise variance must be nonnegative")
        return float(sigma_cov) * np.eye(n)
    S = np.asarray(sigma_cov, dtype=float)
    if S.shape != (n, n) or not np.allclose(S, S.T, atol=1e-10):
        raise ValueError("sigma must be a symmetric n x n matrix")
    if np.min(np.linalg.eigvalsh(S)) < -1e-10:
        raise ValueError("sigma must be positive semidefinite")
    return S


def aggregate_measures(X, sigma_cov, mset: MSet, eta: float = 1.0,
                       p0: float = 0.05, c_hw: float = 2.1) -> AggregateMeasures:
    """Lambda0/1/2, kappa and the assembled Lambda for a design and M-set.

    With X~ = Sigma^{1/2} X and G = X~'X~, each element contributes the
    small matrix B = U'GU: the trace, largest eigenvalue, and Frobenius
    norm of X~ A X~' equal those of B. kappa uses the analytic
    cardinality bound (the guarantee survives overcounting; the true count
    is reported alongside when enumerated).
    """
    if not (0 < p0 < 0.5):
        raise ValueError("p0 must lie in (0, 1/2)")
    if c_hw <= 2:
        raise ValueError("c_hw must exceed 2")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    G = X.T @ _sigma_matrix(sigma_cov, n) @ X
    l0 = l1 = l2 = 0.0
    for U in mset.iter_factors():
        B = U.T @ G @ U
        l0 = max(l0, float(np.trace(B)) / n)
        if B.shape[0] == 1:
            top = float(B[0, 0])
            fro = abs(top)
        else:
            evals = np.linalg.eigvalsh(B)
            top = float(evals[-1])
            fro = float(np.linalg.norm(B))
        l1 = max(l1, top / n)
        l2 = max(l2, fro / n)
    kappa = 0.5 * c_hw * np.log(mset.cardinality_bound / p0)
    Lam = np.sqrt((l0 + 2.0 * eta**2 * max(l2 * np.sqrt(kappa), l1 * kappa)) / n)
    return AggregateMeasures(lambda0=l0, lambda1=l1, lambda2=l2, kappa=float(kappa),
                             Lambda=float(Lam), c_hw=c_hw, p0=p0, eta=eta,
                             mset_count=mset.count, mset_bound=mset.cardinality_bound)


@dataclass(frozen=True)
class KdPhiMeasures:
    phi0: float
    phi1: float
    phi: float
    exact: bool
    phi1_upper: Optional[float] = None


def _greedy_subset(score: Callable[[list], float], p: int, size: int) -> float:
    best = 0.0
    J: list = []
    for _ in range(size):
        gains = [(score(J + [j]), j) for j in range(p) if j not in J]
        val, j = max(gains)
        J.append(j)
        best = max(best, val)
    return best


def kd_phi_measures(X, sigma_cov, k: int, d: int, p0: float = 0.05,
                    c_hw: float = 2.1, mode: str = "exact") -> KdPhiMeasures:
    """Column-aggregation and restricted operator-norm design measures.

    phi0 maximizes ||Sigma^{1/2} X_J 1||^2 / (n|J|) over |J| <= k-d+1,
    phi1 maximizes the squared operator norm of Sigma^{1/2} X_J / sqrt(n)
    over |J| <= k. Exact mode enumerates subsets (guarded); greedy mode
    reports a forward-selection lower bound plus the spectral upper
    bound k * lambda_max(G/n) for phi1.
    """
    if mode not in ("exact", "greedy"):
        raise ValueError(f"unknown mode {mode!r}")
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    kdnorm._check_kd(p, k, d)
    G = X.T @ _sigma_matrix(sigma_cov, n) @ X

    def score0(J):
        sub = G[np.ix_(J, J)]
        return float(np.sum(sub)) / (n * len(J))

    def score1(J):
        sub = G[np.ix_(J, J)]
        return float(np.linalg.eigvalsh(sub)[-1]) / n

    m0 = k - d + 1
    if mode == "exact":
        if math.comb(p, k) > ENUM_GUARD:
            raise kdnorm.GuardExceeded("subset enumeration guard exceeded")
        phi0 = max(score0(list(J)) for r in range(1, m0 + 1)
                   for J in itertools.combinations(range(p), r))
        phi1 = max(score1(list(J)) for J in itertools.combinations(range(p), k))
        exact = True
        phi1_upper = None
    else:
        phi0 = _greedy_subset(score0, p, m0)
        phi1 = _greedy_subset(score1, p, k)
        exact = False
        phi1_upper = k * float(np.linalg.eigvalsh(G)[-1]) / n
    log_term = k * np.log(2.0 * np.e * p * d / k) + np.log(1.0 / p0)
    phi = np.sqrt((d * phi0 + c_hw * min(d * phi0, phi1) * log_term) / n)
    return KdPhiMeasures(phi0=float(phi0), phi1=float(phi1), phi=float(phi),
                         exact=exact, phi1_upper=phi1_upper)


def lambda_bounds(problem, norm: NormDescriptor, k: Optional[int] = None,
                  d: Optional[int] = None, p0: float = 0.05,
                  c_hw: float = 2.1) -> tuple:
    """Recommended lambda grid endpoints (lower bound, kill-switch upper)."""
    upper = eval_dual_norm(norm, problem.X.T @ problem.y) / problem.n
    if norm.kind in ("kd", "ksupport") or (k is not None and d is not None):
        kk = k if k is not None else norm.k
        dd = d if d is not None else (norm.d if norm.kind == "kd" else norm.k)
        mode = "exact" if math.comb(problem.p, kk) <= ENUM_GUARD else "greedy"
        lower = kd_phi_measures(problem.X, problem.sigma_cov, kk, dd,
                                p0=p0, c_hw=c_hw, mode=mode).phi
    else:
        mset = build_mset(norm, problem.p)
        lower = aggregate_measures(problem.X, problem.sigma_cov, mset,
                                   p0=p0, c_hw=c_hw).Lambda
    return float(lower), float(upper)


def error_bound_report(lam: float, norm_beta_star: float, phi: float,
                       alpha: float, theta: Optional[float] = None,
                       c_re: float = 1.0, lambda_min: Optional[float] = None,
                       k: Optional[int] = None, p: Optional[int] = None) -> dict:
    """Prediction/estimation bounds implied by (lam, phi, alpha).

    With theta (the measured dual norm of (1/n) X' eps) supplied and
    lam > theta, the refined triple replaces the factor-3 bounds.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    psi = 2.0 * phi
    report = {
        "prediction_bound": 3.0 * lam * norm_beta_star,
        "psi_surrogate": psi,
        "estimation_bound_norm": 3.0 * lam * psi**2 / alpha,
        "estimation_bound_l2": 3.0 * lam * psi / alpha,
    }
    if theta is not None:
        if lam <= theta:
            raise ValueError("refined bounds need lam > theta")
        report["refined_prediction_bound"] = 2.0 * (lam + theta) * norm_beta_star
        report["refined_estimation_bound_norm"] = (
            2.0 * phi**2 / alpha * lam**2 * (lam + theta) / (lam - theta) ** 2
        )
        report["refined_estimation_bound_l2"] = (
            2.0 * phi / alpha * lam * (lam + theta) / (lam - theta)
        )
    if lambda_min is not None and k is not None and p is not None:
        report["re_sample_size"] = c_re * phi**4 * k * np.log(p) / lambda_min**2
    return report


def gain_ratio_formula(k: int, d: int, p: int, norm_kd_beta: float,
                       norm_l1_beta: float, c_gain: float = 1.0) -> float:
    """Predicted err_DS / err_Lasso ratio up to the unnamed constant."""
    return (c_gain * np.sqrt(k - k * np.log(k / d) / np.log(p))
            * norm_kd_beta / norm_l1_beta)


def re_alpha_estimate(X, norm: NormDescriptor, phi: float, factor: float = 2.0,
                      n_dirs: int = 2000, seed: int = 0) -> float:
    """Empirical restricted-eigenvalue lower-bound estimate.

    Minimum Rayleigh quotient of X'X/n over sampled directions inside
    the cone {||v|| <= factor * phi * ||v||_2}; a sampling estimate,
    not the true infimum.
    """
    from .vecnorms import eval_norm

    X = np.asarray(X, dtype=float)
    n, p = X.shape
    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(n_dirs):
        v = rng.standard_normal(p)
        # push toward sparse directions, where the cone constraint binds
        if rng.random() < 0.5:
            mask = rng.random(p) < 0.3
            v = v * mask
            if not np.any(v):
                continue
        v /= np.linalg.norm(v)
        if eval_norm(norm, v) <= factor * phi:
            best = min(best, float(np.sum((X @ v) ** 2)) / n)
    return best if np.isfinite(best) else 0.0

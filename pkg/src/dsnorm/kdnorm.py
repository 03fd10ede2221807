"""Doubly-sparse norm engine.

Projection onto S_{k,d} (top-k magnitudes taking at most d distinct
values), the consecutive-partition dynamic program behind the dual
norm, guarded brute-force oracles, enumeration of the block-diagonal
averaging family BD(k,d), and iterative evaluation of the primal norm.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .vecnorms import SortContext, _as_vector, sort_context


class ParameterError(ValueError):
    pass


class GuardExceeded(ValueError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, message, gap=None, value=None):
        super().__init__(message)
        self.gap = gap
        self.value = value


def _check_kd(p: int, k: int, d: int):
    if not (1 <= d <= k <= p):
        raise ParameterError(f"need 1 <= d <= k <= p, got k={k}, d={d}, p={p}")


@dataclass(frozen=True)
class IntervalPartition:
    """d consecutive non-empty intervals covering {1..k}.

    Stored via boundaries 0 = b_0 < b_1 < ... < b_d = k; interval t is
    the half-open index range [b_{t-1}, b_t) in 0-based terms.
    """

    boundaries: tuple

    def __post_init__(self):
        b = self.boundaries
        if len(b) < 2 or b[0] != 0 or any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise ParameterError(f"invalid partition boundaries {b}")

    @property
    def d(self) -> int:
        return len(self.boundaries) - 1

    @property
    def k(self) -> int:
        return self.boundaries[-1]

    def intervals(self):
        b = self.boundaries
        return [range(b[t], b[t + 1]) for t in range(self.d)]


@dataclass(frozen=True)
class ProjectionOutcome:
    projected: np.ndarray
    sq_dual_norm: float
    support: tuple
    partition: IntervalPartition


@dataclass(frozen=True)
class DpTable:
    nu: np.ndarray  # (k+1, d+1), NaN outside the feasible trapezoid
    argmax: np.ndarray  # optimal split m for each (s, e); 0 where undefined


@dataclass(frozen=True)
class BlockDiagElement:
    """Canonical representative of BD(k,d): ascending support, consecutive
    blocks over the listed support, positive signs."""

    support: tuple
    blocks: IntervalPartition
    signs: tuple

    def matrix(self, p: int) -> np.ndarray:
        A = np.zeros((p, p))
        sup = np.asarray(self.support)
        sg = np.asarray(self.signs, dtype=float)
        for iv in self.blocks.intervals():
            idx = sup[list(iv)]
            s = sg[list(iv)]
            q = len(idx)
            A[np.ix_(idx, idx)] += np.outer(s, s) / q
        return A


def _dp_sorted(bar: np.ndarray, k: int, d: int) -> DpTable:
    """Max over consecutive partitions of sum (interval sum)^2 / length.

    nu[s, e] is the best value for the first s sorted entries split into
    e intervals, defined on the trapezoid e <= s <= k - d + e. Ties in
    the inner argmax go to the lowest split index.
    """
    prefix = np.concatenate([[0.0], np.cumsum(bar[:k])])
    nu = np.full((k + 1, d + 1), np.nan)
    arg = np.zeros((k + 1, d + 1), dtype=int)
    nu[0, 0] = 0.0
    for e in range(1, d + 1):
        for s in range(e, k - d + e + 1):
            best = -np.inf
            best_m = 0
            for m in range(e, s + 1):
                prev = nu[m - 1, e - 1]
                if np.isnan(prev):
                    continue
                seg = prefix[s] - prefix[m - 1]
                val = prev + seg * seg / (s - m + 1)
                if val > best:
                    best = val
                    best_m = m
            nu[s, e] = best
            arg[s, e] = best_m
    return DpTable(nu=nu, argmax=arg)


def _recover_partition(table: DpTable, k: int, d: int) -> IntervalPartition:
    bounds = [k]
    s, e = k, d
    while e > 0:
        m = int(table.argmax[s, e])
        bounds.append(m - 1)
        s, e = m - 1, e - 1
    return IntervalPartition(boundaries=tuple(reversed(bounds)))


def project_skd(theta, k: int, d: int) -> ProjectionOutcome:
    """Projection of theta onto S_{k,d}.

    Sort by magnitude, keep the top k, run the interval DP on the
    sorted top-k, replace every interval with its mean, then restore
    order and signs. The squared length of the result equals the DP
    optimum and the squared dual norm.
    """
    t = _as_vector(theta)
    _check_kd(t.size, k, d)
    sc = sort_context(t)
    table = _dp_sorted(sc.sorted_abs, k, d)
    part = _recover_partition(table, k, d)
    sorted_proj = np.zeros(t.size)
    for iv in part.intervals():
        idx = list(iv)
        sorted_proj[idx] = np.mean(sc.sorted_abs[idx])
    projected = sc.restore(sorted_proj)
    return ProjectionOutcome(
        projected=projected,
        sq_dual_norm=float(table.nu[k, d]),
        support=tuple(int(i) for i in sc.permutation[:k]),
        partition=part,
    )


def dual_norm_kd(theta, k: int, d: int) -> float:
    t = _as_vector(theta)
    _check_kd(t.size, k, d)
    sc = sort_context(t)
    table = _dp_sorted(sc.sorted_abs, k, d)
    return float(np.sqrt(max(table.nu[k, d], 0.0)))


def consecutive_partitions(k: int, d: int) -> Iterator[IntervalPartition]:
    for splits in itertools.combinations(range(1, k), d - 1):
        yield IntervalPartition(boundaries=(0,) + splits + (k,))


def dual_norm_bruteforce(theta, k: int, d: int) -> float:
    """Reference oracle: enumerate supports and consecutive partitions."""
    t = _as_vector(theta)
    p = t.size
    _check_kd(p, k, d)
    if p > 14 or math.comb(k - 1, d - 1) * math.comb(p, k) > 10**6:
        raise GuardExceeded("brute-force size guard exceeded")
    best = 0.0
    for sup in itertools.combinations(range(p), k):
        mags = np.sort(np.abs(t[list(sup)]))[::-1]
        prefix = np.concatenate([[0.0], np.cumsum(mags)])
        for part in consecutive_partitions(k, d):
            val = 0.0
            b = part.boundaries
            for i in range(d):
                seg = prefix[b[i + 1]] - prefix[b[i]]
                val += seg * seg / (b[i + 1] - b[i])
            best = max(best, val)
    return float(np.sqrt(best))


def enumerate_bd(p: int, k: int, d: int) -> Iterator[BlockDiagElement]:
    """Canonical elements of BD(k,d), one per (support, partition)."""
    _check_kd(p, k, d)
    count = math.comb(p, k) * math.comb(k - 1, d - 1)
    if count > 10**6:
        raise GuardExceeded("BD enumeration guard exceeded")
    for sup in itertools.combinations(range(p), k):
        for part in consecutive_partitions(k, d):
            yield BlockDiagElement(support=sup, blocks=part, signs=(1,) * k)


def bd_count(p: int, k: int, d: int) -> int:
    return math.comb(p, k) * math.comb(k - 1, d - 1)


def bd_size_bound(p: int, k: int, d: int) -> float:
    return (2 * math.e * p * d / k) ** k


def norm_k1_closed_form(beta, k: int) -> float:
    b = _as_vector(beta)
    return float(max(np.sum(np.abs(b)) / np.sqrt(k), np.sqrt(k) * np.max(np.abs(b))))


def check_membership_skd(beta, k: int, d: int, tol: float = 0.0) -> bool:
    b = _as_vector(beta)
    if tol < 0:
        raise ParameterError("tol must be nonnegative")
    nnz = int(np.sum(np.abs(b) > tol))
    if nnz > k:
        return False
    bb = np.sort(np.abs(b))[::-1][: min(k, b.size)]
    distinct = 1
    for i in range(1, bb.size):
        if bb[i - 1] - bb[i] > tol:
            distinct += 1
    return distinct <= d


def eval_norm_kd(beta, k: int, d: int, tol: float = 1e-8, max_iters: int = 10**4) -> float:
    """Primal doubly-sparse norm by projected ascent over the dual ball.

    Maximizes <beta, theta> over ||theta||* <= 1 with Polyak-style steps
    (target from the k-square-1 closed form, which upper-bounds the norm
    since the primal norm is nonincreasing in d) and a best-iterate rule.
    The stop rule is a certificate: at a projected point u+ obtained from
    u, every ball point z satisfies
        <beta, z - u+> <= ||u+ - u|| * diam / eta,
    so the achieved objective is within that bound of the supremum.
    """
    b = _as_vector(beta)
    p = b.size
    _check_kd(p, k, d)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    bnorm2 = float(np.linalg.norm(b))
    if bnorm2 == 0.0:
        return 0.0
    from .proxops import ProxConfig, _project_sorted_dual_ball

    sc = sort_context(b)
    bar = sc.sorted_abs
    diam = 2.0 * np.sqrt(p / k)
    upper = norm_k1_closed_form(b, k)
    cfg = ProxConfig(feasibility_tol=min(1e-12, tol * 1e-4), objective_tol=min(1e-12, tol * 1e-4))
    u = bar / dual_norm_kd(b, k, d)  # feasible start aligned with beta
    best = float(np.dot(bar, u))
    gap = np.inf
    floor = 0.1 * diam / bnorm2
    for _ in range(max_iters):
        eta = max((upper - best) / bnorm2**2, floor)
        u_next = _project_sorted_dual_ball(u + eta * bar, k, d, cfg)
        f = float(np.dot(bar, u_next))
        improved = f > best + 0.1 * tol
        best = max(best, f)
        resid = float(np.linalg.norm(u_next - u))
        gap = f + resid * diam / eta - best
        u = u_next
        if gap <= tol:
            return best
        if not improved:
            # stalled near the optimal face: longer steps shrink the
            # movement certificate without hurting the best iterate
            floor = min(2.0 * floor, 1e4 * diam / bnorm2)
    raise NonConvergence(
        f"eval_norm_kd did not reach tol={tol} in {max_iters} iterations", gap=gap, value=best
    )

"""Closed-form norm catalog.

Evaluation and dual evaluation for the baseline norms (l1, l2, linf,
weighted l1 / linf, ordered weighted l1, max of weighted l1), plus the
sorting/sign bookkeeping that every other module relies on and a
finite description of subdifferentials at nonzero points.

Doubly-sparse ("kd") kinds are part of the same descriptor type but
their evaluation is delegated to :mod:`dsnorm.kdnorm`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import json

import numpy as np

# absolute tolerance used for floating set-membership style comparisons
# (active-branch detection, tie detection, subdifferential membership)
TOL = 1e-12

KINDS = (
    "l1",
    "l2",
    "linf",
    "weighted_l1",
    "weighted_linf",
    "owl",
    "ksupport",
    "kd",
    "kd_dual",
    "max_weighted_l1",
)


class DimensionMismatch(ValueError):
    pass


class UnsupportedNorm(ValueError):
    pass


def _as_vector(beta) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    if b.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("non-finite input")
    return b


@dataclass(frozen=True)
class NormDescriptor:
    """Tagged description of a norm, used to dispatch eval/dual/prox.

    weights are sorted descending for "owl" and strictly positive for the
    weighted kinds; "kd"/"ksupport"/"kd_dual" carry (k, d) instead.
    """

    kind: str
    weights: Optional[tuple] = None
    k: Optional[int] = None
    d: Optional[int] = None
    weight_family: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedNorm(f"unknown norm kind {self.kind!r}")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
            w = np.asarray(self.weights)
            if self.kind == "owl":
                if np.any(np.diff(w) > 0) or w[0] <= 0 or np.any(w < 0):
                    raise ValueError("owl weights must be nonincreasing, w_1 > 0, w >= 0")
            elif self.kind in ("weighted_l1", "weighted_linf"):
                if np.any(w <= 0):
                    raise ValueError("weighted norms need strictly positive weights")
        if self.weight_family is not None:
            fam = tuple(tuple(float(x) for x in w) for w in self.weight_family)
            object.__setattr__(self, "weight_family", fam)
            for w in fam:
                if any(x <= 0 for x in w):
                    raise ValueError("max_weighted_l1 weights must be positive")
        if self.kind in ("kd", "kd_dual", "ksupport"):
            k = self.k
            d = self.d if self.kind != "ksupport" else self.k
            if self.kind == "ksupport":
                object.__setattr__(self, "d", self.k)
            if k is None or k < 1:
                raise ValueError("k must be a positive integer")
            if d is None or not (1 <= d <= k):
                raise ValueError("need 1 <= d <= k")

    # -- serialization ------------------------------------------------

    def to_json(self) -> str:
        payload = {"kind": self.kind}
        if self.weights is not None:
            payload["weights"] = list(self.weights)
        if self.k is not None:
            payload["k"] = self.k
        if self.d is not None and self.kind != "ksupport":
            payload["d"] = self.d
        if self.weight_family is not None:
            payload["weight_family"] = [list(w) for w in self.weight_family]
        return json.dumps(payload)

    @staticmethod
    def from_json(text: str) -> "NormDescriptor":
        payload = json.loads(text)
        return NormDescriptor(
            kind=payload["kind"],
            weights=payload.get("weights"),
            k=payload.get("k"),
            d=payload.get("d"),
            weight_family=payload.get("weight_family"),
        )


@dataclass(frozen=True)
class SortContext:
    """Signs and sorting permutation of a vector.

    ``permutation[r]`` is the original index holding the r-th largest
    magnitude; ties are broken by ascending original index and
    sign(0) is fixed to +1 so the context is deterministic and the
    round trip is exact.
    """

    sign_pattern: np.ndarray
    permutation: np.ndarray
    sorted_abs: np.ndarray

    def restore(self, sorted_values: np.ndarray) -> np.ndarray:
        """Map a vector living in sorted-magnitude coordinates back."""
        out = np.empty_like(np.asarray(sorted_values, dtype=float))
        out[self.permutation] = sorted_values
        return out * self.sign_pattern


def sort_context(beta) -> SortContext:
    b = _as_vector(beta)
    signs = np.where(b < 0, -1.0, 1.0)
    perm = np.argsort(-np.abs(b), kind="stable")
    return SortContext(sign_pattern=signs, permutation=perm, sorted_abs=np.abs(b)[perm])


# ---------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------


def _check_dim(norm: NormDescriptor, b: np.ndarray):
    p = b.size
    if norm.weights is not None and len(norm.weights) != p:
        raise DimensionMismatch("weight length does not match vector length")
    if norm.weight_family is not None and any(len(w) != p for w in norm.weight_family):
        raise DimensionMismatch("weight family length does not match vector length")
    if norm.k is not None and norm.k > p:
        raise DimensionMismatch("k exceeds the vector length")


def ksupport_norm(beta, k: int) -> float:
    """k-support norm via the standard closed form.

    ||b||^2 = sum_{i<k-r} bb_i^2 + (sum_{i>=k-r} bb_i)^2/(r+1) for the
    unique r in {0,...,k-1} with bb_{k-r-1} > (1/(r+1)) sum_{i>=k-r} bb_i
    >= bb_{k-r} (bb = sorted magnitudes, bb_0 = +inf convention).
    """
    b = _as_vector(beta)
    bb = np.sort(np.abs(b))[::-1]
    p = b.size
    if k >= p:
        return float(np.linalg.norm(b))
    tail = np.concatenate([np.cumsum(bb[::-1])[::-1], [0.0]])  # tail[i] = sum_{j>=i} bb_j
    for r in range(k):
        t = tail[k - r - 1] / (r + 1)
        lo = bb[k - r - 1]
        hi = bb[k - r - 2] if k - r - 2 >= 0 else np.inf
        if lo <= t <= hi + TOL:
            head = float(np.sum(bb[: k - r - 1] ** 2))
            return float(np.sqrt(head + tail[k - r - 1] ** 2 / (r + 1)))
    # numerically degenerate ties: fall back to the last split
    head = float(np.sum(bb[:0] ** 2))
    return float(np.sqrt(head + tail[0] ** 2 / k))


def eval_norm(norm: NormDescriptor, beta) -> float:
    b = _as_vector(beta)
    _check_dim(norm, b)
    kind = norm.kind
    if kind == "l1":
        return float(np.sum(np.abs(b)))
    if kind == "l2":
        return float(np.linalg.norm(b))
    if kind == "linf":
        return float(np.max(np.abs(b))) if b.size else 0.0
    if kind == "weighted_l1":
        return float(np.dot(norm.weights, np.abs(b)))
    if kind == "weighted_linf":
        return float(np.max(np.abs(b) / np.asarray(norm.weights)))
    if kind == "owl":
        bb = np.sort(np.abs(b))[::-1]
        return float(np.dot(norm.weights, bb))
    if kind == "max_weighted_l1":
        return float(max(np.dot(w, np.abs(b)) for w in norm.weight_family))
    if kind == "ksupport":
        return ksupport_norm(b, norm.k)
    if kind == "kd_dual":
        # dual of the k-square-1 norm: (1/sqrt k) * sum of top-k magnitudes
        bb = np.sort(np.abs(b))[::-1]
        return float(np.sum(bb[: norm.k]) / np.sqrt(norm.k))
    if kind == "kd":
        from . import kdnorm

        if norm.d == 1:
            return kdnorm.norm_k1_closed_form(b, norm.k)
        if norm.d == norm.k:
            return ksupport_norm(b, norm.k)
        return kdnorm.eval_norm_kd(b, norm.k, norm.d)
    raise UnsupportedNorm(kind)


def eval_dual_norm(norm: NormDescriptor, theta) -> float:
    t = _as_vector(theta)
    _check_dim(norm, t)
    kind = norm.kind
    if kind == "l1":
        return float(np.max(np.abs(t))) if t.size else 0.0
    if kind == "l2":
        return float(np.linalg.norm(t))
    if kind == "linf":
        return float(np.sum(np.abs(t)))
    if kind == "weighted_l1":
        return float(np.max(np.abs(t) / np.asarray(norm.weights)))
    if kind == "weighted_linf":
        return float(np.dot(norm.weights, np.abs(t)))
    if kind == "owl":
        w = np.asarray(norm.weights)
        tt = np.sort(np.abs(t))[::-1]
        cw = np.cumsum(w)
        ct = np.cumsum(tt)
        mask = cw > 0
        return float(np.max(ct[mask] / cw[mask]))
    if kind == "max_weighted_l1":
        return _max_wl1_dual(norm, t)
    if kind == "ksupport":
        tt = np.sort(np.abs(t))[::-1]
        return float(np.linalg.norm(tt[: norm.k]))
    if kind == "kd_dual":
        # dual of the dual: the k-square-1 norm itself
        k = norm.k
        return float(max(np.sum(np.abs(t)) / np.sqrt(k), np.sqrt(k) * np.max(np.abs(t))))
    if kind == "kd":
        from . import kdnorm

        return kdnorm.dual_norm_kd(t, norm.k, norm.d)
    raise UnsupportedNorm(kind)


def _max_wl1_dual(norm: NormDescriptor, theta: np.ndarray) -> float:
    """Support function of the intersection of the weighted l1 balls.

    The unit ball of a max of norms is the intersection of the unit
    balls, so the dual norm is a small LP: maximize <|theta|, x> over
    x >= 0 with W x <= 1 rowwise.
    """
    from scipy.optimize import linprog

    a = np.abs(theta)
    W = np.asarray(norm.weight_family, dtype=float)
    res = linprog(-a, A_ub=W, b_ub=np.ones(W.shape[0]), bounds=(0, None), method="highs")
    if not res.success:  # pragma: no cover - tiny LPs should not fail
        raise RuntimeError(f"dual-norm LP failed: {res.message}")
    return float(-res.fun)


# ---------------------------------------------------------------------
# subdifferentials
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class GroupSum:
    """Constraint sum_i weights_i * |g_i| (= or <=) target over ``indices``."""

    indices: tuple
    weights: tuple
    target: float
    equality: bool = True


@dataclass(frozen=True)
class SubdiffDescription:
    """Finite description of the subdifferential at a nonzero point.

    Membership of a candidate g is decidable from the fields alone:
    fixed coordinates, per-coordinate magnitude boxes, (weighted)
    group-sum constraints on |g|, prefix constraints on the sorted
    magnitudes of g, plus the sign/order coupling flags.
    """

    dim: int
    fixed_coords: dict = field(default_factory=dict)
    box_coords: dict = field(default_factory=dict)
    group_sum_constraints: tuple = ()
    prefix_constraints: tuple = ()  # (i, bound): sum of i largest |g| <= bound
    sign_coupling: bool = False
    order_coupling: bool = False
    beta: Optional[np.ndarray] = None

    def contains(self, g, tol: float = 1e-9) -> bool:
        g = _as_vector(g)
        if g.size != self.dim:
            return False
        for i, v in self.fixed_coords.items():
            if abs(g[i] - v) > tol:
                return False
        for i, bound in self.box_coords.items():
            if abs(g[i]) > bound + tol:
                return False
        for c in self.group_sum_constraints:
            s = sum(w * abs(g[i]) for i, w in zip(c.indices, c.weights))
            if c.equality and abs(s - c.target) > tol:
                return False
            if not c.equality and s > c.target + tol:
                return False
        gg = np.sort(np.abs(g))[::-1]
        cg = np.cumsum(gg)
        for i, bound in self.prefix_constraints:
            if cg[i - 1] > bound + tol:
                return False
        if self.sign_coupling and self.beta is not None:
            if np.any(g * self.beta < -tol):
                return False
        if self.order_coupling and self.beta is not None:
            bb = np.abs(self.beta)
            ga = np.abs(g)
            for i in range(self.dim):
                for j in range(self.dim):
                    if bb[i] > bb[j] + tol and ga[i] < ga[j] - tol:
                        return False
        return True


class FullDualBall:
    """Distinguished subdifferential at beta = 0: the whole dual unit ball."""

    def __init__(self, norm: NormDescriptor):
        self.norm = norm

    def contains(self, g, tol: float = 1e-9) -> bool:
        return eval_dual_norm(self.norm, g) <= 1.0 + tol


def subdifferential(norm: NormDescriptor, beta):
    """Subdifferential description at beta (closed-form kinds only).

    Returns a FullDualBall when beta = 0.
    """
    b = _as_vector(beta)
    _check_dim(norm, b)
    if np.all(b == 0):
        return FullDualBall(norm)
    kind = norm.kind
    p = b.size
    if kind == "l1" or kind == "weighted_l1":
        w = np.asarray(norm.weights) if kind == "weighted_l1" else np.ones(p)
        fixed = {i: float(w[i] * np.sign(b[i])) for i in range(p) if b[i] != 0}
        box = {i: float(w[i]) for i in range(p) if b[i] == 0}
        return SubdiffDescription(dim=p, fixed_coords=fixed, box_coords=box, beta=b)
    if kind == "l2":
        u = b / np.linalg.norm(b)
        return SubdiffDescription(dim=p, fixed_coords={i: float(u[i]) for i in range(p)}, beta=b)
    if kind == "linf" or kind == "weighted_linf":
        w = np.asarray(norm.weights) if kind == "weighted_linf" else np.ones(p)
        vals = np.abs(b) / w
        fmax = np.max(vals)
        T = tuple(i for i in range(p) if vals[i] >= fmax - TOL * max(1.0, fmax))
        fixed = {i: 0.0 for i in range(p) if i not in T}
        gs = GroupSum(indices=T, weights=tuple(float(w[i]) for i in T), target=1.0)
        return SubdiffDescription(
            dim=p, fixed_coords=fixed, group_sum_constraints=(gs,), sign_coupling=True, beta=b
        )
    if kind == "owl":
        w = np.asarray(norm.weights)
        sc = sort_context(b)
        bb = sc.sorted_abs
        # tie groups of the sorted magnitudes (distinct nonzero values)
        groups = []
        start = 0
        while start < p and bb[start] > 0:
            stop = start
            while stop + 1 < p and abs(bb[stop + 1] - bb[start]) <= TOL * max(1.0, bb[start]) and bb[stop + 1] > 0:
                stop += 1
            groups.append((start, stop))
            start = stop + 1
        gsums = []
        for a, z in groups:
            idx = tuple(int(sc.permutation[r]) for r in range(a, z + 1))
            gsums.append(GroupSum(indices=idx, weights=(1.0,) * len(idx), target=float(np.sum(w[a : z + 1]))))
        zero_idx = tuple(int(i) for i in range(p) if b[i] == 0)
        if zero_idx:
            a = p - len(zero_idx)
            gsums.append(
                GroupSum(
                    indices=zero_idx,
                    weights=(1.0,) * len(zero_idx),
                    target=float(np.sum(w[a:])),
                    equality=False,
                )
            )
        prefixes = tuple((i + 1, float(np.sum(w[: i + 1]))) for i in range(p))
        return SubdiffDescription(
            dim=p,
            group_sum_constraints=tuple(gsums),
            prefix_constraints=prefixes,
            sign_coupling=True,
            order_coupling=True,
            beta=b,
        )
    raise UnsupportedNorm(f"no closed-form subdifferential for kind {kind!r}")

"""Relative-diameter computations.

phi(beta; ||.||) is the Hausdorff distance between the dual unit ball
and the subdifferential at beta. Because the subdifferential is a face
of the dual ball, this reduces to

    phi = max_{z in ext(B*)} dist(z, subdiff(beta)),

so the module provides extreme-point enumerations, exact formulas for
the catalogued norms, upper bounds for the ordered weighted l1 family,
a Wolfe nearest-point solver for the inner distances, and directional
estimators for the restricted norm compatibility psi over the
regularized error sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import isotonic_regression

from .vecnorms import (
    NormDescriptor,
    UnsupportedNorm,
    _as_vector,
    eval_norm,
    sort_context,
)

TOL = 1e-12


@dataclass
class RelDiamReport:
    value: float
    method: str  # exact_formula | upper_bound | numeric
    achieving_z: Optional[np.ndarray] = None
    formula_id: Optional[str] = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConeSpec:
    phi: float
    factor: float = 2.0  # 2 for Xi, q/(q-1) for Xi^(q)

    def __post_init__(self):
        if self.phi < 0 or self.factor <= 0:
            raise ValueError("need phi >= 0 and factor > 0")


# ---------------------------------------------------------------------
# simplex primitives
# ---------------------------------------------------------------------


def dist_sq_neg_vertex_simplex(p: int) -> float:
    """dist^2(-e_i, standard simplex in R^p) = 1 + 1/max(p-1, 1/3)."""
    return 1.0 + 1.0 / max(p - 1, 1.0 / 3.0)


def dist_sq_neg_vertex_weighted_simplex(w, i: int) -> float:
    """dist^2(-e_i/w_i, {u >= 0, <w,u> = 1})."""
    w = np.asarray(w, dtype=float)
    p = w.size
    wi2 = w[i] ** 2
    total = float(np.dot(w, w))
    if p == 1:
        return 4.0 / wi2
    if 2.0 * wi2 <= total:
        return 1.0 / wi2 + 1.0 / (total - wi2)
    return 4.0 / total


def min_norm_weighted_simplex(w) -> tuple:
    """Min-norm point of {u >= 0, <w,u> = 1}: w/||w||^2, value 1/||w||^2."""
    w = np.asarray(w, dtype=float)
    total = float(np.dot(w, w))
    return w / total, 1.0 / total


# ---------------------------------------------------------------------
# Wolfe nearest point in a polytope
# ---------------------------------------------------------------------


def wolfe_min_norm(points: np.ndarray, tol: float = 1e-12, max_iters: int = 1000) -> np.ndarray:
    """Min-norm point of the convex hull of the given rows (Wolfe 1976).

    Terminates when the duality gap ||x||^2 - min_j <x, p_j> is below
    tol times the squared scale.
    """
    P = np.asarray(points, dtype=float)
    m = P.shape[0]
    scale = max(1.0, float(np.max(np.sum(P * P, axis=1))))
    j0 = int(np.argmin(np.sum(P * P, axis=1)))
    S = [j0]
    lam = np.array([1.0])
    x = P[j0].copy()
    for _ in range(max_iters):
        dots = P @ x
        j = int(np.argmin(dots))
        if float(np.dot(x, x)) - dots[j] <= tol * scale:
            break
        if j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        # minor cycle: affine minimization over current corral
        while True:
            Q = P[S]
            k = len(S)
            M = np.empty((k + 1, k + 1))
            M[:k, :k] = Q @ Q.T
            M[:k, k] = 1.0
            M[k, :k] = 1.0
            M[k, k] = 0.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            try:
                sol = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
            alpha = sol[:k]
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            neg = alpha <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(lam - alpha > 0, lam / (lam - alpha), np.inf)
            theta = float(np.min(ratios[neg])) if np.any(neg) else 1.0
            lam = (1.0 - theta) * lam + theta * alpha
            keep = lam > 1e-14
            if np.all(keep):
                keep[int(np.argmin(lam))] = False
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam = lam / np.sum(lam)
        x = lam @ P[S]
    return x


def dist_to_polytope(z: np.ndarray, vertices: np.ndarray, tol: float = 1e-12) -> float:
    x = wolfe_min_norm(np.asarray(vertices, dtype=float) - np.asarray(z, dtype=float), tol=tol)
    return float(np.linalg.norm(x))


# ---------------------------------------------------------------------
# extreme points of the dual ball and subdifferential vertex sets
# ---------------------------------------------------------------------


def _signed_corners(scale: np.ndarray) -> np.ndarray:
    p = scale.size
    out = np.empty((2**p, p))
    for r, signs in enumerate(itertools.product((1.0, -1.0), repeat=p)):
        out[r] = np.asarray(signs) * scale
    return out


def _dedup(rows: np.ndarray) -> np.ndarray:
    return np.unique(np.round(rows, 12), axis=0)


def ext_dual_ball(norm: NormDescriptor, p: int) -> np.ndarray:
    """Extreme points of the dual unit ball (enumerable kinds only)."""
    kind = norm.kind
    eye = np.eye(p)
    if kind == "l1":
        # dual ball is the l_inf box
        return _signed_corners(np.ones(p))
    if kind == "linf":
        # dual ball is the l1 cross-polytope
        return np.vstack([eye, -eye])
    if kind == "weighted_l1":
        # dual norm is max |t_i|/w_i, so the ball is the box [-w, w]
        return _signed_corners(np.asarray(norm.weights, dtype=float))
    if kind == "weighted_linf":
        w = np.asarray(norm.weights)
        pts = np.vstack([eye / w[:, None], -eye / w[:, None]])
        return pts
    if kind == "owl" or kind == "kd_dual":
        w = _owl_weights(norm, p)
        perms = {tuple(q) for q in itertools.permutations(w)}
        rows = []
        for q in perms:
            q = np.asarray(q)
            nz = q != 0
            for signs in itertools.product((1.0, -1.0), repeat=int(np.sum(nz))):
                v = q.copy()
                v[nz] = v[nz] * np.asarray(signs)
                rows.append(v)
        return _dedup(np.asarray(rows))
    if kind == "kd" and norm.d == 1:
        k = norm.k
        spikes = np.vstack([np.sqrt(k) * eye, -np.sqrt(k) * eye])
        flats = _signed_corners(np.full(p, 1.0 / np.sqrt(k)))
        return np.vstack([spikes, flats])
    if kind == "max_weighted_l1":
        # each component weight vector w_j contributes the corners of the
        # box [-1/w_j, 1/w_j]; the sweep figures and their regime ids are
        # defined against this component-box representation
        rows = [
            c
            for w in norm.weight_family
            for c in _signed_corners(1.0 / np.asarray(w, dtype=float))
        ]
        rows = _dedup(np.asarray(rows))
        # prune points inside the hull of the others
        keep = []
        for i in range(rows.shape[0]):
            others = np.delete(rows, i, axis=0)
            if dist_to_polytope(rows[i], others) > 1e-9:
                keep.append(i)
        return rows[keep]
    raise UnsupportedNorm(f"no extreme-point enumeration for kind {kind!r}")


def _owl_weights(norm: NormDescriptor, p: int) -> np.ndarray:
    if norm.kind == "owl":
        return np.asarray(norm.weights, dtype=float)
    # kd_dual is the ordered weighted l1 norm with w = 1_k/sqrt(k), 0 tail
    k = norm.k
    return np.concatenate([np.full(k, 1.0 / np.sqrt(k)), np.zeros(p - k)])


def subdiff_vertices(norm: NormDescriptor, beta: np.ndarray) -> np.ndarray:
    """Vertex list of the subdifferential polytope at a nonzero point."""
    b = _as_vector(beta)
    p = b.size
    kind = norm.kind
    if kind in ("l1", "weighted_l1"):
        w = np.asarray(norm.weights) if kind == "weighted_l1" else np.ones(p)
        return _l1_type_subdiff_vertices(b, w)
    if kind in ("linf", "weighted_linf"):
        w = np.asarray(norm.weights) if kind == "weighted_linf" else np.ones(p)
        vals = np.abs(b) / w
        fmax = np.max(vals)
        T = [i for i in range(p) if vals[i] >= fmax - TOL * max(1.0, fmax)]
        rows = np.zeros((len(T), p))
        for r, i in enumerate(T):
            rows[r, i] = np.sign(b[i]) / w[i]
        return rows
    if kind == "l2":
        return (b / np.linalg.norm(b))[None, :]
    if kind == "kd" and norm.d == 1:
        k = norm.k
        v1 = float(np.sum(np.abs(b))) / np.sqrt(k)
        vinf = np.sqrt(k) * float(np.max(np.abs(b)))
        rows = []
        scale = max(v1, vinf)
        if v1 >= vinf - TOL * max(1.0, scale):
            rows.append(_l1_type_subdiff_vertices(b, np.ones(p)) / np.sqrt(k))
        if vinf >= v1 - TOL * max(1.0, scale):
            rows.append(np.sqrt(k) * subdiff_vertices(NormDescriptor(kind="linf"), b))
        return _dedup(np.vstack(rows))
    if kind == "max_weighted_l1":
        vals = [float(np.dot(w, np.abs(b))) for w in norm.weight_family]
        fmax = max(vals)
        rows = [
            _l1_type_subdiff_vertices(b, np.asarray(w))
            for w, v in zip(norm.weight_family, vals)
            if v >= fmax - TOL * max(1.0, fmax)
        ]
        return _dedup(np.vstack(rows))
    raise UnsupportedNorm(f"no subdifferential vertex list for kind {kind!r}")


def _l1_type_subdiff_vertices(b: np.ndarray, w: np.ndarray) -> np.ndarray:
    p = b.size
    zeros = [i for i in range(p) if b[i] == 0]
    if len(zeros) > 16:
        raise UnsupportedNorm("too many zero coordinates for vertex enumeration")
    base = w * np.sign(b)
    rows = np.empty((2 ** len(zeros), p))
    for r, signs in enumerate(itertools.product((1.0, -1.0), repeat=len(zeros))):
        v = base.copy()
        for s, i in zip(signs, zeros):
            v[i] = s * w[i]
        rows[r] = v
    return rows


# ---------------------------------------------------------------------
# OWL subdifferential distances (no vertex list; Dykstra on two sets)
# ---------------------------------------------------------------------


def _project_owl_dual_ball(g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Projection onto {g: sum of top-i |g| <= sum_{j<=i} w_j for all i}.

    On the sorted representative the complement is an isotonic fit of
    (sorted |g| - w) clipped at zero; the ball is sign/permutation
    invariant so the result maps back through the sort context.
    """
    sc = sort_context(g)
    v = sc.sorted_abs
    u = np.maximum(isotonic_regression(v - w, increasing=False).x, 0.0)
    return sc.restore(v - u)


def _dist_owl_subdiff(z: np.ndarray, beta: np.ndarray, w: np.ndarray, iters: int = 4000, tol: float = 1e-12) -> float:
    """Distance from z to the ordered-weighted-l1 subdifferential at beta.

    The subdifferential is {<g,beta> = ||beta||_w} intersected with the
    dual-norm ball; Dykstra alternates the hyperplane and the ball.
    """
    bb = np.sort(np.abs(beta))[::-1]
    target = float(np.dot(w, bb))
    nb2 = float(np.dot(beta, beta))
    g = z.copy()
    inc_h = np.zeros_like(g)
    inc_b = np.zeros_like(g)
    for _ in range(iters):
        y = g + inc_h
        g_new = y + (target - float(np.dot(y, beta))) / nb2 * beta
        inc_h = y - g_new
        y = g_new + inc_b
        g2 = _project_owl_dual_ball(y, w)
        inc_b = y - g2
        if float(np.max(np.abs(g2 - g))) <= tol:
            g = g2
            break
        g = g2
    return float(np.linalg.norm(z - g))


# ---------------------------------------------------------------------
# varphi
# ---------------------------------------------------------------------


def varphi_exact(norm: NormDescriptor, beta) -> RelDiamReport:
    b = _as_vector(beta)
    if np.all(b == 0):
        raise ValueError("varphi is defined for beta != 0 only")
    p = b.size
    kind = norm.kind
    if kind == "l1":
        k = int(np.sum(b != 0))
        return RelDiamReport(2.0 * np.sqrt(k), "exact_formula", formula_id="l1")
    if kind == "l2":
        return RelDiamReport(2.0, "exact_formula", formula_id="l2")
    if kind == "weighted_l1":
        w = np.asarray(norm.weights)
        val = 2.0 * float(np.linalg.norm(w[b != 0]))
        return RelDiamReport(val, "exact_formula", formula_id="weighted_l1")
    if kind == "linf":
        t = int(np.sum(np.abs(b) >= np.max(np.abs(b)) - TOL * max(1.0, np.max(np.abs(b)))))
        return RelDiamReport(np.sqrt(1.0 + 1.0 / max(t - 1, 1.0 / 3.0)), "exact_formula", formula_id="linf")
    if kind == "weighted_linf":
        return _varphi_weighted_linf(norm, b)
    if kind == "kd" and norm.d == 1:
        return _varphi_k1(norm, b)
    raise UnsupportedNorm(f"no exact varphi formula for kind {kind!r}")


def _varphi_weighted_linf(norm: NormDescriptor, b: np.ndarray) -> RelDiamReport:
    w = np.asarray(norm.weights)
    p = b.size
    vals = np.abs(b) / w
    fmax = np.max(vals)
    T = np.array([vals[i] >= fmax - TOL * max(1.0, fmax) for i in range(p)])
    wT2 = float(np.sum(w[T] ** 2))
    tsize = int(np.sum(T))
    outside = (1.0 / np.min(w[~T]) ** 2 + 1.0 / wT2) if tsize < p else -np.inf
    if tsize == 1:
        val2 = max(outside, 4.0 / wT2)
    else:
        T1 = T & (2.0 * w**2 <= wT2 + TOL)
        tau = float(np.min(w[T1]))
        val2 = max(outside, 1.0 / tau**2 + 1.0 / (wT2 - tau**2))
    return RelDiamReport(np.sqrt(val2), "exact_formula", formula_id="weighted_linf")


def _varphi_k1(norm: NormDescriptor, b: np.ndarray) -> RelDiamReport:
    k = norm.k
    p = b.size
    kstar = int(np.sum(b != 0))
    amax = np.max(np.abs(b))
    tstar = int(np.sum(np.abs(b) >= amax - TOL * max(1.0, amax)))
    l1 = float(np.sum(np.abs(b)))
    hi = max(4.0 * kstar / k, 2.0 + kstar / k + k)
    lo = max(k * (1.0 + 1.0 / max(tstar - 1, 1.0 / 3.0)), 2.0 + k / tstar + p / k)
    gap = l1 - k * amax
    scale = max(1.0, l1)
    if gap > TOL * scale:
        return RelDiamReport(np.sqrt(hi), "exact_formula", formula_id="k1_l1_branch")
    if gap < -TOL * scale:
        return RelDiamReport(np.sqrt(lo), "exact_formula", formula_id="k1_linf_branch")
    return RelDiamReport(np.sqrt(min(hi, lo)), "upper_bound", formula_id="k1_tie_branch")


def varphi_bound(norm: NormDescriptor, beta) -> RelDiamReport:
    b = _as_vector(beta)
    if np.all(b == 0):
        raise ValueError("varphi is defined for beta != 0 only")
    p = b.size
    kind = norm.kind
    if kind == "kd_dual":
        k = norm.k
        kstar = int(np.sum(b != 0))
        val2 = 4.0 * min(1.0, kstar / k)
        return RelDiamReport(np.sqrt(val2), "upper_bound", formula_id="k1_dual")
    if kind == "owl":
        w = np.asarray(norm.weights)
        bb = np.sort(np.abs(b))[::-1]
        supp = int(np.sum(bb > 0))
        wG = w[:supp]
        # group the sorted magnitudes into maximal runs of equal values
        groups = []
        start = 0
        while start < supp:
            stop = start
            while stop + 1 < supp and abs(bb[stop + 1] - bb[start]) <= TOL * max(1.0, bb[start]):
                stop += 1
            groups.append((start, stop + 1))
            start = stop + 1
        refined = float(np.dot(wG, wG)) + 3.0 * sum(
            float(np.sum(w[a:z])) ** 2 / (z - a) for a, z in groups
        )
        relaxed = 4.0 * float(np.dot(wG, wG))
        return RelDiamReport(
            np.sqrt(refined), "upper_bound", formula_id="owl", extras={"relaxed": np.sqrt(relaxed)}
        )
    raise UnsupportedNorm(f"no varphi bound for kind {kind!r}")


def varphi_numeric(norm: NormDescriptor, beta, extreme_points=None) -> RelDiamReport:
    b = _as_vector(beta)
    if np.all(b == 0):
        raise ValueError("varphi is defined for beta != 0 only")
    p = b.size
    if norm.kind == "l2":
        z = -b / np.linalg.norm(b)
        return RelDiamReport(2.0, "numeric", achieving_z=z, formula_id="max_ext")
    ext = np.asarray(extreme_points, dtype=float) if extreme_points is not None else ext_dual_ball(norm, p)
    if norm.kind in ("owl", "kd_dual"):
        w = _owl_weights(norm, p)
        dists = np.array([_dist_owl_subdiff(z, b, w) for z in ext])
    else:
        verts = subdiff_vertices(norm, b)
        dists = np.array([dist_to_polytope(z, verts) for z in ext])
    j = int(np.argmax(dists))
    return RelDiamReport(float(dists[j]), "numeric", achieving_z=ext[j], formula_id="max_ext")


# ---------------------------------------------------------------------
# psi and the cone
# ---------------------------------------------------------------------


def _support_subdiff(norm: NormDescriptor, beta: np.ndarray, u: np.ndarray) -> float:
    """Support function of the subdifferential = directional derivative."""
    if norm.kind in ("owl", "kd_dual"):
        # one-sided difference quotient is exact for small t by piecewise linearity
        w = _owl_weights(norm, beta.size)
        owl = NormDescriptor(kind="owl", weights=tuple(w)) if norm.kind == "kd_dual" else norm
        t = 1e-9 * max(1.0, np.max(np.abs(beta))) / max(1.0, np.max(np.abs(u)))
        return (eval_norm(owl, beta + t * u) - eval_norm(owl, beta)) / t
    verts = subdiff_vertices(norm, beta)
    return float(np.max(verts @ u))


def _batch_norm(norm: NormDescriptor, dirs: np.ndarray) -> np.ndarray:
    """Row-wise eval_norm, vectorized for the common kinds."""
    kind = norm.kind
    A = np.abs(dirs)
    if kind == "l1":
        return np.sum(A, axis=1)
    if kind == "l2":
        return np.linalg.norm(dirs, axis=1)
    if kind == "linf":
        return np.max(A, axis=1)
    if kind == "weighted_l1":
        return A @ np.asarray(norm.weights)
    if kind == "weighted_linf":
        return np.max(A / np.asarray(norm.weights), axis=1)
    if kind == "max_weighted_l1":
        W = np.asarray(norm.weight_family, dtype=float)
        return np.max(A @ W.T, axis=1)
    return np.array([eval_norm(norm, u) for u in dirs])


def psi_estimate(norm: NormDescriptor, beta, q, n_dirs: int = 100000, seed: int = 0) -> float:
    """Lower-bounding estimate of psi(Xi^(q)) by directional search.

    A unit direction u admits some t > 0 with beta + t*u in the error
    set iff the directional derivative of the norm at beta along u is
    at most ||u||/q (q = inf drops the right-hand side). In dimension 2
    the angular grid makes this near-exact; in higher dimensions random
    directions certify a lower bound only.
    """
    b = _as_vector(beta)
    if np.all(b == 0):
        raise ValueError("psi is defined for beta != 0 only")
    p = b.size
    qinv = 0.0 if np.isinf(q) else 1.0 / q
    if p == 2:
        angles = np.linspace(0.0, 2.0 * np.pi, n_dirs, endpoint=False)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        rng = np.random.default_rng(seed)
        dirs = rng.standard_normal((n_dirs, p))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    nu = _batch_norm(norm, dirs)
    if norm.kind in ("owl", "kd_dual"):
        sigma = np.array([_support_subdiff(norm, b, u) for u in dirs])
    else:
        verts = subdiff_vertices(norm, b)
        sigma = np.max(dirs @ verts.T, axis=1)
    feasible = sigma <= qinv * nu + 1e-12
    return float(np.max(nu[feasible], initial=0.0))


def cone_membership(v, spec: ConeSpec, norm: NormDescriptor, tol: float = 1e-10) -> bool:
    v = _as_vector(v)
    l2 = float(np.linalg.norm(v))
    if l2 == 0.0:
        return True
    return eval_norm(norm, v) <= spec.factor * spec.phi * l2 + tol


def min_norm_subdiff(norm: NormDescriptor, beta) -> float:
    """dist(0, subdifferential); 2x this lower-bounds varphi."""
    b = _as_vector(beta)
    if norm.kind in ("owl", "kd_dual"):
        return _dist_owl_subdiff(np.zeros_like(b), b, _owl_weights(norm, b.size))
    verts = subdiff_vertices(norm, b)
    return float(np.linalg.norm(wolfe_min_norm(verts)))

"""Projection onto the doubly-sparse dual-norm ball and proximal maps.

The dual ball is handled on the sorted-magnitude representative, where
(for sorted nonnegative u) membership is equivalent to

    u' A_P u <= 1   for every consecutive partition P of {1..k} into d
                    intervals,

A_P being the block averaging projector of P. Dykstra's alternating
projections over the monotone nonnegative cone and these ellipsoids
converge to the exact projection; each ellipsoid projection is closed
form because A_P is an orthogonal projector. Proximal maps follow from
the Moreau decomposition, with dedicated closed forms for the simple
norms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import math

import numpy as np
from scipy.optimize import isotonic_regression

from . import kdnorm
from .vecnorms import NormDescriptor, UnsupportedNorm, _as_vector, sort_context


@dataclass(frozen=True)
class ProxConfig:
    max_outer_iters: int = 5000
    feasibility_tol: float = 1e-9
    objective_tol: float = 1e-9
    method: str = "active_set_qp"  # or "dykstra", "subgradient_projection"

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.objective_tol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.method not in ("active_set_qp", "dykstra", "subgradient_projection"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class QcqpConstraintFamily:
    """The triple family T(k,d) describing the dual ball.

    Each (e, m, s) encodes (1'u_[m,s])^2/(s-m+1) <= nu_{s,e} - nu_{m-1,e-1};
    together with nu_{k,d} <= 1 and the monotone nonnegative cone this is
    an exact description of dual-ball feasibility for sorted inputs.
    """

    k: int
    d: int
    triples: tuple

    @staticmethod
    def build(k: int, d: int) -> "QcqpConstraintFamily":
        triples = tuple(
            (e, m, s)
            for e in range(1, d + 1)
            for m in range(e, k - d + e + 1)
            for s in range(m, k - d + e + 1)
        )
        return QcqpConstraintFamily(k=k, d=d, triples=triples)

    def is_feasible(self, u, nu, tol: float = 1e-9) -> bool:
        u = np.asarray(u, dtype=float)
        nu = np.asarray(nu, dtype=float)
        if nu[self.k, self.d] > 1.0 + tol:
            return False
        prefix = np.concatenate([[0.0], np.cumsum(u[: self.k])])
        for e, m, s in self.triples:
            seg = prefix[s] - prefix[m - 1]
            if seg * seg / (s - m + 1) > nu[s, e] - nu[m - 1, e - 1] + tol:
                return False
        return True


def _project_monotone_nonneg(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {u_1 >= ... >= u_p >= 0}."""
    iso = isotonic_regression(v, increasing=False).x
    return np.maximum(iso, 0.0)


def _project_partition_ellipsoid(v: np.ndarray, boundaries, k: int) -> np.ndarray:
    """Project onto {u: sum over intervals (1'u_I)^2/|I| <= 1}.

    The quadratic form is u'Au with A an orthogonal projector, so the
    KKT point is (I + mu A)^{-1} v with mu = sqrt(v'Av) - 1.
    """
    q = 0.0
    means = []
    for i in range(len(boundaries) - 1):
        a, b = boundaries[i], boundaries[i + 1]
        m = float(np.sum(v[a:b])) / (b - a)
        means.append(m)
        q += m * m * (b - a)
    if q <= 1.0:
        return v
    mu = np.sqrt(q) - 1.0
    out = v.copy()
    shrink = mu / (1.0 + mu)
    for i in range(len(boundaries) - 1):
        a, b = boundaries[i], boundaries[i + 1]
        out[a:b] = v[a:b] - shrink * means[i]
    return out


def _dykstra_cone_ellipsoids(v: np.ndarray, partitions: list, k: int, cfg: ProxConfig) -> np.ndarray:
    """Dykstra over the monotone nonnegative cone and the given ellipsoids."""
    p = v.size
    sets = [None] + partitions  # None marks the cone
    incr = [np.zeros(p) for _ in sets]
    u = v.copy()
    for _ in range(cfg.max_outer_iters):
        max_shift = 0.0
        for j, s in enumerate(sets):
            w = u + incr[j]
            if s is None:
                u_new = _project_monotone_nonneg(w)
            else:
                u_new = _project_partition_ellipsoid(w, s, k)
            incr[j] = w - u_new
            max_shift = max(max_shift, float(np.max(np.abs(u_new - u))))
            u = u_new
        if max_shift <= cfg.objective_tol:
            break
    return u


def _partition_quad(u: np.ndarray, boundaries) -> float:
    prefix = np.concatenate([[0.0], np.cumsum(u[: boundaries[-1]])])
    return sum(
        (prefix[boundaries[i + 1]] - prefix[boundaries[i]]) ** 2
        / (boundaries[i + 1] - boundaries[i])
        for i in range(len(boundaries) - 1)
    )


def _active_set_ball(v: np.ndarray, k: int, d: int, cfg: ProxConfig) -> np.ndarray:
    """Lazily grown Dykstra: only violated partition ellipsoids enter the
    cycle. A point feasible for every partition that is the projection
    onto the relaxed intersection is the projection onto the full one.
    """
    n_partitions = math.comb(k - 1, d - 1)
    active: list = []
    while True:
        if active:
            u = _dykstra_cone_ellipsoids(v, active, k, cfg)
        else:
            u = _project_monotone_nonneg(v)
        table = kdnorm._dp_sorted(u[:k], k, d)
        if table.nu[k, d] <= 1.0 + cfg.feasibility_tol or len(active) == n_partitions:
            return u
        worst = kdnorm._recover_partition(table, k, d).boundaries
        if worst not in active:
            active.append(worst)
            continue
        # the DP argmax is already cycled but ties may leave other
        # partitions violated; sweep the whole family for them
        added = False
        for part in kdnorm.consecutive_partitions(k, d):
            b = part.boundaries
            if b not in active and _partition_quad(u, b) > 1.0 + cfg.feasibility_tol:
                active.append(b)
                added = True
        if not added:
            return u


def _head_qp(v: np.ndarray, k: int, d: int, tail: np.ndarray, cfg: ProxConfig) -> np.ndarray:
    """Reduced smooth program for the sorted dual-ball projection.

    Minimizes ||u - v_head||^2 plus the clamp cost of the tail entries
    exceeding u_k (their optimum given u_k is min(v_i, u_k)), subject to
    the monotone nonnegative cone and the partition ellipsoids, the
    latter added lazily as the dual-norm dynamic program finds them
    violated.
    """
    from scipy.optimize import minimize

    head = v[:k]
    tail_sq = 0.5 * tail * tail
    # objective scale: feasible iterates are O(sqrt(k)), so very far
    # inputs (tiny prox radii blow the argument up) would otherwise
    # swamp the solver's absolute objective tolerance
    scale = max(1.0, float(np.max(head, initial=0.0)) / (100.0 * np.sqrt(k)))

    def objective(u):
        # 1/2||u - v||^2 with the additive constants dropped
        uk = u[-1]
        clamped = tail > uk
        f = 0.5 * float(np.dot(u, u)) - float(np.dot(head, u))
        f += float(np.sum((0.5 * uk - tail[clamped]) * uk)) - float(np.sum(tail_sq[~clamped]))
        g = u - head
        g[-1] += np.sum(uk - tail[clamped])
        return f / scale, g / scale

    D = np.zeros((k, k))
    for i in range(k - 1):
        D[i, i], D[i, i + 1] = 1.0, -1.0
    D[k - 1, k - 1] = 1.0
    constraints = [{"type": "ineq", "fun": lambda u: D @ u, "jac": lambda u: D}]

    def add_ellipsoid(boundaries):
        A = np.zeros((k, k))
        for i in range(len(boundaries) - 1):
            a, b = boundaries[i], boundaries[i + 1]
            A[a:b, a:b] = 1.0 / (b - a)
        constraints.append({
            "type": "ineq",
            "fun": lambda u, A=A: 1.0 - float(u @ A @ u),
            "jac": lambda u, A=A: -2.0 * (A @ u),
        })

    n_partitions = math.comb(k - 1, d - 1)
    active: list = []
    u0 = np.minimum(head, 1.0 / np.sqrt(k))
    while True:
        if active:
            res = minimize(objective, u0, jac=True, method="SLSQP",
                           constraints=constraints,
                           options={"maxiter": 400, "ftol": 1e-14})
            u = np.maximum(res.x, 0.0)
            u = np.minimum.accumulate(u)  # repair tiny monotonicity slack
        else:
            u = _project_monotone_nonneg(head)
        table = kdnorm._dp_sorted(u, k, d)
        if table.nu[k, d] <= 1.0 + cfg.feasibility_tol or len(active) == n_partitions:
            return u
        added = False
        worst = kdnorm._recover_partition(table, k, d).boundaries
        for b in ([worst] if worst not in active else
                  [q.boundaries for q in kdnorm.consecutive_partitions(k, d)
                   if q.boundaries not in active and _partition_quad(u, q.boundaries) > 1.0 + cfg.feasibility_tol]):
            active.append(b)
            add_ellipsoid(b)
            added = True
        if not added:
            return u
        u0 = u


def _project_sorted_dual_ball(vbar: np.ndarray, k: int, d: int, cfg: Optional[ProxConfig] = None) -> np.ndarray:
    """Projection of a sorted nonnegative point onto
    {sorted nonneg} n {||.||*_{k,d} <= 1}.

    The ball constraint involves only the top k coordinates; every tail
    entry optimally clamps to min(v_i, u_k), so the computation reduces
    to a k-dimensional program. method="dykstra" runs the cyclic
    alternating-projection scheme on that head (with lazily added
    ellipsoids); the default "active_set_qp" solves the same reduced
    program by a sequential quadratic solver, which converges far
    faster when several constraints are active at once.
    """
    cfg = cfg or ProxConfig()
    v = np.asarray(vbar, dtype=float)
    p = v.size
    tail = v[k:]
    if cfg.method == "dykstra":
        # when the tail does not bind, the head solve alone is exact;
        # otherwise run the cycle in full dimension
        head = _active_set_ball(v[:k].copy(), k, d, cfg)
        if p == k or head[-1] >= v[k]:
            return np.concatenate([head, tail])
        return _active_set_ball(v, k, d, cfg)
    head = _head_qp(v, k, d, tail, cfg)
    out = np.concatenate([head, np.minimum(tail, head[-1])])
    if kdnorm.dual_norm_kd(out, k, d) > 1.0 + max(1e-6, 10.0 * cfg.feasibility_tol):
        # the sequential solver can stall on extreme inputs; the cutting
        # scheme is slower but always lands (near) the ball
        out = _subgradient_projection_ball(v, k, d, cfg)
    return out


def _subgradient_projection_ball(vbar: np.ndarray, k: int, d: int, cfg: ProxConfig) -> np.ndarray:
    """Fallback: alternating cone projections and supporting-halfspace cuts.

    Each cut uses the dual-norm subgradient g = Pi(u; S)/||Pi(u; S)||_2;
    the ball lies in {z: <g, z> <= 1}. Converges to a feasible point
    close to (not exactly at) the projection; certificates report the
    residuals.
    """
    u = _project_monotone_nonneg(np.asarray(vbar, dtype=float))
    for _ in range(cfg.max_outer_iters):
        val = kdnorm.dual_norm_kd(u, k, d)
        if val <= 1.0 + cfg.feasibility_tol:
            break
        pi = kdnorm.project_skd(u, k, d).projected
        g = pi / np.linalg.norm(pi)
        u = u - (float(np.dot(g, u)) - 1.0) * g
        u = _project_monotone_nonneg(u)
    return u


def project_dual_ball(
    theta,
    k: int,
    d: int,
    radius: float = 1.0,
    cfg: Optional[ProxConfig] = None,
    return_certificate: bool = False,
):
    """Projection of theta onto {u: ||u||*_{k,d} <= radius}.

    Interior points are returned unchanged (exactly). Otherwise the
    problem is scaled to the unit ball, solved on the sorted-magnitude
    representative, and mapped back through the SortContext.
    """
    t = _as_vector(theta)
    kdnorm._check_kd(t.size, k, d)
    if radius <= 0:
        raise ValueError("radius must be positive")
    cfg = cfg or ProxConfig()
    if kdnorm.dual_norm_kd(t, k, d) <= radius * (1.0 + 1e-12):
        out = t.copy()
        if return_certificate:
            return out, {"feasibility_gap": 0.0, "kolmogorov": 0.0, "interior": True}
        return out
    sc = sort_context(t)
    vbar = sc.sorted_abs / radius
    if cfg.method == "subgradient_projection":
        ubar = _subgradient_projection_ball(vbar, k, d, cfg)
    else:
        ubar = _project_sorted_dual_ball(vbar, k, d, cfg)
    out = sc.restore(ubar * radius)
    if not return_certificate:
        return out
    feas = max(0.0, kdnorm.dual_norm_kd(out, k, d) - radius)
    # Kolmogorov criterion on sampled ball points: <theta-u, z-u> <= 0
    rng = np.random.default_rng(0)
    worst = -np.inf
    for _ in range(32):
        z = rng.standard_normal(t.size)
        z *= radius / kdnorm.dual_norm_kd(z, k, d)
        worst = max(worst, float(np.dot(t - out, z - out)))
    worst = max(worst, float(np.dot(t - out, -out)))  # z = 0
    cert = {"feasibility_gap": float(feas), "kolmogorov": float(worst), "interior": False}
    return out, cert


def _soft_threshold(x: np.ndarray, t) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _project_l1_ball(v: np.ndarray, z: float) -> np.ndarray:
    """Euclidean projection onto {||x||_1 <= z} (sort-and-threshold)."""
    if np.sum(np.abs(v)) <= z:
        return v.copy()
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (css - z))[0][-1]
    tau = (css[rho] - z) / (rho + 1.0)
    return _soft_threshold(v, tau)


def prox_norm(x, norm: NormDescriptor, lam: float, cfg: Optional[ProxConfig] = None) -> np.ndarray:
    """prox_{lam*||.||}(x) = x - Pi_{lam B*}(x) (Moreau decomposition)."""
    v = _as_vector(x)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0:
        return v.copy()
    kind = norm.kind
    if kind == "l1":
        return _soft_threshold(v, lam)
    if kind == "weighted_l1":
        return _soft_threshold(v, lam * np.asarray(norm.weights))
    if kind == "l2":
        nv = np.linalg.norm(v)
        if nv <= lam:
            return np.zeros_like(v)
        return (1.0 - lam / nv) * v
    if kind == "linf":
        return v - _project_l1_ball(v, lam)
    if kind in ("kd", "ksupport"):
        k = norm.k
        d = norm.d if kind == "kd" else norm.k
        return v - project_dual_ball(v, k, d, radius=lam, cfg=cfg)
    raise UnsupportedNorm(f"no proximal operator for kind {kind!r}")


@dataclass(frozen=True)
class MoreauReport:
    reconstruction_residual: float
    dual_feasibility_gap: float
    pairing_gap: float


def moreau_check(x, norm: NormDescriptor, lam: float, cfg: Optional[ProxConfig] = None) -> MoreauReport:
    """Residuals of the Moreau identity and the prox optimality condition."""
    from .vecnorms import eval_dual_norm, eval_norm

    v = _as_vector(x)
    px = prox_norm(v, norm, lam, cfg)
    if norm.kind in ("kd", "ksupport"):
        k, d = norm.k, (norm.d if norm.kind == "kd" else norm.k)
        ball = project_dual_ball(v, k, d, radius=lam, cfg=cfg)
    elif norm.kind == "l1":
        ball = np.clip(v, -lam, lam)
    elif norm.kind == "weighted_l1":
        w = np.asarray(norm.weights)
        ball = np.clip(v, -lam * w, lam * w)
    elif norm.kind == "l2":
        nv = np.linalg.norm(v)
        ball = v if nv <= lam else lam * v / nv
    elif norm.kind == "linf":
        ball = _project_l1_ball(v, lam)
    else:
        raise UnsupportedNorm(norm.kind)
    recon = float(np.linalg.norm(px + ball - v))
    g = (v - px) / lam
    feas = max(0.0, eval_dual_norm(norm, g) - 1.0)
    pairing = abs(float(np.dot(g, px)) - eval_norm(norm, px))
    return MoreauReport(reconstruction_residual=recon, dual_feasibility_gap=feas, pairing_gap=pairing)


def inner_tolerance_schedule(t: int, eps0: float = 1e-4) -> float:
    """Decreasing inexact-prox tolerance for use inside iterative solvers."""
    return eps0 / (t * t)

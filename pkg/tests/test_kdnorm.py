"""Projection, dual norm DP, and primal norm evaluation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dsnorm import kdnorm
from dsnorm.vecnorms import ksupport_norm


def _rand_kd(rng, p_max=8):
    p = int(rng.integers(2, p_max + 1))
    k = int(rng.integers(1, p + 1))
    d = int(rng.integers(1, k + 1))
    return p, k, d


def test_dp_matches_enumeration_oracle():
    rng = np.random.default_rng(0)
    for _ in range(60):
        p, k, d = _rand_kd(rng, p_max=7)
        t = rng.standard_normal(p)
        assert kdnorm.dual_norm_kd(t, k, d) == pytest.approx(
            oracles.dual_norm_enum(t, k, d), abs=1e-10)


def test_dp_matches_internal_bruteforce():
    rng = np.random.default_rng(1)
    for _ in range(60):
        p, k, d = _rand_kd(rng)
        t = rng.standard_normal(p)
        assert kdnorm.dual_norm_kd(t, k, d) == pytest.approx(
            kdnorm.dual_norm_bruteforce(t, k, d), abs=1e-10)


def test_closed_form_anchors():
    rng = np.random.default_rng(2)
    for _ in range(300):
        p, k, _ = _rand_kd(rng)
        t = rng.standard_normal(p)
        top = np.sort(np.abs(t))[::-1][:k]
        assert kdnorm.dual_norm_kd(t, k, k) == pytest.approx(
            float(np.linalg.norm(top)), abs=1e-12)
        assert kdnorm.dual_norm_kd(t, k, 1) == pytest.approx(
            float(np.sum(top)) / np.sqrt(k), abs=1e-12)


def test_projection_alignment_and_value():
    # <theta, Pi> = ||Pi||^2 and ||Pi||_2 equals the dual norm
    rng = np.random.default_rng(3)
    for _ in range(200):
        p, k, d = _rand_kd(rng)
        t = rng.standard_normal(p)
        out = kdnorm.project_skd(t, k, d)
        pi = out.projected
        assert float(np.dot(t, pi)) == pytest.approx(float(np.dot(pi, pi)), abs=1e-10)
        assert float(np.dot(pi, pi)) == pytest.approx(out.sq_dual_norm, abs=1e-10)
        assert kdnorm.check_membership_skd(pi, k, d, tol=1e-9)


def test_projection_support_and_partition_shape():
    out = kdnorm.project_skd([3.0, -2.0, 0.5, 0.1], 2, 1)
    assert out.support == (0, 1)
    assert out.partition.boundaries == (0, 2)
    np.testing.assert_allclose(out.projected, [2.5, -2.5, 0.0, 0.0])


def test_membership_checker():
    assert kdnorm.check_membership_skd([1.0, -1.0, 0.0], 2, 1)
    assert not kdnorm.check_membership_skd([1.0, -2.0, 0.0], 2, 1)
    assert kdnorm.check_membership_skd([1.0, -2.0, 0.0], 2, 2)
    assert not kdnorm.check_membership_skd([1.0, 1.0, 1.0], 2, 2)


def test_parameter_validation():
    with pytest.raises(kdnorm.ParameterError):
        kdnorm.project_skd([1.0, 2.0], 3, 1)
    with pytest.raises(kdnorm.ParameterError):
        kdnorm.dual_norm_kd([1.0, 2.0], 2, 3)
    with pytest.raises(kdnorm.ParameterError):
        kdnorm.eval_norm_kd([1.0, 2.0], 2, 2, tol=0.0)


def test_partition_enumeration_count():
    from math import comb

    for k in range(1, 7):
        for d in range(1, k + 1):
            parts = list(kdnorm.consecutive_partitions(k, d))
            assert len(parts) == comb(k - 1, d - 1)
            assert len({p.boundaries for p in parts}) == len(parts)


def test_bd_enumeration_matches_count():
    elems = list(kdnorm.enumerate_bd(5, 3, 2))
    assert len(elems) == kdnorm.bd_count(5, 3, 2)
    # each matrix is an orthogonal projector of rank d
    for el in elems[:10]:
        A = el.matrix(5)
        np.testing.assert_allclose(A @ A, A, atol=1e-12)
        assert np.linalg.matrix_rank(A) == 2


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=8),
    st.data(),
)
def test_dual_norm_is_a_norm(vals, data):
    t = np.asarray(vals)
    p = t.size
    k = data.draw(st.integers(1, p))
    d = data.draw(st.integers(1, k))
    s = data.draw(st.lists(st.floats(-10, 10, allow_nan=False), min_size=p, max_size=p))
    s = np.asarray(s)
    nt = kdnorm.dual_norm_kd(t, k, d)
    ns = kdnorm.dual_norm_kd(s, k, d)
    assert kdnorm.dual_norm_kd(t + s, k, d) <= nt + ns + 1e-9
    assert kdnorm.dual_norm_kd(2.5 * t, k, d) == pytest.approx(2.5 * nt, rel=1e-12)
    if nt == 0.0:
        # squared magnitudes of denormals underflow, so only claim
        # definiteness above the underflow scale
        assert np.max(np.abs(t), initial=0.0) < 1e-150


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_dual_norm_monotone_in_d(data):
    # splitting an interval never decreases the DP objective, so the
    # dual norm grows with d; at d = k it also grows with k (l2 top-k)
    p = data.draw(st.integers(2, 8))
    t = np.asarray(data.draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=p, max_size=p)))
    k = data.draw(st.integers(1, p))
    d = data.draw(st.integers(1, k))
    v = kdnorm.dual_norm_kd(t, k, d)
    if d < k:
        assert kdnorm.dual_norm_kd(t, k, d + 1) >= v - 1e-12
    if k < p:
        assert kdnorm.dual_norm_kd(t, k + 1, k + 1) >= kdnorm.dual_norm_kd(t, k, k) - 1e-12


def test_eval_norm_chain_small():
    rng = np.random.default_rng(4)
    for _ in range(10):
        p = int(rng.integers(2, 7))
        b = rng.standard_normal(p)
        k = int(rng.integers(2, p + 1))
        vals = [kdnorm.eval_norm_kd(b, k, d, tol=1e-8) for d in range(1, k + 1)]
        assert all(vals[i] >= vals[i + 1] - 1e-7 for i in range(len(vals) - 1))
        assert vals[0] == pytest.approx(kdnorm.norm_k1_closed_form(b, k), abs=1e-7)
        assert vals[-1] == pytest.approx(ksupport_norm(b, k), abs=1e-7)


def test_eval_norm_matches_opt_oracle():
    rng = np.random.default_rng(5)
    for _ in range(8):
        p = int(rng.integers(2, 5))
        k = int(rng.integers(1, p + 1))
        d = int(rng.integers(1, k + 1))
        b = rng.standard_normal(p)
        assert kdnorm.eval_norm_kd(b, k, d, tol=1e-9) == pytest.approx(
            oracles.norm_kd_opt(b, k, d), abs=1e-6)


def test_eval_norm_duality_pairing():
    # <b, t> <= ||b|| * ||t||* for random pairs
    rng = np.random.default_rng(6)
    for _ in range(30):
        p, k, d = _rand_kd(rng, p_max=6)
        b, t = rng.standard_normal(p), rng.standard_normal(p)
        lhs = abs(float(np.dot(b, t)))
        rhs = kdnorm.eval_norm_kd(b, k, d, tol=1e-8) * kdnorm.dual_norm_kd(t, k, d)
        assert lhs <= rhs + 1e-7 * max(1.0, rhs)


def test_eval_norm_zero_and_scaling():
    assert kdnorm.eval_norm_kd(np.zeros(5), 3, 2) == 0.0
    b = np.array([1.0, -2.0, 0.3, 0.0])
    v = kdnorm.eval_norm_kd(b, 2, 2, tol=1e-9)
    assert kdnorm.eval_norm_kd(3.0 * b, 2, 2, tol=1e-9) == pytest.approx(3.0 * v, rel=1e-6)


def test_eval_norm_large_instance_converges():
    rng = np.random.default_rng(7)
    b = rng.standard_normal(120)
    v = kdnorm.eval_norm_kd(b, 8, 3, tol=1e-6)
    # sandwiched by the closed-form endpoints of the d-chain
    assert ksupport_norm(b, 8) - 1e-6 <= v <= kdnorm.norm_k1_closed_form(b, 8) + 1e-6

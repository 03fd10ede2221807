"""Norm catalog: evaluation, duality, sorting, subdifferentials."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsnorm.vecnorms import (
    FullDualBall,
    NormDescriptor,
    eval_dual_norm,
    eval_norm,
    ksupport_norm,
    sort_context,
    subdifferential,
)

finite_vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=8)


def _closed_form_norms(p, rng):
    w = np.sort(rng.uniform(0.2, 2.0, size=p))[::-1]
    return [
        NormDescriptor(kind="l1"),
        NormDescriptor(kind="l2"),
        NormDescriptor(kind="linf"),
        NormDescriptor(kind="weighted_l1", weights=rng.uniform(0.2, 2.0, size=p)),
        NormDescriptor(kind="weighted_linf", weights=rng.uniform(0.2, 2.0, size=p)),
        NormDescriptor(kind="owl", weights=w),
        NormDescriptor(kind="ksupport", k=int(rng.integers(1, p + 1))),
        NormDescriptor(kind="kd_dual", k=int(rng.integers(1, p + 1)), d=1),
        NormDescriptor(kind="max_weighted_l1",
                       weight_family=(tuple(rng.uniform(0.2, 2.0, size=p)),
                                      tuple(rng.uniform(0.2, 2.0, size=p)))),
    ]


def test_basic_values():
    b = np.array([3.0, -4.0, 0.0])
    assert eval_norm(NormDescriptor(kind="l1"), b) == 7.0
    assert eval_norm(NormDescriptor(kind="l2"), b) == 5.0
    assert eval_norm(NormDescriptor(kind="linf"), b) == 4.0
    assert eval_norm(NormDescriptor(kind="weighted_l1", weights=(1.0, 0.5, 2.0)), b) == 5.0
    assert eval_norm(NormDescriptor(kind="owl", weights=(2.0, 1.0, 0.5)), b) == 11.0


def test_duality_pairing_bound():
    # |<b, t>| <= ||b|| ||t||* across the whole catalog
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = int(rng.integers(2, 7))
        b, t = rng.standard_normal(p), rng.standard_normal(p)
        for norm in _closed_form_norms(p, rng):
            rhs = eval_norm(norm, b) * eval_dual_norm(norm, t)
            assert abs(float(b @ t)) <= rhs + 1e-9 * max(1.0, rhs)


def test_dual_of_dual_is_primal():
    # evaluate ||b|| as sup <b,t> over ||t||* <= 1 by random search, which
    # can only fall short of the primal value
    rng = np.random.default_rng(1)
    for _ in range(20):
        p = int(rng.integers(2, 6))
        b = rng.standard_normal(p)
        for norm in _closed_form_norms(p, rng):
            val = eval_norm(norm, b)
            best = 0.0
            for _ in range(200):
                t = rng.standard_normal(p)
                best = max(best, float(b @ t) / eval_dual_norm(norm, t))
            assert best <= val + 1e-9
            assert best >= 0.2 * val  # sanity: the search is not vacuous


def test_ksupport_interpolates_l1_l2():
    rng = np.random.default_rng(2)
    b = rng.standard_normal(6)
    assert ksupport_norm(b, 1) == pytest.approx(float(np.sum(np.abs(b))), abs=1e-12)
    assert ksupport_norm(b, 6) == pytest.approx(float(np.linalg.norm(b)), abs=1e-12)
    vals = [ksupport_norm(b, k) for k in range(1, 7)]
    assert all(vals[i] >= vals[i + 1] - 1e-12 for i in range(5))


def test_kd_dual_pair_consistency():
    # the kd_dual kind and the kd kind at d=1 are dual to each other
    rng = np.random.default_rng(3)
    for _ in range(30):
        p = int(rng.integers(2, 7))
        k = int(rng.integers(1, p + 1))
        t = rng.standard_normal(p)
        dual_kind = NormDescriptor(kind="kd_dual", k=k, d=1)
        kd = NormDescriptor(kind="kd", k=k, d=1)
        assert eval_norm(dual_kind, t) == pytest.approx(eval_dual_norm(kd, t), abs=1e-12)
        assert eval_dual_norm(dual_kind, t) == pytest.approx(eval_norm(kd, t), abs=1e-10)


def test_kd_closed_form_dispatch_matches_iterative():
    from dsnorm import kdnorm

    rng = np.random.default_rng(4)
    for _ in range(10):
        p = int(rng.integers(3, 7))
        k = int(rng.integers(2, p + 1))
        b = rng.standard_normal(p)
        assert eval_norm(NormDescriptor(kind="kd", k=k, d=1), b) == pytest.approx(
            kdnorm.eval_norm_kd(b, k, 1, tol=1e-9), abs=1e-7)
        assert eval_norm(NormDescriptor(kind="kd", k=k, d=k), b) == pytest.approx(
            kdnorm.eval_norm_kd(b, k, k, tol=1e-9), abs=1e-7)


def test_max_weighted_l1_dual_is_support_function():
    norm = NormDescriptor(kind="max_weighted_l1",
                          weight_family=((1.0, 0.75), (0.2, 0.9)))
    t = np.array([1.0, 1.0])
    # dual ball is the intersection of the two box duals; the LP value
    # must dominate every feasible primal point
    val = eval_dual_norm(norm, t)
    for x in ([1.0, 0.0], [0.0, 10.0 / 9.0], [5.0 / 6.0, 1.0 / 3.0]):
        x = np.asarray(x)
        if max(float(w @ x) for w in map(np.asarray, norm.weight_family)) <= 1.0 + 1e-12:
            assert val >= float(t @ np.abs(x)) - 1e-9


def test_sort_context_roundtrip():
    rng = np.random.default_rng(5)
    for _ in range(50):
        b = rng.standard_normal(int(rng.integers(1, 9)))
        sc = sort_context(b)
        assert np.all(np.diff(sc.sorted_abs) <= 0)
        np.testing.assert_array_equal(sc.restore(sc.sorted_abs), b)


def test_sort_context_tie_determinism():
    sc = sort_context(np.array([1.0, -1.0, 1.0]))
    np.testing.assert_array_equal(sc.permutation, [0, 1, 2])
    np.testing.assert_array_equal(sc.sign_pattern, [1.0, -1.0, 1.0])


def test_descriptor_json_roundtrip():
    descs = [
        NormDescriptor(kind="l1"),
        NormDescriptor(kind="owl", weights=(2.0, 1.0)),
        NormDescriptor(kind="kd", k=3, d=2),
        NormDescriptor(kind="ksupport", k=2),
        NormDescriptor(kind="max_weighted_l1", weight_family=((1.0, 2.0), (0.5, 0.5))),
    ]
    for desc in descs:
        assert NormDescriptor.from_json(desc.to_json()) == desc


def test_descriptor_validation():
    with pytest.raises(ValueError):
        NormDescriptor(kind="owl", weights=(1.0, 2.0))  # increasing
    with pytest.raises(ValueError):
        NormDescriptor(kind="weighted_l1", weights=(1.0, 0.0))
    with pytest.raises(ValueError):
        NormDescriptor(kind="kd", k=2, d=3)
    with pytest.raises(ValueError):
        NormDescriptor(kind="no_such_norm")


def test_subdifferential_l1():
    sub = subdifferential(NormDescriptor(kind="l1"), np.array([2.0, 0.0, -1.0]))
    assert sub.contains([1.0, 0.5, -1.0])
    assert sub.contains([1.0, -1.0, -1.0])
    assert not sub.contains([1.0, 1.5, -1.0])
    assert not sub.contains([0.9, 0.0, -1.0])


def test_subdifferential_linf_and_owl():
    sub = subdifferential(NormDescriptor(kind="linf"), np.array([0.5, -2.0]))
    assert sub.contains([0.0, -1.0])
    assert not sub.contains([0.0, 1.0])  # wrong sign
    assert not sub.contains([0.5, -0.5])  # inactive coordinate nonzero
    w = (2.0, 1.0)
    sub = subdifferential(NormDescriptor(kind="owl", weights=w), np.array([3.0, 1.0]))
    assert sub.contains([2.0, 1.0])
    assert not sub.contains([1.0, 2.0])  # violates order coupling


def test_subdifferential_at_zero_is_dual_ball():
    norm = NormDescriptor(kind="l1")
    sub = subdifferential(norm, np.zeros(3))
    assert isinstance(sub, FullDualBall)
    assert sub.contains([1.0, -1.0, 0.3])
    assert not sub.contains([1.2, 0.0, 0.0])


@settings(max_examples=80, deadline=None)
@given(finite_vec, st.floats(0.1, 10.0))
def test_homogeneity_all_kinds(vals, c):
    b = np.asarray(vals)
    p = b.size
    rng = np.random.default_rng(p)
    for norm in _closed_form_norms(p, rng):
        v = eval_norm(norm, b)
        assert eval_norm(norm, c * b) == pytest.approx(c * v, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(finite_vec, st.data())
def test_subgradients_support_the_norm(vals, data):
    # any g in the subdifferential satisfies <g, b> = ||b||
    b = np.asarray(vals)
    if np.linalg.norm(b) == 0.0:  # zero or below the underflow scale
        return
    p = b.size
    rng = np.random.default_rng(p + 17)
    for kind in ("l1", "l2", "linf"):
        norm = NormDescriptor(kind=kind)
        sub = subdifferential(norm, b)
        g = _any_subgradient(kind, b)
        assert sub.contains(g, tol=1e-7)
        assert float(g @ b) == pytest.approx(eval_norm(norm, b), rel=1e-9, abs=1e-9)


def _any_subgradient(kind, b):
    if kind == "l1":
        return np.sign(b)
    if kind == "l2":
        return b / np.linalg.norm(b)
    g = np.zeros_like(b)
    i = int(np.argmax(np.abs(b)))
    g[i] = np.sign(b[i]) if b[i] != 0 else 1.0
    return g

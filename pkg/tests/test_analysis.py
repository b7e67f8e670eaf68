import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsimplicial.analysis import (
    SPREAD_LIMIT,
    ResidualTrajectory,
    beta_prime,
    corollary_check,
    cubic_slope,
    error_tensor,
    masked_decay_check,
    measure_gamma,
    res_norm,
    residual,
    thm1_check,
)
from nsimplicial.attention import SimplicialParams, forward_stack, random_params
from nsimplicial.hypergraph import SimplicialMask, causal_mask, full_mask
from nsimplicial.rng import make_rng
from nsimplicial.tensor import contract_logits, norm_one_inf
from oracles import residual_norm


def zero_values(p):
    return p.with_values(tuple(tuple(np.zeros_like(v) for v in vh) for vh in p.values))


def test_residual_examples():
    v = np.array([1.0, -2.0, 3.0])
    assert not np.any(residual(np.tile(v, (4, 1))))
    np.testing.assert_array_equal(residual(np.eye(2)), [[0.5, -0.5], [-0.5, 0.5]])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), d=st.integers(1, 5))
def test_residual_properties(seed, n, d):
    X = make_rng(seed).standard_normal((n, d))
    R = residual(X)
    assert np.all(np.abs(R.sum(axis=0)) <= 1e-12)
    np.testing.assert_allclose(residual(R), R, atol=1e-15)
    assert res_norm(X) <= 2 * norm_one_inf(X) + 1e-12
    assert res_norm(X) == pytest.approx(residual_norm(X.tolist()), rel=1e-12, abs=1e-15)


def test_beta_prime_examples():
    for N in (1, 2, 3):
        eye = [np.eye(3)] * (N + 1)
        assert beta_prime(SimplicialParams.single_head(eye, eye[:N])) == 2 ** (2 * N + 1)
    p = random_params(make_rng(60), 3, 2)
    assert beta_prime(zero_values(p)) == 0.0
    q = random_params(make_rng(61), 3, 1)
    wk = max(norm_one_inf(w) for w in q.keys[0])
    wv = norm_one_inf(q.values[0][0])
    assert beta_prime(q) == pytest.approx((2 * wk) ** 2 * (2 * wv))


def test_gamma_examples():
    g = measure_gamma(np.zeros((3, 9)))
    assert (g.gamma, g.precondition) == (0.0, True)
    E = np.zeros((3, 4))
    E[1] = [0.3, -0.1, 0.2, 0.05]
    assert measure_gamma(E).gamma == pytest.approx(1.0)
    col_const = np.tile(np.array([[1.0], [2.0], [-3.0]]), (1, 4))
    assert measure_gamma(col_const).gamma == 0.0
    big = np.array([[0.0, 2.0], [0.0, 0.0]])
    assert not measure_gamma(big).precondition
    assert SPREAD_LIMIT == 1.256


def test_error_tensor_is_logits_minus_low_order_terms():
    rng = make_rng(62)
    p = random_params(rng, 3, 2)
    X = rng.standard_normal((4, 3))
    R = residual(X)
    M = X - R
    P = [X @ w for w in p.keys[0]]
    PM = [M @ w for w in p.keys[0]]
    PR = [R @ w for w in p.keys[0]]
    s = 1 / math.sqrt(3)
    low = contract_logits(PM, s)
    for i in range(3):
        low = low + contract_logits([PR[j] if j == i else PM[j] for j in range(3)], s)
    np.testing.assert_allclose(error_tensor(X, p), contract_logits(P, s) - low, atol=1e-12)


def test_thm1_trivial_cases():
    rng = make_rng(63)
    p = random_params(rng, 4, 2, scale=0.25)
    r = thm1_check(np.tile(rng.standard_normal(4), (4, 1)), p)
    assert r.lhs == 0.0 and r.holds is True
    r = thm1_check(0.1 * rng.standard_normal((4, 4)), zero_values(p))
    assert r.lhs == 0.0 and r.holds is True


def test_thm1_small_regime_example():
    rng = make_rng(64)
    p = random_params(rng, 4, 2, scale=0.25)
    r = thm1_check(0.1 * rng.standard_normal((4, 4)), p)
    assert r.applicable and r.holds and r.status == "pass"
    assert 0 < r.lhs <= r.rhs


def test_thm1_large_weights_not_applicable():
    rng = make_rng(65)
    p = random_params(rng, 4, 2, scale=10.0)
    r = thm1_check(rng.standard_normal((4, 4)), p)
    assert not r.applicable and r.holds is None and r.status == "not-applicable"


def test_thm1_rejects_multi_head():
    with pytest.raises(ValueError):
        thm1_check(np.zeros((2, 4)), random_params(make_rng(66), 4, 1, heads=2))


def small_stack(seed, N, L, n=4, d=4):
    rng = make_rng(67, seed, N)
    layers = [random_params(rng, d, N, scale=0.25) for _ in range(L)]
    X = 0.1 * rng.standard_normal((n, d))
    return forward_stack(X, layers)[1], layers


def test_corollary_one_layer_consistent_with_thm1():
    traj, layers = small_stack(0, 2, 1)
    c = corollary_check(traj, layers)
    t = thm1_check(traj[0], layers[0])
    assert c.lhs == t.lhs
    assert c.rhs == pytest.approx(t.rhs, rel=1e-12)


def test_corollary_zero_residual():
    rng = make_rng(68)
    layers = [random_params(rng, 3, 2, scale=0.25) for _ in range(3)]
    # with two identical rows the column mean is exact, so the residual is exactly zero
    _, traj = forward_stack(np.tile(rng.standard_normal(3), (2, 1)), layers)
    assert all(res_norm(x) == 0.0 for x in traj)
    assert corollary_check(traj, layers).holds is True


@pytest.mark.parametrize("seed", range(5))
def test_corollary_small_regime_three_layers(seed):
    traj, layers = small_stack(seed, 1, 3)
    c = corollary_check(traj, layers)
    assert c.holds is True
    norms = [res_norm(x) for x in traj]
    assert all(b <= a for a, b in zip(norms, norms[1:]))


def test_corollary_length_mismatch():
    traj, layers = small_stack(0, 1, 2)
    with pytest.raises(ValueError):
        corollary_check(traj[:-1], layers)


def test_cubic_slope_exact_recursion():
    r = [0.5]
    for _ in range(3):
        r.append(0.1 * r[-1] ** 3)
    slope, pairs = cubic_slope(r)
    assert pairs == 3 and slope == pytest.approx(3.0, abs=1e-9)
    assert math.isnan(cubic_slope([1.0, 0.0, 0.0])[0])
    assert cubic_slope(r, floor=1e-10)[1] == 2
    assert cubic_slope(r, floor=1e-5)[1] == 1


def test_trajectory_csv():
    traj, layers = small_stack(1, 1, 2)
    t = ResidualTrajectory.unmasked(traj, layers)
    lines = t.to_csv().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1] == "t,res_norm,x_norm,bound_rhs,attn_min_on_edges"
    assert len(lines) == 5 and lines[2].split(",")[3] == "nan"
    assert float(lines[3].split(",")[1]) == t.res_norm[1]


def test_masked_decay_complete_mask():
    rng = make_rng(69)
    layers = [random_params(rng, 4, 1, scale=0.1) for _ in range(6)]
    r = masked_decay_check(0.1 * rng.standard_normal((4, 4)), layers, full_mask(4, 1))
    assert r.r == 1 and r.holds and r.positive and r.decays
    for t, v in enumerate(r.trajectory.res_norm):
        assert v <= r.C * (1 - r.eps_hat) ** t * (1 + 1e-9)


def test_masked_decay_single_token():
    rng = make_rng(70)
    layers = [random_params(rng, 3, 2, scale=0.1) for _ in range(4)]
    r = masked_decay_check(rng.standard_normal((1, 3)), layers, causal_mask(1, 2))
    assert r.holds and all(v == 0.0 for v in r.trajectory.res_norm)


def test_masked_decay_chain_mask():
    n = 5
    chain = SimplicialMask(n, 1, tuple([(i, i) for i in range(n)] + [(i + 1, i) for i in range(n - 1)]))
    rng = make_rng(71)
    layers = [random_params(rng, 4, 1, scale=0.1) for _ in range(8)]
    r = masked_decay_check(0.1 * rng.standard_normal((n, 4)), layers, chain)
    assert r.r == n - 1 and r.holds


def test_masked_decay_gate_failure_is_reported_not_failed():
    rng = make_rng(72)
    layers = [random_params(rng, 4, 2, scale=3.0) for _ in range(3)]
    r = masked_decay_check(rng.standard_normal((4, 4)), layers, causal_mask(4, 2))
    assert r.holds is None and r.gate_failures and "layer 0" in r.message


def test_masked_decay_preconditions():
    layers = [random_params(make_rng(73), 2, 1, scale=0.1)]
    with pytest.raises(ValueError, match="quasi-strongly"):
        masked_decay_check(np.zeros((2, 2)), layers, SimplicialMask(2, 1, ((0, 0), (1, 1))))
    no_loop = SimplicialMask(2, 1, ((0, 1), (1, 0)))
    with pytest.raises(ValueError, match="self-loop"):
        masked_decay_check(np.zeros((2, 2)), layers, no_loop)

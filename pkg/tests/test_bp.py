from math import log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpap import bp, icm
from dpap.model import SimilarityModel, log_joint, validate
from dpap.priors import ap_prior, dp_prior
from dpap.synth import GenConfig, dataset_similarity, sample_dataset

from oracles import (dp_log_weight, exhaustive_map, mu_messages_bruteforce,
                     mu_messages_resort, phi_messages_bruteforce, reference_bp_round)

LN2 = log(2)


def test_incoming_to_mu():
    s = np.array([[0.0, 2.0], [-np.inf, 1.0]])
    sim = SimilarityModel(s)
    state = bp.MessageState.zeros(2)
    assert np.array_equal(bp.incoming_to_mu(sim, state), s)
    state.phi_to_h[0, 1] = -0.5
    inc = bp.incoming_to_mu(sim, state)
    assert inc[0, 1] == 1.5 and np.isneginf(inc[1, 0])


# frozen from the enumeration oracle
@pytest.mark.parametrize("j, inc, recipient, expected", [
    (0, [0.0, 0.0, 0.0], 0, 0.0),
    (0, [0.0, 2.0, 2.0], 0, 3.594534891891836),
    (0, [1.0, 0.0, -2.0], 1, -LN2),
])
def test_column_kernel_worked_examples(j, inc, recipient, expected):
    brute = mu_messages_bruteforce(j, inc, dp_log_weight)
    assert brute[recipient] == pytest.approx(expected, abs=1e-12)
    out = bp.mu_column_messages(j, inc, dp_prior())
    assert out[recipient] == pytest.approx(expected, abs=1e-12)


def test_column_kernel_single_point():
    assert bp.mu_column_messages(0, [3.0], dp_prior()).tolist() == [0.0]


def test_column_kernel_rejects_positive_infinity():
    with pytest.raises(ValueError):
        bp.mu_column_messages(0, [0.0, np.inf], dp_prior())


def _close_with_infs(a, b, tol):
    assert np.array_equal(np.isneginf(a), np.isneginf(b))
    f = np.isfinite(a)
    assert np.all(np.isfinite(b) == f)
    assert np.all(np.abs(a[f] - b[f]) <= tol)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**32 - 1), st.sampled_from(["dp", "ap"]))
def test_column_kernel_matches_enumeration(n, seed, prior_name):
    rng = np.random.default_rng(seed)
    inc = rng.uniform(-5, 5, n)
    inc[rng.random(n) < 0.1] = -np.inf
    j = int(rng.integers(n))
    prior = dp_prior() if prior_name == "dp" else ap_prior()
    fn = dp_log_weight if prior_name == "dp" else (lambda k: 0.0)
    _close_with_infs(bp.mu_column_messages(j, inc, prior),
                     mu_messages_bruteforce(j, inc, fn), 1e-9)


def test_shared_sort_is_bitwise_equal_to_resort():
    rng = np.random.default_rng(0)
    p = dp_prior()
    for _ in range(200):
        n = int(rng.integers(2, 40))
        inc = rng.normal(scale=3, size=n)
        inc[rng.random(n) < 0.05] = -np.inf
        inc[rng.random(n) < 0.1] = 1.25  # ties
        j = int(rng.integers(n))
        assert np.array_equal(bp.mu_column_messages(j, inc, p),
                              mu_messages_resort(j, inc, p.weights(n)))


def test_batched_columns_match_single_column():
    rng = np.random.default_rng(2)
    inc = rng.normal(size=(15, 15))
    full = bp.mu_messages(inc, dp_prior())
    for j in range(15):
        assert np.array_equal(full[:, j], bp.mu_column_messages(j, inc[:, j], dp_prior()))
    # chunking must not change anything
    assert np.array_equal(full, bp.mu_messages(inc, dp_prior(), chunk_elements=1))


def test_phi_messages():
    out = bp.phi_row_messages([0.5, -1.0, 2.0])
    assert out[2] == -0.5 and out[0] == -2.0 and out[1] == -2.0
    assert np.array_equal(bp.phi_row_messages(np.zeros(4)), np.zeros(4))
    forced = bp.phi_row_messages([-np.inf, 0.3, -np.inf])
    assert forced[1] == bp.FORCED_MESSAGE
    assert forced[0] == forced[2] == -0.3


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_phi_matches_direct_max(n, seed):
    rows = np.random.default_rng(seed).normal(size=(n, n))
    out = bp.phi_row_messages(rows)
    assert np.array_equal(out, np.array([phi_messages_bruteforce(r) for r in rows]))


def test_one_round_by_hand_n2():
    a, b, c, d = -1.0, -0.5, 0.3, -2.0
    sim = SimilarityModel([[a, b], [c, d]])
    state, _ = bp.iterate(sim, bp.MessageState.zeros(2), bp.EngineConfig(damping_mu=0.0))
    mu = np.array([[max(0.0, c - LN2), d - LN2 - max(0.0, d)],
                   [a - LN2 - max(0.0, a), max(0.0, b - LN2)]])
    assert np.allclose(state.mu_to_h, mu, atol=1e-15)
    inc = np.array([[a, b], [c, d]]) + mu
    phi = np.array([[-inc[0, 1], -inc[0, 0]], [-inc[1, 1], -inc[1, 0]]])
    assert np.allclose(state.phi_to_h, phi, atol=1e-15)


def test_engine_matches_enumeration_reference():
    for seed in range(4):
        sim = dataset_similarity(sample_dataset(GenConfig(n=6, seed=seed)))
        state = bp.MessageState.zeros(6)
        mu = np.zeros((6, 6))
        phi = np.zeros((6, 6))
        for _ in range(15):
            state, _ = bp.iterate(sim, state, bp.EngineConfig(damping_mu=0.0))
            mu, phi = reference_bp_round(sim.s, mu, phi, dp_log_weight)
        assert np.allclose(state.mu_to_h, mu, atol=1e-12)
        assert np.allclose(state.phi_to_h, phi, atol=1e-12)


def test_damping_one_freezes_messages():
    sim = SimilarityModel(np.random.default_rng(0).normal(size=(5, 5)))
    start = bp.MessageState(np.ones((5, 5)), -np.ones((5, 5)))
    cfg = bp.EngineConfig(damping_mu=1.0, damping_phi=1.0)
    state, delta = bp.iterate(sim, start, cfg)
    assert delta == 0.0
    assert np.array_equal(state.mu_to_h, start.mu_to_h)


def test_fixed_point_has_zero_delta():
    sim = dataset_similarity(sample_dataset(GenConfig(n=10, seed=4)))
    res_state = None

    def keep(state, delta):
        nonlocal res_state
        res_state = state

    res = bp.run(sim, bp.EngineConfig(damping_mu=0.0, tol=1e-14, max_iters=2000), callback=keep)
    if res.converged:
        cfg = bp.EngineConfig(damping_mu=0.0)
        again, delta = bp.iterate(sim, res_state, cfg)
        assert delta < 1e-13
        _, delta2 = bp.iterate(sim, again, cfg)
        assert delta2 < 1e-13


def test_damping_convention():
    old = np.array([1.0, -np.inf, 2.0])
    new = np.array([3.0, 0.0, -np.inf])
    out = bp.damp(old, new, 0.7)
    assert out[0] == pytest.approx(0.7 * 1.0 + 0.3 * 3.0)
    assert out[1] == 0.0 and np.isneginf(out[2])


def test_run_single_point():
    res = bp.run(SimilarityModel([[-3.0]]))
    assert res.labels.labels.tolist() == [0]
    assert res.converged and res.iterations == 1


def test_run_two_identical_points_merge():
    sim = SimilarityModel([[-10.0, 0.0], [0.0, -10.0]])
    res = bp.run(sim)
    best, _ = exhaustive_map(sim.s, dp_log_weight)
    assert res.labels.labels.tolist() == best.tolist() == [0, 0]


def test_run_two_distant_points_stay_apart():
    sim = SimilarityModel([[0.0, -50.0], [-50.0, 0.0]])
    res = bp.run(sim)
    assert res.labels.labels.tolist() == [0, 1]
    assert res.converged


def test_decode_rules():
    assert bp.decode_beliefs(np.array([[0.5, -0.2], [0.3, 0.1]])).tolist() == [0, 0]
    assert bp.decode_beliefs(np.array([[-1.0, -0.5], [-2.0, -3.0]])).tolist() == [1, 0]
    assert bp.decode_beliefs(np.array([[1.0, 1.0, -1.0]])).tolist() == [0]


def test_decode_keeps_locally_optimal_labels():
    sim = SimilarityModel([[0.0, -5.0], [-0.1, -3.0]])
    state = bp.MessageState.zeros(2)
    # beliefs equal to s here: row 0 picks 0, row 1 picks 0
    assert bp.decode(sim, state, dp_prior()).labels.tolist() == [0, 0]


def test_decode_repairs_invalid_labels():
    rng = np.random.default_rng(7)
    sim = SimilarityModel(rng.normal(size=(3, 3)))
    state = bp.MessageState.zeros(3)
    state.phi_to_h = np.array([[0, 9.0, 0], [0, 0, 9.0], [0, 0, 9.0]])  # forces [1, 2, 2]
    assert bp.decode_beliefs(bp.beliefs(sim, state)).tolist() == [1, 2, 2]
    out = bp.decode(sim, state, dp_prior())
    validate(out.labels)
    repaired_init = icm._Groups(sim, dp_prior(), np.array([1, 2, 2]))
    assert log_joint(sim, out, dp_prior()) >= repaired_init.total() - 1e-12


def test_decode_always_valid_on_random_states():
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(2, 12))
        sim = SimilarityModel(rng.normal(size=(n, n)))
        state = bp.MessageState(rng.normal(size=(n, n)) * 3, rng.normal(size=(n, n)) * 3)
        validate(bp.decode(sim, state, dp_prior()).labels)


def test_flat_prior_engine_finds_ap_objective_map():
    hits = 0
    for seed in range(40):
        n = 3 + seed % 6
        sim = dataset_similarity(sample_dataset(GenConfig(n=n, seed=500 + seed)))
        res = bp.run(sim, bp.EngineConfig(prior=ap_prior()))
        _, best = exhaustive_map(sim.s, lambda k: 0.0)
        assert res.log_joint <= best + 1e-9
        hits += abs(res.log_joint - best) < 1e-9
    assert hits >= 36


def test_run_is_deterministic():
    sim = dataset_similarity(sample_dataset(GenConfig(n=30, seed=1)))
    a = bp.run(sim, bp.EngineConfig(max_iters=50))
    b = bp.run(sim, bp.EngineConfig(max_iters=50))
    assert a.labels == b.labels and a.iterations == b.iterations
    assert a.diagnostics["final_delta"] == b.diagnostics["final_delta"]


def test_forbidden_pairs_are_respected():
    s = np.array([[0.0, -np.inf, -1.0], [-np.inf, -0.5, -np.inf], [-1.0, -np.inf, 0.0]])
    res = bp.run(SimilarityModel(s))
    validate(res.labels.labels)
    assert np.isfinite(res.log_joint)
    assert res.labels.labels[1] == 1


def test_config_validation():
    with pytest.raises(ValueError):
        bp.EngineConfig(tol=0)
    with pytest.raises(ValueError):
        bp.EngineConfig(damping_mu=1.5)

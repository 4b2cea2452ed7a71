"""Randomized sweeps of the structural invariants, >= 100 cases per family."""

import numpy as np

from soclearn import (
    CategoricalLikelihood,
    GaussianLikelihood,
    generate_erdos_renyi,
    informativeness,
    is_strongly_connected,
    optimal_set,
    perron_vector,
    run_simulation,
)


def random_categorical(rng, h):
    return CategoricalLikelihood(rng.dirichlet(np.ones(h) * 2.0, size=h))


def test_simulated_belief_rows_stay_normalized():
    rng = np.random.default_rng(20260816)
    cases = 0
    while cases < 100:
        n = int(rng.integers(2, 5))
        h = int(rng.integers(2, 4))
        seed = int(rng.integers(1_000_000))
        matrix = generate_erdos_renyi(n, float(rng.uniform(0.5, 1.0)), seed=seed)
        models = [random_categorical(rng, h) for _ in range(n)]
        states = rng.integers(0, h, size=n).tolist()
        trace = run_simulation(matrix, models, states, float(rng.uniform(0.05, 0.9)),
                               6, seed=seed + 1)
        psi = np.exp(trace.log_public)
        assert np.abs(psi.sum(axis=2) - 1.0).max() < 1e-10
        assert trace.estimates.min() >= 0 and trace.estimates.max() < h
        cases += 1
    assert cases >= 100


def test_generated_matrices_are_valid_and_connected():
    rng = np.random.default_rng(31)
    cases = 0
    while cases < 120:
        n = int(rng.integers(2, 11))
        p = float(rng.uniform(0.3, 1.0))
        matrix = generate_erdos_renyi(n, p, seed=int(rng.integers(1_000_000)))
        w = matrix.weights
        assert np.abs(w.sum(axis=0) - 1.0).max() <= 1e-12
        assert w.min() >= 0.0
        adj = matrix.adjacency
        assert np.array_equal(adj, adj.T)
        assert adj.diagonal().all()
        assert is_strongly_connected(adj)
        cases += 1
    assert cases >= 120


def test_informativeness_is_exactly_antisymmetric():
    rng = np.random.default_rng(32)
    cases = 0
    while cases < 150:
        n = int(rng.integers(1, 7))
        h = int(rng.integers(2, 6))
        d = informativeness(rng.normal(size=(n, h - 1)) * 10.0 ** rng.integers(-3, 4))
        assert np.array_equal(d, -np.swapaxes(d, 1, 2))
        assert not d.diagonal(axis1=1, axis2=2).any()
        cases += 1
    assert cases >= 150


def test_perron_vector_is_a_positive_fixed_point():
    rng = np.random.default_rng(33)
    cases = 0
    while cases < 100:
        n = int(rng.integers(2, 9))
        matrix = generate_erdos_renyi(n, float(rng.uniform(0.4, 1.0)),
                                      seed=int(rng.integers(1_000_000)))
        v = perron_vector(matrix)
        assert v.min() > 0.0
        assert abs(v.sum() - 1.0) <= 1e-12
        assert np.abs(matrix.weights @ v - v).max() <= 1e-10
        cases += 1
    assert cases >= 100


def test_kl_divergences_are_nonnegative_and_vanish_on_equality():
    rng = np.random.default_rng(34)
    cases = 0
    while cases < 150:
        h = int(rng.integers(2, 5))
        model = random_categorical(rng, h)
        i, j = rng.integers(0, h, size=2)
        assert model.kl_divergence(int(i), int(j)) >= -1e-12
        assert model.kl_divergence(int(i), int(i)) == 0.0
        true = int(rng.integers(0, h))
        assert true in optimal_set(model, true)
        g = GaussianLikelihood(rng.normal(size=h), float(rng.uniform(0.2, 3.0)))
        assert g.kl_divergence(int(i), int(j)) >= 0.0
        cases += 1
    assert cases >= 150

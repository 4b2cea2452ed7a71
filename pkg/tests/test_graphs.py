import numpy as np
import pytest

from soclearn import (
    CombinationMatrix,
    ConfigError,
    DataError,
    GraphGenerationError,
    generate_erdos_renyi,
    is_strongly_connected,
    perron_vector,
    read_matrix_csv,
    read_matrix_json,
    write_matrix_csv,
    write_matrix_json,
)


def test_complete_two_agent_graph_is_half_half():
    m = generate_erdos_renyi(2, 1.0, seed=0)
    assert np.array_equal(m.weights, np.full((2, 2), 0.5))


def test_complete_three_agent_graph_is_thirds():
    m = generate_erdos_renyi(3, 1.0, seed=0)
    assert np.allclose(m.weights, 1.0 / 3.0, atol=0)


def test_generation_is_deterministic():
    a = generate_erdos_renyi(10, 0.2, seed=5)
    b = generate_erdos_renyi(10, 0.2, seed=5)
    assert np.array_equal(a.weights, b.weights)


def test_generated_graphs_are_valid_and_connected():
    for seed in range(30):
        m = generate_erdos_renyi(10, 0.2, seed=seed)
        assert np.all(np.abs(m.weights.sum(axis=0) - 1.0) <= 1e-12)
        assert np.all(np.diag(m.adjacency))
        assert np.array_equal(m.adjacency, m.adjacency.T)
        assert is_strongly_connected(m)


def test_single_agent_graph():
    m = generate_erdos_renyi(1, 0.0, seed=0)
    assert np.array_equal(m.weights, [[1.0]])
    assert is_strongly_connected(m)


def test_generation_fails_when_disconnected_forever():
    with pytest.raises(GraphGenerationError):
        generate_erdos_renyi(4, 0.0, seed=0)


def test_generation_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        generate_erdos_renyi(0, 0.5)
    with pytest.raises(ConfigError):
        generate_erdos_renyi(3, 1.5)


def test_matrix_validation():
    with pytest.raises(ConfigError):
        CombinationMatrix(np.array([[0.5, 0.5], [0.4, 0.5]]))  # column sum off
    with pytest.raises(ConfigError):
        CombinationMatrix(np.array([[1.5, 0.0], [-0.5, 1.0]]))  # outside [0, 1]
    with pytest.raises(ConfigError):
        CombinationMatrix(np.ones((2, 3)))


def test_strong_connectivity_cases():
    assert not is_strongly_connected(np.eye(3))  # no cross paths
    assert is_strongly_connected(generate_erdos_renyi(3, 1.0, seed=1))
    # 2-cycle without self-loops fails the diagonal requirement
    assert not is_strongly_connected(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_perron_doubly_stochastic_is_uniform():
    m = CombinationMatrix(np.full((2, 2), 0.5))
    assert np.allclose(perron_vector(m), [0.5, 0.5], atol=1e-12)
    ring = np.full((4, 4), 0.25)
    assert np.allclose(perron_vector(CombinationMatrix(ring)), 0.25, atol=1e-12)


def test_perron_matches_independent_power_iteration():
    """Dense reference iteration written out longhand, run to 1e-12."""
    for seed in range(10):
        m = generate_erdos_renyi(3, 0.7, seed=100 + seed)
        v = np.ones(3) / 3.0
        for _ in range(200000):
            nxt = m.weights @ v
            nxt = nxt / nxt.sum()
            if np.abs(nxt - v).max() <= 1e-12:
                v = nxt
                break
            v = nxt
        got = perron_vector(m)
        assert np.abs(got - v).max() <= 1e-10
        assert np.abs(m.weights @ got - got).max() <= 1e-10


def test_matrix_csv_roundtrip_exact(tmp_path):
    m = generate_erdos_renyi(7, 0.4, seed=3)
    path = tmp_path / "matrix.csv"
    write_matrix_csv(m, path)
    back = read_matrix_csv(path)
    assert np.array_equal(back.weights, m.weights)


def test_matrix_json_roundtrip_exact(tmp_path):
    m = generate_erdos_renyi(6, 0.5, seed=4)
    path = tmp_path / "matrix.json"
    write_matrix_json(m, path)
    back = read_matrix_json(path)
    assert np.array_equal(back.weights, m.weights)


def test_loading_malformed_files_raises_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,matrix\n")
    with pytest.raises(DataError):
        read_matrix_csv(bad)
    worse = tmp_path / "bad.json"
    worse.write_text('{"n": 2, "weights": [[0.9, 0.5], [0.4, 0.5]]}')
    with pytest.raises(DataError):
        read_matrix_json(worse)
    short = tmp_path / "short.csv"
    short.write_text("# combination-matrix n=3\n0.5,0.5,0.0\n")
    with pytest.raises(DataError):
        read_matrix_csv(short)


def test_sparse_ten_agent_graph_is_column_stochastic():
    m = generate_erdos_renyi(10, 0.2, seed=1)
    assert m.n_agents == 10
    assert np.abs(m.weights.sum(axis=0) - 1.0).max() <= 1e-12

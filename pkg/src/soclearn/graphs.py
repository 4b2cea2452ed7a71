"""Directed agent graphs and their combination matrices.

A combination matrix A is left-stochastic: entry A[l, k] is the weight agent k
places on messages from agent l, and each column sums to one. An edge l -> k
exists exactly when A[l, k] > 0.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, GraphGenerationError, NumericalError
from .serde import format_float

COLUMN_SUM_TOL = 1e-12


@dataclass
class CombinationMatrix:
    """Validated left-stochastic weight matrix over n agents."""

    weights: np.ndarray
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ConfigError(f"combination matrix must be square, got shape {w.shape}")
        if w.shape[0] < 1:
            raise ConfigError("combination matrix needs at least one agent")
        if not np.all(np.isfinite(w)):
            raise ConfigError("combination matrix has non-finite entries")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ConfigError("combination matrix entries must lie in [0, 1]")
        col_err = np.abs(w.sum(axis=0) - 1.0)
        if np.any(col_err > COLUMN_SUM_TOL):
            k = int(np.argmax(col_err))
            raise ConfigError(
                f"column {k} sums to {w[:, k].sum():.17g}, not 1 within {COLUMN_SUM_TOL:g}"
            )
        w.flags.writeable = False
        self.weights = w

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        """Boolean edge matrix: [l, k] True when l -> k carries weight."""
        return self.weights > 0.0

    def in_degrees(self) -> np.ndarray:
        """Number of in-neighbors (including self-loops) per agent."""
        return self.adjacency.sum(axis=0)


def _reachable(adj: np.ndarray, start: int, forward: bool) -> np.ndarray:
    visited = np.zeros(adj.shape[0], dtype=bool)
    visited[start] = True
    frontier = visited.copy()
    while frontier.any():
        if forward:
            step = adj[frontier, :].any(axis=0)
        else:
            step = adj[:, frontier].any(axis=1)
        frontier = step & ~visited
        visited |= frontier
    return visited


def is_strongly_connected(matrix) -> bool:
    """True when every agent reaches every other and some self-loop exists.

    The self-loop requirement keeps the weight matrix primitive, which the
    learning dynamics rely on.
    """
    adj = matrix.adjacency if isinstance(matrix, CombinationMatrix) else np.asarray(matrix) > 0
    if not np.any(np.diag(adj)):
        return False
    return bool(_reachable(adj, 0, True).all() and _reachable(adj, 0, False).all())


def generate_erdos_renyi(
    n: int, p: float, seed=None, max_retries: int = 100
) -> CombinationMatrix:
    """Sample a strongly connected agent graph and weight it by averaging.

    Adjacency is symmetric: each unordered pair is linked with probability p
    and every self-loop is forced. Weights are not symmetric in general:
    agent k assigns 1/|N_k| to each of its in-neighbors, N_k including k
    itself, so columns with different degrees differ. Redraws until strongly
    connected, up to max_retries attempts.
    """
    if n < 1:
        raise ConfigError(f"need at least one agent, got n={n}")
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"edge probability must lie in [0, 1], got {p}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    seed_label = seed if isinstance(seed, (int, np.integer)) else None
    for _ in range(max_retries):
        upper = np.triu(rng.random((n, n)) < p, 1)
        adj = upper | upper.T
        np.fill_diagonal(adj, True)
        if not is_strongly_connected(adj):
            continue
        weights = adj / adj.sum(axis=0, keepdims=True)
        return CombinationMatrix(weights, seed=seed_label)
    raise GraphGenerationError(
        f"no strongly connected draw in {max_retries} attempts (n={n}, p={p})"
    )


def perron_vector(matrix: CombinationMatrix, tol: float = 1e-10, max_iter: int = 100_000):
    """Dominant eigenvector of A with unit entry sum, by power iteration."""
    a = matrix.weights
    v = np.full(matrix.n_agents, 1.0 / matrix.n_agents)
    for _ in range(max_iter):
        nxt = a @ v
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - v)) <= tol:
            return nxt
        v = nxt
    raise NumericalError(f"power iteration did not converge within {max_iter} steps")


def write_matrix_csv(matrix: CombinationMatrix, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# combination-matrix n={matrix.n_agents}\n")
        for row in matrix.weights:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def read_matrix_csv(path) -> CombinationMatrix:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# combination-matrix"):
        raise DataError(f"{path}: missing combination-matrix header")
    try:
        n = int(lines[0].split("n=")[1])
        rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: malformed matrix file: {exc}") from exc
    if len(rows) != n or any(len(r) != n for r in rows):
        raise DataError(f"{path}: expected {n}x{n} values")
    try:
        return CombinationMatrix(np.asarray(rows))
    except ConfigError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_matrix_json(matrix: CombinationMatrix, path) -> None:
    from .serde import dump_json

    dump_json({"n": matrix.n_agents, "weights": matrix.weights}, path)


def read_matrix_json(path) -> CombinationMatrix:
    from .serde import load_json

    payload = load_json(path)
    try:
        n = int(payload["n"])
        weights = np.asarray(payload["weights"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed matrix file: {exc}") from exc
    if weights.shape != (n, n):
        raise DataError(f"{path}: weights shape {weights.shape} does not match n={n}")
    try:
        return CombinationMatrix(weights)
    except ConfigError as exc:
        raise DataError(f"{path}: {exc}") from exc

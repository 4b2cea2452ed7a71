"""Forward social-learning dynamics.

Each iteration every agent tilts its private belief toward the likelihood of
its fresh observation (adapt) and then geometrically averages the public
beliefs of its in-neighbors (combine):

    psi_k ~ L_k(obs)^delta * mu_k^(1-delta)
    mu_k  ~ prod_l psi_l^A[l,k]

Beliefs are carried in log domain throughout; probabilities only appear at
the API surface and in serialized traces. The log-ratio coordinates
Lambda[k, j] = log(psi_k[0] / psi_k[j+1]) obey an exact linear recursion
driven by the observation log-ratios, which the inverse estimator exploits.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .models import _model_to_payload
from .serde import config_digest, format_float

# Serialized beliefs are floored here so files never contain zeros; in-memory
# beliefs stay in log domain and need no floor.
SERIALIZATION_FLOOR = 1e-300


def _normalize_log_rows(v: np.ndarray) -> np.ndarray:
    m = v.max(axis=-1, keepdims=True)
    return v - (m + np.log(np.exp(v - m).sum(axis=-1, keepdims=True)))


def init_log_beliefs(n: int, n_hypotheses: int, mode: str = "uniform", rng=None) -> np.ndarray:
    """Initial private log-beliefs, one normalized row per agent."""
    if mode == "uniform":
        return np.full((n, n_hypotheses), -np.log(n_hypotheses))
    if mode == "random":
        if rng is None:
            raise ConfigError("random initialization needs an rng or seed")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        draws = rng.dirichlet(np.ones(n_hypotheses), size=n)
        return _normalize_log_rows(np.log(np.maximum(draws, 1e-12)))
    raise ConfigError(f"unknown initialization mode {mode!r}")


def _require_positive(beliefs: np.ndarray, what: str) -> np.ndarray:
    b = np.asarray(beliefs, dtype=float)
    if np.any(b <= 0.0) or not np.all(np.isfinite(b)):
        raise NumericalError(f"{what} must be strictly positive and finite")
    return b


def adapt_step(private, observations, models, delta: float) -> np.ndarray:
    """One adapt step on probability rows; returns the public beliefs psi."""
    log_mu = np.log(_require_positive(private, "private beliefs"))
    log_lik = np.stack([m.log_likelihood_row(o) for m, o in zip(models, observations)])
    return np.exp(_normalize_log_rows(delta * log_lik + (1.0 - delta) * log_mu))


def combine_step(public, matrix) -> np.ndarray:
    """Geometric averaging of public beliefs along the graph."""
    log_psi = np.log(_require_positive(public, "public beliefs"))
    if log_psi.shape[0] != matrix.n_agents:
        raise ConfigError(
            f"beliefs for {log_psi.shape[0]} agents but matrix has {matrix.n_agents}"
        )
    return np.exp(_normalize_log_rows(matrix.weights.T @ log_psi))


def estimate_states(beliefs) -> tuple:
    """Row-wise argmax with a tie flag; ties resolve to the lowest index."""
    b = np.asarray(beliefs, dtype=float)
    top = b.max(axis=-1, keepdims=True)
    ties = (b == top).sum(axis=-1) > 1
    return b.argmax(axis=-1), ties


def lambda_from_log_beliefs(log_psi: np.ndarray) -> np.ndarray:
    return log_psi[..., :1] - log_psi[..., 1:]


def lambda_from_beliefs(psi) -> np.ndarray:
    """Log-ratio coordinates of probability rows (reference hypothesis 0)."""
    return lambda_from_log_beliefs(np.log(_require_positive(psi, "beliefs")))


def likelihood_log_ratios(models, observations) -> np.ndarray:
    """Per-agent observation log-ratios, shape (n, H-1)."""
    rows = np.stack([m.log_likelihood_row(o) for m, o in zip(models, observations)])
    return rows[:, :1] - rows[:, 1:]


def linear_recursion_step(lam_prev, log_ratios, matrix, delta: float) -> np.ndarray:
    """Exact update of the belief log-ratios:
    Lambda_i = (1 - delta) A^T Lambda_{i-1} + delta L_i."""
    lam_prev = np.asarray(lam_prev, dtype=float)
    log_ratios = np.asarray(log_ratios, dtype=float)
    n = matrix.n_agents
    if lam_prev.shape != log_ratios.shape or lam_prev.shape[0] != n:
        raise ConfigError(
            f"shape mismatch: lambda {lam_prev.shape}, ratios {log_ratios.shape}, n={n}"
        )
    return (1.0 - delta) * (matrix.weights.T @ lam_prev) + delta * log_ratios


@dataclass
class SimulationTrace:
    """Recorded forward run.

    lambdas[t] holds the public-belief log-ratios after iteration t+1;
    estimates[t] is each agent's private-belief argmax at that iteration.
    Optional blocks may be None when recording was switched off or the trace
    came from a reduced file format.
    """

    n_agents: int
    n_hypotheses: int
    delta: float
    iterations: int
    seed: int | None
    lambdas: np.ndarray
    estimates: np.ndarray
    ties: np.ndarray
    likelihood_ratios: np.ndarray | None = None
    log_public: np.ndarray | None = None
    observations: np.ndarray | None = None
    initial_log_private: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def public_beliefs(self) -> np.ndarray:
        if self.log_public is None:
            raise DataError("trace did not record public beliefs")
        return np.maximum(np.exp(self.log_public), SERIALIZATION_FLOOR)


def run_simulation(
    matrix,
    models,
    true_states,
    delta: float,
    iterations: int,
    seed=None,
    init: str = "uniform",
    record_likelihoods: bool = True,
    record_beliefs: bool = True,
    record_observations: bool = False,
) -> SimulationTrace:
    """Simulate the network for a number of iterations.

    true_states may be plain hypothesis indices or AgentTruth records. All
    observations are drawn up front from a single generator seeded here, so
    equal arguments give bit-identical traces.
    """
    n = matrix.n_agents
    if len(models) != n:
        raise ConfigError(f"{len(models)} models for {n} agents")
    h = models[0].n_hypotheses
    if any(m.n_hypotheses != h for m in models):
        raise ConfigError("agents disagree on the number of hypotheses")
    states = [int(getattr(s, "state", s)) for s in true_states]
    if len(states) != n:
        raise ConfigError(f"{len(states)} true states for {n} agents")
    if any(not 0 <= s < h for s in states):
        raise ConfigError(f"true states must lie in [0, {h})")
    if not 0.0 < delta <= 1.0:
        raise ConfigError(f"step size delta must lie in (0, 1], got {delta}")
    if iterations < 0:
        raise ConfigError(f"iterations must be nonnegative, got {iterations}")

    seed_label = seed if isinstance(seed, (int, np.integer)) else None
    digest = config_digest(
        {
            "weights": matrix.weights,
            "models": [_model_to_payload(m) for m in models],
            "states": states,
            "delta": delta,
            "iterations": iterations,
            "seed": seed_label,
            "init": init,
        }
    )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    log_mu = init_log_beliefs(n, h, init, rng)
    initial = log_mu.copy()

    t_total = int(iterations)
    obs = np.empty((t_total, n), dtype=float)
    log_lik = np.empty((t_total, n, h))
    for k, model in enumerate(models):
        draws = model.sample_many(states[k], t_total, rng)
        obs[:, k] = draws
        log_lik[:, k, :] = model.log_likelihood_all(draws)

    lambdas = np.empty((t_total, n, h - 1))
    estimates = np.empty((t_total, n), dtype=np.int64)
    ties = np.empty((t_total, n), dtype=bool)
    log_public = np.empty((t_total, n, h)) if record_beliefs else None
    ratios = log_lik[:, :, :1] - log_lik[:, :, 1:] if record_likelihoods else None

    one_minus = 1.0 - delta
    a_t = matrix.weights.T
    for t in range(t_total):
        log_psi = _normalize_log_rows(delta * log_lik[t] + one_minus * log_mu)
        log_mu = _normalize_log_rows(a_t @ log_psi)
        lambdas[t] = log_psi[:, :1] - log_psi[:, 1:]
        if record_beliefs:
            log_public[t] = log_psi
        estimates[t], ties[t] = estimate_states(log_mu)

    if t_total and not np.all(np.isfinite(lambdas)):
        raise NumericalError("belief log-ratios became non-finite; check the models")

    return SimulationTrace(
        n_agents=n,
        n_hypotheses=h,
        delta=float(delta),
        iterations=t_total,
        seed=seed_label,
        lambdas=lambdas,
        estimates=estimates,
        ties=ties,
        likelihood_ratios=ratios,
        log_public=log_public,
        observations=obs if record_observations else None,
        initial_log_private=initial,
        meta={"config": digest, "init": init},
    )


def write_trace_csv(trace: SimulationTrace, path) -> None:
    """Long-format CSV: one row per (iteration, agent, hypothesis)."""
    psi = trace.public_beliefs()
    with open(path, "w") as fh:
        fh.write(
            f"# trace n={trace.n_agents} H={trace.n_hypotheses}"
            f" delta={format_float(trace.delta)} iterations={trace.iterations}\n"
        )
        fh.write(f"# seed={'none' if trace.seed is None else trace.seed}\n")
        fh.write(f"# config={trace.meta.get('config', 'none')}\n")
        fh.write("iteration,agent,hypothesis,psi,mu_argmax,tie\n")
        for t in range(trace.iterations):
            for k in range(trace.n_agents):
                est, tie = trace.estimates[t, k], int(trace.ties[t, k])
                for j in range(trace.n_hypotheses):
                    fh.write(f"{t},{k},{j},{format_float(psi[t, k, j])},{est},{tie}\n")


def read_trace_csv(path) -> SimulationTrace:
    """Rebuild a trace from the long CSV; likelihood ratios are not stored."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    header: dict = {}
    body_start = 0
    for i, ln in enumerate(lines):
        if ln.startswith("#"):
            for tok in ln[1:].replace("trace", "").split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    header[key] = val
        elif ln.startswith("iteration,"):
            body_start = i + 1
            break
    else:
        raise DataError(f"{path}: missing trace column header")
    try:
        n = int(header["n"])
        h = int(header["H"])
        delta = float(header["delta"])
        t_total = int(header["iterations"])
        seed = None if header.get("seed", "none") == "none" else int(header["seed"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed trace header: {exc}") from exc

    psi = np.empty((t_total, n, h))
    estimates = np.zeros((t_total, n), dtype=np.int64)
    ties = np.zeros((t_total, n), dtype=bool)
    rows = 0
    for ln in lines[body_start:]:
        if not ln:
            continue
        t_s, k_s, j_s, p_s, e_s, tie_s = ln.split(",")
        t, k, j = int(t_s), int(k_s), int(j_s)
        psi[t, k, j] = float(p_s)
        estimates[t, k] = int(e_s)
        ties[t, k] = tie_s == "1"
        rows += 1
    if rows != t_total * n * h:
        raise DataError(f"{path}: expected {t_total * n * h} data rows, found {rows}")

    log_public = np.log(psi) if t_total else np.empty((0, n, h))
    return SimulationTrace(
        n_agents=n,
        n_hypotheses=h,
        delta=delta,
        iterations=t_total,
        seed=seed,
        lambdas=lambda_from_log_beliefs(log_public),
        estimates=estimates,
        ties=ties,
        log_public=log_public,
        meta={"config": header.get("config", "none")},
    )


def write_trace_json(trace: SimulationTrace, path) -> None:
    from .serde import dump_json

    payload = {
        "n": trace.n_agents,
        "H": trace.n_hypotheses,
        "delta": trace.delta,
        "iterations": trace.iterations,
        "seed": trace.seed,
        "meta": trace.meta,
        "lambdas": trace.lambdas,
        "estimates": trace.estimates,
        "ties": trace.ties,
        "likelihood_ratios": trace.likelihood_ratios,
        "log_public": trace.log_public,
        "initial_log_private": trace.initial_log_private,
    }
    dump_json(payload, path)


def read_trace_json(path) -> SimulationTrace:
    from .serde import load_json

    p = load_json(path)
    try:
        opt = lambda key: None if p.get(key) is None else np.asarray(p[key], dtype=float)
        return SimulationTrace(
            n_agents=int(p["n"]),
            n_hypotheses=int(p["H"]),
            delta=float(p["delta"]),
            iterations=int(p["iterations"]),
            seed=p.get("seed"),
            lambdas=np.asarray(p["lambdas"], dtype=float),
            estimates=np.asarray(p["estimates"], dtype=np.int64),
            ties=np.asarray(p["ties"], dtype=bool),
            likelihood_ratios=opt("likelihood_ratios"),
            log_public=opt("log_public"),
            initial_log_private=opt("initial_log_private"),
            meta=p.get("meta", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed trace file: {exc}") from exc


def write_psi_jsonl(trace: SimulationTrace, path) -> None:
    """Streaming belief records, one JSON object per iteration."""
    psi = trace.public_beliefs()
    with open(path, "w") as fh:
        for t in range(trace.iterations):
            fh.write(json.dumps({"iteration": t, "psi": psi[t].tolist()}) + "\n")


def iter_psi_jsonl(path):
    """Yield (iteration, psi array) pairs without loading the whole file."""
    with open(path) as fh:
        for line_no, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                yield int(rec["iteration"]), np.asarray(rec["psi"], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{line_no + 1}: malformed record: {exc}") from exc

"""Experiment orchestration: configs, canned scenarios, trial loops, reports.

A trial simulates the network forward, runs the inverse estimator on the
recorded beliefs, and scores both halves against the known ground truth.
Trials are seeded as root_seed + trial_index, so a report is reproducible
from its config and root seed alone.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .forward import SimulationTrace, run_simulation
from .graphs import CombinationMatrix, generate_erdos_renyi, read_matrix_csv, read_matrix_json
from .inverse import (
    InverseConfig,
    estimate_hypothesis_sets,
    estimate_trace_r,
    expected_log_ratios,
    informativeness,
    run_inverse,
    theorem_bound_table,
)
from .models import (
    AgentTruth,
    CategoricalLikelihood,
    make_truths,
    read_model_spec,
)
from .serde import config_digest, dump_json, format_float, load_json


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    matrix: CombinationMatrix
    models: list
    truths: list
    delta: float
    iterations: int
    inverse: InverseConfig = field(default_factory=InverseConfig)
    trials: int = 1
    seed: int = 0
    accuracy_window: int = 100
    majority_state: int | None = None
    malicious: dict = field(default_factory=dict)
    out_dir: str | None = None
    digest: str = ""

    def __post_init__(self):
        n = self.matrix.n_agents
        if len(self.models) != n or len(self.truths) != n:
            raise ConfigError(
                f"{len(self.models)} models / {len(self.truths)} truths for {n} agents"
            )
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.iterations < 0:
            raise ConfigError(f"iterations must be nonnegative, got {self.iterations}")
        if self.trials < 1:
            raise ConfigError(f"trials must be positive, got {self.trials}")
        if self.accuracy_window < 1:
            raise ConfigError(f"accuracy window must be positive, got {self.accuracy_window}")
        if not self.digest:
            self.digest = config_digest(
                {
                    "weights": self.matrix.weights,
                    "truths": [t.state for t in self.truths],
                    "delta": self.delta,
                    "iterations": self.iterations,
                    "batch_m": self.inverse.batch_m,
                    "step_mu": self.inverse.step_mu,
                    "trials": self.trials,
                    "seed": self.seed,
                }
            )


def _resolve_matrix(spec, base_dir: str) -> CombinationMatrix:
    if not isinstance(spec, dict):
        raise ConfigError("graph spec must be an object")
    if "path" in spec:
        path = os.path.join(base_dir, spec["path"])
        if path.endswith(".json"):
            return read_matrix_json(path)
        return read_matrix_csv(path)
    try:
        n, p = int(spec["n"]), float(spec["p"])
        seed = spec.get("seed")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"graph spec needs n and p or a path: {exc}") from exc
    return generate_erdos_renyi(n, p, seed=seed)


def _resolve_truth_states(spec, file_states, n: int):
    """Returns (states, majority_state, malicious mapping)."""
    if spec is None:
        if any(s is None for s in file_states):
            raise ConfigError("model spec lacks true states and config gives none")
        return [int(s) for s in file_states], None, {}
    if "per_agent" in spec:
        states = [int(s) for s in spec["per_agent"]]
        if len(states) != n:
            raise ConfigError(f"per_agent lists {len(states)} states for {n} agents")
        return states, None, {}
    if "majority_state" in spec:
        majority = int(spec["majority_state"])
        malicious = {int(k): int(v) for k, v in (spec.get("malicious") or {}).items()}
        for agent in malicious:
            if not 0 <= agent < n:
                raise ConfigError(f"malicious agent {agent} out of range")
        states = [malicious.get(k, majority) for k in range(n)]
        return states, majority, malicious
    raise ConfigError("truths spec needs per_agent or majority_state")


def load_experiment_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse an experiment config file; relative paths resolve next to it.

    overrides may replace seed, trials, delta, iterations, out_dir, or
    inverse settings before validation, mirroring the command-line flags.
    """
    try:
        payload = load_json(path)
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    payload = dict(payload)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key in ("step_mu", "batch_m", "tol", "max_iter"):
            payload.setdefault("inverse", {})
            payload["inverse"] = {**payload["inverse"], key: val}
        else:
            payload[key] = val
    base_dir = os.path.dirname(os.path.abspath(path))
    try:
        matrix = _resolve_matrix(payload["graph"], base_dir)
        models, file_states = read_model_spec(os.path.join(base_dir, payload["models"]))
        states, majority, malicious = _resolve_truth_states(
            payload.get("truths"), file_states, matrix.n_agents
        )
        inv = InverseConfig(**payload.get("inverse", {}))
        config = ExperimentConfig(
            matrix=matrix,
            models=models,
            truths=make_truths(models, states),
            delta=float(payload["delta"]),
            iterations=int(payload["iterations"]),
            inverse=inv,
            trials=int(payload.get("trials", 1)),
            seed=int(payload.get("seed", 0)),
            accuracy_window=int(payload.get("accuracy_window", 100)),
            majority_state=majority,
            malicious=malicious,
            out_dir=payload.get("out_dir"),
            # where the outputs land must not change what the run is called
            digest=config_digest({k: v for k, v in payload.items() if k != "out_dir"}),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing config key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config


def rotated_categorical_scenario(
    n: int = 5,
    base=(0.5, 0.3, 0.2),
    edge_p: float = 0.7,
    graph_seed: int = 7,
    true_state: int = 0,
):
    """Strongly informative heterogeneous testbed.

    Agent k observes through the base pmf cyclically shifted by k, so every
    agent distinguishes every hypothesis pair and no two agents share a
    model. Useful for consistency checks of the inverse estimator.
    """
    base = np.asarray(base, dtype=float)
    h = base.shape[0]
    matrix = generate_erdos_renyi(n, edge_p, seed=graph_seed)
    models = [
        CategoricalLikelihood(np.stack([np.roll(base, j + k) for j in range(h)]))
        for k in range(n)
    ]
    truths = make_truths(models, [true_state] * n)
    return matrix, models, truths


def binary_detection_scenario(
    n: int = 10,
    edge_p: float = 0.2,
    graph_seed: int = 119,
    accuracy: float = 0.8,
):
    """Majority-vs-one-malicious testbed on a sparse random graph.

    Every agent runs the same two-hypothesis model; the most listened-to
    agent (highest in-degree) receives data generated under the opposite
    state. Returns (matrix, models, truths, malicious_agent).
    """
    if not 0.5 < accuracy < 1.0:
        raise ConfigError(f"accuracy must lie in (0.5, 1), got {accuracy}")
    matrix = generate_erdos_renyi(n, edge_p, seed=graph_seed)
    pmfs = np.asarray([[accuracy, 1.0 - accuracy], [1.0 - accuracy, accuracy]])
    models = [CategoricalLikelihood(pmfs) for _ in range(n)]
    malicious_agent = int(np.argmax(matrix.in_degrees()))
    states = [0] * n
    states[malicious_agent] = 1
    truths = make_truths(models, states)
    return matrix, models, truths, malicious_agent


def social_learning_accuracy(trace: SimulationTrace, truths, window: int = 100) -> float:
    """Fraction of correct agent decisions over the trailing window."""
    if trace.iterations == 0:
        raise ConfigError("cannot score an empty trace")
    states = np.asarray([int(getattr(t, "state", t)) for t in truths])
    tail = trace.estimates[-min(window, trace.iterations) :]
    return float((tail == states[None, :]).mean())


@dataclass
class TrialMetrics:
    trial: int
    seed: int
    learning_accuracy: float
    a_error: float
    l_error: float
    detection_fraction: float
    all_sets_correct: bool
    theta_sets: list
    wrong_inclusions: dict
    flags_all_correct: bool | None = None
    malicious_learned_majority: bool | None = None


@dataclass
class MetricsReport:
    digest: str
    root_seed: int
    trials: list
    aggregate: dict
    bounds: dict


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialMetrics:
    """Simulate, invert, and score one seeded trial."""
    seed = config.seed + trial_index
    trace = run_simulation(
        config.matrix,
        config.models,
        config.truths,
        config.delta,
        config.iterations,
        seed=seed,
        record_likelihoods=False,
        record_beliefs=False,
    )
    l_bar = expected_log_ratios(config.models, config.truths)
    result = run_inverse(
        trace,
        config.inverse,
        a_true=config.matrix.weights,
        l_true=l_bar,
    )
    reference = None if config.majority_state is None else {config.majority_state}
    estimate = estimate_hypothesis_sets(informativeness(result.l_est), reference)

    correct = [est == truth.optimal for est, truth in zip(estimate.theta_sets, config.truths)]
    inclusions = {}
    for k, truth in enumerate(config.truths):
        for j in range(config.models[k].n_hypotheses):
            if j not in truth.optimal:
                inclusions[f"{k}:{j}"] = bool(j in estimate.theta_sets[k])

    flags_ok = None
    learned_majority = None
    if estimate.malicious is not None:
        flags_ok = all(
            flag == (k in config.malicious) for k, flag in enumerate(estimate.malicious)
        )
        if config.malicious:
            learned_majority = all(
                int(trace.estimates[-1, k]) == config.majority_state
                for k in config.malicious
            )

    return TrialMetrics(
        trial=trial_index,
        seed=seed,
        learning_accuracy=social_learning_accuracy(trace, config.truths, config.accuracy_window),
        a_error=float(np.linalg.norm(result.a_est - config.matrix.weights)),
        l_error=float(np.linalg.norm(result.l_est - l_bar)),
        detection_fraction=float(np.mean(correct)),
        all_sets_correct=bool(all(correct)),
        theta_sets=[sorted(s) for s in estimate.theta_sets],
        wrong_inclusions=inclusions,
        flags_all_correct=flags_ok,
        malicious_learned_majority=learned_majority,
    )


def _trial_worker(args) -> TrialMetrics:
    config, index = args
    return run_trial(config, index)


def _mean_stderr(values) -> dict:
    arr = np.asarray(values, dtype=float)
    out = {"mean": float(arr.mean())}
    out["stderr"] = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> MetricsReport:
    """Run the configured trial loop and aggregate the scores.

    workers > 1 distributes trials over processes; seeding is per trial, so
    the report does not depend on the worker count.
    """
    tasks = [(config, i) for i in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_trial_worker, tasks))
    else:
        trials = [run_trial(config, i) for i in range(config.trials)]

    aggregate = {
        "learning_accuracy": _mean_stderr([t.learning_accuracy for t in trials]),
        "a_error": _mean_stderr([t.a_error for t in trials]),
        "l_error": _mean_stderr([t.l_error for t in trials]),
        "detection_fraction": _mean_stderr([t.detection_fraction for t in trials]),
        "all_sets_correct": _mean_stderr([t.all_sets_correct for t in trials]),
    }
    if all(t.flags_all_correct is not None for t in trials):
        aggregate["flags_all_correct"] = _mean_stderr([t.flags_all_correct for t in trials])
    learned = [t.malicious_learned_majority for t in trials]
    if all(v is not None for v in learned):
        aggregate["malicious_learned_majority"] = _mean_stderr(learned)
    inclusion_freq = {}
    for key in trials[0].wrong_inclusions:
        inclusion_freq[key] = float(np.mean([t.wrong_inclusions[key] for t in trials]))
    aggregate["wrong_inclusion_freq"] = inclusion_freq

    trace_r = estimate_trace_r(config.models, config.truths)
    bounds = {
        f"{k}:{j}": {"value": entry.value, "residual_orders": list(entry.residual_orders)}
        for (k, j), entry in theorem_bound_table(
            config.models, config.truths, config.inverse.batch_m, trace_r
        ).items()
    }

    return MetricsReport(
        digest=config.digest,
        root_seed=config.seed,
        trials=trials,
        aggregate=aggregate,
        bounds=bounds,
    )


def write_metrics_json(report: MetricsReport, path) -> None:
    payload = {
        "config": report.digest,
        "root_seed": report.root_seed,
        "aggregate": report.aggregate,
        "bounds": report.bounds,
        "trials": [vars(t) for t in report.trials],
    }
    dump_json(payload, path)


def write_metrics_csv(report: MetricsReport, path) -> None:
    cols = [
        "trial",
        "seed",
        "learning_accuracy",
        "a_error",
        "l_error",
        "detection_fraction",
        "all_sets_correct",
        "flags_all_correct",
        "malicious_learned_majority",
    ]
    with open(path, "w") as fh:
        fh.write(f"# metrics config={report.digest} root_seed={report.root_seed}\n")
        fh.write(",".join(cols) + "\n")
        for t in report.trials:
            row = []
            for col in cols:
                val = getattr(t, col)
                if isinstance(val, bool):
                    row.append(str(int(val)))
                elif val is None:
                    row.append("")
                elif isinstance(val, float):
                    row.append(format_float(val))
                else:
                    row.append(str(val))
            fh.write(",".join(row) + "\n")

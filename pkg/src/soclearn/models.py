"""Per-agent observation models over a shared set of hypotheses.

Two families are supported: finite-alphabet categorical models (one pmf row
per hypothesis) and scalar Gaussian models (one mean per hypothesis, shared
variance). Hypotheses are referred to by index 0..H-1 everywhere; index 0 is
the reference hypothesis for log-ratio coordinates.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolationError, ConfigError, DataError
from .serde import dump_json, load_json

# Floor applied inside logarithms so stray zero probabilities do not produce
# -inf; valid categorical models never have zeros on used symbols.
PROB_FLOOR = 1e-12

# KL divergences below this count as zero when forming indistinguishable sets.
KL_ZERO_TOL = 1e-12


class LikelihoodModel:
    """Common interface of the observation-model families."""

    n_hypotheses: int

    def sample_many(self, state: int, size: int, rng) -> np.ndarray:
        raise NotImplementedError

    def log_likelihood_all(self, observations) -> np.ndarray:
        """Log densities, shape (len(observations), H)."""
        raise NotImplementedError

    def kl_divergence(self, a: int, b: int) -> float:
        """KL divergence between the hypothesis-a and hypothesis-b densities."""
        raise NotImplementedError

    def sample_observation(self, state: int, rng):
        return self.sample_many(state, 1, rng)[0]

    def log_likelihood_row(self, observation) -> np.ndarray:
        return self.log_likelihood_all(np.asarray([observation]))[0]

    def log_likelihood(self, observation, theta: int) -> float:
        return float(self.log_likelihood_row(observation)[theta])

    def log_likelihood_ratio(self, observation, a: int, b: int) -> float:
        row = self.log_likelihood_row(observation)
        return float(row[a] - row[b])


@dataclass
class CategoricalLikelihood(LikelihoodModel):
    """Finite-alphabet model: pmfs[theta, symbol] = P(symbol | theta)."""

    pmfs: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.pmfs, dtype=float))
        if p.ndim != 2 or p.shape[0] < 2 or p.shape[1] < 1:
            raise ConfigError(f"pmfs must be (H>=2, S>=1), got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise ConfigError("pmf entries must be finite and nonnegative")
        row_err = np.abs(p.sum(axis=1) - 1.0)
        if np.any(row_err > 1e-9):
            raise ConfigError(f"pmf rows must sum to 1, worst error {row_err.max():.3g}")
        p.flags.writeable = False
        self.pmfs = p
        self._log_pmfs = np.log(np.maximum(p, PROB_FLOOR))
        self._cdfs = np.minimum(np.cumsum(p, axis=1), 1.0)

    @property
    def n_hypotheses(self) -> int:
        return self.pmfs.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.pmfs.shape[1]

    def sample_many(self, state: int, size: int, rng) -> np.ndarray:
        u = rng.random(size)
        return np.searchsorted(self._cdfs[state], u, side="right").astype(np.int64)

    def log_likelihood_all(self, observations) -> np.ndarray:
        obs = np.asarray(observations, dtype=np.int64)
        return self._log_pmfs[:, obs].T

    def kl_divergence(self, a: int, b: int) -> float:
        pa, pb = self.pmfs[a], self.pmfs[b]
        mask = pa > 0.0
        terms = pa[mask] * (np.log(pa[mask]) - np.log(np.maximum(pb[mask], PROB_FLOOR)))
        return float(terms.sum())

    def ratio_bound(self) -> float:
        """Largest |log-likelihood ratio| over used symbols and pairs.

        A symbol with positive mass under one hypothesis and zero under
        another makes the ratio unbounded, which the learning analysis
        forbids.
        """
        used = self.pmfs.max(axis=0) > 0.0
        cols = self.pmfs[:, used]
        if np.any(cols == 0.0):
            raise AssumptionViolationError(
                "zero probability on a used symbol gives an unbounded log ratio"
            )
        logs = np.log(cols)
        return float(np.max(logs.max(axis=0) - logs.min(axis=0)))


@dataclass
class GaussianLikelihood(LikelihoodModel):
    """Scalar Gaussian model: one mean per hypothesis, shared variance."""

    means: np.ndarray
    variance: float

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.means, dtype=float))
        if m.ndim != 1 or m.shape[0] < 2:
            raise ConfigError(f"means must be a vector of length >= 2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ConfigError("means must be finite")
        v = float(self.variance)
        if not np.isfinite(v) or v <= 0.0:
            raise ConfigError(f"variance must be positive, got {v}")
        m.flags.writeable = False
        self.means = m
        self.variance = v

    @property
    def n_hypotheses(self) -> int:
        return self.means.shape[0]

    def sample_many(self, state: int, size: int, rng) -> np.ndarray:
        return rng.normal(self.means[state], np.sqrt(self.variance), size)

    def log_likelihood_all(self, observations) -> np.ndarray:
        obs = np.asarray(observations, dtype=float)
        const = 0.5 * np.log(2.0 * np.pi * self.variance)
        return -((obs[:, None] - self.means[None, :]) ** 2) / (2.0 * self.variance) - const

    def kl_divergence(self, a: int, b: int) -> float:
        return float((self.means[a] - self.means[b]) ** 2 / (2.0 * self.variance))

    def ratio_bound(self) -> float:
        return float("inf")


@dataclass(frozen=True)
class AgentTruth:
    """Ground truth for one agent: its true state and the hypotheses its own
    model cannot tell apart from that state."""

    agent: int
    state: int
    optimal: frozenset


def optimal_set(model: LikelihoodModel, true_state: int) -> frozenset:
    """Hypotheses whose divergence from the true state is (numerically) zero."""
    if not 0 <= true_state < model.n_hypotheses:
        raise ConfigError(f"true state {true_state} out of range")
    return frozenset(
        j
        for j in range(model.n_hypotheses)
        if model.kl_divergence(true_state, j) < KL_ZERO_TOL
    )


def make_truths(models, states) -> list:
    if len(states) != len(models):
        raise ConfigError(f"{len(states)} states for {len(models)} models")
    return [
        AgentTruth(k, int(s), optimal_set(m, int(s)))
        for k, (m, s) in enumerate(zip(models, states))
    ]


def check_bounded_likelihoods(models) -> float:
    """Verify every model has bounded log ratios; return the worst bound.

    Gaussian models are inherently unbounded, which weakens the available
    error guarantees; that case warns and reports an infinite bound instead
    of failing.
    """
    bound = 0.0
    for k, model in enumerate(models):
        b = model.ratio_bound()
        if not np.isfinite(b):
            warnings.warn(
                f"agent {k}: unbounded log-likelihood ratios (Gaussian family)",
                stacklevel=2,
            )
        bound = max(bound, b)
    return bound


def _model_to_payload(model: LikelihoodModel) -> dict:
    if isinstance(model, CategoricalLikelihood):
        return {"family": "categorical", "pmfs": model.pmfs}
    if isinstance(model, GaussianLikelihood):
        return {"family": "gaussian", "means": model.means, "variance": model.variance}
    raise ConfigError(f"cannot serialize model type {type(model).__name__}")


def _model_from_payload(payload: dict) -> LikelihoodModel:
    family = payload.get("family")
    try:
        if family == "categorical":
            return CategoricalLikelihood(np.asarray(payload["pmfs"], dtype=float))
        if family == "gaussian":
            return GaussianLikelihood(
                np.asarray(payload["means"], dtype=float), float(payload["variance"])
            )
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise DataError(f"malformed model entry: {exc}") from exc
    raise DataError(f"unknown model family {family!r}")


def write_model_spec(models, states, path) -> None:
    """Persist per-agent models plus optional true states as JSON."""
    if states is None:
        states = [None] * len(models)
    agents = []
    for k, (model, state) in enumerate(zip(models, states)):
        entry = {"id": k, **_model_to_payload(model)}
        if state is not None:
            entry["true_state"] = int(state)
        agents.append(entry)
    h = models[0].n_hypotheses if models else 0
    dump_json({"n_hypotheses": h, "agents": agents}, path)


def read_model_spec(path):
    """Load a model spec; returns (models, states) with None for absent states."""
    payload = load_json(path)
    if not isinstance(payload, dict) or "agents" not in payload:
        raise DataError(f"{path}: model spec needs an 'agents' list")
    models, states = [], []
    for entry in payload["agents"]:
        models.append(_model_from_payload(entry))
        states.append(entry.get("true_state"))
    if not models:
        raise DataError(f"{path}: model spec lists no agents")
    h = models[0].n_hypotheses
    if any(m.n_hypotheses != h for m in models):
        raise DataError(f"{path}: agents disagree on the number of hypotheses")
    declared = payload.get("n_hypotheses")
    if declared is not None and int(declared) != h:
        raise DataError(f"{path}: declared n_hypotheses {declared} != {h}")
    return models, states

"""Inverse estimation: recover the combination weights and the expected
observation log-ratios of every agent from the public belief stream alone.

The belief log-ratios obey Lambda_i = (1-delta) A^T Lambda_{i-1} + delta L_i
with L_i the (unobserved) observation log-ratios. The estimator interleaves a
stochastic-gradient step on A, centered with a trailing window mean to cancel
the common drift, and a windowed least-squares refresh of the expected
log-ratios Lbar. From Lbar each agent's set of best hypotheses follows, which
is what exposes agents whose data contradicts the network majority.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InsufficientDataError, NumericalError
from .forward import SimulationTrace, lambda_from_beliefs
from .models import CategoricalLikelihood, GaussianLikelihood, optimal_set

# Orders of the bias terms the finite-step analysis leaves unresolved; they
# accompany every bound value instead of pretending to be numbers.
RESIDUAL_ORDERS = ("O(mu / delta^2)", "O(1 / (delta^5 M^2))")


def expected_log_ratios(models, truths) -> np.ndarray:
    """Mean observation log-ratios Lbar under each agent's true state.

    Entry [k, j-1] equals KL_k(true || theta_j) - KL_k(true || theta_0).
    """
    h = models[0].n_hypotheses
    out = np.empty((len(models), h - 1))
    for k, (model, truth) in enumerate(zip(models, truths)):
        state = int(getattr(truth, "state", truth))
        base = model.kl_divergence(state, 0)
        for j in range(1, h):
            out[k, j - 1] = model.kl_divergence(state, j) - base
    return out


@dataclass
class InverseConfig:
    """Tuning knobs of the streaming estimator."""

    step_mu: float = 1e-3
    batch_m: int = 200
    tol: float = 1e-6
    max_iter: int | None = None

    def __post_init__(self):
        if not self.step_mu >= 0.0:
            raise ConfigError(f"step size mu must be nonnegative, got {self.step_mu}")
        if int(self.batch_m) < 1:
            raise ConfigError(f"window length M must be >= 1, got {self.batch_m}")
        self.batch_m = int(self.batch_m)
        if not self.tol >= 0.0:
            raise ConfigError(f"tolerance must be nonnegative, got {self.tol}")
        if self.max_iter is not None and int(self.max_iter) < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")


class InverseEstimator:
    """Streaming Algorithm: push one Lambda matrix per iteration.

    The first M+1 pushes only fill the window; every later push performs one
    A update followed by one Lbar refresh. Estimates start at uniform columns
    for A and zero for Lbar unless warm starts are given; no stochasticity is
    involved, so equal streams give equal estimates.
    """

    def __init__(
        self,
        n: int,
        n_hypotheses: int,
        delta: float,
        step_mu: float = 1e-3,
        batch_m: int = 200,
        a_init=None,
        l_init=None,
    ):
        if n < 1 or n_hypotheses < 2:
            raise ConfigError(f"need n >= 1 agents and H >= 2 hypotheses, got {n}, {n_hypotheses}")
        if not 0.0 < delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {delta}")
        if step_mu < 0.0:
            raise ConfigError(f"step size mu must be nonnegative, got {step_mu}")
        if batch_m < 1:
            raise ConfigError(f"window length M must be >= 1, got {batch_m}")
        self.n = n
        self.n_hypotheses = n_hypotheses
        self.delta = float(delta)
        self.step_mu = float(step_mu)
        self.batch_m = int(batch_m)
        self._a = self._init_matrix(a_init, (n, n), 1.0 / n, "a_init")
        self._l = self._init_matrix(l_init, (n, n_hypotheses - 1), 0.0, "l_init")
        cap = self.batch_m + 2
        self._buf = np.empty((cap, n, n_hypotheses - 1))
        self._count = 0
        self._head = 0
        self._s0 = np.zeros((n, n_hypotheses - 1))
        self._since_resync = 0
        self.pushes = 0
        self.updates = 0
        self.last_step_norm = 0.0

    @staticmethod
    def _init_matrix(given, shape, fill, name):
        if given is None:
            return np.full(shape, fill)
        arr = np.array(given, dtype=float)
        if arr.shape != shape:
            raise ConfigError(f"{name} must have shape {shape}, got {arr.shape}")
        return arr

    @property
    def a_est(self) -> np.ndarray:
        return self._a.copy()

    @property
    def l_est(self) -> np.ndarray:
        return self._l.copy()

    def _slot(self, m: int) -> np.ndarray:
        return self._buf[(self._head + m) % self._buf.shape[0]]

    def push(self, lam) -> bool:
        """Insert one log-ratio matrix; True when an update was performed."""
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.n, self.n_hypotheses - 1):
            raise ConfigError(
                f"expected shape {(self.n, self.n_hypotheses - 1)}, got {lam.shape}"
            )
        if not np.all(np.isfinite(lam)):
            raise NumericalError(f"non-finite log-ratios at record {self.pushes}")
        cap = self._buf.shape[0]
        m = self.batch_m
        if self._count < cap:
            self._buf[self._count] = lam
            self._count += 1
            self.pushes += 1
            if self._count < cap:
                return False
            # window is ready: head is still 0, slots 0..M-1 feed the mean
            self._s0 = self._buf[:m].sum(axis=0)
        else:
            self._s0 += self._slot(m) - self._slot(0)
            np.copyto(self._buf[self._head], lam)
            self._head = (self._head + 1) % cap
            self.pushes += 1
            self._since_resync += 1
            if self._since_resync >= 512:
                # running sums accumulate rounding; rebuild exactly now and then
                self._s0 = sum(self._slot(i) for i in range(m))
                self._since_resync = 0
        self._update()
        return True

    def _update(self):
        m = self.batch_m
        delta = self.delta
        lam_cur = self._slot(m + 1)
        lam_prev = self._slot(m)
        centered = lam_prev - self._s0 / m
        residual_t = (
            lam_cur.T
            - (1.0 - delta) * (lam_prev.T @ self._a)
            - delta * self._l.T
        )
        step = self.step_mu * (1.0 - delta) * (centered @ residual_t)
        self._a += step
        self.last_step_norm = float(np.linalg.norm(step))
        s1 = self._s0 - self._slot(0) + lam_prev
        s2 = s1 - self._slot(1) + lam_cur
        self._l = (s2 - (1.0 - delta) * (self._a.T @ s1)) / (delta * m)
        self.updates += 1


def informativeness(l_est) -> np.ndarray:
    """Pairwise hypothesis comparisons per agent, shape (n, H, H).

    d[k, j1, j2] > 0 means agent k's data favors j1 over j2. Column 0 of the
    estimate is the implicit zero of the reference hypothesis.
    """
    l_est = np.asarray(l_est, dtype=float)
    aug = np.concatenate([np.zeros((l_est.shape[0], 1)), l_est], axis=1)
    return aug[:, None, :] - aug[:, :, None]


@dataclass
class HypothesisEstimate:
    """Per-agent best-hypothesis sets plus the vote counts behind them."""

    theta_sets: list
    positive_counts: np.ndarray
    malicious: list | None = None


def estimate_hypothesis_sets(d: np.ndarray, reference_set=None) -> HypothesisEstimate:
    """Read off each agent's set of best hypotheses from the comparisons.

    A hypothesis wins a vote against another when d is strictly positive; the
    agents' sets collect every hypothesis with a maximal vote count. When a
    reference set is given (the network-majority states), an agent whose set
    is disjoint from it is flagged.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 3 or d.shape[1] != d.shape[2]:
        raise ConfigError(f"expected comparisons of shape (n, H, H), got {d.shape}")
    counts = (d > 0.0).sum(axis=2)
    sets = [frozenset(np.flatnonzero(row == row.max()).tolist()) for row in counts]
    flags = None
    if reference_set is not None:
        ref = frozenset(int(j) for j in reference_set)
        if not ref:
            raise ConfigError("reference set must not be empty")
        flags = [ref.isdisjoint(s) for s in sets]
    return HypothesisEstimate(theta_sets=sets, positive_counts=counts, malicious=flags)


@dataclass(frozen=True)
class BoundEntry:
    """Error-probability bound plus the orders of its unresolved bias terms."""

    value: float
    residual_orders: tuple = RESIDUAL_ORDERS


def theorem_bound(model, truth, wrong_theta: int, batch_m: int, trace_r: float) -> BoundEntry:
    """Bound on the probability that wrong_theta enters an agent's estimated
    best set: (4 / M) * trace_r * sum over the true-equivalent states of the
    inverse divergence to wrong_theta.
    """
    state = int(getattr(truth, "state", truth))
    best = getattr(truth, "optimal", None)
    if best is None:
        best = optimal_set(model, state)
    if wrong_theta in best:
        raise ConfigError(
            f"hypothesis {wrong_theta} is indistinguishable from the true state; "
            "the bound applies only to distinguishable ones"
        )
    if batch_m < 1:
        raise ConfigError(f"window length M must be >= 1, got {batch_m}")
    inv_sum = sum(1.0 / model.kl_divergence(star, wrong_theta) for star in sorted(best))
    return BoundEntry(value=4.0 / batch_m * trace_r * inv_sum)


def theorem_bound_table(models, truths, batch_m: int, trace_r: float) -> dict:
    """Bound for every (agent, distinguishable wrong hypothesis) pair."""
    table = {}
    for k, (model, truth) in enumerate(zip(models, truths)):
        state = int(getattr(truth, "state", truth))
        best = getattr(truth, "optimal", None) or optimal_set(model, state)
        for j in range(model.n_hypotheses):
            if j not in best:
                table[(k, j)] = theorem_bound(model, truth, j, batch_m, trace_r)
    return table


def estimate_trace_r(models, truths, n_samples: int = 20000, seed=None) -> float:
    """Total fluctuation power E || L_i - Lbar ||_F^2 of the log-ratios.

    Exact for the categorical and Gaussian families; any other model falls
    back to Monte Carlo over n_samples observations.
    """
    total = 0.0
    rng = None
    for model, truth in zip(models, truths):
        state = int(getattr(truth, "state", truth))
        if isinstance(model, CategoricalLikelihood):
            probs = model.pmfs[state]
            logs = np.log(np.maximum(model.pmfs, 1e-12))
            vecs = (logs[0] - logs[1:]).T  # (S, H-1) log-ratio vector per symbol
            mean = probs @ vecs
            total += float(probs @ ((vecs - mean) ** 2).sum(axis=1))
        elif isinstance(model, GaussianLikelihood):
            diffs = model.means[0] - model.means[1:]
            total += float((diffs**2).sum() / model.variance)
        else:
            if rng is None:
                rng = np.random.default_rng(seed)
            draws = model.sample_many(state, n_samples, rng)
            rows = model.log_likelihood_all(draws)
            vecs = rows[:, :1] - rows[:, 1:]
            total += float(((vecs - vecs.mean(axis=0)) ** 2).sum(axis=1).mean())
    return total


def project_left_stochastic(a) -> np.ndarray:
    """Cosmetic projection for reports: clip to [0, 1] and renormalize columns.

    The estimator itself never projects; use this only when presenting a
    weight estimate as a graph.
    """
    out = np.clip(np.asarray(a, dtype=float), 0.0, 1.0)
    sums = out.sum(axis=0)
    for k, s in enumerate(sums):
        if s <= 1e-300:
            out[:, k] = 1.0 / out.shape[0]
        else:
            out[:, k] /= s
    return out


@dataclass
class InverseResult:
    """Estimates plus per-update diagnostics of one inverse run."""

    a_est: np.ndarray
    l_est: np.ndarray
    delta: float
    config: InverseConfig
    pushes: int
    updates: int
    converged: bool
    stop_reason: str
    a_step_norms: np.ndarray
    a_errors: np.ndarray | None = None
    l_errors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def _iter_lambdas(source):
    if isinstance(source, SimulationTrace):
        yield from source.lambdas
        return
    if isinstance(source, np.ndarray):
        if source.ndim != 3:
            raise ConfigError(f"belief stack must be 3-d (T, n, H), got shape {source.shape}")
        for psi in source:
            yield lambda_from_beliefs(psi)
        return
    for item in source:
        psi = item[1] if isinstance(item, tuple) else item
        yield lambda_from_beliefs(psi)


def run_inverse(
    source,
    config: InverseConfig | None = None,
    delta: float | None = None,
    a_init=None,
    l_init=None,
    a_true=None,
    l_true=None,
) -> InverseResult:
    """Drive the streaming estimator over a recorded or live belief stream.

    source may be a SimulationTrace, an array of belief rows (T, n, H), or an
    iterable of per-iteration beliefs (optionally (iteration, psi) pairs as
    produced by the JSONL reader). delta defaults to the trace's value and is
    required otherwise. Ground-truth matrices, when given, add per-update
    error curves to the diagnostics.

    Stops early once the relative Frobenius change of the weight estimate
    over the last M updates falls below config.tol, or when config.max_iter
    records have been consumed.
    """
    if isinstance(source, SimulationTrace):
        if delta is None:
            delta = source.delta
    if delta is None:
        raise ConfigError("delta is required when the source is not a trace")
    cfg = config or InverseConfig()
    est = None
    m = cfg.batch_m
    a_true = None if a_true is None else np.asarray(a_true, dtype=float)
    l_true = None if l_true is None else np.asarray(l_true, dtype=float)

    step_norms: list = []
    a_errors: list = []
    l_errors: list = []
    snapshots = None
    snap_count = 0
    converged = False
    stop_reason = "exhausted"

    for lam in _iter_lambdas(source):
        if est is None:
            lam = np.asarray(lam, dtype=float)
            if lam.ndim != 2:
                raise ConfigError(f"log-ratio records must be 2-d, got shape {lam.shape}")
            n, hm1 = lam.shape
            est = InverseEstimator(
                n, hm1 + 1, delta, cfg.step_mu, cfg.batch_m, a_init=a_init, l_init=l_init
            )
            snapshots = np.empty((m + 1, n, n))
        if est.push(lam):
            step_norms.append(est.last_step_norm)
            if a_true is not None:
                a_errors.append(float(np.linalg.norm(est._a - a_true)))
            if l_true is not None:
                l_errors.append(float(np.linalg.norm(est._l - l_true)))
            snapshots[snap_count % (m + 1)] = est._a
            snap_count += 1
            if snap_count > m and cfg.tol > 0.0:
                old = snapshots[(snap_count - 1 - m) % (m + 1)]
                denom = max(float(np.linalg.norm(old)), 1e-300)
                if float(np.linalg.norm(est._a - old)) / denom < cfg.tol:
                    converged = True
                    stop_reason = "converged"
                    break
        if cfg.max_iter is not None and est.pushes >= cfg.max_iter:
            stop_reason = "max_iter"
            break

    if est is None or est.updates == 0:
        seen = 0 if est is None else est.pushes
        raise InsufficientDataError(
            f"estimator needs at least {m + 2} records for one update, got {seen}"
        )

    return InverseResult(
        a_est=est.a_est,
        l_est=est.l_est,
        delta=float(delta),
        config=cfg,
        pushes=est.pushes,
        updates=est.updates,
        converged=converged,
        stop_reason=stop_reason,
        a_step_norms=np.asarray(step_norms),
        a_errors=np.asarray(a_errors) if a_true is not None else None,
        l_errors=np.asarray(l_errors) if l_true is not None else None,
    )

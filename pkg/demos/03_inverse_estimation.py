"""Recover the network and the agents' evidence from belief streams alone.

An observer who only sees the shared beliefs can still work backwards.
The public-belief log-ratios follow a noisy linear recursion driven by the
combination matrix and the log-likelihood ratios of the private data. The
online estimator fits both drivers at once: a stochastic-gradient step for
the weights and a windowed average for the expected log-ratios.
"""

import numpy as np

from soclearn import (
    InverseConfig,
    expected_log_ratios,
    rotated_categorical_scenario,
    run_inverse,
    run_simulation,
)

matrix, models, truths = rotated_categorical_scenario()
lbar = expected_log_ratios(models, truths)

trace = run_simulation(matrix, models, truths, delta=0.1, iterations=9000,
                       seed=33, record_likelihoods=False, record_beliefs=False)

result = run_inverse(
    trace,
    InverseConfig(step_mu=0.05, batch_m=50),
    a_true=matrix.weights,
    l_true=lbar,
)

print(f"processed {result.pushes} records, {result.updates} updates,"
      f" stopped by {result.stop_reason}")

print("\nweight-matrix error while the estimator runs:")
marks = np.linspace(0, result.updates - 1, 6).astype(int)
for i in marks:
    print(f"  update {i:5d}: ||A_hat - A||_F = {result.a_errors[i]:.4f}")

print("\nexpected log-ratio error at the end:"
      f" {result.l_errors[-1]:.4f} (true scale {np.linalg.norm(lbar):.4f})")

print("\ntrue weights, column of agent 0:", np.round(matrix.weights[:, 0], 3))
print("estimated           , agent 0:", np.round(result.a_est[:, 0], 3))

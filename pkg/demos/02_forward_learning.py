"""Watch a network of agents learn the true state of the world.

Each iteration has two phases. In the adaptation phase an agent tilts its
belief toward its fresh observation, with weight delta on the new evidence.
In the combination phase it geometrically averages the adapted beliefs of
its neighbors, using its column of the combination matrix. With informative
models and a strongly connected graph, every agent's belief concentrates on
the truth, and the argmax decisions lock in after a transient.
"""

import numpy as np

from soclearn import (
    rotated_categorical_scenario,
    run_simulation,
    social_learning_accuracy,
)

matrix, models, truths = rotated_categorical_scenario()
print("5 agents, 3 hypotheses, every agent observes under hypothesis 0")

trace = run_simulation(matrix, models, truths, delta=0.1, iterations=400, seed=21)

print("\ndecisions of agent 0 over time (should settle on 0):")
for t in (0, 5, 20, 80, 399):
    row = trace.estimates[t]
    print(f"  iteration {t:3d}: decisions {row.tolist()}")

acc = social_learning_accuracy(trace, truths, window=100)
print(f"\nfraction of correct decisions over the last 100 iterations: {acc:.3f}")

# the log-ratio trajectory shows the belief mass concentrating: lambda[t,k,j]
# compares hypothesis 0 against hypothesis j+1 for agent k, so positive and
# growing values mean the truth is pulling ahead
lam = trace.lambdas
print("\nmean log-ratio against the runner-up hypothesis:")
for t in (0, 50, 150, 399):
    print(f"  iteration {t:3d}: {lam[t, :, 0].mean():+.3f}")

print("\nbeliefs stay normalized throughout:",
      bool(np.abs(np.exp(trace.log_public).sum(axis=2) - 1).max() < 1e-10))

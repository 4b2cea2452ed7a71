"""Find the agent whose private data contradicts the network consensus.

One well-connected agent receives observations generated under the other
hypothesis. Social influence still drags its decisions to the majority
state, so watching beliefs alone does not expose it. The inverse pass
does: the recovered expected log-ratios describe each agent's own data,
and the hypothesis set they imply disagrees with the majority exactly at
the malicious node.
"""

import numpy as np

from soclearn import (
    InverseConfig,
    binary_detection_scenario,
    estimate_hypothesis_sets,
    informativeness,
    run_inverse,
    run_simulation,
)

matrix, models, truths, malicious = binary_detection_scenario()
print(f"10 agents; agent {malicious} (highest in-degree) observes under"
      " hypothesis 1 while everyone else observes under hypothesis 0")

trace = run_simulation(matrix, models, truths, delta=0.1, iterations=5000,
                       seed=2000, record_likelihoods=False, record_beliefs=False)

final = trace.estimates[-1]
print("\nfinal decisions:", final.tolist())
print("the malicious agent's own decision matches the majority:",
      bool(final[malicious] == 0), "- beliefs alone do not give it away")

result = run_inverse(trace, InverseConfig(batch_m=200))
estimate = estimate_hypothesis_sets(informativeness(result.l_est),
                                    reference_set={0})

print("\nrecovered per-agent hypothesis sets and flags:")
for k, (theta, flag) in enumerate(zip(estimate.theta_sets, estimate.malicious)):
    marker = "  <-- flagged" if flag else ""
    print(f"  agent {k}: {sorted(theta)}{marker}")

correct = [estimate.theta_sets[k] == truths[k].optimal for k in range(10)]
print("\nall sets match the generating states:", all(correct))
print("flagged exactly the malicious agent:",
      estimate.malicious == [k == malicious for k in range(10)])

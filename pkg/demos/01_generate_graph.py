"""Sample a random agent network and inspect its combination matrix.

The network is an undirected Erdos-Renyi graph with forced self-loops,
resampled until it is strongly connected. Each agent averages uniformly
over its neighborhood, which makes the matrix left stochastic: column k
holds the weights agent k assigns to everyone it listens to. The Perron
eigenvector of that matrix tells you how much long-run influence each
agent has on the network's collective opinion.
"""

import numpy as np

from soclearn import generate_erdos_renyi, perron_vector

matrix = generate_erdos_renyi(n=8, p=0.35, seed=11)

print("combination matrix (column k = weights used by agent k):")
with np.printoptions(precision=3, suppress=True):
    print(matrix.weights)

print("\ncolumn sums:", np.round(matrix.weights.sum(axis=0), 12))
print("in-degrees: ", matrix.in_degrees())

u = perron_vector(matrix)
print("\nPerron eigenvector (long-run influence of each agent):")
with np.printoptions(precision=4, suppress=True):
    print(u)
print("most influential agent:", int(np.argmax(u)))

# the same graph is always produced for the same seed
again = generate_erdos_renyi(n=8, p=0.35, seed=11)
print("\nresampling with the same seed reproduces it exactly:",
      np.array_equal(matrix.weights, again.weights))

"""qroute: capacitated vehicle routing on a QUBO core.

Cluster-first/route-second pipelines (capacity-aware K-Medoids or QUBO
clustering, then guided local search or a Hamiltonian-cycle TSP QUBO per
cluster), a monolithic CVRP QUBO for toy instances, simulated-annealing /
tabu / decomposition samplers, and a benchmark CLI.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

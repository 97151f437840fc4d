"""Quantum-walk state engineering sandbox.

Thin python layer over the C++ core: walk simulation, the photon-counting
cost oracle, the RBF surrogate optimizer, and the baseline optimizers.
All angles at this interface are in degrees.
"""

from ._core import (
    Oracle,
    __version__,
    coin_matrix,
    evolve_walker,
    fidelity,
    gram_schmidt_basis,
    latin_hypercube,
    minimize_rbf,
    param_count,
    powell,
    random_search,
    random_target,
)

__all__ = [
    "Oracle",
    "__version__",
    "coin_matrix",
    "evolve_walker",
    "fidelity",
    "gram_schmidt_basis",
    "latin_hypercube",
    "minimize_rbf",
    "param_count",
    "powell",
    "random_search",
    "random_target",
]

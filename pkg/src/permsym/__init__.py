"""permsym: exact numerics for qudit dynamics generated by site permutations.

The package simulates n-qudit systems whose unitaries commute with every
collective single-qudit rotation U^(x n).  Such unitaries are generated by
permutation operators, and the package provides:

- dense state vectors with the permutation action and swap-exponential
  gates (`permsym.states`),
- time evolution under piecewise-constant Hamiltonians built from
  permutation words (`permsym.dynamics`),
- the parity-based conserved functional f_sgn, the pair projector K and
  the decomposition solver behind it (`permsym.z2`),
- the free-fermion picture of the permuted-wedge subspace, single-particle
  reduced matrices and their conserved Renyi traces (`permsym.fermions`),
- sector decompositions of (C^d)^(x n): characters, isotypic projectors,
  Casimir data and blockwise Haar sampling (`permsym.sectors`),
- moment tests comparing random two-site circuits against the invariant
  Haar ensemble (`permsym.ensembles`),
- a config-driven command line (`permsym.cli`).
"""

from .states import (
    PermutationWord,
    QuditUnitary,
    StateVector,
    apply_permutation,
    apply_swap_exponential,
    dense_matrix_of_circuit,
    singlet_qutrits,
    wedge_state,
    wedge_state_from_labels,
)

__all__ = [
    "PermutationWord",
    "QuditUnitary",
    "StateVector",
    "apply_permutation",
    "apply_swap_exponential",
    "dense_matrix_of_circuit",
    "singlet_qutrits",
    "wedge_state",
    "wedge_state_from_labels",
]

__version__ = "0.1.0"

"""Named scalar probes sampled along evolution runs.

A probe is a (name, fn) pair with fn(t, state) -> float; evolve() records
one column per probe.  build_probes resolves the names appearing in config
files against the registry here, binding the Hamiltonian where needed.
"""

from __future__ import annotations

import numpy as np

from .fermions import omega_map, renyi_invariant
from .sectors import YoungDiagram, build_sector_table
from .states import StateVector
from .z2 import KProjector, f_sgn

__all__ = [
    "PROBE_NAMES",
    "UnknownProbeError",
    "build_probe",
    "build_probes",
    "sector_pair_expectation",
]


class UnknownProbeError(ValueError):
    """The requested probe name is not registered."""


def _normalized_power(state: StateVector, exponent: int) -> float:
    omega = omega_map(state, state.n, state.d).matrix
    trace = float(np.trace(omega).real)
    if trace < 1e-12:
        # nothing off |0> anywhere: the normalized matrix is undefined
        return 0.0
    return renyi_invariant(omega / trace, exponent)


def _probe_norm(t: float, state: StateVector) -> float:
    return state.norm()


def _probe_fsgn(t: float, state: StateVector) -> float:
    return f_sgn(state)


def _probe_purity(t: float, state: StateVector) -> float:
    return _normalized_power(state, 2)


def _probe_renyi3(t: float, state: StateVector) -> float:
    return _normalized_power(state, 3)


def _probe_trace_omega(t: float, state: StateVector) -> float:
    return renyi_invariant(omega_map(state, state.n, state.d), 1)


_SIMPLE = {
    "norm": _probe_norm,
    "fsgn": _probe_fsgn,
    "purity": _probe_purity,
    "renyi3": _probe_renyi3,
    "trace_omega": _probe_trace_omega,
}

PROBE_NAMES = ("norm", "energy", *sorted(set(_SIMPLE) - {"norm"}))


def sector_pair_expectation(state: StateVector, diagram: YoungDiagram) -> complex:
    """<psi x psi| K (Pi_lambda x I) |psi x psi>, one scalar per diagram.

    Both factors commute with V x V for every invariant V, so the full
    complex value is conserved sector by sector; summed over all diagrams
    with at most d rows it collapses to f_sgn.
    """
    k = KProjector(state.n, state.d)
    proj = build_sector_table(state.n, state.d).projector(diagram)
    left = k.apply_pair(state, state)
    right = np.kron(proj @ state.amps, state.amps)
    return complex(np.vdot(left, right))


def _sector_probe(spec: str):
    try:
        parts = tuple(int(p) for p in spec.split(","))
    except ValueError:
        raise UnknownProbeError(f"malformed sector probe {spec!r}") from None
    diagram = YoungDiagram(parts)
    label = "ksector_" + "_".join(str(p) for p in parts)

    def fn(t: float, state: StateVector) -> float:
        return sector_pair_expectation(state, diagram).real

    return label, fn


def build_probe(name: str, hamiltonian=None):
    """Resolve one probe name to a (name, fn) pair for evolve()."""
    if name == "energy":
        if hamiltonian is None:
            raise ValueError("the energy probe needs a Hamiltonian")

        def energy(t: float, state: StateVector) -> float:
            applied = hamiltonian.applier_at(t)(state.amps)
            return float(np.vdot(state.amps, applied).real)

        return "energy", energy
    if name.startswith("ksector:"):
        return _sector_probe(name.removeprefix("ksector:"))
    try:
        return name, _SIMPLE[name]
    except KeyError:
        raise UnknownProbeError(
            f"unknown probe {name!r}; registered: {', '.join(PROBE_NAMES)}"
            " and ksector:<row,row,...>"
        ) from None


def build_probes(names, hamiltonian=None):
    return [build_probe(name, hamiltonian) for name in names]

"""Monte Carlo moment comparisons between gate ensembles.

Deep random 2-local circuits are compared against two references: the
exact permutation twirl (first moments match, the 1-design property) and
blockwise-Haar invariant unitaries (second moments differ once d >= 3).
Every second-moment conclusion is routed through the exact conservation
law rather than circuit-convergence assumptions, so the verdicts hold at
finite depth; the Monte Carlo side only validates that shortcut.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .fermions import omega_map, renyi_invariant
from .sectors import haar_invariant_unitary
from .states import (
    DENSE_CAP,
    ResourceError,
    StateVector,
    all_permutation_words,
    dense_matrix_of_circuit,
    permutation_matrix,
    wedge_state,
)
from .dynamics import run_circuit

__all__ = [
    "EnsembleSpec",
    "MomentReport",
    "TwoLocalCircuit",
    "exact_permutation_twirl",
    "one_design_test",
    "sample_two_local",
    "sample_unitary",
    "two_design_violation_test",
]

ENSEMBLES = ("two_local_circuits", "haar_invariant", "permutation_twirl")
BATCHES = 10

# fixed stream tags so every consumer of the same spec seed stays independent
_STREAM_FIRST_MOMENT = 1
_STREAM_W = 2
_STREAM_SPOT = 3
_STREAM_HAAR_SIDE = 4


@dataclass(frozen=True)
class EnsembleSpec:
    ensemble: str = "two_local_circuits"
    circuit_depth: int = 200
    sample_count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if self.circuit_depth < 0:
            raise ValueError("circuit_depth must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def _stream(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *path]))


@dataclass(frozen=True)
class TwoLocalCircuit:
    """A product of swap exponentials with a recorded global phase.

    The phase makes the ensemble a subgroup containing e^{i theta} I; it
    cancels in every V . V-dagger estimator.
    """

    n: int
    gates: tuple
    global_phase: float

    def apply(self, state: StateVector) -> StateVector:
        moved = run_circuit(state, list(self.gates))
        return StateVector(
            moved.n, moved.d, np.exp(1j * self.global_phase) * moved.amps, copy=False
        )

    def dense(self, d: int, cap: int = DENSE_CAP) -> np.ndarray:
        matrix = dense_matrix_of_circuit(self.n, d, list(self.gates), cap=cap).matrix
        return np.exp(1j * self.global_phase) * matrix


def _draw_circuit(rng: np.random.Generator, n: int, depth: int) -> TwoLocalCircuit:
    phase = float(rng.uniform(0.0, 2.0 * np.pi))
    gates = []
    for _ in range(depth):
        a, b = rng.choice(n, size=2, replace=False) + 1
        gates.append((int(a), int(b), float(rng.uniform(0.0, 2.0 * np.pi))))
    return TwoLocalCircuit(n, tuple(gates), phase)


def sample_two_local(spec: EnsembleSpec, n: int, sample_index: int = 0) -> TwoLocalCircuit:
    """One circuit: depth gates with uniform pairs and angles in [0, 2pi)."""
    rng = _stream(spec.seed, _STREAM_FIRST_MOMENT, sample_index)
    return _draw_circuit(rng, n, spec.circuit_depth)


def sample_unitary(spec: EnsembleSpec, n: int, d: int, sample_index: int = 0) -> np.ndarray:
    """Dense matrix of one draw from the spec's ensemble."""
    if spec.ensemble == "two_local_circuits":
        return sample_two_local(spec, n, sample_index).dense(d)
    if spec.ensemble == "haar_invariant":
        return haar_invariant_unitary(
            n, d, np.random.SeedSequence([spec.seed, _STREAM_FIRST_MOMENT, sample_index])
        )
    rng = _stream(spec.seed, _STREAM_FIRST_MOMENT, sample_index)
    words = all_permutation_words(n)
    return permutation_matrix(n, d, words[rng.integers(len(words))])


def exact_permutation_twirl(a: np.ndarray, n: int, d: int) -> np.ndarray:
    """(1/n!) sum_sigma P_sigma A P_sigma-dagger, evaluated by index gather."""
    a = np.asarray(a, dtype=np.complex128)
    dim = d**n
    if a.shape != (dim, dim):
        raise ValueError(f"operator must be {dim}x{dim} for n={n}, d={d}")
    total = np.zeros_like(a)
    words = all_permutation_words(n)
    for word in words:
        g = word.index_map(d)
        # (P A P^dag)[i, j] = A[g(i), g(j)] since P[i, g(i)] = 1
        total += a[np.ix_(g, g)]
    return total / factorial(n)


@dataclass(frozen=True)
class MomentReport:
    test: str
    values: dict = field(default_factory=dict)
    standard_errors: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    passed: bool = False
    status: str = "ok"

    def to_json_dict(self) -> dict:
        return {
            "test": self.test,
            "values": {k: float(v) for k, v in self.values.items()},
            "standard_errors": {
                k: float(v) for k, v in self.standard_errors.items()
            },
            "thresholds": {k: float(v) for k, v in self.thresholds.items()},
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "passed": bool(self.passed),
            "status": self.status,
        }


def _batch_slices(total: int, batches: int):
    base, extra = divmod(total, batches)
    start = 0
    for k in range(batches):
        size = base + (1 if k < extra else 0)
        yield start, start + size
        start += size


def one_design_test(n: int, d: int, a: np.ndarray, spec: EnsembleSpec) -> MomentReport:
    """Compare the Monte Carlo mean of V A V-dagger with the permutation twirl.

    Both 2-local circuits and the full invariant group average any operator
    to the same first moment, so a single exact reference serves every
    ensemble choice.
    """
    if spec.sample_count < BATCHES:
        raise ValueError(f"need at least {BATCHES} samples for batched errors")
    dim = d**n
    if dim > DENSE_CAP:
        raise ResourceError(f"dense dimension {dim} exceeds cap {DENSE_CAP}")
    a = np.asarray(a, dtype=np.complex128)
    twirl = exact_permutation_twirl(a, n, d)

    batch_means = []
    index = 0
    for start, stop in _batch_slices(spec.sample_count, BATCHES):
        acc = np.zeros((dim, dim), dtype=np.complex128)
        for _ in range(start, stop):
            v = sample_unitary(spec, n, d, index)
            acc += v @ a @ v.conj().T
            index += 1
        batch_means.append(acc / (stop - start))
    batch_means = np.array(batch_means)

    mean = batch_means.mean(axis=0)
    distance = float(np.linalg.norm(mean - twirl))
    variances = np.abs(batch_means - mean) ** 2
    entry_variance = variances.sum(axis=0) / (BATCHES - 1) / BATCHES
    standard_error = float(np.sqrt(entry_variance.sum()))
    threshold = 5.0 * standard_error + 1e-12 * (1.0 + float(np.linalg.norm(a)))
    passed = distance <= threshold
    return MomentReport(
        test="one_design",
        values={"distance": distance, "twirl_norm": float(np.linalg.norm(twirl))},
        standard_errors={"distance": standard_error},
        thresholds={"distance": threshold},
        verdicts={"first_moment_matches": passed},
        passed=passed,
    )


def _fixture_state(n: int, d: int) -> StateVector:
    # the wedge of L = n-1 labels is a single-hole state whose spectrum no
    # invariant unitary can move, so cap the wedge at n-2 sites instead
    labels = min(d, n - 2)
    if labels < 1:
        raise ValueError("the default witness state needs at least 3 sites")
    return wedge_state(d, labels, tail=n - labels)


def _renyi2(state: StateVector) -> float:
    return renyi_invariant(omega_map(state, state.n, state.d), 2)


def two_design_violation_test(
    n: int,
    d: int,
    spec: EnsembleSpec,
    w_count: int = 20,
    spot_checks: int = 3,
    initial_state: StateVector | None = None,
) -> MomentReport:
    """Second-moment separation of 2-local circuits from invariant Haar.

    f(W) = Tr(Omega[W psi]^2) is conserved by every 2-local circuit, so
    E_{V~2loc} f(VW) equals f(W) exactly and its spread across W witnesses
    the W-dependence no 2-design could show.  The Haar side is estimated
    by Monte Carlo and must be flat in W.  Monte Carlo over circuits
    validates the exact shortcut on a few spot-checked W; because the
    conservation is pointwise the spot samples carry no noise, and the
    violation verdict rests on an absolute floor rather than their spread.
    """
    if w_count < 2:
        raise ValueError("need at least two reference unitaries")
    if spec.sample_count < BATCHES:
        raise ValueError(f"need at least {BATCHES} samples for batched errors")
    psi = initial_state if initial_state is not None else _fixture_state(n, d)
    if psi.n != n or psi.d != d:
        raise ValueError("witness state does not match the register")
    spot_checks = min(spot_checks, w_count)

    # W = I comes first so one spot check exercises E_V f(V psi) = f(psi)
    w_samples = [np.eye(d**n, dtype=np.complex128)] + [
        haar_invariant_unitary(n, d, np.random.SeedSequence([spec.seed, _STREAM_W, k]))
        for k in range(1, w_count)
    ]
    rotated = [StateVector(n, d, w @ psi.amps, copy=False) for w in w_samples]
    f_values = np.array([_renyi2(state) for state in rotated])
    spread = float(f_values.max() - f_values.min())

    # spot check: E_{V~2loc} f(V W psi) must reproduce f(W psi) within noise
    spot_errors = []
    spot_residuals = []
    for k in range(spot_checks):
        batch_means = []
        index = 0
        for start, stop in _batch_slices(spec.sample_count, BATCHES):
            acc = 0.0
            for _ in range(start, stop):
                rng = _stream(spec.seed, _STREAM_SPOT, k, index)
                circuit = _draw_circuit(rng, n, spec.circuit_depth)
                acc += _renyi2(circuit.apply(rotated[k]))
                index += 1
            batch_means.append(acc / (stop - start))
        batch_means = np.array(batch_means)
        se = float(batch_means.std(ddof=1) / np.sqrt(BATCHES))
        spot_errors.append(se)
        spot_residuals.append(abs(float(batch_means.mean()) - f_values[k]))
    se_scale = float(np.mean(spot_errors))
    spot_ok = all(
        resid <= 3.0 * se + 1e-9
        for resid, se in zip(spot_residuals, spot_errors)
    )

    # Haar side: V W is again Haar for Haar V, so the mean cannot depend on W
    haar_means = []
    haar_errors = []
    per_w = max(BATCHES, spec.sample_count // max(1, spot_checks))
    for k in range(spot_checks):
        batch_means = []
        index = 0
        for start, stop in _batch_slices(per_w, BATCHES):
            acc = 0.0
            for _ in range(start, stop):
                v = haar_invariant_unitary(
                    n,
                    d,
                    np.random.SeedSequence([spec.seed, _STREAM_HAAR_SIDE, k, index]),
                )
                acc += _renyi2(StateVector(n, d, v @ rotated[k].amps, copy=False))
                index += 1
            batch_means.append(acc / (stop - start))
        batch_means = np.array(batch_means)
        haar_means.append(float(batch_means.mean()))
        haar_errors.append(float(batch_means.std(ddof=1) / np.sqrt(BATCHES)))
    grand = float(np.mean(haar_means))
    haar_flat = all(
        abs(mean - grand) <= 3.0 * se + 1e-9
        for mean, se in zip(haar_means, haar_errors)
    )

    violation_threshold = max(10.0 * se_scale, 1e-6)
    if d >= 3:
        violation = spread > violation_threshold
        status = "ok"
        passed = violation and spot_ok and haar_flat
    else:
        # qubit registers conserve the whole Omega spectrum under all of
        # V_n, so the spread must vanish instead
        violation = False
        status = "no violation expected"
        flat_floor = max(3.0 * se_scale, 1e-9)
        passed = spread <= flat_floor and spot_ok and haar_flat

    return MomentReport(
        test="two_design_violation",
        values={
            "f_min": float(f_values.min()),
            "f_max": float(f_values.max()),
            "spread": spread,
            "haar_mean_spread": float(np.ptp(haar_means)),
            "max_spot_residual": float(max(spot_residuals)),
        },
        standard_errors={"spot": se_scale, "haar": float(np.mean(haar_errors))},
        thresholds={"violation": violation_threshold, "flatness": 3.0 * float(np.mean(haar_errors))},
        verdicts={
            "violation_witnessed": violation,
            "conservation_spot_checks": spot_ok,
            "haar_side_flat": haar_flat,
        },
        passed=passed,
        status=status,
    )

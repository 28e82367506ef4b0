"""Time evolution under Hamiltonians built from permutation words.

Hamiltonians are sums of terms (schedule, word): the word fixes a
permutation operator P(sigma), the schedule is a piecewise-constant
function of time given as breakpoints [(t_k, value_k)] (value_k holds on
[t_k, t_{k+1})); before the first breakpoint a term is off.  Piecewise
constancy is what the switching protocols need, and it keeps an exact
integrator available: on each constant piece the propagator is a single
Hermitian eigendecomposition.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .states import (
    DENSE_CAP,
    DimensionError,
    PermutationWord,
    ResourceError,
    StateVector,
    apply_swap_exponential,
)


class ModeError(ValueError):
    """Evolution mode and Hamiltonian properties are incompatible."""


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant coefficient: value_k on [t_k, t_{k+1}), 0 before t_0."""

    breakpoints: tuple[tuple[float, complex], ...]

    def __post_init__(self):
        times = [t for t, _ in self.breakpoints]
        if times != sorted(times) or len(set(times)) != len(times):
            raise ValueError("schedule breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, value) -> "Schedule":
        return cls(((0.0, value),))

    @classmethod
    def window(cls, t_on: float, t_off: float, value) -> "Schedule":
        return cls(((float(t_on), value), (float(t_off), 0.0)))

    def value_at(self, t: float) -> complex:
        times = [bp[0] for bp in self.breakpoints]
        k = bisect.bisect_right(times, t) - 1
        return 0.0 if k < 0 else self.breakpoints[k][1]

    def switch_times(self) -> list[float]:
        return [bp[0] for bp in self.breakpoints]

    def scaled(self, factor) -> "Schedule":
        return Schedule(tuple((t, factor * v) for t, v in self.breakpoints))


@dataclass(frozen=True)
class HamiltonianTerm:
    schedule: Schedule
    word: PermutationWord

    @classmethod
    def from_factors(cls, schedule: Schedule, factors) -> "HamiltonianTerm":
        """factors = [sigma_1, sigma_2, ...] composing P(sigma_1)P(sigma_2)..."""
        word = factors[0]
        for f in factors[1:]:
            word = word * f
        return cls(schedule, word)


class SymmetricHamiltonian:
    """H(t) = sum over terms of schedule(t) * P(word); identity excluded.

    Every collective rotation U^(x n) commutes with each P(sigma), so any
    such H generates invariant dynamics by construction.
    """

    def __init__(self, n: int, d: int, terms, check: bool = True):
        self.n = n
        self.d = d
        self.terms = list(terms)
        identity = PermutationWord.identity(n).images
        for term in self.terms:
            if term.word.n != n:
                raise DimensionError("term word size differs from register size")
            if term.word.images == identity and any(
                v != 0 for _, v in term.schedule.breakpoints
            ):
                raise ValueError("identity terms are excluded; shifts belong in probes")
        if check:
            self.check_hermitian()

    # -- constructors ------------------------------------------------------

    @classmethod
    def two_local(cls, n: int, d: int, couplings: dict, schedule=None) -> "SymmetricHamiltonian":
        """sum_{i<j} h_ij P_ij; couplings maps (i, j) to a real number."""
        sched = schedule or Schedule.constant(1.0)
        terms = [
            HamiltonianTerm(sched.scaled(h), PermutationWord.transposition(n, i, j))
            for (i, j), h in sorted(couplings.items())
        ]
        return cls(n, d, terms)

    @classmethod
    def random_all_pairs(cls, n: int, d: int, rng, low=-1.0, high=1.0) -> "SymmetricHamiltonian":
        """i.i.d. uniform couplings on every pair, seeded by the caller's rng."""
        couplings = {
            (i, j): float(rng.uniform(low, high))
            for i in range(1, n + 1)
            for j in range(i + 1, n + 1)
        }
        return cls.two_local(n, d, couplings)

    @classmethod
    def nearest_neighbor_chain(cls, n: int, d: int, coefficient=1.0) -> "SymmetricHamiltonian":
        """sum_i P_{i,i+1} on a closed chain (periodic wrap)."""
        couplings = {(i, i + 1): coefficient for i in range(1, n)}
        couplings[(1, n)] = coefficient
        return cls.two_local(n, d, couplings)

    # -- structure ----------------------------------------------------------

    def breakpoint_times(self) -> list[float]:
        times = set()
        for term in self.terms:
            times.update(term.schedule.switch_times())
        return sorted(times)

    def coefficients_at(self, t: float) -> dict[tuple[int, ...], complex]:
        coeffs: dict[tuple[int, ...], complex] = {}
        for term in self.terms:
            v = term.schedule.value_at(t)
            if v != 0:
                key = term.word.images
                coeffs[key] = coeffs.get(key, 0.0) + v
        return coeffs

    def check_hermitian(self, times=None):
        """h_sigma(t) = conj(h_{sigma^-1}(t)) at every breakpoint.

        The symbolic condition is exact at any size; when the dense matrix
        fits under the cap it is checked as well.
        """
        times = times if times is not None else (self.breakpoint_times() or [0.0])
        for t in times:
            coeffs = self.coefficients_at(t)
            for images, h in coeffs.items():
                inv = PermutationWord(self.n, images).inverse().images
                if abs(h - np.conj(coeffs.get(inv, 0.0))) > 1e-12:
                    raise ModeError(
                        f"coefficients at t={t} violate h_sigma = conj(h_sigma_inverse)"
                    )
            if self.d**self.n <= DENSE_CAP:
                m = self.matrix_at(t)
                if np.linalg.norm(m - m.conj().T) > 1e-10:
                    raise ModeError(f"dense matrix at t={t} is not Hermitian")

    def matrix_at(self, t: float, cap: int = DENSE_CAP) -> np.ndarray:
        dim = self.d**self.n
        if dim > cap:
            raise ResourceError(f"dense dimension {dim} exceeds cap {cap}")
        out = np.zeros((dim, dim), dtype=np.complex128)
        for images, h in self.coefficients_at(t).items():
            g = PermutationWord(self.n, images).index_map(self.d)
            out[np.arange(dim), g] += h
        return out

    def applier_at(self, t: float):
        """Matrix-free |v> -> H(t)|v> for the piece containing t."""
        axes_list = [
            (tuple(PermutationWord(self.n, images).inverse().images[i] - 1 for i in range(self.n)), h)
            for images, h in self.coefficients_at(t).items()
        ]
        shape = (self.d,) * self.n

        def apply(amps: np.ndarray) -> np.ndarray:
            tensor = amps.reshape(shape)
            out = np.zeros_like(amps)
            for axes, h in axes_list:
                out += h * np.transpose(tensor, axes).reshape(-1)
            return out

        return apply

    def apply_at(self, t: float, state: StateVector) -> StateVector:
        return StateVector(state.n, state.d, self.applier_at(t)(state.amps), copy=False)


def hamiltonian_matrix(h: SymmetricHamiltonian, t: float, cap: int = DENSE_CAP) -> np.ndarray:
    return h.matrix_at(t, cap=cap)


@dataclass
class EvolutionConfig:
    integrator: str = "exact_step"  # or "rk4"
    dt: float = 1e-3
    t_final: float = 1.0
    record_stride: int = 1
    renormalize: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.integrator not in ("exact_step", "rk4"):
            raise ValueError(f"unknown integrator {self.integrator!r}")


@dataclass
class TimeSeries:
    times: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    final_state: StateVector | None = None

    def to_csv(self, path):
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            fh.write("t," + ",".join(names) + "\n")
            for k, t in enumerate(self.times):
                row = [f"{t:.17g}"] + [f"{self.columns[c][k]:.17g}" for c in names]
                fh.write(",".join(row) + "\n")

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]


class _ExactPieceStepper:
    """Propagator for one constant piece via Hermitian eigendecomposition."""

    def __init__(self, h: SymmetricHamiltonian, t: float, cap: int):
        matrix = h.matrix_at(t, cap=cap)
        if np.linalg.norm(matrix - matrix.conj().T) > 1e-9 * max(
            1.0, np.linalg.norm(matrix)
        ):
            raise ModeError("exact_step needs a Hermitian Hamiltonian")
        self.energies, self.basis = np.linalg.eigh(matrix)

    def advance(self, amps: np.ndarray, delta: float) -> np.ndarray:
        phases = np.exp(-1j * self.energies * delta)
        return self.basis @ (phases * (self.basis.conj().T @ amps))


def evolve(
    state: StateVector,
    hamiltonian: SymmetricHamiltonian,
    config: EvolutionConfig,
    probes=None,
    cap: int = DENSE_CAP,
) -> TimeSeries:
    """Integrate i d|psi>/dt = H(t)|psi> and sample probes on the record grid.

    probes is a list of (name, fn) with fn(t, state) -> float, evaluated at
    t = 0 and then every record_stride steps.  Integration is split at the
    schedule breakpoints; within a piece the Hamiltonian is constant, so
    exact_step applies the piece propagator and rk4 uses the piece
    coefficients for all stages (sampling the next piece at a right edge
    would corrupt the step).
    """
    probes = probes or []
    if state.n != hamiltonian.n or state.d != hamiltonian.d:
        raise DimensionError("state and Hamiltonian registers differ")

    switch_times = [
        t for t in hamiltonian.breakpoint_times() if 0.0 < t < config.t_final
    ]
    piece_edges = [0.0] + switch_times + [config.t_final]

    record_times = [0.0]
    records = {name: [fn(0.0, state)] for name, fn in probes}

    amps = state.amps.copy()
    steps_since_record = 0

    for left, right in zip(piece_edges[:-1], piece_edges[1:]):
        if config.integrator == "exact_step":
            stepper = _ExactPieceStepper(hamiltonian, left, cap)
            step = stepper.advance
        else:
            hamiltonian.check_hermitian(times=[left])
            apply_h = hamiltonian.applier_at(left)

            def step(a, delta, apply_h=apply_h):
                return _rk4_step(apply_h, a, delta)

        t = left
        while t < right - 1e-12:
            delta = min(config.dt, right - t)
            amps = step(amps, delta)
            t += delta
            if abs(t - right) < 1e-9:
                t = right
            if config.renormalize:
                amps = amps / np.linalg.norm(amps)
            steps_since_record += 1
            if steps_since_record >= config.record_stride or t == config.t_final:
                steps_since_record = 0
                current = StateVector(state.n, state.d, amps, copy=False)
                record_times.append(t)
                for name, fn in probes:
                    records[name].append(fn(t, current))

    return TimeSeries(
        np.array(record_times),
        {k: np.array(v) for k, v in records.items()},
        final_state=StateVector(state.n, state.d, amps, copy=True),
    )


def _rk4_step(apply_h, amps, dt):
    def f(a):
        return -1j * apply_h(a)

    k1 = f(amps)
    k2 = f(amps + dt / 2 * k1)
    k3 = f(amps + dt / 2 * k2)
    k4 = f(amps + dt * k3)
    return amps + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def run_circuit(state: StateVector, gates) -> StateVector:
    """Sequential swap exponentials; gates = [(a, b, theta), ...]."""
    current = state
    for a, b, theta in gates:
        current = apply_swap_exponential(current, a, b, theta)
    return current


# -- Hamiltonian JSON interchange -------------------------------------------


def hamiltonian_to_json_dict(h: SymmetricHamiltonian) -> dict:
    terms = []
    for term in h.terms:
        entry: dict = {
            "schedule": [[t, _json_number(v)] for t, v in term.schedule.breakpoints]
        }
        moved = [i + 1 for i in range(h.n) if term.word.images[i] != i + 1]
        if len(moved) == 2:
            entry["pairs"] = moved
        else:
            entry["word"] = _cycles_of(term.word)
        terms.append(entry)
    return {"n": h.n, "d": h.d, "terms": terms}


def hamiltonian_from_json_dict(obj: dict) -> SymmetricHamiltonian:
    n, d = int(obj["n"]), int(obj["d"])
    terms = []
    for entry in obj["terms"]:
        schedule = Schedule(
            tuple((float(t), _complex_of(v)) for t, v in entry["schedule"])
        )
        if "pairs" in entry:
            i, j = entry["pairs"]
            word = PermutationWord.transposition(n, int(i), int(j))
        else:
            word = PermutationWord.from_cycles(n, entry["word"])
        terms.append(HamiltonianTerm(schedule, word))
    return SymmetricHamiltonian(n, d, terms)


def _cycles_of(word: PermutationWord) -> list[list[int]]:
    seen = [False] * word.n
    cycles = []
    for i in range(1, word.n + 1):
        if seen[i - 1]:
            continue
        cyc, j = [], i
        while not seen[j - 1]:
            seen[j - 1] = True
            cyc.append(j)
            j = word(j)
        if len(cyc) > 1:
            cycles.append(cyc)
    return cycles


def _json_number(v):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


def _complex_of(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)

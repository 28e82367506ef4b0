"""Free-fermion image of the permutation action and the single-particle map.

Fock space uses occupation bitmasks with mode 1 as the least significant
bit.  The canonical basis vector for an occupied set S is built by
applying creation operators in descending mode order, so the sign of any
operator string is the parity of the sort into that order; concretely,
applying c_a (or its adjoint) to a basis vector costs a minus sign per
occupied mode above a.

The correspondence: the span of permuted wedge blocks inside the qudit
register is isometric to the low-particle-number part of Fock space, with
P(sigma) intertwining to a product of fermionic exchange operators.
Everything downstream (the single-particle matrix Omega, its Renyi
traces, the covariance law) lives on that bridge.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .states import (
    DENSE_CAP,
    DimensionError,
    PermutationWord,
    ResourceError,
    StateVector,
    _check_state_dim,
    apply_local_unitary_everywhere,
    apply_permutation,
    apply_swap_exponential,
    digit_table,
    enumerate_permutations,
    wedge_state_from_labels,
)
from .z2 import InternalConsistencyError, NormalizationError


class FockVector:
    """Complex amplitudes over the 2^n occupation bitmasks."""

    __slots__ = ("n", "amps")

    def __init__(self, n: int, amps: np.ndarray, copy: bool = True):
        amps = np.array(amps, dtype=np.complex128, copy=copy).reshape(-1)
        if amps.shape[0] != 2**n:
            raise DimensionError(f"expected {2**n} amplitudes, got {amps.shape[0]}")
        self.n = n
        self.amps = amps

    @classmethod
    def vacuum(cls, n: int) -> "FockVector":
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n, amps, copy=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def inner(self, other: "FockVector") -> complex:
        if self.n != other.n:
            raise DimensionError("mode counts differ")
        return complex(np.vdot(self.amps, other.amps))

    def copy(self) -> "FockVector":
        return FockVector(self.n, self.amps, copy=True)


def _mode_sign_and_bit(n: int, mode: int) -> tuple[np.ndarray, int]:
    if not 1 <= mode <= n:
        raise DimensionError(f"mode {mode} out of range for n={n}")
    masks = np.arange(2**n, dtype=np.uint64)
    above = np.bitwise_count(masks >> np.uint64(mode))
    signs = np.where(above % 2 == 0, 1.0, -1.0)
    return signs, 1 << (mode - 1)


def create(state: FockVector, mode: int) -> FockVector:
    """c_mode^dagger acting on the vector."""
    signs, bit = _mode_sign_and_bit(state.n, mode)
    out = np.zeros_like(state.amps)
    masks = np.arange(2**state.n)
    empty = (masks & bit) == 0
    out[masks[empty] | bit] = signs[empty] * state.amps[empty]
    return FockVector(state.n, out, copy=False)


def annihilate(state: FockVector, mode: int) -> FockVector:
    """c_mode acting on the vector."""
    signs, bit = _mode_sign_and_bit(state.n, mode)
    out = np.zeros_like(state.amps)
    masks = np.arange(2**state.n)
    occupied = (masks & bit) != 0
    out[masks[occupied] & ~bit] = signs[occupied] * state.amps[occupied]
    return FockVector(state.n, out, copy=False)


def creation_matrix(n: int, mode: int, cap: int = DENSE_CAP) -> np.ndarray:
    dim = 2**n
    if dim > cap:
        raise ResourceError(f"dense Fock dimension {dim} exceeds cap {cap}")
    signs, bit = _mode_sign_and_bit(n, mode)
    masks = np.arange(dim)
    out = np.zeros((dim, dim), dtype=np.complex128)
    empty = (masks & bit) == 0
    out[masks[empty] | bit, masks[empty]] = signs[empty]
    return out


def annihilation_matrix(n: int, mode: int, cap: int = DENSE_CAP) -> np.ndarray:
    return creation_matrix(n, mode, cap).conj().T


def fermionic_swap_matrix(n: int, a: int, b: int, cap: int = DENSE_CAP) -> np.ndarray:
    """I - (c_a^dag - c_b^dag)(c_a - c_b), the exchange of modes a and b."""
    if a == b:
        raise DimensionError("exchange needs two distinct modes")
    da = creation_matrix(n, a, cap)
    db = creation_matrix(n, b, cap)
    diff = da - db
    return np.eye(2**n, dtype=np.complex128) - diff @ diff.conj().T


def fermionic_permutation_matrix(n: int, sigma: PermutationWord, cap: int = DENSE_CAP) -> np.ndarray:
    """Product of mode exchanges realizing P(sigma) on Fock space.

    A cycle (c1 c2 ... ck) factors as the operator product of exchanges
    (c1 c2)(c2 c3)...(c_{k-1} c_k); disjoint cycles commute.
    """
    if sigma.n != n:
        raise DimensionError("permutation size differs from mode count")
    out = np.eye(2**n, dtype=np.complex128)
    seen = [False] * n
    for start in range(1, n + 1):
        if seen[start - 1]:
            continue
        cycle, j = [], start
        while not seen[j - 1]:
            seen[j - 1] = True
            cycle.append(j)
            j = sigma(j)
        for a, b in zip(cycle[:-1], cycle[1:]):
            out = out @ fermionic_swap_matrix(n, a, b, cap)
    return out


def single_particle_swap(n: int, a: int, b: int) -> np.ndarray:
    """E_ab = I - (|a> - |b>)(<a| - <b|) on mode space."""
    if a == b or not (1 <= a <= n and 1 <= b <= n):
        raise DimensionError(f"invalid mode pair ({a},{b}) for n={n}")
    e = np.eye(n, dtype=np.complex128)
    diff = (e[:, a - 1] - e[:, b - 1]).reshape(-1, 1)
    return np.eye(n, dtype=np.complex128) - diff @ diff.conj().T


# -- the shared subspace and its Fock image ----------------------------------


class CompSubspaceBasis:
    """Orthonormal basis of the permuted-wedge subspace plus its Fock image.

    Every permuted wedge block is, up to sign, a wedge of labels 1..L over
    some site subset S with zeros elsewhere; distinct subsets give
    orthogonal vectors, so the subsets themselves index an orthonormal
    basis.  Column order is L ascending, then S in lexicographic order,
    which is exactly what orthonormalizing the redundant spanning set
    {P(sigma) [wedge x zeros]} in (L, sigma)-lexicographic order produces.
    The Fock image of the S column is c_{s_1}^dag ... c_{s_L}^dag |vac>.
    """

    def __init__(self, n: int, d: int):
        if n > 12 or d > 4:
            raise ResourceError(f"comp-basis budget is n <= 12, d <= 4, got ({n},{d})")
        dim = _check_state_dim(n, d)
        self.n = n
        self.d = d
        self.max_particles = min(n, d - 1)
        self.subsets: list[tuple[int, ...]] = []
        columns_q, columns_f = [], []
        for L in range(self.max_particles + 1):
            perms, signs = (
                enumerate_permutations(L) if L > 0 else (np.zeros((1, 0), dtype=int), [1])
            )
            scale = 1.0 / np.sqrt(max(1, len(perms)))
            for subset in combinations(range(1, n + 1), L):
                q = np.zeros(dim, dtype=np.complex128)
                for row, sgn in zip(perms, signs):
                    digits = [0] * n
                    for i, site in enumerate(subset):
                        digits[site - 1] = int(row[i])
                    index = 0
                    for m in digits:
                        index = index * d + m
                    q[index] = sgn * scale
                f = FockVector.vacuum(n)
                for site in reversed(subset):
                    f = create(f, site)
                self.subsets.append(subset)
                columns_q.append(q)
                columns_f.append(f.amps)
        self.qudit = np.array(columns_q).T  # (d^n, D)
        self.fock = np.array(columns_f).T  # (2^n, D)

    def dimension(self) -> int:
        return len(self.subsets)

    def sector_dimension(self, L: int) -> int:
        return comb(self.n, L) if 0 <= L <= self.max_particles else 0

    def coefficients(self, state: StateVector) -> np.ndarray:
        if state.n != self.n or state.d != self.d:
            raise DimensionError("state does not match the basis register")
        return self.qudit.conj().T @ state.amps

    def project(self, state: StateVector) -> StateVector:
        return StateVector(
            self.n, self.d, self.qudit @ self.coefficients(state), copy=False
        )

    def to_fock(self, state: StateVector) -> FockVector:
        """U^f applied to the projected state."""
        return FockVector(self.n, self.fock @ self.coefficients(state), copy=False)

    def projector_matrix(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.d**self.n > cap:
            raise ResourceError("dense projector exceeds cap")
        return self.qudit @ self.qudit.conj().T


@lru_cache(maxsize=8)
def build_comp_basis(n: int, d: int) -> CompSubspaceBasis:
    return CompSubspaceBasis(n, d)


def spanning_vector_qudit(n: int, d: int, sigma: PermutationWord, L: int) -> StateVector:
    """P(sigma) [ (wedge of 1..L) x |0..0> ], one member of the spanning set."""
    base = wedge_state_from_labels(d, range(1, L + 1), tail=n - L)
    return apply_permutation(base, sigma)


def spanning_vector_fock(n: int, sigma: PermutationWord, L: int) -> FockVector:
    """c^dag_{sigma(1)} ... c^dag_{sigma(L)} |vac>, its declared Fock image."""
    f = FockVector.vacuum(n)
    for i in reversed(range(1, L + 1)):
        f = create(f, sigma(i))
    return f


# -- the single-particle matrix ----------------------------------------------


@dataclass
class SingleParticleRDM:
    """The n x n matrix Omega; Hermitian, positive, unnormalized trace."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        scale = max(1.0, np.linalg.norm(m))
        if np.linalg.norm(m - m.conj().T) > 1e-12 * scale:
            raise InternalConsistencyError("Omega came out non-Hermitian")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -1e-10 * scale:
            raise InternalConsistencyError("Omega came out indefinite")
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> np.ndarray:
        t = self.trace()
        if t < 1e-12:
            raise ValueError("zero-trace Omega cannot be normalized")
        return self.matrix / t

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "matrix": [
                [[float(x.real), float(x.imag)] for x in row] for row in self.matrix
            ],
        }


def _as_ensemble(states) -> list[tuple[float, StateVector]]:
    if isinstance(states, StateVector):
        return [(1.0, states)]
    ensemble = [(float(w), s) for w, s in states]
    if any(w < 0 for w, _ in ensemble):
        raise ValueError("ensemble weights must be non-negative")
    total = sum(w for w, _ in ensemble)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"ensemble weights sum to {total}, expected 1")
    return ensemble


def _omega_pure_qudit(basis: CompSubspaceBasis, state: StateVector) -> np.ndarray:
    n, d = basis.n, basis.d
    psi = basis.project(state).amps
    dig = digit_table(n, d)
    omega = np.zeros((n, n), dtype=np.complex128)
    tensor_shape = (d,) * n
    for i in range(1, n + 1):
        occupied_i = dig[i - 1] != 0
        omega[i - 1, i - 1] = np.sum(np.abs(psi[occupied_i]) ** 2)
        for j in range(1, n + 1):
            if j == i:
                continue
            # Q_ij keeps site i occupied and site j empty, then the swap
            # carries the kept block to <psi| for the overlap
            keep = occupied_i & (dig[j - 1] == 0)
            masked = np.where(keep, psi, 0.0).reshape(tensor_shape)
            swapped = masked.swapaxes(i - 1, j - 1).reshape(-1)
            omega[i - 1, j - 1] = np.vdot(psi, swapped)
    return omega


def _omega_pure_fermion(basis: CompSubspaceBasis, state: StateVector) -> np.ndarray:
    f = basis.to_fock(state)
    lowered = [annihilate(f, i).amps for i in range(1, basis.n + 1)]
    a = np.array(lowered)  # rows: c_i |psi^f>
    # Omega_ij = <c_j psi, c_i psi>
    return a @ a.conj().T


def omega_map(states, n: int, d: int, backend: str = "qudit") -> SingleParticleRDM:
    """The single-particle matrix of a pure-state ensemble.

    Omega_ij = Tr(rho_comp P_ij Q_ij) for i != j, with Q_ij projecting
    site i out of |0> and site j onto |0>; diagonals count the weight off
    |0> per site.  The fermionic backend evaluates <c_j^dag c_i> on the
    Fock image instead; the two agree entrywise.
    """
    ensemble = _as_ensemble(states)
    basis = build_comp_basis(n, d)
    if backend not in ("qudit", "fermion"):
        raise ValueError(f"unknown backend {backend!r}")
    kernel = _omega_pure_qudit if backend == "qudit" else _omega_pure_fermion
    omega = np.zeros((n, n), dtype=np.complex128)
    for weight, state in ensemble:
        omega += weight * kernel(basis, state)
    return SingleParticleRDM(omega)


def renyi_invariant(omega, exponent: int) -> float:
    """Tr(Omega^l); Hermiticity is enforced before taking powers."""
    if exponent < 1:
        raise ValueError("exponent must be a positive integer")
    m = omega.matrix if isinstance(omega, SingleParticleRDM) else np.asarray(omega)
    m = (m + m.conj().T) / 2
    return float(np.trace(np.linalg.matrix_power(m, exponent)).real)


def rotated_renyi(state: StateVector, u: np.ndarray, exponent: int) -> float:
    """Tr(Omega[U^xn rho U^xn dag]^l), one conserved scalar per fixed U."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (state.d, state.d):
        raise DimensionError(f"expected a {state.d}x{state.d} rotation")
    if np.linalg.norm(u.conj().T @ u - np.eye(state.d)) > 1e-9 * state.d:
        raise ValueError("rotation must be unitary")
    rotated = apply_local_unitary_everywhere(state, u)
    return renyi_invariant(omega_map(rotated, state.n, state.d), exponent)


def covariance_check(states, n: int, d: int, a: int, b: int, theta: float) -> float:
    """|| Omega[rotated rho] - e^{i theta E} Omega[rho] e^{-i theta E} ||_F.

    The swap exponential inside the register must push through the map as
    the single-particle exchange rotation outside it.
    """
    ensemble = _as_ensemble(states)
    rotated = [(w, apply_swap_exponential(s, a, b, theta)) for w, s in ensemble]
    before = omega_map(ensemble, n, d).matrix
    after = omega_map(rotated, n, d).matrix
    e = single_particle_swap(n, a, b)
    g = np.cos(theta) * np.eye(n) + 1j * np.sin(theta) * e  # e^{i theta E}, E^2 = I
    return float(np.linalg.norm(after - g @ before @ g.conj().T))


# -- structure verification ----------------------------------------------------


def lie_closure_dimension(generators, tolerance: float = 1e-9, cap: int = 64) -> int:
    """Real dimension of the Lie algebra generated by anti-Hermitian matrices.

    Maintains a real-orthonormal basis (Gram-Schmidt) and adds commutators
    until no direction survives the rank tolerance.
    """
    mats = [np.asarray(g, dtype=np.complex128) for g in generators]
    if not mats:
        return 0
    m = mats[0].shape[0]
    if any(g.shape != (m, m) for g in mats):
        raise DimensionError("generators must share a square shape")
    if m > cap:
        raise ResourceError(f"matrix dimension {m} exceeds cap {cap}")
    for g in mats:
        if np.linalg.norm(g + g.conj().T) > 1e-9 * max(1.0, np.linalg.norm(g)):
            raise ValueError("generators must be anti-Hermitian")

    def to_vec(x):
        return np.concatenate([x.real.reshape(-1), x.imag.reshape(-1)])

    basis_mats: list[np.ndarray] = []
    basis_vecs: list[np.ndarray] = []

    def admit(x):
        v = to_vec(x)
        for u in basis_vecs:
            v = v - (u @ v) * u
        norm = np.linalg.norm(v)
        if norm <= tolerance:
            return False
        v /= norm
        basis_vecs.append(v)
        normalized = x / np.linalg.norm(x.reshape(-1))
        # re-orthogonalized matrix form kept alongside for commutators
        basis_mats.append(normalized)
        return True

    for g in mats:
        admit(g)
    tried = set()
    grew = True
    while grew:
        grew = False
        snapshot = len(basis_mats)
        for i in range(snapshot):
            for j in range(i + 1, snapshot):
                if (i, j) in tried:
                    continue
                tried.add((i, j))
                x, y = basis_mats[i], basis_mats[j]
                if admit(x @ y - y @ x):
                    grew = True
    return len(basis_vecs)


def _antisymmetric_mode_basis(n: int, L: int) -> np.ndarray:
    """(n^L, C(n,L)) orthonormal wedge columns over mode labels."""
    if L == 0:
        return np.ones((1, 1), dtype=np.complex128)
    columns = []
    for subset in combinations(range(n), L):
        columns.append(wedge_state_from_labels(n, subset).amps)
    return np.array(columns).T


def wedge_sector_equivalence(
    n: int, L: int, seed: int = 11, samples: int = 5, cap: int = DENSE_CAP
) -> bool:
    """Particle-number block of mode exchanges vs wedge powers of E.

    Checks the dimension identity C(n,L) = C(n-1,L) + C(n-1,L-1) and, for
    random angles and pairs, that the L-particle block of
    e^{i theta (P^f_ab - I)} and the antisymmetric restriction of
    (e^{i theta (E_ab - I)})^{x L} have the same eigenvalue multiset.
    """
    if L == 0:
        return True
    if not 0 < L < n:
        raise ValueError(f"L={L} out of range for n={n}")
    if comb(n, L) > cap or n**L > cap:
        raise ResourceError("wedge equivalence exceeds the dense budget")
    if comb(n, L) != comb(n - 1, L) + comb(n - 1, L - 1):
        return False

    rng = np.random.default_rng(seed)
    masks = np.arange(2**n)
    sector = np.nonzero(np.bitwise_count(masks.astype(np.uint64)) == L)[0]
    wedge_basis = _antisymmetric_mode_basis(n, L)
    for _ in range(samples):
        theta = float(rng.uniform(0, 2 * np.pi))
        a = int(rng.integers(1, n + 1))
        b = int(rng.integers(1, n + 1))
        while b == a:
            b = int(rng.integers(1, n + 1))
        pf = fermionic_swap_matrix(n, a, b)
        vf = np.exp(-1j * theta) * (
            np.cos(theta) * np.eye(2**n) + 1j * np.sin(theta) * pf
        )
        block_fock = vf[np.ix_(sector, sector)]

        e = single_particle_swap(n, a, b)
        g = np.exp(-1j * theta) * (np.cos(theta) * np.eye(n) + 1j * np.sin(theta) * e)
        g_power = np.array([[1.0]], dtype=np.complex128)
        for _ in range(L):
            g_power = np.kron(g_power, g)
        block_wedge = wedge_basis.conj().T @ g_power @ wedge_basis

        left = np.sort_complex(np.linalg.eigvals(block_fock))
        right = np.sort_complex(np.linalg.eigvals(block_wedge))
        if np.max(np.abs(left - right)) > 1e-9:
            return False
    return True

"""Dense state vectors for n qudits and the permutation action on them.

Index convention, fixed once for the whole package: site 1 is the most
significant base-d digit of the computational-basis index, so the basis
string (m_1, ..., m_n) has index sum_i m_i * d^(n-i).

P(sigma) moves the content of site i to site sigma(i).  On basis strings
that reads out[m] = in[m o sigma] with (m o sigma)_i = m_{sigma(i)}, and
it makes P a homomorphism under the usual composition:
P(sigma2) P(sigma1) = P(sigma2 o sigma1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations as _lex_permutations

import numpy as np

# Dense matrices (unitaries, projectors, Hamiltonians) are capped separately
# from plain state vectors: 6 qutrits (729) and 9 qutrits (19683) must both
# fit as states, while 729 is the largest dimension we routinely square.
DENSE_CAP = 4096
STATE_CAP = 24000


class DimensionError(ValueError):
    """Sizes of two objects that must act on the same register disagree."""


class InvalidGateError(ValueError):
    """A gate referenced a site pair it cannot act on."""


class ResourceError(ValueError):
    """A dense construction would exceed the configured cap."""


def _check_state_dim(n: int, d: int, cap: int = STATE_CAP) -> int:
    dim = d**n
    if dim > cap:
        raise ResourceError(f"state dimension d^n = {dim} exceeds cap {cap}")
    return dim


@lru_cache(maxsize=64)
def digit_table(n: int, d: int) -> np.ndarray:
    """(n, d^n) array: row i-1 holds digit m_i of every basis index."""
    dim = _check_state_dim(n, d)
    idx = np.arange(dim)
    rows = [(idx // d ** (n - i)) % d for i in range(1, n + 1)]
    return np.array(rows, dtype=np.int32)


@lru_cache(maxsize=64)
def place_values(n: int, d: int) -> np.ndarray:
    """d^(n-i) for i = 1..n, so index = place_values . digits."""
    return np.array([d ** (n - i) for i in range(1, n + 1)], dtype=np.int64)


@dataclass(frozen=True)
class PermutationWord:
    """An element of S_n in one-line notation: images[i-1] = sigma(i)."""

    n: int
    images: tuple[int, ...]

    def __post_init__(self):
        if len(self.images) != self.n or sorted(self.images) != list(
            range(1, self.n + 1)
        ):
            raise ValueError(f"images {self.images} is not a bijection on 1..{self.n}")

    @classmethod
    def identity(cls, n: int) -> "PermutationWord":
        return cls(n, tuple(range(1, n + 1)))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> "PermutationWord":
        if not (1 <= a <= n and 1 <= b <= n) or a == b:
            raise InvalidGateError(f"invalid transposition ({a},{b}) on {n} sites")
        images = list(range(1, n + 1))
        images[a - 1], images[b - 1] = b, a
        return cls(n, tuple(images))

    @classmethod
    def from_cycles(cls, n: int, cycles) -> "PermutationWord":
        """Compose a list of cycles, leftmost cycle acting last (operator order).

        Each cycle (a, b, c, ...) maps a -> b -> c -> ... -> a.  Disjoint
        cycles commute, so for the usual disjoint-cycle input the order is
        irrelevant.
        """
        word = cls.identity(n)
        for cyc in cycles:
            cyc = list(cyc)
            if len(set(cyc)) != len(cyc) or not all(1 <= x <= n for x in cyc):
                raise ValueError(f"bad cycle {cyc} on {n} sites")
            images = list(range(1, n + 1))
            for k, x in enumerate(cyc):
                images[x - 1] = cyc[(k + 1) % len(cyc)]
            word = word * cls(n, tuple(images))
        return word

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "PermutationWord") -> "PermutationWord":
        """Product defined so that P(self * other) = P(self) P(other)."""
        if self.n != other.n:
            raise DimensionError("permutation sizes differ")
        return PermutationWord(
            self.n, tuple(self.images[other.images[i] - 1] for i in range(self.n))
        )

    def inverse(self) -> "PermutationWord":
        inv = [0] * self.n
        for i, img in enumerate(self.images, start=1):
            inv[img - 1] = i
        return PermutationWord(self.n, tuple(inv))

    def sign(self) -> int:
        seen = [False] * self.n
        sgn = 1
        for i in range(self.n):
            if seen[i]:
                continue
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = self.images[j] - 1
                length += 1
            if length % 2 == 0:
                sgn = -sgn
        return sgn

    def cycle_type(self) -> tuple[int, ...]:
        seen = [False] * self.n
        lengths = []
        for i in range(self.n):
            if seen[i]:
                continue
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = self.images[j] - 1
                length += 1
            lengths.append(length)
        return tuple(sorted(lengths, reverse=True))

    def index_map(self, d: int) -> np.ndarray:
        """Gather map g with (P(sigma) psi)[k] = psi[g[k]] for all k."""
        dig = digit_table(self.n, d)
        pv = place_values(self.n, d)
        g = np.zeros(d**self.n, dtype=np.int64)
        for i in range(1, self.n + 1):
            g += pv[i - 1] * dig[self.images[i - 1] - 1]
        return g


def enumerate_permutations(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All of S_n in lexicographic one-line order, with signs.

    Returns (perms, signs): perms is (n!, n) with 1-based images, signs is
    (n!,) in {+1,-1}.  Signs come from vectorized inversion counting.
    """
    perms = np.array(list(_lex_permutations(range(1, n + 1))), dtype=np.int8)
    inversions = np.zeros(len(perms), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            inversions += perms[:, i] > perms[:, j]
    signs = np.where(inversions % 2 == 0, 1, -1).astype(np.int8)
    return perms, signs


@lru_cache(maxsize=16)
def _cached_permutations(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n > 10:
        raise ResourceError(f"permutation enumeration budget is n <= 10, got {n}")
    return enumerate_permutations(n)


def all_permutation_words(n: int):
    perms, _ = _cached_permutations(n)
    return [PermutationWord(n, tuple(int(x) for x in row)) for row in perms]


class StateVector:
    """Complex amplitudes over the d^n computational basis."""

    __slots__ = ("n", "d", "amps")

    def __init__(self, n: int, d: int, amps: np.ndarray, copy: bool = True):
        dim = _check_state_dim(n, d)
        amps = np.array(amps, dtype=np.complex128, copy=copy).reshape(-1)
        if amps.shape[0] != dim:
            raise DimensionError(f"expected {dim} amplitudes, got {amps.shape[0]}")
        self.n = n
        self.d = d
        self.amps = amps

    @classmethod
    def basis_string(cls, d: int, digits) -> "StateVector":
        digits = list(digits)
        n = len(digits)
        if not all(0 <= m < d for m in digits):
            raise ValueError(f"digits {digits} out of range for d={d}")
        amps = np.zeros(d**n, dtype=np.complex128)
        amps[int(place_values(n, d) @ np.array(digits))] = 1.0
        return cls(n, d, amps, copy=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        return StateVector(self.n, self.d, self.amps / self.norm(), copy=False)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        self._check_same_register(other)
        return complex(np.vdot(self.amps, other.amps))

    def tensor(self, other: "StateVector") -> "StateVector":
        if self.d != other.d:
            raise DimensionError("local dimensions differ")
        return StateVector(
            self.n + other.n, self.d, np.kron(self.amps, other.amps), copy=False
        )

    def _check_same_register(self, other: "StateVector"):
        if self.n != other.n or self.d != other.d:
            raise DimensionError(
                f"registers differ: ({self.n},{self.d}) vs ({other.n},{other.d})"
            )

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.d, self.amps, copy=True)

    # -- JSON interchange ------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "amps": [[float(a.real), float(a.imag)] for a in self.amps],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "StateVector":
        amps = np.array([complex(re, im) for re, im in obj["amps"]])
        return cls(int(obj["n"]), int(obj["d"]), amps, copy=False)

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load_json(cls, path) -> "StateVector":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


class QuditUnitary:
    """Dense unitary on (C^d)^(x n), for small-n verification paths."""

    __slots__ = ("n", "d", "matrix")

    def __init__(self, n: int, d: int, matrix: np.ndarray, check: bool = True):
        dim = d**n
        if dim > DENSE_CAP:
            raise ResourceError(f"dense dimension {dim} exceeds cap {DENSE_CAP}")
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (dim, dim):
            raise DimensionError(f"expected {dim}x{dim} matrix, got {matrix.shape}")
        if check:
            err = np.linalg.norm(matrix.conj().T @ matrix - np.eye(dim))
            if err > 1e-9 * dim:
                raise ValueError(f"matrix is not unitary (deviation {err:.2e})")
        self.n = n
        self.d = d
        self.matrix = matrix

    def apply(self, state: StateVector) -> StateVector:
        if state.n != self.n or state.d != self.d:
            raise DimensionError("unitary and state act on different registers")
        return StateVector(state.n, state.d, self.matrix @ state.amps, copy=False)


def apply_permutation(state: StateVector, sigma: PermutationWord) -> StateVector:
    if state.n != sigma.n:
        raise DimensionError(f"state has {state.n} sites, permutation has {sigma.n}")
    tensor = state.amps.reshape((state.d,) * state.n)
    # out[m] = in[m o sigma] means the transpose axes are the inverse images
    axes = [sigma.inverse().images[i] - 1 for i in range(state.n)]
    out = np.ascontiguousarray(np.transpose(tensor, axes)).reshape(-1)
    return StateVector(state.n, state.d, out, copy=False)


def _swapped_amps(state: StateVector, a: int, b: int) -> np.ndarray:
    tensor = state.amps.reshape((state.d,) * state.n)
    return np.ascontiguousarray(tensor.swapaxes(a - 1, b - 1)).reshape(-1)


def apply_swap_exponential(
    state: StateVector, a: int, b: int, theta: float
) -> StateVector:
    """e^(i theta P_ab) |state> = cos(theta)|state> + i sin(theta) P_ab|state>."""
    if a == b:
        raise InvalidGateError("swap exponential needs two distinct sites")
    if not (1 <= a <= state.n and 1 <= b <= state.n):
        raise DimensionError(f"sites ({a},{b}) out of range for n={state.n}")
    out = np.cos(theta) * state.amps + 1j * np.sin(theta) * _swapped_amps(state, a, b)
    return StateVector(state.n, state.d, out, copy=False)


def apply_local_unitary_everywhere(state: StateVector, u: np.ndarray) -> StateVector:
    """u^(x n) |state> for a single-qudit u."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (state.d, state.d):
        raise DimensionError(f"expected {state.d}x{state.d} local unitary")
    tensor = state.amps.reshape((state.d,) * state.n)
    for site in range(state.n):
        tensor = np.tensordot(u, tensor, axes=([1], [site]))
        tensor = np.moveaxis(tensor, 0, site)
    return StateVector(state.n, state.d, np.ascontiguousarray(tensor).reshape(-1))


def wedge_state_from_labels(d: int, labels, tail: int = 0) -> StateVector:
    """Antisymmetrized product of distinct single-site labels, then |0>^tail.

    labels = (l_1, .., l_L) builds (1/sqrt(L!)) sum_sigma sgn(sigma)
    |l_sigma(1) .. l_sigma(L)> on the first L sites.
    """
    labels = list(labels)
    L = len(labels)
    if len(set(labels)) != L:
        raise ValueError("wedge labels must be distinct")
    if not all(0 <= l < d for l in labels):
        raise ValueError(f"labels {labels} out of range for d={d}")
    n = L + tail
    dim = _check_state_dim(n, d)
    amps = np.zeros(dim, dtype=np.complex128)
    pv = place_values(n, d)
    perms, signs = enumerate_permutations(L) if L > 0 else (np.zeros((1, 0)), [1])
    scale = 1.0 / np.sqrt(max(1, len(perms)))
    for row, sgn in zip(perms, signs):
        digits = [labels[int(row[i]) - 1] for i in range(L)] + [0] * tail
        amps[int(pv @ np.array(digits))] = sgn * scale
    return StateVector(n, d, amps, copy=False)


def wedge_state(d: int, L: int, tail: int = 0) -> StateVector:
    """The L-fold wedge of basis labels on L + tail sites.

    Labels are 1..L while L < d; the maximal wedge L = d uses all labels
    0..d-1 (the unique totally antisymmetric state of d qudits).
    """
    if L > d:
        raise ValueError(
            f"cannot antisymmetrize {L} sites of dimension {d}: "
            "no totally antisymmetric state exists"
        )
    if L < 0 or tail < 0:
        raise ValueError("L and tail must be non-negative")
    labels = list(range(d)) if L == d else list(range(1, L + 1))
    return wedge_state_from_labels(d, labels, tail)


def singlet_qutrits(tail: int = 0) -> StateVector:
    """|0> ^ |1> ^ |2>, the totally antisymmetric state of 3 qutrits."""
    return wedge_state(3, 3, tail)


def dense_matrix_of_circuit(
    n: int, d: int, gates, cap: int = DENSE_CAP
) -> QuditUnitary:
    """Product of swap-exponential matrices, gates applied in list order."""
    dim = d**n
    if dim > cap:
        raise ResourceError(f"dense dimension {dim} exceeds cap {cap}")
    matrix = np.eye(dim, dtype=np.complex128)
    for a, b, theta in gates:
        if a == b:
            raise InvalidGateError("swap exponential needs two distinct sites")
        # apply the gate to every column at once: rows index the output, so
        # the site swap acts inside the row (first) index block
        tensor = matrix.reshape((d,) * n + (dim,))
        swapped = tensor.swapaxes(a - 1, b - 1).reshape(dim, dim)
        matrix = np.cos(theta) * matrix + 1j * np.sin(theta) * swapped
    return QuditUnitary(n, d, matrix)


def permutation_matrix(n: int, d: int, sigma: PermutationWord) -> np.ndarray:
    """Dense P(sigma); columns are permuted basis vectors."""
    dim = d**n
    if dim > DENSE_CAP:
        raise ResourceError(f"dense dimension {dim} exceeds cap {DENSE_CAP}")
    g = sigma.index_map(d)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[np.arange(dim), g] = 1.0
    return mat

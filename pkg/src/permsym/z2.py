"""Parity machinery on pairs of registers: K, f_sgn, and decomposability.

K is the signed permutation average (1/n!) sum_sigma sgn(sigma)
P(sigma) x P(sigma) acting on two copies of the register.  Pairing site i
of the first copy with site i of the second turns P(sigma) x P(sigma)
into an ordinary site permutation of local dimension d^2, so K is the
total antisymmetrizer of n sites of dimension d^2: a projector of rank
C(d^2, n), identically zero once n > d^2.

An operator H = sum h_sigma P(sigma) with h_sigma = -sgn(sigma)
conj(h_sigma) annihilates K from both sides (up to a shift), and that is
exactly the condition under which the functional

    f_sgn(psi) = (1/n!) sum_sigma sgn(sigma) <psi|P(sigma)|psi>^2
               = <psi x psi| K |psi x psi>

is a constant of motion.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .states import (
    DENSE_CAP,
    DimensionError,
    PermutationWord,
    ResourceError,
    StateVector,
    _cached_permutations,
    apply_local_unitary_everywhere,
    digit_table,
    place_values,
)


class NormalizationError(ValueError):
    """Input state is too far from unit norm."""


class InvarianceError(ValueError):
    """Operator fails the collective-rotation invariance precondition."""


class NoDecompositionError(ValueError):
    """Operator does not admit the signed permutation decomposition."""


class InternalConsistencyError(RuntimeError):
    """A quantity that must be real or bounded came out otherwise."""


# -- f_sgn -------------------------------------------------------------------

# Below this many gather entries the full (n!, d^n) index table is cached;
# larger cases stream over permutation chunks instead.
_GATHER_CACHE_LIMIT = 40_000_000


@lru_cache(maxsize=8)
def _gather_table(n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """(signs, G) with G[s, k] the index map of the s-th permutation."""
    perms, signs = _cached_permutations(n)
    dig = digit_table(n, d)
    pv = place_values(n, d)
    g = np.zeros((len(perms), d**n), dtype=np.int64)
    for i in range(n):
        g += pv[i] * dig[perms[:, i] - 1]
    return signs, g


def permutation_overlaps(state: StateVector) -> tuple[np.ndarray, np.ndarray]:
    """(signs, overlaps) with overlaps[s] = <psi|P(sigma_s)|psi>, lex order."""
    n, d, psi = state.n, state.d, state.amps
    perms, signs = _cached_permutations(n)
    dim = d**n
    if len(perms) * dim <= _GATHER_CACHE_LIMIT:
        _, g = _gather_table(n, d)
        return signs.astype(np.float64), psi[g] @ psi.conj()

    dig = digit_table(n, d)
    pv = place_values(n, d)
    chunk = max(1, _GATHER_CACHE_LIMIT // (8 * dim))
    out = np.empty(len(perms), dtype=np.complex128)
    for start in range(0, len(perms), chunk):
        block = perms[start : start + chunk]
        g = np.zeros((len(block), dim), dtype=np.int64)
        for i in range(n):
            g += pv[i] * dig[block[:, i] - 1]
        out[start : start + chunk] = psi[g] @ psi.conj()
    return signs.astype(np.float64), out


def f_sgn(state: StateVector) -> float:
    """(1/n!) sum_sigma sgn(sigma) <psi|P(sigma)|psi>^2, a real in [0, 1]."""
    if abs(state.norm() - 1.0) > 1e-6:
        raise NormalizationError(f"state norm {state.norm():.8f} is not 1")
    signs, overlaps = permutation_overlaps(state)
    total = np.sum(signs * overlaps**2) / factorial(state.n)
    if abs(total.imag) > 1e-10:
        raise InternalConsistencyError(f"f_sgn imaginary part {total.imag:.2e}")
    value = float(total.real)
    if not -1e-10 <= value <= 1 + 1e-10:
        raise InternalConsistencyError(f"f_sgn {value} outside [0, 1]")
    return value


def f_sgn_product(factors) -> float:
    """det of the entrywise-squared Gram matrix over n!, for product states.

    factors are single-site states (StateVector with n = 1, or plain
    length-d arrays).  Equals f_sgn of the tensor product.
    """
    vecs = []
    for f in factors:
        v = f.amps if isinstance(f, StateVector) else np.asarray(f, dtype=complex)
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise NormalizationError("every factor must be unit norm")
        vecs.append(v.reshape(-1))
    gram = np.array([[np.vdot(a, b) for b in vecs] for a in vecs])
    det = np.linalg.det(gram**2) / factorial(len(vecs))
    if abs(det.imag) > 1e-10:
        warnings.warn(
            f"squared-Gram determinant has imaginary part {det.imag:.2e}; "
            "reporting the real part",
            stacklevel=2,
        )
    return float(det.real)


# -- the K projector ---------------------------------------------------------


class KProjector:
    """Signed permutation average on two register copies.

    apply() works matrix-free at any size with n <= 10 via the recursion
    A_j = A_{j-1} (1/j)(I - sum_{k<j} T_kj) over paired-site swaps; the
    dense form is materialized only under the cap.  Indexing of pair
    vectors is k1 * d^n + k2 (first copy most significant).
    """

    def __init__(self, n: int, d: int):
        if n > 10:
            raise ResourceError(f"permutation budget is n <= 10, got {n}")
        self.n = n
        self.d = d
        self.pair_dim = (d**n) ** 2

    def rank(self) -> int:
        return comb(self.d**2, self.n) if self.n <= self.d**2 else 0

    def is_zero(self) -> bool:
        return self.n > self.d**2

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        if vec.shape[0] != self.pair_dim:
            raise DimensionError(
                f"expected pair vector of length {self.pair_dim}, got {vec.shape[0]}"
            )
        if self.is_zero():
            return np.zeros_like(vec)
        n, d = self.n, self.d
        tensor = vec.reshape((d,) * (2 * n))
        # innermost factor first: A_n = e_2 e_3 .. e_n with
        # e_j = (1/j)(I - sum_{k<j} T_kj), T acting on both copies at once
        for j in range(n, 1, -1):
            acc = tensor.copy()
            for k in range(1, j):
                acc -= tensor.swapaxes(k - 1, j - 1).swapaxes(n + k - 1, n + j - 1)
            tensor = acc / j
        return np.ascontiguousarray(tensor).reshape(-1)

    def apply_pair(self, psi1: StateVector, psi2: StateVector) -> np.ndarray:
        psi1._check_same_register(psi2)
        if psi1.n != self.n or psi1.d != self.d:
            raise DimensionError("states do not match the projector register")
        return self.apply(np.kron(psi1.amps, psi2.amps))

    def dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.pair_dim > cap:
            raise ResourceError(
                f"dense pair dimension {self.pair_dim} exceeds cap {cap}"
            )
        out = np.empty((self.pair_dim, self.pair_dim), dtype=np.complex128)
        eye = np.eye(self.pair_dim, dtype=np.complex128)
        for k in range(self.pair_dim):
            out[:, k] = self.apply(eye[:, k])
        return out


def build_k_projector(n: int, d: int) -> KProjector:
    return KProjector(n, d)


def k_expectation_pair(k: KProjector, psi1: StateVector, psi2: StateVector) -> np.ndarray:
    """K(|psi1> x |psi2>), the pair vector whose constancy tracks Eq.-level
    invariance of two trajectories under a shared decomposable evolution."""
    return k.apply_pair(psi1, psi2)


# -- the decomposability criterion -------------------------------------------


@dataclass
class Z2Report:
    satisfied: bool
    shift: float | None
    residual: float
    method: str

    def to_json_dict(self) -> dict:
        return {
            "satisfied": bool(self.satisfied),
            "shift": None if self.shift is None else float(self.shift),
            "residual": float(self.residual),
            "method": self.method,
        }


def _check_invariance(h: np.ndarray, n: int, d: int, rng, samples: int = 3):
    scale = max(1.0, np.linalg.norm(h))
    for _ in range(samples):
        u = _haar_unitary(d, rng)
        # compare H (U^xn psi) against U^xn (H psi) on a random probe state
        psi = rng.standard_normal(d**n) + 1j * rng.standard_normal(d**n)
        psi /= np.linalg.norm(psi)
        sv = StateVector(n, d, psi, copy=False)
        left = apply_local_unitary_everywhere(StateVector(n, d, h @ psi, copy=False), u)
        right = h @ apply_local_unitary_everywhere(sv, u).amps
        if np.linalg.norm(left.amps - right) > 1e-8 * scale:
            raise InvarianceError(
                "operator does not commute with collective rotations"
            )


def _haar_unitary(dim: int, rng) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    ph = np.diag(r)
    return q * (ph / np.abs(ph))


def _pair_product(h: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """(H x I + I x H) vec without forming the pair matrix."""
    dim = h.shape[0]
    v = vec.reshape(dim, dim)
    return (h @ v + v @ h.T).reshape(-1)


def z2_criterion(
    h: np.ndarray,
    n: int,
    d: int,
    allow_shift: bool = True,
    cap: int = DENSE_CAP,
    seed: int = 7,
    probes: int = 8,
) -> Z2Report:
    """Test K(H x I + I x H) = 2 alpha K, the decomposability criterion.

    Dense when the pair dimension fits under the cap, otherwise sampled on
    random probe vectors with the matrix-free K.  The reported residual is
    relative to max(1, ||H||_F).
    """
    h = np.asarray(h, dtype=np.complex128)
    dim = d**n
    if h.shape != (dim, dim):
        raise DimensionError(f"expected {dim}x{dim} operator, got {h.shape}")
    if np.linalg.norm(h - h.conj().T) > 1e-10 * max(1.0, np.linalg.norm(h)):
        raise ValueError("operator must be Hermitian")
    rng = np.random.default_rng(seed)
    _check_invariance(h, n, d, rng)

    k = build_k_projector(n, d)
    scale = max(1.0, np.linalg.norm(h))
    if k.is_zero():
        return Z2Report(True, 0.0 if allow_shift else None, 0.0, "zero-projector")

    if k.pair_dim <= cap:
        kd = k.dense(cap)
        m = np.kron(h, np.eye(dim)) + np.kron(np.eye(dim), h)
        km = kd @ m
        # alpha minimizing ||KM - 2 alpha K||: Tr(K.KM) = Tr(KM) since K^2 = K
        alpha = float(np.trace(km).real / (2 * np.trace(kd).real))
        if not allow_shift:
            alpha = 0.0
        residual = float(np.linalg.norm(km - 2 * alpha * kd) / scale)
        return Z2Report(
            residual < 1e-8, alpha if allow_shift else None, residual, "dense"
        )

    # sampled path: KM = 2 alpha K holds iff K M w = 2 alpha w for every w in
    # the range of K, so probe with unit vectors projected onto that range
    # (raw Gaussian probes would dilute the residual by the tiny fraction of
    # the pair space that K occupies)
    ws, ys = [], []
    for _ in range(probes):
        v = rng.standard_normal(k.pair_dim) + 1j * rng.standard_normal(k.pair_dim)
        w = k.apply(v)
        wnorm = np.linalg.norm(w)
        if wnorm < 1e-12:
            raise InternalConsistencyError("probe annihilated by a nonzero projector")
        w /= wnorm
        ws.append(w)
        ys.append(k.apply(_pair_product(h, w)))
    alpha = float(sum(np.vdot(w, y).real for w, y in zip(ws, ys)) / (2 * len(ws)))
    if not allow_shift:
        alpha = 0.0
    residual = float(max(np.linalg.norm(y - 2 * alpha * w) for w, y in zip(ws, ys)) / scale)
    return Z2Report(
        residual < 1e-8, alpha if allow_shift else None, residual, "probe"
    )


# -- the decomposition solver -------------------------------------------------


@dataclass
class Z2Decomposition:
    """h_sigma with h = -sgn conj(h), plus the identity shift alpha."""

    n: int
    d: int
    shift: float
    coefficients: dict[tuple[int, ...], complex]
    residual: float

    def coefficient(self, word: PermutationWord) -> complex:
        return self.coefficients.get(word.images, 0.0)

    def reconstruct(self, cap: int = DENSE_CAP) -> np.ndarray:
        dim = self.d**self.n
        if dim > cap:
            raise ResourceError(f"dense dimension {dim} exceeds cap {cap}")
        out = np.eye(dim, dtype=np.complex128) * self.shift
        rows = np.arange(dim)
        for images, coeff in self.coefficients.items():
            g = PermutationWord(self.n, images).index_map(self.d)
            out[rows, g] += coeff
        return out

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "shift": self.shift,
            "residual": self.residual,
            "coefficients": [
                {"images": list(images), "value": [c.real, c.imag]}
                for images, c in sorted(self.coefficients.items())
                if abs(c) > 1e-12
            ],
        }


def _agreement_gram(g: np.ndarray) -> np.ndarray:
    """Gram[s, t] = Tr(P_s^T P_t) = number of indices where the maps agree."""
    count = len(g)
    gram = np.zeros((count, count), dtype=np.float64)
    dim = g.shape[1]
    # bound the boolean comparison cube to ~64 MB per chunk
    chunk = max(1, (64 << 20) // (count * count))
    for start in range(0, dim, chunk):
        block = g[:, start : start + chunk]
        gram += (block[:, None, :] == block[None, :, :]).sum(axis=2)
    return gram


def z2_decompose(
    h: np.ndarray, n: int, d: int, cap: int = DENSE_CAP, seed: int = 7
) -> Z2Decomposition:
    """Solve H = alpha I + sum_sigma h_sigma P(sigma) with h = -sgn conj(h).

    Real unknowns: the shift alpha, real coefficients on odd permutations,
    and imaginary coefficients i b on even non-identity permutations.  The
    normal equations use Tr(P_s^T P_t), and the two parity blocks decouple
    exactly because Re(-i Tr(P^T P')) = 0.  Rank-deficient but consistent
    systems return the minimum-norm solution.
    """
    report = z2_criterion(h, n, d, allow_shift=True, cap=cap, seed=seed)
    if not report.satisfied:
        raise NoDecompositionError(
            f"criterion residual {report.residual:.2e} exceeds 1e-8"
        )
    h = np.asarray(h, dtype=np.complex128)
    dim = d**n
    perms, signs = _cached_permutations(n)
    _, g = _gather_table(n, d)

    # r[s] = Tr(P_s^T H) = sum_k H[k, g_s[k]], gathered along the rows of H
    rows = np.arange(dim)
    r = np.array([h[rows, gs].sum() for gs in g])

    gram = _agreement_gram(g)
    identity_index = int(np.nonzero((perms == np.arange(1, n + 1)).all(axis=1))[0][0])
    odd = np.nonzero(signs < 0)[0]
    even = np.array(
        [s for s in np.nonzero(signs > 0)[0] if s != identity_index], dtype=int
    )

    # block [alpha; a_odd]: basis {I, P_odd}, right side Re Tr(B^T H)
    idx1 = np.concatenate(([identity_index], odd))
    sol1 = _min_norm_solve(gram[np.ix_(idx1, idx1)], r[idx1].real)
    alpha, a_odd = float(sol1[0]), sol1[1:]

    # block [b_even]: basis {i P_even}, Gram unchanged, right side Im Tr(P^T H)
    b_even = (
        _min_norm_solve(gram[np.ix_(even, even)], r[even].imag)
        if len(even)
        else np.zeros(0)
    )

    coefficients: dict[tuple[int, ...], complex] = {}
    for s, a in zip(odd, a_odd):
        coefficients[tuple(int(x) for x in perms[s])] = complex(a)
    for s, b in zip(even, b_even):
        coefficients[tuple(int(x) for x in perms[s])] = 1j * complex(b)

    decomposition = Z2Decomposition(n, d, alpha, coefficients, 0.0)
    residual = float(
        np.linalg.norm(decomposition.reconstruct(cap=cap) - h)
        / max(1.0, np.linalg.norm(h))
    )
    decomposition.residual = residual
    if residual > 1e-8:
        raise NoDecompositionError(
            f"reconstruction residual {residual:.2e} exceeds 1e-8"
        )
    return decomposition


def _min_norm_solve(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of the PSD normal equations gram x = rhs."""
    vals, vecs = np.linalg.eigh(gram)
    cut = 1e-10 * max(1.0, vals[-1] if len(vals) else 1.0)
    inv = np.where(vals > cut, 1.0 / np.maximum(vals, cut), 0.0)
    return vecs @ (inv * (vecs.T @ rhs))

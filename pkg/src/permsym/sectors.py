"""Sector decomposition of n qudits under commuting S_n and SU(d) actions.

The register splits into isotypic sectors labeled by Young diagrams with
at most d rows.  Each sector factors into an SU(d) charge space of
dimension d_lambda and a multiplicity space of dimension m_lambda; the
permutation action is irreducible on the multiplicity factor and trivial
on the charge factor, and collective rotations act the other way around.
Characters come from the Murnaghan-Nakayama rule in exact integer
arithmetic, dimensions from the hook formulas, and every projector is a
character-weighted sum of permutations applied as index maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .states import (
    DENSE_CAP,
    DimensionError,
    PermutationWord,
    ResourceError,
    StateVector,
    all_permutation_words,
)


class SectorNotPresentError(ValueError):
    """Raised for a diagram with more rows than the local dimension."""


@dataclass(frozen=True)
class YoungDiagram:
    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise ValueError(f"partition parts must be positive, got {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"partition must be weakly decreasing, got {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def rows(self) -> int:
        return len(self.parts)

    def _hooks(self):
        conjugate = [
            sum(1 for p in self.parts if p > j) for j in range(self.parts[0])
        ]
        return [
            (i, j, self.parts[i] - j + conjugate[j] - i - 1)
            for i in range(self.rows)
            for j in range(self.parts[i])
        ]

    def sn_dimension(self) -> int:
        """Hook-length formula for the S_n irrep dimension m_lambda."""
        product = 1
        for _, _, hook in self._hooks():
            product *= hook
        dim, remainder = divmod(factorial(self.n), product)
        assert remainder == 0
        return dim

    def su_dimension(self, d: int) -> int:
        """Hook-content formula for the SU(d) irrep dimension; 0 if absent."""
        if self.rows > d:
            return 0
        numerator, denominator = 1, 1
        for i, j, hook in self._hooks():
            numerator *= d + j - i
            denominator *= hook
        dim, remainder = divmod(numerator, denominator)
        assert remainder == 0
        return dim

    def casimir(self, d: int) -> float:
        """Eigenvalue of (1/2) sum_a (sum_i T_i^a)^2 on this sector.

        Weight formula sum_i p_i (p_i + d + 1 - 2i) - n^2/d, normalized
        for Tr(T^a T^b) = 2 delta; reproduces 2j(j+1) at d=2.
        """
        if self.rows > d:
            raise SectorNotPresentError(f"{self.parts} has more than {d} rows")
        rows = sum(p * (p + d + 1 - 2 * (i + 1)) for i, p in enumerate(self.parts))
        return rows - self.n**2 / d


def partitions_of(n: int, max_rows: int | None = None) -> list:
    """Partitions of n in reverse-lexicographic order, largest part first."""

    def generate(remaining, cap, rows_left):
        if remaining == 0:
            yield ()
            return
        if rows_left == 0:
            return
        for first in range(min(remaining, cap), 0, -1):
            for tail in generate(remaining - first, first, rows_left - 1):
                yield (first,) + tail

    rows = n if max_rows is None else max_rows
    return [YoungDiagram(parts) for parts in generate(n, n, rows)]


@lru_cache(maxsize=None)
def _mn_character(parts: tuple, cycles: tuple) -> int:
    if not cycles:
        return 1
    k, rest = cycles[0], cycles[1:]
    r = len(parts)
    beta = tuple(parts[i] + (r - 1 - i) for i in range(r))
    total = 0
    for i, b in enumerate(beta):
        lowered = b - k
        if lowered < 0 or lowered in beta:
            continue
        height = sum(1 for x in beta if lowered < x < b)
        new_beta = sorted(
            [x for j, x in enumerate(beta) if j != i] + [lowered], reverse=True
        )
        new_parts = tuple(
            p
            for j in range(r)
            if (p := new_beta[j] - (r - 1 - j)) > 0
        )
        total += (-1) ** height * _mn_character(new_parts, rest)
    return total


def character(diagram: YoungDiagram, cycle_type) -> int:
    """Irreducible S_n character at a conjugacy class, exact integer."""
    cycles = tuple(sorted((int(c) for c in cycle_type), reverse=True))
    if any(c <= 0 for c in cycles):
        raise ValueError(f"cycle type must be positive, got {cycles}")
    if sum(cycles) != diagram.n:
        raise DimensionError(
            f"cycle type {cycles} does not match partition of {diagram.n}"
        )
    return _mn_character(diagram.parts, cycles)


def class_size(cycle_type) -> int:
    """Number of permutations with the given cycle type."""
    cycles = tuple(sorted(cycle_type, reverse=True))
    n = sum(cycles)
    centralizer = 1
    for k in set(cycles):
        count = cycles.count(k)
        centralizer *= k**count * factorial(count)
    return factorial(n) // centralizer


# -- dense sector operators ---------------------------------------------------


def _transposition_character(diagram: YoungDiagram) -> int:
    if diagram.n < 2:
        raise DimensionError("transposition class needs n >= 2")
    return character(diagram, (2,) + (1,) * (diagram.n - 2))


def gell_mann_basis(d: int) -> list:
    """Generalized Gell-Mann generators with Tr(T^a T^b) = 2 delta_ab.

    Ordering: symmetric pairs, antisymmetric pairs, then diagonal, each
    row-major.
    """
    basis = []
    for i in range(d):
        for j in range(i + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[i, j] = sym[j, i] = 1.0
            basis.append(sym)
    for i in range(d):
        for j in range(i + 1, d):
            anti = np.zeros((d, d), dtype=np.complex128)
            anti[i, j] = -1j
            anti[j, i] = 1j
            basis.append(anti)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag).astype(np.complex128) * np.sqrt(2 / (l * (l + 1))))
    return basis


def _collective_operator(local: np.ndarray, n: int, d: int) -> np.ndarray:
    total = np.zeros((d**n, d**n), dtype=np.complex128)
    for site in range(n):
        term = np.eye(d ** site, dtype=np.complex128)
        term = np.kron(term, local)
        term = np.kron(term, np.eye(d ** (n - site - 1), dtype=np.complex128))
        total += term
    return total


def casimir_matrix(n: int, d: int, cap: int = DENSE_CAP) -> np.ndarray:
    """C2 = (1/2) sum_a (sum_i T_i^a)^2 over the Gell-Mann set."""
    if d**n > cap:
        raise ResourceError(f"dense dimension {d**n} exceeds cap {cap}")
    total = np.zeros((d**n, d**n), dtype=np.complex128)
    for generator in gell_mann_basis(d):
        collective = _collective_operator(generator, n, d)
        total += collective @ collective
    return total / 2


def z_matrix(n: int, d: int, cap: int = DENSE_CAP) -> np.ndarray:
    """Z = sum over ordered pairs of the transposition operators."""
    dim = d**n
    if dim > cap:
        raise ResourceError(f"dense dimension {dim} exceeds cap {cap}")
    rows = np.arange(dim)
    total = np.zeros((dim, dim), dtype=np.complex128)
    for a in range(1, n + 1):
        for b in range(a + 1, n + 1):
            g = PermutationWord.transposition(n, a, b).index_map(d)
            total[rows, g] += 2.0  # both ordered pairs share one matrix
    return total


def isotypic_projector(
    diagram: YoungDiagram, n: int, d: int, cap: int = DENSE_CAP
) -> np.ndarray:
    """(m_lambda / n!) sum_sigma chi_lambda(sigma) P(sigma), dense."""
    if diagram.n != n:
        raise DimensionError(f"diagram {diagram.parts} is not a partition of {n}")
    dim = d**n
    if dim > cap:
        raise ResourceError(f"dense dimension {dim} exceeds cap {cap}")
    rows = np.arange(dim)
    total = np.zeros((dim, dim), dtype=np.float64)
    for word in all_permutation_words(n):
        weight = character(diagram, word.cycle_type())
        if weight != 0:
            total[rows, word.index_map(d)] += weight
    scale = diagram.sn_dimension() / factorial(n)
    return (total * scale).astype(np.complex128)


def c_lambda(diagram: YoungDiagram, d: int) -> float:
    return diagram.casimir(d)


def z_lambda(diagram: YoungDiagram, d: int) -> float:
    """Eigenvalue of Z on the sector: c_lambda + n(n - d^2)/d."""
    n = diagram.n
    return diagram.casimir(d) + n * (n - d**2) / d


def b_lambda(diagram: YoungDiagram, d: int, method: str = "character") -> float:
    """Transposition expectation on the sector, by three routes.

    casimir: (d c_lambda + n(n - d^2)) / (d n (n - 1));
    character: chi_lambda(transposition class) / m_lambda;
    trace_ratio: Tr(P_12 Pi_lambda) / Tr(Pi_lambda) on the dense register.
    """
    if diagram.rows > d:
        raise SectorNotPresentError(
            f"{diagram.parts} does not appear for local dimension {d}"
        )
    n = diagram.n
    if n < 2:
        raise DimensionError("b_lambda needs at least two sites")
    if method == "casimir":
        return (d * diagram.casimir(d) + n * (n - d**2)) / (d * n * (n - 1))
    if method == "character":
        return _transposition_character(diagram) / diagram.sn_dimension()
    if method == "trace_ratio":
        projector = isotypic_projector(diagram, n, d)
        g = PermutationWord.transposition(n, 1, 2).index_map(d)
        numerator = projector[g, np.arange(d**n)].sum()
        return float((numerator / np.trace(projector)).real)
    raise ValueError(f"unknown method {method!r}")


# -- the sector table ----------------------------------------------------------


@dataclass(frozen=True)
class SectorInfo:
    diagram: YoungDiagram
    multiplicity: int  # S_n irrep dimension m_lambda
    dimension: int  # SU(d) irrep dimension d_lambda
    casimir: float
    z: float
    b: float


class SectorTable:
    """All sectors of (n, d) with projectors built on demand."""

    def __init__(self, n: int, d: int, cap: int = DENSE_CAP):
        if n < 2:
            raise DimensionError("sector table needs at least two sites")
        self.n = n
        self.d = d
        self.cap = cap
        self.sectors = [
            SectorInfo(
                diagram=diagram,
                multiplicity=diagram.sn_dimension(),
                dimension=diagram.su_dimension(d),
                casimir=diagram.casimir(d),
                z=z_lambda(diagram, d),
                b=b_lambda(diagram, d, "character"),
            )
            for diagram in partitions_of(n, max_rows=d)
        ]
        self._projectors = {}
        self._bases = {}

    def diagrams(self) -> list:
        return [info.diagram for info in self.sectors]

    def projector(self, diagram: YoungDiagram) -> np.ndarray:
        if diagram.parts not in self._projectors:
            self._projectors[diagram.parts] = isotypic_projector(
                diagram, self.n, self.d, self.cap
            )
        return self._projectors[diagram.parts]

    def basis(self, diagram: YoungDiagram) -> np.ndarray:
        """Orthonormal columns spanning the sector, cached per diagram."""
        if diagram.parts not in self._bases:
            info = next(s for s in self.sectors if s.diagram == diagram)
            self._bases[diagram.parts] = _sector_basis(
                self.projector(diagram), info.multiplicity * info.dimension
            )
        return self._bases[diagram.parts]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "sectors": [
                {
                    "partition": list(info.diagram.parts),
                    "multiplicity": info.multiplicity,
                    "dimension": info.dimension,
                    "casimir": info.casimir,
                    "z": info.z,
                    "b": info.b,
                }
                for info in self.sectors
            ],
        }


@lru_cache(maxsize=8)
def build_sector_table(n: int, d: int) -> SectorTable:
    return SectorTable(n, d)


@dataclass
class CenterFit:
    member: bool
    alpha: float
    beta: float
    residual: float


def center_membership(values: dict, d: int) -> CenterFit:
    """Fit sector values to alpha + beta b_lambda.

    A Hamiltonian acting as h_lambda on each sector commutes with every
    2-local symmetric unitary exactly when such an affine fit is exact.
    """
    if not values:
        raise ValueError("no sector values supplied")
    normalized = {YoungDiagram(tuple(key)): float(v) for key, v in values.items()}
    n = next(iter(normalized)).n
    expected = partitions_of(n, max_rows=d)
    missing = [dia.parts for dia in expected if dia not in normalized]
    if missing or len(normalized) != len(expected):
        raise ValueError(f"values must cover exactly the sectors of (n={n}, d={d})")
    bs = np.array([b_lambda(dia, d) for dia in expected])
    target = np.array([normalized[dia] for dia in expected])
    design = np.column_stack([np.ones_like(bs), bs])
    coeffs, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.max(np.abs(design @ coeffs - target)))
    return CenterFit(
        member=bool(residual < 1e-9),
        alpha=float(coeffs[0]),
        beta=float(coeffs[1]),
        residual=residual,
    )


# -- Haar sampling of invariant unitaries --------------------------------------


def _sector_basis(projector: np.ndarray, expected_rank: int) -> np.ndarray:
    eigenvalues, vectors = np.linalg.eigh(projector)
    keep = eigenvalues > 0.5
    if keep.sum() != expected_rank:
        raise ResourceError(
            f"sector rank {keep.sum()} disagrees with m*d = {expected_rank}"
        )
    return vectors[:, keep]


def haar_invariant_unitary(
    n: int, d: int, seed: int, cap: int = DENSE_CAP
) -> np.ndarray:
    """A Haar sample from the group of all SU(d)-invariant unitaries.

    A Gaussian element of the permutation-group algebra restricts to each
    sector as identity-on-charge tensor an independent Ginibre matrix on
    the multiplicity space (Schur orthogonality makes the entries iid),
    and the polar unitary part of a Ginibre matrix is Haar.  Taking the
    blockwise polar part therefore samples independent Haar multiplicity
    unitaries without ever needing an aligned tensor basis.
    """
    dim = d**n
    if dim > cap:
        raise ResourceError(f"dense dimension {dim} exceeds cap {cap}")
    table = build_sector_table(n, d)
    rng = np.random.default_rng(seed)
    words = all_permutation_words(n)
    coefficients = rng.normal(size=len(words)) + 1j * rng.normal(size=len(words))
    rows = np.arange(dim)
    element = np.zeros((dim, dim), dtype=np.complex128)
    for word, coefficient in zip(words, coefficients):
        element[rows, word.index_map(d)] += coefficient

    out = np.zeros((dim, dim), dtype=np.complex128)
    for info in table.sectors:
        basis = table.basis(info.diagram)
        block = basis.conj().T @ element @ basis
        u, _, vh = np.linalg.svd(block)
        out += basis @ (u @ vh) @ basis.conj().T
    return out

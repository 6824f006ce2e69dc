"""Truncated bosonic modes and their direct (one-hot) and compact (binary) qubit encodings."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pauli import PauliSum, simplify, to_matrix_on

CREATE = "create"
ANNIHILATE = "annihilate"
NUMBER = "number"
IDENTITY = "identity"
LADDER_KINDS = (CREATE, ANNIHILATE, NUMBER, IDENTITY)

DIRECT = "direct"
COMPACT = "compact"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class LadderOp:
    kind: str
    mode: int

    def __post_init__(self):
        if self.kind not in LADDER_KINDS:
            raise EncodingError(f"unknown ladder operator kind {self.kind!r}")
        if self.mode < 0:
            raise EncodingError("mode index must be non-negative")

    def dagger(self) -> "LadderOp":
        swap = {CREATE: ANNIHILATE, ANNIHILATE: CREATE}
        return LadderOp(swap.get(self.kind, self.kind), self.mode)


@dataclass(frozen=True)
class EncodingScheme:
    kind: str
    levels: int
    modes: int

    def __post_init__(self):
        if self.kind not in (DIRECT, COMPACT):
            raise EncodingError(f"encoding must be 'direct' or 'compact', got {self.kind!r}")
        if self.levels < 2:
            raise EncodingError("need at least 2 levels per mode")
        if self.modes < 1:
            raise EncodingError("need at least one mode")

    @property
    def qubits_per_mode(self) -> int:
        if self.kind == DIRECT:
            return self.levels
        return max(1, math.ceil(math.log2(self.levels)))

    @property
    def n_qubits(self) -> int:
        return self.modes * self.qubits_per_mode

    @property
    def dimension(self) -> int:
        """Size of the truncated product space, ``levels ** modes``."""
        return self.levels**self.modes

    def register(self, mode: int) -> range:
        q = self.qubits_per_mode
        return range(mode * q, (mode + 1) * q)

    def local_value(self, level: int) -> int:
        """Register contents (as an integer) that encode ``level`` within one mode."""
        return (1 << level) if self.kind == DIRECT else level


# ---------------------------------------------------------------------------
# truncated single-mode matrices


def ladder_matrix(kind: str, d: int) -> np.ndarray:
    if d < 2:
        raise EncodingError("d must be >= 2")
    if kind == CREATE:
        return np.diag(np.sqrt(np.arange(1, d, dtype=float)), -1).astype(complex)
    if kind == ANNIHILATE:
        return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)
    if kind == NUMBER:
        return np.diag(np.arange(d, dtype=float)).astype(complex)
    if kind == IDENTITY:
        return np.eye(d, dtype=complex)
    raise EncodingError(f"unknown ladder operator kind {kind!r}")


def position_matrix(d: int, omega: float) -> np.ndarray:
    """Truncated ``q = (a + a^dag) / sqrt(2 omega)``."""
    return (ladder_matrix(ANNIHILATE, d) + ladder_matrix(CREATE, d)) / math.sqrt(2 * omega)


def momentum_matrix(d: int, omega: float) -> np.ndarray:
    """Truncated ``p = i sqrt(omega / 2) (a^dag - a)``."""
    return 1j * math.sqrt(omega / 2) * (ladder_matrix(CREATE, d) - ladder_matrix(ANNIHILATE, d))


# ---------------------------------------------------------------------------
# polynomials in ladder operators

Monomial = tuple  # tuple[LadderOp, ...]


class BosonPolynomial:
    """Sum of ordered products of ladder operators with complex coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[tuple[complex, Sequence[LadderOp]]] = ()):
        out = []
        for c, ops in terms:
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise EncodingError("polynomial coefficients must be finite")
            out.append((c, tuple(ops)))
        self.terms: tuple[tuple[complex, Monomial], ...] = tuple(out)

    @classmethod
    def constant(cls, value: complex) -> "BosonPolynomial":
        return cls([(value, ())])

    @classmethod
    def single(cls, kind: str, mode: int, coefficient: complex = 1.0) -> "BosonPolynomial":
        return cls([(coefficient, (LadderOp(kind, mode),))])

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "BosonPolynomial") -> "BosonPolynomial":
        return BosonPolynomial(self.terms + other.terms)

    def __sub__(self, other: "BosonPolynomial") -> "BosonPolynomial":
        return self + other.scale(-1)

    def scale(self, factor: complex) -> "BosonPolynomial":
        return BosonPolynomial((c * factor, ops) for c, ops in self.terms)

    def __mul__(self, other):
        if isinstance(other, BosonPolynomial):
            return BosonPolynomial(
                (ca * cb, oa + ob) for ca, oa in self.terms for cb, ob in other.terms
            )
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def dagger(self) -> "BosonPolynomial":
        return BosonPolynomial(
            (c.conjugate(), tuple(op.dagger() for op in reversed(ops))) for c, ops in self.terms
        )

    def max_mode(self) -> int:
        return max((op.mode for _, ops in self.terms for op in ops), default=-1)

    def collect(self) -> "BosonPolynomial":
        """Merge identical ordered products (order of first appearance kept)."""
        acc: dict[Monomial, complex] = {}
        for c, ops in self.terms:
            acc[ops] = acc.get(ops, 0j) + c
        return BosonPolynomial((c, ops) for ops, c in acc.items() if c != 0)

    def mode_terms(self, d: int) -> list[tuple[complex, dict[int, np.ndarray]]]:
        """Realise each product as per-mode truncated matrix products.

        Operators on different modes commute, so each product factorises into one
        ``d x d`` matrix per mode (the in-order product of that mode's factors).
        Modes that only carry identities are omitted.
        """
        out = []
        for c, ops in self.terms:
            per_mode: dict[int, np.ndarray] = {}
            for op in ops:
                if op.kind == IDENTITY:
                    continue
                m = ladder_matrix(op.kind, d)
                per_mode[op.mode] = per_mode[op.mode] @ m if op.mode in per_mode else m
            out.append((c, per_mode))
        return out

    def to_dense(self, d: int, n_modes: int) -> np.ndarray:
        """Dense truncated matrix on the product space (mode 0 least significant)."""
        if self.max_mode() >= n_modes:
            raise EncodingError("polynomial references a mode beyond n_modes")
        return mode_terms_to_dense(self.mode_terms(d), d, n_modes)

    def __repr__(self):
        return f"BosonPolynomial({len(self.terms)} terms)"


def mode_terms_to_dense(terms, d: int, n_modes: int) -> np.ndarray:
    dim = d**n_modes
    out = np.zeros((dim, dim), dtype=complex)
    eye = np.eye(d, dtype=complex)
    for c, per_mode in terms:
        factors = [per_mode.get(m, eye) for m in reversed(range(n_modes))]
        out += c * reduce(np.kron, factors)
    return out


def position(mode: int, omega: float) -> BosonPolynomial:
    f = 1 / math.sqrt(2 * omega)
    return BosonPolynomial(
        [(f, (LadderOp(ANNIHILATE, mode),)), (f, (LadderOp(CREATE, mode),))]
    )


def momentum(mode: int, omega: float) -> BosonPolynomial:
    f = 1j * math.sqrt(omega / 2)
    return BosonPolynomial(
        [(f, (LadderOp(CREATE, mode),)), (-f, (LadderOp(ANNIHILATE, mode),))]
    )


# ---------------------------------------------------------------------------
# projector expansion

_HALF = 0.5
# |a><b| on one qubit in Pauli form
_QUBIT_PROJECTORS = {
    (0, 0): {"I": _HALF, "Z": _HALF},
    (1, 1): {"I": _HALF, "Z": -_HALF},
    (1, 0): {"X": _HALF, "Y": -0.5j},
    (0, 1): {"X": _HALF, "Y": 0.5j},
}


def _tensor_local(parts: Sequence[Mapping[str, complex]]) -> dict[str, complex]:
    """Tensor single-qubit Pauli dicts; ``parts[j]`` acts on local qubit j."""
    out: dict[str, complex] = {"": 1.0}
    for part in parts:
        nxt: dict[str, complex] = {}
        for a, ca in out.items():
            for p, cp in part.items():
                nxt[a + p] = nxt.get(a + p, 0) + ca * cp
        out = nxt
    return out


def projector_paulis(scheme: EncodingScheme, s: int, t: int) -> dict[str, complex]:
    """Pauli expansion of ``|s><t|`` on one mode register (local axes, qubit 0 first)."""
    d = scheme.levels
    if not (0 <= s < d and 0 <= t < d):
        raise EncodingError(f"levels {s}, {t} outside 0..{d - 1}")
    q = scheme.qubits_per_mode
    if scheme.kind == COMPACT:
        parts = [_QUBIT_PROJECTORS[(s >> j) & 1, (t >> j) & 1] for j in range(q)]
        return _tensor_local(parts)
    ident = {"I": 1.0}
    if s == t:
        parts = [ident] * q
        parts[s] = _QUBIT_PROJECTORS[1, 1]
    else:
        # qubit t: 1 -> 0, qubit s: 0 -> 1
        parts = [ident] * q
        parts[s] = _QUBIT_PROJECTORS[1, 0]
        parts[t] = _QUBIT_PROJECTORS[0, 1]
    return _tensor_local(parts)


@lru_cache(maxsize=None)
def _transfer(kind: str, d: int) -> tuple[tuple[str, ...], np.ndarray]:
    """Linear map from a ``d x d`` mode matrix to local Pauli coefficients.

    Column ``(s, t)`` holds the Pauli coefficients of the encoded ``|s><t|``.
    """
    scheme = EncodingScheme(kind, d, 1)
    expansions = {(s, t): projector_paulis(scheme, s, t) for s in range(d) for t in range(d)}
    labels = sorted({a for e in expansions.values() for a in e})
    index = {a: i for i, a in enumerate(labels)}
    T = np.zeros((len(labels), d * d), dtype=complex)
    for (s, t), e in expansions.items():
        for a, c in e.items():
            T[index[a], s * d + t] += c
    return tuple(labels), T


def encode_mode_terms(
    terms: Iterable[tuple[complex, Mapping[int, np.ndarray]]],
    scheme: EncodingScheme,
    threshold: float | None = None,
) -> PauliSum:
    """Encode ``sum_k c_k (x)_m A_km`` given per-mode ``d x d`` matrices.

    Terms are grouped by the set of modes they touch; each group's joint operator
    is expanded through the per-mode projector maps at once.
    """
    d = scheme.levels
    groups: dict[tuple[int, ...], np.ndarray] = {}
    constant = 0j
    for c, per_mode in terms:
        modes = tuple(sorted(per_mode))
        if not modes:
            constant += c
            continue
        if modes[-1] >= scheme.modes:
            raise EncodingError(f"mode {modes[-1]} outside the {scheme.modes}-mode register")
        mats = [np.asarray(per_mode[m], dtype=complex) for m in modes]
        for mat in mats:
            if mat.shape != (d, d):
                raise EncodingError(f"mode matrix has shape {mat.shape}, expected {(d, d)}")
        joint = c * reduce(np.multiply.outer, mats)  # axes (s1, t1, s2, t2, ...)
        if modes in groups:
            groups[modes] = groups[modes] + joint
        else:
            groups[modes] = joint

    labels, T = _transfer(scheme.kind, d)
    q = scheme.qubits_per_mode
    idle = "I" * q
    acc: dict[str, complex] = {}
    if constant != 0:
        acc["I" * scheme.n_qubits] = constant
    for modes, joint in groups.items():
        k = len(modes)
        coeffs = joint.reshape((d * d,) * k)
        for _ in range(k):
            coeffs = np.tensordot(coeffs, T, axes=([0], [1]))
        nz = np.argwhere(coeffs != 0)
        vals = coeffs[tuple(nz.T)] if k else coeffs
        for row, v in zip(nz, vals):
            regs = [idle] * scheme.modes
            for m, li in zip(modes, row):
                regs[m] = labels[li]
            key = "".join(regs)
            acc[key] = acc.get(key, 0j) + v
    out = PauliSum(scheme.n_qubits, acc)
    return simplify(out) if threshold is None else simplify(out, threshold)


def encode_operator(p: BosonPolynomial, scheme: EncodingScheme, threshold: float | None = None) -> PauliSum:
    if p.max_mode() >= scheme.modes:
        raise EncodingError(
            f"polynomial references mode {p.max_mode()} but scheme has {scheme.modes} modes"
        )
    return encode_mode_terms(p.mode_terms(scheme.levels), scheme, threshold)


def encode_matrix(matrix: np.ndarray, mode: int, scheme: EncodingScheme) -> PauliSum:
    """Encode a single-mode ``d x d`` operator acting on ``mode``."""
    return encode_mode_terms([(1.0, {mode: matrix})], scheme)


# ---------------------------------------------------------------------------
# basis states and the encoded subspace


def _check_occupations(occupations: Sequence[int], scheme: EncodingScheme) -> None:
    if len(occupations) != scheme.modes:
        raise EncodingError(f"expected {scheme.modes} occupations, got {len(occupations)}")
    for m, s in enumerate(occupations):
        if not 0 <= s < scheme.levels:
            raise EncodingError(f"occupation {s} of mode {m} outside 0..{scheme.levels - 1}")


def basis_index(occupations: Sequence[int], scheme: EncodingScheme) -> int:
    """Computational-basis index of the encoded product state."""
    _check_occupations(occupations, scheme)
    q = scheme.qubits_per_mode
    return sum(scheme.local_value(s) << (m * q) for m, s in enumerate(occupations))


def encode_basis_state(occupations: Sequence[int], scheme: EncodingScheme) -> str:
    """Bitstring of the encoded state, printed with qubit 0 rightmost."""
    return format(basis_index(occupations, scheme), f"0{scheme.n_qubits}b")


def product_index(occupations: Sequence[int], d: int) -> int:
    """Index in the truncated product space: ``sum_m s_m d**m``."""
    return sum(s * d**m for m, s in enumerate(occupations))


def occupations_of(index: int, d: int, n_modes: int) -> tuple[int, ...]:
    return tuple((index // d**m) % d for m in range(n_modes))


def encoded_subspace_indices(scheme: EncodingScheme) -> np.ndarray:
    """Register indices of every valid encoded state, in product-space order."""
    d, q = scheme.levels, scheme.qubits_per_mode
    local = np.array([scheme.local_value(s) for s in range(d)], dtype=np.int64)
    idx = np.zeros(1, dtype=np.int64)
    for m in range(scheme.modes):
        # mode m varies slower than modes < m
        idx = (local[:, None] << (m * q)) + idx[None, :]
        idx = idx.reshape(-1)
    return idx


def restrict_to_subspace(matrix: np.ndarray, scheme: EncodingScheme) -> np.ndarray:
    idx = encoded_subspace_indices(scheme)
    return matrix[np.ix_(idx, idx)]


def subspace_matrix(op: PauliSum, scheme: EncodingScheme) -> np.ndarray:
    """Matrix of an encoded operator on the valid encoded states (product-space order)."""
    return to_matrix_on(op, encoded_subspace_indices(scheme))


def extract_amplitudes(amplitudes: np.ndarray, scheme: EncodingScheme) -> np.ndarray:
    return np.asarray(amplitudes)[encoded_subspace_indices(scheme)]


def embed_amplitudes(vector: np.ndarray, scheme: EncodingScheme) -> np.ndarray:
    out = np.zeros(1 << scheme.n_qubits, dtype=complex)
    out[encoded_subspace_indices(scheme)] = vector
    return out


def all_occupations(d: int, n_modes: int):
    """Occupation tuples in product-space order (mode 0 fastest)."""
    for combo in itertools.product(range(d), repeat=n_modes):
        yield tuple(reversed(combo))


# ---------------------------------------------------------------------------


def vibrational_modes(n_atoms: int, linear: bool = False) -> int:
    if n_atoms < 2:
        raise EncodingError("a molecule needs at least two atoms")
    m = 3 * n_atoms - (5 if linear else 6)
    if m <= 0:
        raise EncodingError(f"{n_atoms} atoms ({'linear' if linear else 'nonlinear'}) give no vibrational modes")
    return m


def qubit_count(n_atoms: int, linear: bool, d: int, scheme: str) -> int:
    """Qubits needed for all vibrational modes of a molecule at ``d`` levels per mode."""
    if d < 2:
        raise EncodingError("d must be >= 2")
    return EncodingScheme(scheme, d, vibrational_modes(n_atoms, linear)).n_qubits

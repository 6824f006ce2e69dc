"""Weighted Pauli strings and their sums.

Axes are stored in qubit order: ``axes[q]`` is the Pauli acting on qubit ``q``.
The printed *label* is the reverse (rightmost character is qubit 0), which is
also the serialization order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

DEFAULT_THRESHOLD = 1e-12
DENSE_QUBIT_GUARD = 16

_PAULI_CHARS = "IXYZ"

# single-qubit products: (a, b) -> (phase, c) with a*b = phase * c
_PRODUCT_TABLE: dict[tuple[str, str], tuple[complex, str]] = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


class PauliError(ValueError):
    pass


def _check_axes(axes: str) -> None:
    bad = set(axes) - set(_PAULI_CHARS)
    if bad:
        raise PauliError(f"invalid Pauli characters {sorted(bad)} in {axes!r}")


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * sigma_{axes[0]} (x) ... `` with qubit 0 first in ``axes``."""

    coefficient: complex
    axes: str

    def __post_init__(self):
        _check_axes(self.axes)
        c = complex(self.coefficient)
        if not (np.isfinite(c.real) and np.isfinite(c.imag)):
            raise PauliError("coefficient must be finite")
        object.__setattr__(self, "coefficient", c)

    @classmethod
    def from_label(cls, label: str, coefficient: complex = 1.0) -> "PauliTerm":
        """Build from a printed label (rightmost character is qubit 0)."""
        return cls(coefficient, label[::-1])

    @classmethod
    def from_sparse(cls, n_qubits: int, ops: Mapping[int, str], coefficient: complex = 1.0):
        """Build from ``{qubit: 'X'}`` style mapping; unspecified qubits are identity."""
        axes = ["I"] * n_qubits
        for q, p in ops.items():
            if not 0 <= q < n_qubits:
                raise PauliError(f"qubit {q} out of range for {n_qubits} qubits")
            axes[q] = p
        return cls(coefficient, "".join(axes))

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def label(self) -> str:
        return self.axes[::-1]

    @property
    def is_identity(self) -> bool:
        return set(self.axes) <= {"I"}

    def support(self) -> tuple[int, ...]:
        return tuple(q for q, p in enumerate(self.axes) if p != "I")

    def __mul__(self, other):
        if isinstance(other, PauliTerm):
            return multiply(self, other)
        return PauliTerm(self.coefficient * other, self.axes)

    def __rmul__(self, other):
        return PauliTerm(self.coefficient * other, self.axes)

    def __neg__(self):
        return PauliTerm(-self.coefficient, self.axes)

    def __str__(self):
        return f"{self.coefficient} {self.label}"


def multiply(lhs: PauliTerm, rhs: PauliTerm) -> PauliTerm:
    """Operator product ``lhs @ rhs`` with the accumulated phase in the coefficient."""
    if lhs.n_qubits != rhs.n_qubits:
        raise PauliError(f"qubit count mismatch: {lhs.n_qubits} vs {rhs.n_qubits}")
    phase = 1 + 0j
    out = []
    for a, b in zip(lhs.axes, rhs.axes):
        ph, c = _PRODUCT_TABLE[a, b]
        phase *= ph
        out.append(c)
    return PauliTerm(lhs.coefficient * rhs.coefficient * phase, "".join(out))


def _masks(axes: str) -> tuple[int, int, int]:
    """Return (x_mask, z_mask, number of Y) for the bit-level action of a string."""
    x = z = 0
    ny = 0
    for q, p in enumerate(axes):
        if p == "X":
            x |= 1 << q
        elif p == "Z":
            z |= 1 << q
        elif p == "Y":
            x |= 1 << q
            z |= 1 << q
            ny += 1
    return x, z, ny


def _basis_indices(n_qubits: int) -> np.ndarray:
    return np.arange(1 << n_qubits, dtype=np.int64)


def pauli_phases(axes: str, indices: np.ndarray) -> np.ndarray:
    """Phase picked up by ``|k>`` under the string: ``P|k> = phase(k) |k ^ x_mask>``.

    Uses ``Y = i X Z`` per qubit, so phase(k) = i**nY * (-1)**popcount(k & z_mask).
    """
    _, z, ny = _masks(axes)
    parity = np.bitwise_count(indices & z) & 1
    return (1j**ny) * (1 - 2 * parity.astype(np.float64))


class PauliSum:
    """Sum of Pauli strings on a fixed number of qubits.

    Terms are kept in a ``{axes: coefficient}`` mapping. Instances are treated as
    immutable; every operation returns a new sum.
    """

    __slots__ = ("n_qubits", "_terms", "_kernel")

    def __init__(self, n_qubits: int, terms: Mapping[str, complex] | Iterable[PauliTerm] = ()):
        self.n_qubits = int(n_qubits)
        self._kernel = None
        acc: dict[str, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((t.axes, t.coefficient) for t in terms)
        for axes, c in items:
            if len(axes) != self.n_qubits:
                raise PauliError(
                    f"term {axes!r} has {len(axes)} axes, expected {self.n_qubits}"
                )
            _check_axes(axes)
            acc[axes] = acc.get(axes, 0j) + complex(c)
        self._terms = acc

    # construction helpers ------------------------------------------------
    @classmethod
    def identity(cls, n_qubits: int, coefficient: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {"I" * n_qubits: coefficient})

    @classmethod
    def from_term(cls, term: PauliTerm) -> "PauliSum":
        return cls(term.n_qubits, [term])

    # container protocol -----------------------------------------------------
    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        for axes, c in self._terms.items():
            yield PauliTerm(c, axes)

    def __contains__(self, axes: str) -> bool:
        return axes in self._terms

    def coefficient(self, axes: str) -> complex:
        return self._terms.get(axes, 0j)

    def as_dict(self) -> dict[str, complex]:
        return dict(self._terms)

    @property
    def terms(self) -> list[PauliTerm]:
        return list(self)

    # algebra -----------------------------------------------------------------
    def _check_same(self, other: "PauliSum") -> None:
        if self.n_qubits != other.n_qubits:
            raise PauliError(f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if isinstance(other, PauliTerm):
            other = PauliSum.from_term(other)
        self._check_same(other)
        out = dict(self._terms)
        for axes, c in other._terms.items():
            out[axes] = out.get(axes, 0j) + c
        return PauliSum(self.n_qubits, out)

    def __neg__(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def scale(self, factor: complex) -> "PauliSum":
        return PauliSum(self.n_qubits, {a: c * factor for a, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return self.compose(other)
        if isinstance(other, PauliTerm):
            return self.compose(PauliSum.from_term(other))
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def compose(self, other: "PauliSum") -> "PauliSum":
        """Operator product ``self @ other``."""
        self._check_same(other)
        out: dict[str, complex] = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                t = multiply(PauliTerm(ca, a), PauliTerm(cb, b))
                out[t.axes] = out.get(t.axes, 0j) + t.coefficient
        return PauliSum(self.n_qubits, out)

    def dagger(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {a: c.conjugate() for a, c in self._terms.items()})

    def tensor(self, other: "PauliSum") -> "PauliSum":
        """``self (x) other`` with ``self`` on the low qubits."""
        out = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                out[a + b] = ca * cb
        return PauliSum(self.n_qubits + other.n_qubits, out)

    def simplify(self, threshold: float = DEFAULT_THRESHOLD) -> "PauliSum":
        return simplify(self, threshold)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def real(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {a: complex(c.real) for a, c in self._terms.items()})

    def to_matrix(self, guard: int = DENSE_QUBIT_GUARD) -> np.ndarray:
        return to_matrix(self, guard)

    def kernel(self) -> "PauliKernel":
        if self._kernel is None:
            self._kernel = PauliKernel(self)
        return self._kernel

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __repr__(self):
        return f"PauliSum(n_qubits={self.n_qubits}, terms={len(self)})"

    # serialization ------------------------------------------------------------
    def to_text(self) -> str:
        """One term per line: ``<re> <im> <label>``, rightmost label character is qubit 0."""
        return "".join(f"{c.real!r} {c.imag!r} {a[::-1]}\n" for a, c in self._terms.items())

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise PauliError(f"line {lineno}: expected '<re> <im> <axes>', got {line!r}")
            rows.append((parts[2][::-1], complex(float(parts[0]), float(parts[1]))))
        if not rows:
            raise PauliError("empty Pauli sum text: qubit count is undetermined")
        return cls(len(rows[0][0]), dict_from_pairs(rows))


def dict_from_pairs(pairs) -> dict[str, complex]:
    out: dict[str, complex] = {}
    for a, c in pairs:
        out[a] = out.get(a, 0j) + c
    return out


def simplify(s: PauliSum, threshold: float = DEFAULT_THRESHOLD) -> PauliSum:
    """Merge duplicates, drop ``|c| <= threshold`` and order terms lexicographically by label."""
    if threshold < 0:
        raise PauliError("threshold must be non-negative")
    kept = {a: c for a, c in s.as_dict().items() if abs(c) > threshold}
    ordered = {a: kept[a] for a in sorted(kept, key=lambda a: a[::-1])}
    return PauliSum(s.n_qubits, ordered)


def to_matrix(s: PauliSum, guard: int = DENSE_QUBIT_GUARD) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix; qubit 0 is the least-significant tensor factor."""
    n = s.n_qubits
    if n > guard:
        raise PauliError(f"{n} qubits exceeds the dense-matrix guard of {guard}")
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=complex)
    idx = _basis_indices(n)
    for x, diag in s.kernel().groups:
        mat[idx ^ x, idx] += diag
    return mat


def to_matrix_on(s: PauliSum, indices: np.ndarray) -> np.ndarray:
    """Matrix of ``s`` projected onto the computational states listed in ``indices``.

    Avoids forming the full register matrix, so it works well past the dense guard.
    """
    indices = np.asarray(indices, dtype=np.int64)
    order = np.argsort(indices)
    sorted_idx = indices[order]
    dim = len(indices)
    mat = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    acc: dict[int, np.ndarray] = {}
    for axes, c in s.as_dict().items():
        x, _, _ = _masks(axes)
        vec = c * pauli_phases(axes, indices)
        acc[x] = acc[x] + vec if x in acc else vec
    for x, vals in acc.items():
        targets = indices ^ x
        pos = np.searchsorted(sorted_idx, targets)
        pos = np.minimum(pos, dim - 1)
        hit = sorted_idx[pos] == targets
        mat[order[pos[hit]], cols[hit]] += vals[hit]
    return mat


class PauliKernel:
    """Terms of a sum grouped by X-mask, ready for vectorised application.

    For every distinct X-mask ``x`` we keep the combined vector
    ``D_x[k] = sum_t c_t phase_t(k)`` so that ``(H psi)[k ^ x] += D_x[k] psi[k]``.
    """

    def __init__(self, s: PauliSum):
        n = s.n_qubits
        if n > 30:
            raise PauliError("state-vector kernels are limited to 30 qubits")
        idx = _basis_indices(n)
        grouped: dict[int, np.ndarray] = {}
        for axes, c in s.as_dict().items():
            x, _, _ = _masks(axes)
            vec = c * pauli_phases(axes, idx)
            if x in grouped:
                grouped[x] = grouped[x] + vec
            else:
                grouped[x] = vec
        self.n_qubits = n
        self.indices = idx
        self.groups = sorted(grouped.items())

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi, dtype=complex)
        idx = self.indices
        for x, diag in self.groups:
            out[idx ^ x] += diag * psi
        return out

    def expectation(self, psi: np.ndarray) -> complex:
        idx = self.indices
        total = 0j
        for x, diag in self.groups:
            total += np.vdot(psi[idx ^ x], diag * psi)
        return total


def pauli_action(axes: str, psi: np.ndarray) -> np.ndarray:
    """Return ``P psi`` for a unit-coefficient string ``P``."""
    n = len(axes)
    idx = _basis_indices(n)
    x, _, _ = _masks(axes)
    out = np.empty_like(psi, dtype=complex)
    out[idx ^ x] = pauli_phases(axes, idx) * psi
    return out


def single_qubit_matrix(p: str) -> np.ndarray:
    return {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }[p]


def kron_matrix(axes: str) -> np.ndarray:
    """Reference Kronecker construction ``sigma_{n-1} (x) ... (x) sigma_0``."""
    m = np.ones((1, 1), dtype=complex)
    for p in axes:
        m = np.kron(single_qubit_matrix(p), m)
    return m

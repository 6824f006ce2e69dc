"""Dense state-vector simulation: basis states, Pauli rotations, expectations and overlaps.

Basis index ``k`` has qubit ``q`` set iff bit ``q`` of ``k`` is set. Sampling uses
numpy's ``PCG64`` generator seeded with the caller's 64-bit seed, so repeated runs
are bit-identical.
"""

from __future__ import annotations

import math

import numpy as np

from .pauli import PauliSum, PauliTerm, _masks, pauli_phases

NORM_TOL = 1e-10


class StateError(ValueError):
    pass


class StateVector:
    """Complex amplitudes over ``n`` qubits.

    Public functions return new vectors; ``copy=False`` paths mutate in place for
    gate-sequence loops that own the vector.
    """

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, n_qubits: int | None = None, check: bool = True):
        amps = np.asarray(amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise StateError("amplitudes must be a 1-D array")
        n = int(round(math.log2(len(amps)))) if n_qubits is None else int(n_qubits)
        if len(amps) != 1 << n:
            raise StateError(f"length {len(amps)} is not 2**{n}")
        if check:
            norm = float(np.vdot(amps, amps).real)
            if abs(norm - 1.0) > NORM_TOL:
                raise StateError(f"state is not normalized (norm**2 = {norm:.12g})")
        self.amplitudes = amps
        self.n_qubits = n

    @classmethod
    def from_unnormalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise StateError("cannot normalize the zero vector")
        return cls(amps / norm)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.n_qubits, check=False)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __len__(self):
        return len(self.amplitudes)

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


def prepare_basis(bits: str) -> StateVector:
    """Computational basis state from a bitstring printed with qubit 0 rightmost."""
    if not bits or set(bits) - {"0", "1"}:
        raise StateError(f"invalid bitstring {bits!r}")
    n = len(bits)
    amps = np.zeros(1 << n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps, n, check=False)


def basis_state(index: int, n_qubits: int) -> StateVector:
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(amps, n_qubits, check=False)


class CompiledPauli:
    """Bit-level form of a unit Pauli string: ``P|k> = phase[k] |k ^ x>``."""

    __slots__ = ("axes", "perm", "phase", "diagonal")

    def __init__(self, axes: str):
        n = len(axes)
        idx = np.arange(1 << n, dtype=np.int64)
        x, _, _ = _masks(axes)
        self.axes = axes
        self.diagonal = x == 0
        # (P psi)[j] = phase[j ^ x] psi[j ^ x]
        self.perm = idx ^ x
        self.phase = pauli_phases(axes, idx)[self.perm]

    def act(self, psi: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return self.phase * psi
        return self.phase * psi[self.perm]


_COMPILED: dict[str, CompiledPauli] = {}


def compiled(axes: str) -> CompiledPauli:
    c = _COMPILED.get(axes)
    if c is None:
        if len(_COMPILED) > 200_000:
            _COMPILED.clear()
        c = _COMPILED[axes] = CompiledPauli(axes)
    return c


def _unit_hermitian(P: PauliTerm) -> str:
    if abs(P.coefficient - 1) > 1e-12:
        raise StateError(f"rotation generator must have unit coefficient, got {P.coefficient}")
    return P.axes


def rotate_inplace(psi: np.ndarray, axes: str, theta: float) -> np.ndarray:
    """``psi <- exp(-i theta P) psi``; returns the (possibly new) array."""
    if theta == 0.0:
        return psi
    if set(axes) <= {"I"}:
        psi *= complex(math.cos(theta), -math.sin(theta))
        return psi
    cp = compiled(axes)
    return math.cos(theta) * psi - 1j * math.sin(theta) * cp.act(psi)


def apply_rotation(s: StateVector, P: PauliTerm, theta: float) -> StateVector:
    """``exp(-i theta P) |s>`` for a unit-coefficient Pauli string ``P``."""
    axes = _unit_hermitian(P)
    if len(axes) != s.n_qubits:
        raise StateError(f"generator acts on {len(axes)} qubits, state has {s.n_qubits}")
    out = rotate_inplace(s.amplitudes.copy(), axes, float(theta))
    return StateVector(out, s.n_qubits, check=False)


def apply_pauli_exponential(psi: np.ndarray, axes: str, c: complex) -> np.ndarray:
    """``exp(c P) psi`` for arbitrary complex ``c`` (``P**2 = I``)."""
    if c == 0:
        return psi
    if set(axes) <= {"I"}:
        return np.exp(c) * psi
    return np.cosh(c) * psi + np.sinh(c) * compiled(axes).act(psi)


def apply_pauli_sum(s: StateVector | np.ndarray, H: PauliSum) -> np.ndarray:
    psi = s.amplitudes if isinstance(s, StateVector) else np.asarray(s, dtype=complex)
    return H.kernel().apply(psi)


def expectation(s: StateVector, H: PauliSum, tol: float = 1e-10) -> float:
    """``<s|H|s>`` for Hermitian ``H``; raises if the result is not real."""
    if H.n_qubits != s.n_qubits:
        raise StateError(f"operator acts on {H.n_qubits} qubits, state has {s.n_qubits}")
    if not H.is_hermitian(tol):
        raise StateError("expectation requires real Pauli coefficients (Hermitian operator)")
    val = H.kernel().expectation(s.amplitudes)
    scale = max(1.0, sum(abs(t.coefficient) for t in H))
    if abs(val.imag) > tol * scale:
        raise StateError(f"expectation has imaginary residue {val.imag:.3g}")
    return float(val.real)


def overlap_exact(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``."""
    if a.n_qubits != b.n_qubits:
        raise StateError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(overlap_exact(a, b)) ** 2


def swap_test_probability(a: StateVector, b: StateVector) -> float:
    """Probability that the SWAP-test ancilla reads 0: ``(1 + |<a|b>|**2) / 2``."""
    return 0.5 * (1.0 + fidelity(a, b))


def swap_test_counts(a: StateVector, b: StateVector, shots: int, seed: int) -> int:
    if shots < 1:
        raise StateError("shots must be >= 1")
    p0 = min(1.0, max(0.0, swap_test_probability(a, b)))
    rng = np.random.Generator(np.random.PCG64(np.uint64(seed % 2**64)))
    return int(rng.binomial(shots, p0))


def swap_test_estimate(a: StateVector, b: StateVector, shots: int, seed: int, clamp: bool = True) -> float:
    """Sampled estimate of ``|<a|b>|**2`` from ``shots`` ancilla measurements.

    The raw estimator ``2 f0 - 1`` is unbiased; clamping to [0, 1] (the default)
    biases it upward when the true overlap sits at 0.
    """
    n0 = swap_test_counts(a, b, shots, seed)
    est = 2.0 * n0 / shots - 1.0
    return min(1.0, max(0.0, est)) if clamp else est


def swap_test_sigma(overlap_sq: float, shots: int) -> float:
    """Standard deviation of the raw estimator for ``shots`` samples."""
    p = 0.5 * (1.0 + overlap_sq)
    return math.sqrt(p * (1.0 - p) * 4.0 / shots)

"""Truncated vibrational Hamiltonians in second-quantized and qubit form."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .encoding import (
    ANNIHILATE,
    CREATE,
    NUMBER,
    BosonPolynomial,
    EncodingScheme,
    LadderOp,
    encode_operator,
    position,
    subspace_matrix,
)
from .forcefield import ForceField, Polynomial, localization_map, transform_polynomial
from .pauli import DEFAULT_THRESHOLD, DENSE_QUBIT_GUARD, PauliError, PauliSum

DEFAULT_LEVELS = 4
DEFAULT_ORDER = 4


class HamiltonianError(ValueError):
    pass


def potential_to_ladder(poly: Polynomial, omega) -> BosonPolynomial:
    """Expand ``sum c q_i q_j ...`` with ``q_i = (a_i + a_i^dag)/sqrt(2 omega_i)``."""
    one = BosonPolynomial.constant(1.0)
    out = BosonPolynomial()
    for key, c in poly.coeffs.items():
        if c == 0:
            continue
        out = out + reduce(lambda acc, i: acc * position(i, omega[i]), key, one).scale(c)
    return out


def harmonic_part(omega, zero_point: bool = True) -> BosonPolynomial:
    terms = [(w, (LadderOp(NUMBER, i),)) for i, w in enumerate(omega)]
    if zero_point:
        terms.append((0.5 * float(np.sum(omega)), ()))
    return BosonPolynomial(terms)


def hamiltonian_from_potential(poly: Polynomial, omega, zero_point: bool = True) -> BosonPolynomial:
    """``p**2/2 + V(q)`` in the oscillator basis with frequencies ``omega``.

    The reference oscillators are kept analytic as ``omega_i (n_i + 1/2)``; whatever
    remains of ``V`` after removing ``omega_i**2 q_i**2 / 2`` (including off-diagonal
    quadratic, linear and constant pieces) goes through truncated ``q`` products.
    """
    omega = np.asarray(omega, dtype=float)
    ref = Polynomial(poly.n_vars, {(i, i): 0.5 * w * w for i, w in enumerate(omega)})
    rest = poly - ref
    scale = max((abs(c) for c in poly.coeffs.values()), default=0.0)
    rest = rest.pruned(1e-14 * scale)
    return harmonic_part(omega, zero_point) + potential_to_ladder(rest, omega)


def build_second_quantized(
    ff: ForceField,
    localization=None,
    order: int = DEFAULT_ORDER,
    zero_point: bool = True,
) -> BosonPolynomial:
    """Kinetic plus quartic potential as a ladder-operator polynomial.

    ``localization`` is an orthogonal matrix ``U`` with ``a_i = sum_j U_ij a^L_j``;
    when given, the result acts on the localized modes.
    """
    if order not in (2, 3, 4):
        raise HamiltonianError(f"expansion order must be 2, 3 or 4, got {order}")
    omega = ff.omega
    anharmonic = ff.potential(order) - ff.potential(2)
    if localization is None:
        return harmonic_part(omega, zero_point) + potential_to_ladder(anharmonic.pruned(), omega)

    lmap = localization_map(localization, omega)
    U = lmap.U
    M = ff.modes
    couplings = np.einsum("i,ij,ik->jk", omega, U, U)
    terms = []
    for j in range(M):
        for k in range(M):
            c = couplings[j, k]
            if abs(c) <= 1e-15 * float(np.max(omega)):
                continue
            ops = (LadderOp(NUMBER, j),) if j == k else (LadderOp(CREATE, j), LadderOp(ANNIHILATE, k))
            terms.append((c, ops))
    if zero_point:
        terms.append((0.5 * float(np.sum(omega)), ()))
    local_anharmonic = transform_polynomial(anharmonic, lmap.Wq).pruned()
    return BosonPolynomial(terms) + potential_to_ladder(local_anharmonic, omega)


@dataclass(frozen=True)
class VibHamiltonian:
    second_quantized: BosonPolynomial
    qubit_form: PauliSum
    scheme: EncodingScheme
    source: ForceField | None
    includes_zero_point: bool
    order: int = DEFAULT_ORDER
    localization: np.ndarray | None = None

    @property
    def term_count(self) -> int:
        return len(self.qubit_form)

    @property
    def n_qubits(self) -> int:
        return self.qubit_form.n_qubits

    def dense_truncated(self) -> np.ndarray:
        """Truncated matrix built by Kronecker products (independent of the Pauli route)."""
        return self.second_quantized.to_dense(self.scheme.levels, self.scheme.modes)


def _hermitian_part(op: PauliSum, tol: float) -> PauliSum:
    worst = max((abs(t.coefficient.imag) for t in op), default=0.0)
    if worst > tol:
        raise HamiltonianError(f"qubit Hamiltonian is not Hermitian (imaginary residue {worst:.3g})")
    return op.real()


def qubit_hamiltonian_from_polynomial(
    poly: BosonPolynomial, scheme: EncodingScheme, threshold: float = DEFAULT_THRESHOLD
) -> PauliSum:
    op = encode_operator(poly, scheme, threshold)
    scale = max((abs(t.coefficient) for t in op), default=1.0)
    return _hermitian_part(op, 1e-12 * max(scale, 1.0))


def build_qubit_hamiltonian(
    ff: ForceField,
    scheme: EncodingScheme | str = "compact",
    levels: int = DEFAULT_LEVELS,
    order: int = DEFAULT_ORDER,
    zero_point: bool = True,
    localization=None,
    threshold: float = DEFAULT_THRESHOLD,
) -> VibHamiltonian:
    """Encode the truncated Hamiltonian of ``ff`` into qubits.

    ``scheme`` may be a full :class:`EncodingScheme` or just ``'direct'``/``'compact'``,
    in which case ``levels`` and the force field's mode count complete it.
    """
    if isinstance(scheme, str):
        scheme = EncodingScheme(scheme, levels, ff.modes)
    if scheme.modes != ff.modes:
        raise HamiltonianError(f"scheme has {scheme.modes} modes, force field has {ff.modes}")
    poly = build_second_quantized(ff, localization, order, zero_point)
    qubit = qubit_hamiltonian_from_polynomial(poly, scheme, threshold)
    loc = None if localization is None else np.asarray(localization, dtype=float)
    return VibHamiltonian(poly, qubit, scheme, ff, zero_point, order, loc)


def hamiltonian_matrix(h: VibHamiltonian, subspace: bool = True, guard: int = DENSE_QUBIT_GUARD) -> np.ndarray:
    """Matrix of the qubit Hamiltonian, by default on the valid encoded states only."""
    if subspace:
        if h.scheme.dimension > 1 << guard:
            raise HamiltonianError(f"encoded dimension {h.scheme.dimension} exceeds the dense guard")
        return subspace_matrix(h.qubit_form, h.scheme)
    try:
        return h.qubit_form.to_matrix(guard)
    except PauliError as exc:
        raise HamiltonianError(str(exc)) from exc


def exact_spectrum(
    h: VibHamiltonian, n_lowest: int | None = None, subspace: bool = True, guard: int = DENSE_QUBIT_GUARD
) -> np.ndarray:
    """Ascending eigenvalues (Hartree) of the qubit Hamiltonian.

    With ``subspace=True`` the matrix is restricted to valid encoded states first;
    for the direct mapping this removes the unphysical non-one-hot register states.
    """
    evals = np.linalg.eigvalsh(hamiltonian_matrix(h, subspace, guard))
    return evals if n_lowest is None else evals[:n_lowest]


def exact_eigh(h: VibHamiltonian, subspace: bool = True, guard: int = DENSE_QUBIT_GUARD):
    return np.linalg.eigh(hamiltonian_matrix(h, subspace, guard))


def harmonic_levels(omega, levels: int, zero_point: bool = True) -> np.ndarray:
    """Sorted ``sum_i omega_i (n_i + 1/2)`` for ``n_i < levels``."""
    omega = np.asarray(omega, dtype=float)
    grids = np.meshgrid(*[np.arange(levels)] * len(omega), indexing="ij")
    e = sum(w * g for w, g in zip(omega, grids))
    if zero_point:
        e = e + 0.5 * omega.sum()
    return np.sort(np.ravel(e))


REFERENCE_TERM_COUNTS = {"H2O": 216, "SO2": 165}


def term_count_report(ff: ForceField, levels=(2, 4), scheme: str = "compact", order: int = DEFAULT_ORDER):
    """Qubit-Hamiltonian term counts for each ``levels`` value with and without zero point."""
    rows = []
    for d in levels:
        for zp in (True, False):
            h = build_qubit_hamiltonian(ff, scheme, d, order, zp)
            identity = "I" * h.n_qubits
            rows.append(
                {
                    "label": ff.label,
                    "scheme": scheme,
                    "levels": d,
                    "zero_point": zp,
                    "terms": h.term_count,
                    "has_identity_term": identity in h.qubit_form,
                }
            )
    return rows

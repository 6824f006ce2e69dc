"""First-order product-formula time evolution under qubit Hamiltonians."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import NUMBER, BosonPolynomial, EncodingScheme, encode_operator
from .hamiltonian import VibHamiltonian
from .pauli import PauliSum
from .statevector import StateVector, rotate_inplace


class DynamicsError(ValueError):
    pass


def _as_pauli_sum(h) -> PauliSum:
    return h.qubit_form if isinstance(h, VibHamiltonian) else h


@dataclass
class EvolutionPlan:
    """Evolve for ``time`` with ``steps`` first-order Trotter steps.

    ``term_order`` is ``None`` for canonical order or a permutation of term indices.
    """

    hamiltonian: VibHamiltonian | PauliSum
    time: float
    steps: int
    term_order: list[int] | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise DynamicsError("steps must be >= 1")
        if not math.isfinite(self.time):
            raise DynamicsError("time must be finite")
        op = _as_pauli_sum(self.hamiltonian)
        if any(abs(t.coefficient.imag) > 1e-12 for t in op):
            raise DynamicsError("evolution needs a Hermitian Hamiltonian (real Pauli coefficients)")
        n = len(op)
        if self.term_order is not None and sorted(self.term_order) != list(range(n)):
            raise DynamicsError(f"term_order must be a permutation of range({n})")

    @property
    def operator(self) -> PauliSum:
        return _as_pauli_sum(self.hamiltonian)

    def terms(self) -> list[tuple[str, float]]:
        items = [(t.axes, t.coefficient.real) for t in self.operator]
        if self.term_order is not None:
            items = [items[k] for k in self.term_order]
        return items

    def reversed(self) -> "EvolutionPlan":
        """Plan for ``-time`` with the term order reversed (inverts one step exactly)."""
        n = len(self.operator)
        base = self.term_order if self.term_order is not None else list(range(n))
        return EvolutionPlan(self.hamiltonian, -self.time, self.steps, list(reversed(base)))


def _step(psi: np.ndarray, terms, dt: float) -> np.ndarray:
    for axes, lam in terms:
        psi = rotate_inplace(psi, axes, lam * dt)
    return psi


def trotter_step(s: StateVector, plan: EvolutionPlan) -> StateVector:
    """One product ``prod_i exp(-i lambda_i h_i t / N)`` in plan order."""
    if s.n_qubits != plan.operator.n_qubits:
        raise DynamicsError(f"state has {s.n_qubits} qubits, Hamiltonian {plan.operator.n_qubits}")
    psi = _step(s.amplitudes.copy(), plan.terms(), plan.time / plan.steps)
    return StateVector(psi, s.n_qubits, check=False)


def evolve(s0: StateVector, plan: EvolutionPlan) -> StateVector:
    if s0.n_qubits != plan.operator.n_qubits:
        raise DynamicsError(f"state has {s0.n_qubits} qubits, Hamiltonian {plan.operator.n_qubits}")
    terms = plan.terms()
    dt = plan.time / plan.steps
    psi = s0.amplitudes.copy()
    if dt != 0:
        for _ in range(plan.steps):
            psi = _step(psi, terms, dt)
    return StateVector(psi, s0.n_qubits, check=False)


def observable_trajectory(
    s0: StateVector,
    h: VibHamiltonian | PauliSum,
    observables: list[PauliSum],
    times,
    steps_per_unit_time: float,
) -> np.ndarray:
    """Expectation values on a time grid, shape ``(len(times), len(observables))``.

    The state is carried forward between grid points; each interval ``dt`` uses
    ``ceil(dt * steps_per_unit_time)`` steps (at least one). Times must be
    non-decreasing and start at or after zero.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or (len(times) and times[0] < 0) or np.any(np.diff(times) < 0):
        raise DynamicsError("times must be a non-decreasing grid starting at t >= 0")
    if steps_per_unit_time <= 0:
        raise DynamicsError("steps_per_unit_time must be positive")
    op = _as_pauli_sum(h)
    kernels = []
    for o in observables:
        if o.n_qubits != op.n_qubits:
            raise DynamicsError("observable and Hamiltonian act on different registers")
        kernels.append(o.kernel())
    plan = EvolutionPlan(op, 0.0, 1)
    terms = plan.terms()
    psi = s0.amplitudes.copy()
    out = np.zeros((len(times), len(observables)))
    t_prev = 0.0
    for row, t in enumerate(times):
        dt = t - t_prev
        if dt > 0:
            n = max(1, math.ceil(dt * steps_per_unit_time - 1e-9))
            for _ in range(n):
                psi = _step(psi, terms, dt / n)
        t_prev = t
        out[row] = [k.expectation(psi).real for k in kernels]
    return out


def number_operator(h_or_scheme, mode: int) -> PauliSum:
    """Encoded ``n_mode`` for a Hamiltonian's (or scheme's) register."""
    scheme = h_or_scheme.scheme if isinstance(h_or_scheme, VibHamiltonian) else h_or_scheme
    if not isinstance(scheme, EncodingScheme):
        raise DynamicsError("need a VibHamiltonian or EncodingScheme")
    return encode_operator(BosonPolynomial.single(NUMBER, mode), scheme)

"""Unitary vibrational coupled-cluster ansatz and gradient-descent VQE."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .encoding import EncodingScheme, basis_index, encode_mode_terms
from .hamiltonian import VibHamiltonian
from .pauli import PauliSum, PauliTerm
from .statevector import StateVector, rotate_inplace

HARMONIC_GROUND = "harmonic_ground"
VSCF = "vscf"
DIVERGENCE_STREAK = 10


class UvccError(ValueError):
    pass


class VqeDivergence(RuntimeError):
    """Raised when the energy rises for too many consecutive steps; carries the trace."""

    def __init__(self, message: str, trace: list[dict]):
        super().__init__(message)
        self.trace = trace


def single_keys(n_modes: int, levels: int) -> list[tuple[int, int, int]]:
    """``(m, s, t)`` with ``s < t``: one antisymmetric single excitation each."""
    return [(m, s, t) for m in range(n_modes) for s, t in itertools.combinations(range(levels), 2)]


def double_keys(n_modes: int, levels: int) -> list[tuple[int, int, int, int, int, int]]:
    """``(m, n, s, t, p, q)`` with ``m < n``, ``s < t``, ``p < q``."""
    pairs = list(itertools.combinations(range(levels), 2))
    return [
        (m, n, s, t, p, q)
        for m, n in itertools.combinations(range(n_modes), 2)
        for (s, t), (p, q) in itertools.product(pairs, pairs)
    ]


@dataclass
class UvccParams:
    """Amplitudes keyed by excitation; missing keys are zero."""

    n_modes: int
    levels: int
    theta1: dict[tuple, float] = field(default_factory=dict)
    theta2: dict[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        for key in self.theta1:
            m, s, t = key
            if not (0 <= m < self.n_modes and 0 <= s < t < self.levels):
                raise UvccError(f"invalid single excitation {key}")
        for key in self.theta2:
            m, n, s, t, p, q = key
            if not (0 <= m < n < self.n_modes and 0 <= s < t < self.levels and 0 <= p < q < self.levels):
                raise UvccError(f"invalid double excitation {key}")
        for v in itertools.chain(self.theta1.values(), self.theta2.values()):
            if not np.isfinite(v):
                raise UvccError("parameters must be finite")

    @classmethod
    def zeros(cls, n_modes: int, levels: int, rank: int = 2) -> "UvccParams":
        t1 = {k: 0.0 for k in single_keys(n_modes, levels)}
        t2 = {k: 0.0 for k in double_keys(n_modes, levels)} if rank >= 2 else {}
        return cls(n_modes, levels, t1, t2)

    def keys(self) -> list[tuple]:
        return list(self.theta1) + list(self.theta2)

    def vector(self) -> np.ndarray:
        return np.array(list(self.theta1.values()) + list(self.theta2.values()), dtype=float)

    def with_vector(self, theta) -> "UvccParams":
        theta = np.asarray(theta, dtype=float)
        n1 = len(self.theta1)
        t1 = dict(zip(self.theta1, theta[:n1]))
        t2 = dict(zip(self.theta2, theta[n1:]))
        return UvccParams(self.n_modes, self.levels, t1, t2)


def _projector(d: int, row: int, col: int) -> np.ndarray:
    out = np.zeros((d, d))
    out[row, col] = 1.0
    return out


def excitation_generator(key: tuple, scheme: EncodingScheme) -> PauliSum:
    """Encoded ``E - E^dag`` for one excitation (anti-Hermitian, imaginary coefficients)."""
    d = scheme.levels
    if len(key) == 3:
        m, s, t = key
        A = _projector(d, t, s)
        terms = [(1.0, {m: A}), (-1.0, {m: A.T})]
    else:
        m, n, s, t, p, q = key
        A, B = _projector(d, t, s), _projector(d, q, p)
        terms = [(1.0, {m: A, n: B}), (-1.0, {m: A.T, n: B.T})]
    return encode_mode_terms(terms, scheme)


def _generator_table(keys: list[tuple], scheme: EncodingScheme):
    """Pauli axes with the real coefficient matrix ``c[i, k]``: ``G = i sum_k theta_k sum_i c_ik sigma_i``."""
    columns = []
    for key in keys:
        g = excitation_generator(key, scheme)
        if any(abs(t.coefficient.real) > 1e-12 for t in g):
            raise UvccError(f"generator for {key} is not anti-Hermitian")
        columns.append({t.axes: t.coefficient.imag for t in g})
    return columns


def build_generator(p: UvccParams, scheme: EncodingScheme) -> PauliSum:
    """``T - T^dag`` as a Pauli sum with purely imaginary coefficients ``i alpha_i``."""
    if (p.n_modes, p.levels) != (scheme.modes, scheme.levels):
        raise UvccError("parameters and encoding scheme disagree on modes or levels")
    out = PauliSum(scheme.n_qubits)
    for key, theta in zip(p.keys(), p.vector()):
        if theta == 0.0:
            continue
        out = out + excitation_generator(key, scheme).scale(theta)
    return out.simplify()


@dataclass(frozen=True)
class RotationGate:
    """``exp(i alpha sigma)`` with ``alpha = sum_k weights[k] theta[slot_k]``."""

    axes: str
    slots: tuple[int, ...]
    weights: tuple[float, ...]
    rank: int

    def angle(self, theta: np.ndarray) -> float:
        return float(sum(w * theta[k] for k, w in zip(self.slots, self.weights)))

    @property
    def label(self) -> str:
        return PauliTerm(1.0, self.axes).label


@dataclass
class AnsatzCircuit:
    scheme: EncodingScheme
    gates: list[RotationGate]
    parameter_keys: list[tuple]
    reference: str = HARMONIC_GROUND
    reference_state: np.ndarray | None = None

    @property
    def n_parameters(self) -> int:
        return len(self.parameter_keys)

    @property
    def n_qubits(self) -> int:
        return self.scheme.n_qubits

    def reference_vector(self) -> np.ndarray:
        if self.reference_state is not None:
            return np.array(self.reference_state, dtype=complex)
        out = np.zeros(1 << self.n_qubits, dtype=complex)
        out[basis_index([0] * self.scheme.modes, self.scheme)] = 1.0
        return out

    def state(self, theta) -> StateVector:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_parameters,):
            raise UvccError(f"expected {self.n_parameters} parameters, got shape {theta.shape}")
        psi = self.reference_vector()
        for g in self.gates:
            # exp(i alpha sigma) = exp(-i (-alpha) sigma)
            psi = rotate_inplace(psi, g.axes, -g.angle(theta))
        return StateVector(psi, self.n_qubits, check=False)

    def describe(self) -> list[dict]:
        return [{"pauli": g.label, "slots": list(g.slots), "weights": list(g.weights)} for g in self.gates]


def build_circuit(
    p: UvccParams | None,
    scheme: EncodingScheme,
    rank: int = 2,
    reference: str = HARMONIC_GROUND,
    reference_state=None,
) -> AnsatzCircuit:
    """First-order Trotterised ``exp(T - T^dag)``: one rotation per Pauli string.

    Gates are ordered singles before doubles, then by the first parameter that
    feeds them, then by Pauli label. Strings fed by several parameters become a
    single gate whose angle is the corresponding linear combination.
    """
    if rank not in (1, 2):
        raise UvccError(f"excitation rank must be 1 or 2, got {rank}")
    if p is None:
        p = UvccParams.zeros(scheme.modes, scheme.levels, rank)
    elif rank == 1 and p.theta2:
        raise UvccError("rank 1 circuit given double amplitudes")
    if (p.n_modes, p.levels) != (scheme.modes, scheme.levels):
        raise UvccError("parameters and encoding scheme disagree on modes or levels")
    if reference not in (HARMONIC_GROUND, VSCF):
        raise UvccError(f"unknown reference {reference!r}")
    if reference == VSCF and reference_state is None:
        raise UvccError("a VSCF reference needs its product state")

    keys = p.keys()
    columns = _generator_table(keys, scheme)
    by_axes: dict[str, dict[int, float]] = {}
    for k, col in enumerate(columns):
        for axes, c in col.items():
            by_axes.setdefault(axes, {})[k] = c

    n1 = len(p.theta1)
    gates = []
    for axes, entries in by_axes.items():
        entries = {k: c for k, c in entries.items() if abs(c) > 1e-12}
        if not entries:
            continue
        slots = tuple(sorted(entries))
        rank_of = 1 if slots[0] < n1 else 2
        gates.append(RotationGate(axes, slots, tuple(entries[k] for k in slots), rank_of))
    gates.sort(key=lambda g: (g.rank, g.slots[0], g.label))

    ref = None
    if reference_state is not None:
        ref = np.asarray(reference_state.amplitudes if isinstance(reference_state, StateVector) else reference_state, dtype=complex)
        if ref.shape != (1 << scheme.n_qubits,):
            raise UvccError("reference state does not match the register size")
    return AnsatzCircuit(scheme, gates, keys, reference, ref)


# ---------------------------------------------------------------------------
# VQE


@dataclass
class VqeOptions:
    step: float = 0.1
    max_iter: int = 20000
    grad_eps: float = 1e-4
    init_perturbation: float = 0.01
    seed: int = 0
    grad_tol: float = 1e-9
    energy_tol: float = 1e-14
    pure_gd: bool = False
    threads: int | None = None


@dataclass
class VqeResult:
    theta: np.ndarray
    energy: float
    trace: list[dict]
    state: StateVector
    converged: bool
    iterations: int

    def to_json_dict(self, keys=None) -> dict:
        out = {
            "energy_hartree": self.energy,
            "iterations": self.iterations,
            "converged": self.converged,
            "theta": [float(x) for x in self.theta],
            "trace": self.trace,
        }
        if keys is not None:
            out["parameter_keys"] = [list(k) for k in keys]
        return out


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("VIBSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UvccError(f"VIBSIM_THREADS must be an integer, got {env!r}") from None
    return 1


class EnergyFunction:
    """``E(theta) = <Psi(theta)|H|Psi(theta)>`` with central-difference gradients."""

    def __init__(self, h: VibHamiltonian, circuit: AnsatzCircuit, threads: int | None = None):
        if h.n_qubits != circuit.n_qubits or h.scheme != circuit.scheme:
            raise UvccError("Hamiltonian and ansatz use different encodings")
        self.circuit = circuit
        self.kernel = h.qubit_form.kernel()
        self.threads = worker_count(threads)
        self.evaluations = 0

    def __call__(self, theta) -> float:
        self.evaluations += 1
        psi = self.circuit.state(theta).amplitudes
        return float(self.kernel.expectation(psi).real)

    def gradient(self, theta, eps: float) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)

        def component(k):
            e = np.zeros_like(theta)
            e[k] = eps
            return (self(theta + e) - self(theta - e)) / (2 * eps)

        n = len(theta)
        if self.threads > 1 and n > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return np.array(list(pool.map(component, range(n))))
        return np.array([component(k) for k in range(n)])


def vqe_minimize(h: VibHamiltonian, circuit: AnsatzCircuit, opt: VqeOptions | None = None, theta0=None) -> VqeResult:
    """Gradient descent on the ansatz energy.

    Starts from ``theta0`` or from a uniform perturbation of zero of width
    ``init_perturbation``. A step that raises the energy is retried with halved
    step sizes unless ``pure_gd`` is set, in which case every step is taken and a
    run of consecutive increases aborts with :class:`VqeDivergence`.
    """
    opt = opt or VqeOptions()
    if opt.step <= 0 or opt.grad_eps <= 0 or opt.max_iter < 0:
        raise UvccError("step, grad_eps must be positive and max_iter non-negative")
    f = EnergyFunction(h, circuit, opt.threads)
    n = circuit.n_parameters
    if theta0 is not None:
        theta = np.asarray(theta0, dtype=float).copy()
    else:
        rng = np.random.Generator(np.random.PCG64(opt.seed))
        theta = rng.uniform(-opt.init_perturbation, opt.init_perturbation, n) if opt.init_perturbation else np.zeros(n)

    energy = f(theta)
    grad = f.gradient(theta, opt.grad_eps) if n else np.zeros(0)
    trace = [{"iter": 0, "energy": energy, "grad_norm": float(np.linalg.norm(grad))}]
    best_theta, best_energy = theta.copy(), energy
    converged = False
    increases = 0
    it = 0
    for it in range(1, opt.max_iter + 1):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < opt.grad_tol:
            converged = True
            it -= 1
            break
        step = opt.step
        trial = theta - step * grad
        e_trial = f(trial)
        if not opt.pure_gd:
            halvings = 0
            while e_trial > energy and halvings < 40:
                step *= 0.5
                halvings += 1
                trial = theta - step * grad
                e_trial = f(trial)
            if e_trial > energy:
                # no descent along the gradient at any step size: stationary point
                converged = True
                it -= 1
                break
        if e_trial > energy + opt.energy_tol:
            increases += 1
        else:
            increases = 0
        delta = energy - e_trial
        theta, energy = trial, e_trial
        grad = f.gradient(theta, opt.grad_eps)
        trace.append({"iter": it, "energy": energy, "grad_norm": float(np.linalg.norm(grad)), "step": step})
        if energy < best_energy:
            best_theta, best_energy = theta.copy(), energy
        if increases >= DIVERGENCE_STREAK:
            raise VqeDivergence(f"energy increased for {DIVERGENCE_STREAK} consecutive steps", trace)
        if 0 <= delta < opt.energy_tol:
            converged = True
            break
    return VqeResult(best_theta, best_energy, trace, circuit.state(best_theta), converged, it)

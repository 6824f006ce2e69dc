"""Duschinsky transforms, the Doktorov unitary and Franck-Condon factors.

Conventions (hbar = 1, unit masses): final normal coordinates are related to the
initial ones by ``q_f = U q_i + d``. The Doktorov operator built here is the
overlap matrix between the two oscillator bases in a common number-state
register,

    <n| U_Dok |m> = <n_f | m_i> = integral phi^f_n(U q + d) phi^i_m(q) dq,

so ``U_Dok`` maps initial-basis coefficients to final-basis coefficients. It is
the product ``U_t U_s'^dag U_r U_s`` of a squeeze to the initial frequencies, a
passive rotation, an unsqueeze from the final frequencies and a displacement
with amplitude ``sqrt(omega_f / 2) d``. Squeezes are taken relative to a
reference frequency; the rotation is only valid between modes that share one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm

from .encoding import (
    ANNIHILATE,
    COMPACT,
    CREATE,
    BosonPolynomial,
    EncodingScheme,
    LadderOp,
    embed_amplitudes,
    encode_operator,
    encoded_subspace_indices,
    extract_amplitudes,
    product_index,
)
from .forcefield import ForceField, Polynomial, check_orthogonal, transform_polynomial
from .hamiltonian import hamiltonian_from_potential, potential_to_ladder
from .pauli import PauliSum
from .statevector import StateVector, compiled, swap_test_estimate

DENSE_EXP = "dense_exp"
TROTTER = "trotter"
PHYSICAL_ORDER = "physical"
LITERAL_ORDER = "literal"


class FranckCondonError(ValueError):
    pass


def _positive_vector(name, values, M):
    v = np.asarray(values, dtype=float)
    if v.shape != (M,):
        raise FranckCondonError(f"{name} has shape {v.shape}, expected {(M,)}")
    if not np.all(v > 0) or not np.all(np.isfinite(v)):
        raise FranckCondonError(f"{name} must be positive and finite")
    return v


@dataclass(frozen=True)
class DuschinskyData:
    U: np.ndarray
    d: np.ndarray
    omega_i: np.ndarray
    omega_f: np.ndarray

    def __post_init__(self):
        try:
            U = check_orthogonal(self.U)
        except ValueError as exc:
            raise FranckCondonError(str(exc)) from exc
        M = U.shape[0]
        d = np.asarray(self.d, dtype=float)
        if d.shape != (M,) or not np.all(np.isfinite(d)):
            raise FranckCondonError(f"displacement must be a finite {M}-vector")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "omega_i", _positive_vector("omega_i", self.omega_i, M))
        object.__setattr__(self, "omega_f", _positive_vector("omega_f", self.omega_f, M))

    @property
    def modes(self) -> int:
        return self.U.shape[0]

    @property
    def Omega_i(self) -> np.ndarray:
        return np.diag(np.sqrt(self.omega_i))

    @property
    def Omega_f(self) -> np.ndarray:
        return np.diag(np.sqrt(self.omega_f))

    @property
    def J(self) -> np.ndarray:
        """``sqrt(Omega_f) U sqrt(Omega_i)^-1`` (final coordinates carry index 1)."""
        return np.diag(self.omega_f**0.25) @ self.U @ np.diag(self.omega_i**-0.25)

    @property
    def J_prime(self) -> np.ndarray:
        return np.diag(self.omega_f**-0.25) @ self.U.T @ np.diag(self.omega_i**0.25)

    @classmethod
    def identity(cls, omega) -> "DuschinskyData":
        omega = np.asarray(omega, dtype=float)
        return cls(np.eye(len(omega)), np.zeros(len(omega)), omega, omega)

    @classmethod
    def from_dict(cls, data, omega_i, omega_f) -> "DuschinskyData":
        try:
            U, d = data["U"], data["d"]
        except (KeyError, TypeError) as exc:
            raise FranckCondonError("Duschinsky data needs 'U' and 'd' entries") from exc
        return cls(np.asarray(U, dtype=float), np.asarray(d, dtype=float), omega_i, omega_f)


# ---------------------------------------------------------------------------
# generators


def squeeze_generator(omega, reference) -> BosonPolynomial:
    """``-1/2 (a^dag + a)^T ln(Omega) (a^dag - a) + 1/2 Tr ln(Omega)``.

    ``Omega = diag(sqrt(omega / reference))``; the exponential maps reference
    number states to number states of frequency ``omega``.
    """
    out = []
    for j, (w, w0) in enumerate(zip(omega, reference)):
        r = 0.5 * math.log(w / w0)
        if r == 0:
            continue
        cr, an = LadderOp(CREATE, j), LadderOp(ANNIHILATE, j)
        # (a^dag + a)(a^dag - a) as ordered products
        out += [(-0.5 * r, (cr, cr)), (0.5 * r, (cr, an)), (-0.5 * r, (an, cr)), (0.5 * r, (an, an))]
        out.append((0.5 * r, ()))
    return BosonPolynomial(out)


def rotation_generator(L: np.ndarray) -> BosonPolynomial:
    """``(a^dag)^T L a`` for a real antisymmetric ``L``."""
    M = L.shape[0]
    out = []
    for j in range(M):
        for k in range(M):
            if L[j, k] != 0:
                out.append((L[j, k], (LadderOp(CREATE, j), LadderOp(ANNIHILATE, k))))
    return BosonPolynomial(out)


def displacement_generator(d, omega, scale: float = 1.0 / math.sqrt(2.0)) -> BosonPolynomial:
    """``sum_j scale sqrt(omega_j) d_j (a_j^dag - a_j)``."""
    out = []
    for j, (dj, w) in enumerate(zip(d, omega)):
        c = scale * math.sqrt(w) * dj
        if c != 0:
            out += [(c, (LadderOp(CREATE, j),)), (-c, (LadderOp(ANNIHILATE, j),))]
    return BosonPolynomial(out)


def rotation_logarithm(U: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Antisymmetric ``L`` with ``expm(L) = U diag(s)`` where ``s`` flips reflected modes.

    A reflection (``det U = -1``) is split off as parity on the last mode, whose
    index is returned in the second element.
    """
    U = np.asarray(U, dtype=float)
    M = U.shape[0]
    parity = []
    if np.linalg.det(U) < 0:
        U = U.copy()
        U[:, -1] *= -1
        parity.append(M - 1)
    if np.allclose(U, np.eye(M), atol=1e-14):
        return np.zeros((M, M)), parity
    L = logm(U)
    L = np.real_if_close(L, tol=1e6)
    if np.iscomplexobj(L):
        raise FranckCondonError("rotation logarithm is not real (rotation by pi?)")
    L = 0.5 * (L - L.T)
    if not np.allclose(expm(L), U, atol=1e-10):
        raise FranckCondonError("could not find a real logarithm of the Duschinsky matrix")
    return L, parity


def coupled_blocks(U: np.ndarray, tol: float = 1e-12) -> list[list[int]]:
    """Groups of modes connected by non-zero entries of ``U``."""
    M = U.shape[0]
    parent = list(range(M))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j in range(M):
        for k in range(M):
            if abs(U[j, k]) > tol:
                parent[find(j)] = find(k)
    blocks: dict[int, list[int]] = {}
    for j in range(M):
        blocks.setdefault(find(j), []).append(j)
    return list(blocks.values())


def auto_reference(dusch: DuschinskyData) -> np.ndarray:
    """Per-mode reference frequency: geometric mean of all frequencies in each coupled block."""
    ref = np.empty(dusch.modes)
    for block in coupled_blocks(dusch.U):
        logs = np.log(np.concatenate([dusch.omega_i[block], dusch.omega_f[block]]))
        ref[block] = math.exp(float(np.mean(logs)))
    return ref


def _reference_vector(dusch: DuschinskyData, reference) -> np.ndarray:
    M = dusch.modes
    if reference is None or (isinstance(reference, str) and reference == "auto"):
        return auto_reference(dusch)
    ref = np.broadcast_to(np.asarray(reference, dtype=float), (M,)).copy()
    if not np.all(ref > 0):
        raise FranckCondonError("reference frequency must be positive")
    for block in coupled_blocks(dusch.U):
        if np.ptp(ref[block]) > 1e-12 * ref[block].max():
            raise FranckCondonError("modes mixed by the rotation must share one reference frequency")
    return ref


@dataclass
class DoktorovFactors:
    """Generators of each factor and the order in which they multiply (leftmost first).

    ``sequence`` entries are ``(name, daggered)``; ``parity_modes`` lists modes
    carrying a reflection that is applied right after the rotation factor.
    """

    generators: dict[str, BosonPolynomial]
    sequence: tuple[tuple[str, bool], ...]
    reference: np.ndarray
    parity_modes: list[int] = field(default_factory=list)

    @property
    def composition(self) -> str:
        return " ".join("U_" + FACTOR_NAMES[name] + ("^dag" if dag else "") for name, dag in self.sequence)


FACTOR_NAMES = {"displacement": "t", "squeeze_f": "s'", "rotation": "r", "squeeze_i": "s"}


def build_factors(dusch: DuschinskyData, order: str = PHYSICAL_ORDER, reference=None) -> DoktorovFactors:
    """Factor generators of the Doktorov operator.

    ``order='physical'`` gives ``U_t U_s'^dag U_r U_s``, which reproduces the
    overlap integrals for any rotation and frequencies. ``order='literal'`` gives
    ``U_t U_s'^dag U_s U_r``; the two agree only when the rotation commutes with
    the squeezes (no mixing or equal initial frequencies).
    """
    ref = _reference_vector(dusch, reference)
    L, parity = rotation_logarithm(dusch.U)
    gens = {
        "displacement": displacement_generator(dusch.d, dusch.omega_f),
        "squeeze_f": squeeze_generator(dusch.omega_f, ref),
        "rotation": rotation_generator(L),
        "squeeze_i": squeeze_generator(dusch.omega_i, ref),
    }
    if order == PHYSICAL_ORDER:
        seq = (("displacement", False), ("squeeze_f", True), ("rotation", False), ("squeeze_i", False))
    elif order == LITERAL_ORDER:
        seq = (("displacement", False), ("squeeze_f", True), ("squeeze_i", False), ("rotation", False))
    else:
        raise FranckCondonError(f"unknown factor order {order!r}")
    return DoktorovFactors(gens, seq, ref, parity)


def _parity_matrix(d: int, M: int, modes) -> np.ndarray:
    sign = np.ones(d**M)
    idx = np.arange(d**M)
    for m in modes:
        sign *= np.where((idx // d**m) % d % 2 == 1, -1.0, 1.0)
    return np.diag(sign)


def parity_pauli(scheme: EncodingScheme, modes) -> str:
    """Pauli string equal to ``(-1)^{n_m}`` on valid encoded states for every listed mode."""
    axes = ["I"] * scheme.n_qubits
    q = scheme.qubits_per_mode
    for m in modes:
        if scheme.kind == COMPACT:
            axes[m * q] = "Z"
        else:
            for s in range(1, scheme.levels, 2):
                axes[m * q + s] = "Z"
    return "".join(axes)


def _trotter_apply(psi: np.ndarray, gen: PauliSum, steps: int) -> np.ndarray:
    """``(prod_k exp(c_k sigma_k / N))^N`` applied to the columns of ``psi``."""
    terms = [(t.axes, t.coefficient / steps) for t in gen]
    for _ in range(steps):
        for axes, c in terms:
            if set(axes) <= {"I"}:
                psi = np.exp(c) * psi
                continue
            cp = compiled(axes)
            psi = np.cosh(c) * psi + np.sinh(c) * (cp.phase[:, None] * psi[cp.perm])
    return psi


@dataclass
class DoktorovOperator:
    """Doktorov matrix on the truncated product space plus the encoding used."""

    matrix: np.ndarray
    scheme: EncodingScheme
    factors: DoktorovFactors
    method: str
    steps: int | None = None

    def unitarity_defect(self, block: int | None = None) -> float:
        """``max |(U^dag U - I)_{jk}|``, optionally over the leading ``block`` levels per mode."""
        U = self.matrix
        gram = U.conj().T @ U - np.eye(U.shape[0])
        if block is not None:
            d, M = self.scheme.levels, self.scheme.modes
            idx = np.arange(d**M)
            keep = np.all([(idx // d**m) % d < block for m in range(M)], axis=0)
            gram = gram[np.ix_(keep, keep)]
        return float(np.max(np.abs(gram)))

    def apply(self, psi: StateVector | np.ndarray) -> np.ndarray:
        """Register amplitudes of ``U_Dok |psi>`` (not renormalised)."""
        amps = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
        if len(amps) != 1 << self.scheme.n_qubits:
            raise FranckCondonError(
                f"state has {len(amps)} amplitudes, register needs {1 << self.scheme.n_qubits}"
            )
        return embed_amplitudes(self.matrix @ extract_amplitudes(amps, self.scheme), self.scheme)

    def element(self, n, m) -> complex:
        d = self.scheme.levels
        return complex(self.matrix[product_index(n, d), product_index(m, d)])


def build_doktorov(
    dusch: DuschinskyData,
    levels: int,
    method: str = DENSE_EXP,
    steps: int | None = None,
    scheme: str | EncodingScheme = COMPACT,
    order: str = PHYSICAL_ORDER,
    reference=None,
) -> DoktorovOperator:
    """Truncated Doktorov operator by exact exponentials or Trotterised Pauli rotations.

    ``dense_exp`` exponentiates each truncated generator as is; the squeeze and
    rotation generators are not exactly anti-Hermitian after truncation, and the
    resulting defect is reported by :meth:`DoktorovOperator.unitarity_defect`
    rather than corrected. ``trotter`` encodes each generator in Pauli form and
    applies ``steps`` first-order product-formula steps.
    """
    if levels < 2:
        raise FranckCondonError("need at least 2 levels per mode")
    M = dusch.modes
    if isinstance(scheme, str):
        scheme = EncodingScheme(scheme, levels, M)
    if (scheme.levels, scheme.modes) != (levels, M):
        raise FranckCondonError("encoding scheme does not match levels and modes")
    factors = build_factors(dusch, order, reference)
    dim = levels**M

    if method == DENSE_EXP:
        total = np.eye(dim, dtype=complex)
        for name, dag in factors.sequence:
            E = expm(factors.generators[name].to_dense(levels, M)) if len(factors.generators[name]) else np.eye(dim)
            total = total @ (E.conj().T if dag else E)
            if name == "rotation" and factors.parity_modes:
                total = total @ _parity_matrix(levels, M, factors.parity_modes)
        return DoktorovOperator(total, scheme, factors, method)

    if method != TROTTER:
        raise FranckCondonError(f"unknown method {method!r}")
    if steps is None or steps < 1:
        raise FranckCondonError("trotter method needs steps >= 1")
    sub = encoded_subspace_indices(scheme)
    psi = np.zeros((1 << scheme.n_qubits, dim), dtype=complex)
    psi[sub, np.arange(dim)] = 1.0
    for name, dag in reversed(factors.sequence):
        if name == "rotation" and factors.parity_modes:
            cp = compiled(parity_pauli(scheme, factors.parity_modes))
            psi = cp.phase[:, None] * psi[cp.perm]
        gen = factors.generators[name]
        if not len(gen):
            continue
        enc = encode_operator(gen.dagger() if dag else gen, scheme)
        psi = _trotter_apply(psi, enc, steps)
    return DoktorovOperator(psi[sub, :], scheme, factors, method, steps)


# ---------------------------------------------------------------------------
# Franck-Condon factors


def _operator(dusch_or_op, levels, method, steps, scheme) -> DoktorovOperator:
    if isinstance(dusch_or_op, DoktorovOperator):
        return dusch_or_op
    if levels is None:
        raise FranckCondonError("levels is required when passing Duschinsky data")
    return build_doktorov(dusch_or_op, levels, method, steps, scheme)


def franck_condon_factor(
    psi_i: StateVector,
    psi_f: StateVector,
    dusch: DuschinskyData | DoktorovOperator,
    levels: int | None = None,
    method: str = DENSE_EXP,
    steps: int | None = None,
    scheme: str | EncodingScheme = COMPACT,
    shots: int | None = None,
    seed: int = 0,
) -> float:
    """``|<psi_f| U_Dok |psi_i>|**2``.

    With ``shots`` set the overlap is estimated by a sampled SWAP test between
    ``psi_f`` and the normalised ``U_Dok psi_i``, then rescaled by its squared norm
    (which is below one only through truncation).
    """
    if psi_i.n_qubits != psi_f.n_qubits:
        raise FranckCondonError(f"dimension mismatch: {psi_i.n_qubits} vs {psi_f.n_qubits} qubits")
    op = _operator(dusch, levels, method, steps, scheme)
    phi = op.apply(psi_i)
    if shots is None:
        return float(abs(np.vdot(psi_f.amplitudes, phi)) ** 2)
    norm2 = float(np.vdot(phi, phi).real)
    if norm2 == 0:
        return 0.0
    est = swap_test_estimate(StateVector(phi / math.sqrt(norm2), check=False), psi_f, shots, seed)
    return norm2 * est


@dataclass(frozen=True)
class DipoleSurface:
    """Transition dipole ``mu(q_f)`` as a polynomial of degree <= 2 in final coordinates."""

    poly: Polynomial

    def __post_init__(self):
        if self.poly.degree() > 2:
            raise FranckCondonError("dipole surface must have degree <= 2")
        if not all(math.isfinite(c) for c in self.poly.coeffs.values()):
            raise FranckCondonError("dipole coefficients must be finite")

    @classmethod
    def constant(cls, modes: int, value: float = 1.0) -> "DipoleSurface":
        return cls(Polynomial(modes, {(): value}))

    def ladder(self, omega_f) -> BosonPolynomial:
        return potential_to_ladder(self.poly, omega_f)

    def matrix(self, omega_f, levels: int) -> np.ndarray:
        return self.ladder(omega_f).to_dense(levels, self.poly.n_vars)


def non_condon_factor(
    psi_i: StateVector,
    psi_f: StateVector,
    mu: DipoleSurface,
    dusch: DuschinskyData | DoktorovOperator,
    levels: int | None = None,
    method: str = DENSE_EXP,
    steps: int | None = None,
    scheme: str | EncodingScheme = COMPACT,
) -> float:
    """``|<psi_f| mu(q_f) U_Dok |psi_i>|**2`` with ``mu`` expanded in the final oscillators."""
    if psi_i.n_qubits != psi_f.n_qubits:
        raise FranckCondonError(f"dimension mismatch: {psi_i.n_qubits} vs {psi_f.n_qubits} qubits")
    op = _operator(dusch, levels, method, steps, scheme)
    omega_f = dusch.omega_f if isinstance(dusch, DuschinskyData) else None
    if omega_f is None:
        raise FranckCondonError("non-Condon factors need the Duschinsky data for final frequencies")
    vec = op.matrix @ extract_amplitudes(psi_i.amplitudes, op.scheme)
    vec = mu.matrix(omega_f, op.scheme.levels) @ vec
    return float(abs(np.vdot(extract_amplitudes(psi_f.amplitudes, op.scheme), vec)) ** 2)


# ---------------------------------------------------------------------------
# transformed-Hamiltonian route


@dataclass
class Eigenbasis:
    energies: np.ndarray
    vectors: np.ndarray  # columns, product-space order

    def state(self, k: int, scheme: EncodingScheme) -> StateVector:
        return StateVector(embed_amplitudes(self.vectors[:, k], scheme))


def eigenbasis(poly: BosonPolynomial, levels: int, modes: int) -> Eigenbasis:
    H = poly.to_dense(levels, modes)
    if np.max(np.abs(H - H.conj().T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(H))):
        raise FranckCondonError("truncated Hamiltonian is not Hermitian")
    e, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    return Eigenbasis(e, v)


def _ff_potential(ff: ForceField) -> Polynomial:
    return ff.potential(4)


def fc_via_transformed_hamiltonian(
    ff_f: ForceField, dusch: DuschinskyData, levels: int, zero_point: bool = True
) -> Eigenbasis:
    """Eigenstates of the final-state Hamiltonian written in initial coordinates.

    ``V_f(U q_i + d)`` is expanded in the initial oscillators (the kinetic energy is
    invariant under the orthogonal map); overlaps of these eigenvectors with
    initial-state eigenvectors are Franck-Condon amplitudes directly.
    """
    if ff_f.modes != dusch.modes:
        raise FranckCondonError(f"force field has {ff_f.modes} modes, Duschinsky data {dusch.modes}")
    if not np.allclose(ff_f.omega, dusch.omega_f, rtol=1e-8):
        raise FranckCondonError("final force field frequencies disagree with the Duschinsky data")
    V = transform_polynomial(_ff_potential(ff_f), dusch.U, dusch.d)
    h = hamiltonian_from_potential(V, dusch.omega_i, zero_point)
    return eigenbasis(h, levels, dusch.modes)


def initial_eigenbasis(ff_i: ForceField, levels: int, zero_point: bool = True) -> Eigenbasis:
    return eigenbasis(hamiltonian_from_potential(_ff_potential(ff_i), ff_i.omega, zero_point), levels, ff_i.modes)


def fc_table(
    ff_i: ForceField,
    ff_f: ForceField,
    dusch: DuschinskyData,
    levels: int,
    n_initial: int = 1,
    n_final: int = 4,
    route: str = "doktorov",
    reference=None,
) -> list[tuple[int, int, float]]:
    """``(i, f, |<psi_f|psi_i>|**2)`` for the lowest eigenstates of both surfaces."""
    init = initial_eigenbasis(ff_i, levels)
    if route == "doktorov":
        final = initial_eigenbasis(ff_f, levels)
        U = build_doktorov(dusch, levels, reference=reference).matrix
        amps = final.vectors.conj().T @ U @ init.vectors
    elif route == "transformed":
        final = fc_via_transformed_hamiltonian(ff_f, dusch, levels)
        amps = final.vectors.conj().T @ init.vectors
    else:
        raise FranckCondonError(f"unknown route {route!r}")
    rows = []
    for i in range(min(n_initial, amps.shape[1])):
        for f in range(min(n_final, amps.shape[0])):
            rows.append((i, f, float(abs(amps[f, i]) ** 2)))
    return rows

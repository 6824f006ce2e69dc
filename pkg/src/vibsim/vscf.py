"""Vibrational self-consistent field over truncated harmonic-oscillator bases."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encoding import BosonPolynomial, EncodingScheme, embed_amplitudes
from .statevector import StateVector

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass
class VscfResult:
    orbitals: list[np.ndarray]
    energy: float
    iterations: int
    converged: bool
    energy_history: list[float] = field(default_factory=list)

    def product_vector(self) -> np.ndarray:
        """Product state on the truncated space (mode 0 least significant)."""
        vec = np.ones(1, dtype=complex)
        for phi in self.orbitals:
            vec = np.kron(phi, vec)
        return vec

    def state(self, scheme: EncodingScheme) -> StateVector:
        return StateVector(embed_amplitudes(self.product_vector(), scheme))

    def to_json_dict(self) -> dict:
        return {
            "energy_hartree": self.energy,
            "iterations": self.iterations,
            "converged": self.converged,
            "energy_history": list(self.energy_history),
            "orbitals": [[[z.real, z.imag] for z in phi] for phi in self.orbitals],
        }


def _expectations(terms, orbitals):
    """``<phi_m|A_km|phi_m>`` for every term ``k`` and mode ``m`` it touches."""
    out = []
    for c, per_mode in terms:
        out.append({m: complex(np.vdot(orbitals[m], A @ orbitals[m])) for m, A in per_mode.items()})
    return out


def _mean_field(terms, expect, mode: int, d: int) -> np.ndarray:
    H = np.zeros((d, d), dtype=complex)
    eye = np.eye(d)
    for (c, per_mode), ev in zip(terms, expect):
        factor = c
        for m, v in ev.items():
            if m != mode:
                factor *= v
        H += factor * per_mode.get(mode, eye)
    return 0.5 * (H + H.conj().T)


def product_energy(terms, orbitals) -> float:
    total = 0j
    for (c, _), ev in zip(terms, _expectations(terms, orbitals)):
        val = c
        for v in ev.values():
            val *= v
        total += val
    return float(total.real)


def vscf(
    h: BosonPolynomial,
    n_modes: int,
    levels: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    damping: float = 0.0,
    initial=None,
) -> VscfResult:
    """Optimal product state by sweeping modes 0..M-1 with mean-field updates.

    Each mode's effective Hamiltonian contracts every other mode with its current
    orbital; its lowest eigenvector becomes the new orbital. ``damping`` mixes the
    previous orbital back in (0 disables it).
    """
    if n_modes < 1 or levels < 2:
        raise ValueError("need at least one mode and two levels")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    d = levels
    terms = h.mode_terms(d)
    if initial is None:
        orbitals = [np.eye(d, dtype=complex)[0] for _ in range(n_modes)]
    else:
        orbitals = [np.asarray(phi, dtype=complex) / np.linalg.norm(phi) for phi in initial]

    energy = product_energy(terms, orbitals)
    history = [energy]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for m in range(n_modes):
            expect = _expectations(terms, orbitals)
            Hm = _mean_field(terms, expect, m, d)
            _, vecs = np.linalg.eigh(Hm)
            new = vecs[:, 0]
            # fix the gauge so the largest component is real positive
            k = int(np.argmax(np.abs(new)))
            new = new * (abs(new[k]) / new[k])
            if damping:
                new = (1 - damping) * new + damping * orbitals[m]
            orbitals[m] = new / np.linalg.norm(new)
        new_energy = product_energy(terms, orbitals)
        history.append(new_energy)
        delta = abs(new_energy - energy)
        energy = new_energy
        if delta < tol:
            converged = True
            break
    return VscfResult(orbitals, energy, it, converged, history)

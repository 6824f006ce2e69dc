import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from oracles import pauli_kron
from vibsim.forcefield import load_bundled
from vibsim.hamiltonian import build_qubit_hamiltonian
from vibsim.pauli import PauliSum, PauliTerm, to_matrix
from vibsim.statevector import (
    StateError,
    StateVector,
    apply_pauli_exponential,
    apply_rotation,
    expectation,
    fidelity,
    overlap_exact,
    prepare_basis,
    swap_test_estimate,
    swap_test_probability,
    swap_test_sigma,
)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(v / np.linalg.norm(v), n)


def rot_y(theta):
    return apply_rotation(prepare_basis("0"), PauliTerm.from_label("Y"), theta)


@pytest.mark.parametrize("bits, index", [("000", 0), ("010", 2), ("111", 7), ("001", 1)])
def test_prepare_basis(bits, index):
    s = prepare_basis(bits)
    assert s.amplitudes[index] == 1 and s.norm_squared() == 1


def test_prepare_basis_rejects_garbage():
    with pytest.raises(StateError):
        prepare_basis("012")


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.2, -2.0])
def test_rotation_y_on_zero(theta):
    np.testing.assert_allclose(rot_y(theta).amplitudes, [math.cos(theta), math.sin(theta)], atol=1e-15)


def test_double_half_pi_rotation_is_global_phase(rng):
    s = random_state(rng, 3)
    P = PauliTerm.from_label("XZY")
    out = apply_rotation(apply_rotation(s, P, math.pi / 2), P, math.pi / 2)
    np.testing.assert_allclose(out.amplitudes, -s.amplitudes, atol=1e-14)
    assert fidelity(out, s) == pytest.approx(1.0, abs=1e-14)


def test_rotation_requires_unit_coefficient():
    with pytest.raises(StateError):
        apply_rotation(prepare_basis("0"), PauliTerm.from_label("X", 2.0), 0.1)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 4).flatmap(lambda n: st.text(alphabet="IXYZ", min_size=n, max_size=n)),
    st.floats(-7, 7, allow_nan=False),
    st.integers(0, 2**32 - 1),
)
def test_rotation_matches_expm(label, theta, seed):
    rng = np.random.default_rng(seed)
    n = len(label)
    s = random_state(rng, n)
    out = apply_rotation(s, PauliTerm.from_label(label), theta)
    oracle = expm(-1j * theta * pauli_kron(label)) @ s.amplitudes
    np.testing.assert_allclose(out.amplitudes, oracle, atol=1e-12)
    assert abs(1 - out.norm_squared()) <= 1e-12


def test_pauli_exponential_complex_argument(rng):
    s = random_state(rng, 2)
    c = 0.3 - 0.7j
    got = apply_pauli_exponential(s.amplitudes.copy(), PauliTerm.from_label("XY").axes, c)
    np.testing.assert_allclose(got, expm(c * pauli_kron("XY")) @ s.amplitudes, atol=1e-13)


def test_expectation_examples():
    assert expectation(prepare_basis("0"), PauliSum(1, {"Z": 1.0})) == 1.0
    assert expectation(rot_y(math.pi / 4), PauliSum(1, {"X": 1.0})) == pytest.approx(1.0, abs=1e-15)


def test_expectation_h2o_matrix_element():
    h = build_qubit_hamiltonian(load_bundled("h2o"), "compact", 2)
    m = to_matrix(h.qubit_form)
    assert expectation(prepare_basis("000"), h.qubit_form) == pytest.approx(m[0, 0].real, abs=1e-16)


def test_expectation_rejects_non_hermitian():
    with pytest.raises(StateError):
        expectation(prepare_basis("0"), PauliSum(1, {"X": 1j}))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expectation_within_spectrum(seed):
    rng = np.random.default_rng(seed)
    labels = ["".join(rng.choice(list("IXYZ"), size=3)) for _ in range(6)]
    H = PauliSum(3, [PauliTerm.from_label(lab, rng.normal()) for lab in labels])
    evals = np.linalg.eigvalsh(to_matrix(H))
    e = expectation(random_state(rng, 3), H)
    assert evals[0] - 1e-12 <= e <= evals[-1] + 1e-12


def test_overlap_examples():
    a = prepare_basis("0")
    assert overlap_exact(a, a) == 1
    assert overlap_exact(a, prepare_basis("1")) == 0
    assert overlap_exact(a, rot_y(0.4)) == pytest.approx(math.cos(0.4))
    with pytest.raises(StateError):
        overlap_exact(a, prepare_basis("00"))


def _controlled_swap_p0(a, b):
    # ancilla (top qubit) -> H, controlled-SWAP of the two registers, H, measure
    n = a.n_qubits
    dim = 2**n
    swap = np.zeros((dim * dim, dim * dim))
    for i in range(dim):
        for j in range(dim):
            swap[j * dim + i, i * dim + j] = 1
    had = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    cswap = np.block([[np.eye(dim * dim), np.zeros_like(swap)], [np.zeros_like(swap), swap]])
    full = reduce(np.kron, [had, np.eye(dim * dim)])
    psi = np.kron([1, 0], np.kron(a.amplitudes, b.amplitudes))
    out = full @ cswap @ full @ psi
    return float(np.sum(np.abs(out[: dim * dim]) ** 2))


def test_swap_probability_matches_circuit(rng):
    for _ in range(5):
        a, b = random_state(rng, 2), random_state(rng, 2)
        assert swap_test_probability(a, b) == pytest.approx(_controlled_swap_p0(a, b), abs=1e-12)


def _pair_with_overlap(o2):
    # |<0|R_y(theta)|0>|^2 = cos^2 theta
    return prepare_basis("0"), rot_y(math.acos(math.sqrt(o2)))


@pytest.mark.parametrize("o2", [0.0, 0.25, 1.0])
def test_swap_estimate_within_three_sigma(o2):
    a, b = _pair_with_overlap(o2)
    est = swap_test_estimate(a, b, 100_000, seed=7)
    assert abs(est - o2) <= 3 * swap_test_sigma(o2, 100_000) + 1e-12


def test_swap_identical_is_exactly_one(rng):
    s = random_state(rng, 2)
    assert swap_test_estimate(s, s, 17, seed=3) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("o2", [0.0, 0.25, 0.7])
def test_swap_estimator_unbiased(o2):
    a, b = _pair_with_overlap(o2)
    shots = 1000
    est = np.array([swap_test_estimate(a, b, shots, seed, clamp=False) for seed in range(100)])
    stderr = swap_test_sigma(o2, shots) / math.sqrt(len(est))
    assert abs(est.mean() - o2) < 5 * stderr


def test_swap_seed_reproducible():
    a, b = _pair_with_overlap(0.25)
    assert swap_test_estimate(a, b, 999, 42) == swap_test_estimate(a, b, 999, 42)
    with pytest.raises(StateError):
        swap_test_estimate(a, b, 0, 1)


def test_state_rejects_unnormalized():
    with pytest.raises(StateError):
        StateVector(np.array([1.0, 1.0]), 1)

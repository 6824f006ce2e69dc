import numpy as np
import pytest
from scipy.linalg import expm

from oracles import create, embed
from vibsim.encoding import EncodingScheme, subspace_matrix
from vibsim.forcefield import ForceField
from vibsim.hamiltonian import build_qubit_hamiltonian, build_second_quantized, exact_spectrum
from vibsim.pauli import to_matrix
from vibsim.uvcc import (
    VSCF,
    EnergyFunction,
    UvccError,
    UvccParams,
    VqeDivergence,
    VqeOptions,
    build_circuit,
    build_generator,
    double_keys,
    single_keys,
    vqe_minimize,
)
from vibsim.vscf import vscf


def labels_of(op):
    return {t.label: t.coefficient for t in op}


@pytest.fixture(scope="module")
def h2o_d2(h2o):
    return build_qubit_hamiltonian(h2o, "compact", 2)


def test_single_generator_is_minus_i_theta_y():
    p = UvccParams(1, 2, {(0, 0, 1): 0.4})
    assert labels_of(build_generator(p, EncodingScheme("compact", 2, 1))) == pytest.approx({"Y": -0.4j})


def test_double_generator_pattern():
    theta = 0.3
    p = UvccParams(2, 2, {}, {(0, 1, 0, 1, 0, 1): theta})
    scheme = EncodingScheme("compact", 2, 2)
    g = build_generator(p, scheme)
    assert labels_of(g) == pytest.approx({"XY": -0.5j * theta, "YX": -0.5j * theta})
    A = create(2)
    oracle = theta * (np.kron(A, A) - np.kron(A.T, A.T))
    np.testing.assert_allclose(to_matrix(g), oracle, atol=1e-15)


@pytest.mark.parametrize("d, scheme_kind", [(3, "compact"), (3, "direct"), (4, "compact")])
def test_generator_matches_projector_oracle(rng, d, scheme_kind):
    scheme = EncodingScheme(scheme_kind, d, 2)
    p = UvccParams.zeros(2, d)
    p = p.with_vector(rng.normal(size=len(p.keys())))
    oracle = np.zeros((d * d, d * d))
    for (m, s, t), th in p.theta1.items():
        E = np.zeros((d, d))
        E[t, s] = 1
        oracle += th * embed(E - E.T, m, 2)
    for (m, n, s, t, a, b), th in p.theta2.items():
        E, F = np.zeros((d, d)), np.zeros((d, d))
        E[t, s] = 1
        F[b, a] = 1
        op = embed(E, m, 2) @ embed(F, n, 2)
        oracle += th * (op - op.T)
    np.testing.assert_allclose(subspace_matrix(build_generator(p, scheme), scheme), oracle, atol=1e-14)


def test_zero_parameters_give_empty_generator():
    assert len(build_generator(UvccParams.zeros(3, 2), EncodingScheme("compact", 2, 3))) == 0


@pytest.mark.parametrize("modes, gates, params", [(1, 1, 1), (2, 4, 3), (3, 9, 6)])
def test_gate_and_parameter_counts(modes, gates, params):
    c = build_circuit(None, EncodingScheme("compact", 2, modes))
    assert (len(c.gates), c.n_parameters) == (gates, params)


def test_gate_order_singles_first():
    c = build_circuit(None, EncodingScheme("compact", 2, 3))
    ranks = [g.rank for g in c.gates]
    assert ranks == sorted(ranks)
    assert [g.label for g in c.gates[:3]] == ["IIY", "IYI", "YII"]


def test_key_enumeration():
    assert single_keys(1, 3) == [(0, 0, 1), (0, 0, 2), (0, 1, 2)]
    assert len(double_keys(3, 3)) == 3 * 9


def test_params_validation():
    with pytest.raises(UvccError):
        UvccParams(1, 2, {(0, 1, 0): 0.1})
    with pytest.raises(UvccError):
        UvccParams(2, 2, {}, {(1, 0, 0, 1, 0, 1): 0.1})
    with pytest.raises(UvccError):
        build_circuit(None, EncodingScheme("compact", 2, 2), rank=3)


def test_single_mode_circuit_matches_expm(rng):
    # one parameter, one gate: the Trotter product is exact
    scheme = EncodingScheme("compact", 2, 1)
    c = build_circuit(None, scheme)
    theta = 0.37
    gen = to_matrix(build_generator(UvccParams(1, 2, {(0, 0, 1): theta}), scheme))
    np.testing.assert_allclose(c.state([theta]).amplitudes, expm(gen) @ [1, 0], atol=1e-14)


def test_ansatz_preserves_norm(rng):
    c = build_circuit(None, EncodingScheme("direct", 3, 2))
    for _ in range(5):
        s = c.state(rng.uniform(-2, 2, c.n_parameters))
        assert abs(1 - s.norm_squared()) <= 1e-12


def test_variational_bound(rng, h2o_d2):
    f = EnergyFunction(h2o_d2, build_circuit(None, h2o_d2.scheme))
    e0 = exact_spectrum(h2o_d2, 1)[0]
    for _ in range(50):
        assert f(rng.uniform(-np.pi, np.pi, 6)) >= e0 - 1e-10


def _five_point(f, theta, h=1e-3):
    g = np.zeros_like(theta)
    for k in range(len(theta)):
        e = np.zeros_like(theta)
        e[k] = h
        g[k] = (-f(theta + 2 * e) + 8 * f(theta + e) - 8 * f(theta - e) + f(theta - 2 * e)) / (12 * h)
    return g


def test_gradient_matches_five_point_stencil(rng, h2o_d2):
    f = EnergyFunction(h2o_d2, build_circuit(None, h2o_d2.scheme))
    for _ in range(3):
        theta = rng.uniform(-1, 1, 6)
        g = f.gradient(theta, 1e-4)
        ref = _five_point(f, theta)
        assert np.linalg.norm(g - ref) <= 1e-6 * np.linalg.norm(ref)


def test_single_parameter_energy_is_trigonometric(h2o):
    ff = ForceField(1, (h2o.k2[0],), {(0, 0, 0): h2o.k3[(0, 0, 0)]}, {(0, 0, 0, 0): h2o.k4[(0, 0, 0, 0)]})
    h = build_qubit_hamiltonian(ff, "compact", 2)
    f = EnergyFunction(h, build_circuit(None, h.scheme))
    x = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    y = np.array([f([t]) for t in x])
    basis = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x), np.cos(2 * x), np.sin(2 * x)])
    fit, *_ = np.linalg.lstsq(basis, y, rcond=None)
    assert np.max(np.abs(basis @ fit - y)) < 1e-8
    probe = 0.123
    probe_basis = np.array([1, np.cos(probe), np.sin(probe), np.cos(2 * probe), np.sin(2 * probe)])
    assert probe_basis @ fit == pytest.approx(f([probe]), abs=1e-8)


def test_harmonic_vqe_returns_to_reference():
    omega = [0.5, 0.8, 1.1]
    h = build_qubit_hamiltonian(ForceField.harmonic(omega), "compact", 2)
    res = vqe_minimize(h, build_circuit(None, h.scheme), VqeOptions(seed=3))
    assert res.converged
    assert res.energy == pytest.approx(0.5 * sum(omega), abs=1e-12)
    assert np.linalg.norm(res.theta) < 1e-6


def test_zero_initialization_is_stationary():
    omega = [0.5, 0.8, 1.1]
    h = build_qubit_hamiltonian(ForceField.harmonic(omega), "compact", 2)
    res = vqe_minimize(h, build_circuit(None, h.scheme), VqeOptions(init_perturbation=0.0))
    assert res.converged and res.iterations == 0
    np.testing.assert_array_equal(res.theta, np.zeros(6))
    assert res.energy == pytest.approx(0.5 * sum(omega), abs=1e-15)


def test_cubic_terms_break_zero_stationarity(h2o_d2):
    # the H2O reference is not an eigenstate, so single amplitudes feel a force at zero
    f = EnergyFunction(h2o_d2, build_circuit(None, h2o_d2.scheme))
    g = f.gradient(np.zeros(6), 1e-4)
    assert np.linalg.norm(g[:3]) > 1e-8


def test_h2o_vqe_short_run_is_monotone(h2o_d2):
    res = vqe_minimize(h2o_d2, build_circuit(None, h2o_d2.scheme), VqeOptions(max_iter=300))
    energies = [row["energy"] for row in res.trace]
    assert np.all(np.diff(energies) <= 1e-9)
    assert energies[-1] < energies[0]


def test_divergence_aborts_with_trace(monkeypatch, h2o_d2):
    original = EnergyFunction.gradient
    monkeypatch.setattr(EnergyFunction, "gradient", lambda self, theta, eps: -original(self, theta, eps))
    c = build_circuit(None, h2o_d2.scheme)
    with pytest.raises(VqeDivergence) as info:
        vqe_minimize(h2o_d2, c, VqeOptions(pure_gd=True, step=0.5, max_iter=100))
    energies = [row["energy"] for row in info.value.trace]
    assert len(energies) == 11
    assert np.all(np.diff(energies) > 0)


def test_threads_are_deterministic(h2o_d2):
    c = build_circuit(None, h2o_d2.scheme)
    a = vqe_minimize(h2o_d2, c, VqeOptions(max_iter=50, threads=1))
    b = vqe_minimize(h2o_d2, c, VqeOptions(max_iter=50, threads=4))
    np.testing.assert_array_equal(a.theta, b.theta)
    assert a.trace == b.trace


def test_thread_env_variable(monkeypatch, h2o_d2):
    monkeypatch.setenv("VIBSIM_THREADS", "3")
    assert EnergyFunction(h2o_d2, build_circuit(None, h2o_d2.scheme)).threads == 3
    monkeypatch.setenv("VIBSIM_THREADS", "lots")
    with pytest.raises(UvccError):
        EnergyFunction(h2o_d2, build_circuit(None, h2o_d2.scheme))


def test_vscf_reference(h2o):
    h = build_qubit_hamiltonian(h2o, "compact", 2)
    res = vscf(build_second_quantized(h2o), 3, 2)
    c = build_circuit(None, h.scheme, reference=VSCF, reference_state=res.state(h.scheme))
    assert EnergyFunction(h, c)(np.zeros(6)) == pytest.approx(res.energy, abs=1e-12)
    with pytest.raises(UvccError):
        build_circuit(None, h.scheme, reference=VSCF)


def test_mismatched_encoding(h2o_d2):
    c = build_circuit(None, EncodingScheme("direct", 2, 3))
    with pytest.raises(UvccError):
        EnergyFunction(h2o_d2, c)

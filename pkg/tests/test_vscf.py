import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibsim.forcefield import ForceField
from vibsim.hamiltonian import build_qubit_hamiltonian, build_second_quantized, exact_spectrum, hamiltonian_matrix
from vibsim.statevector import expectation
from vibsim.vscf import vscf


def run(ff, d, **kw):
    return vscf(build_second_quantized(ff), ff.modes, d, **kw)


def exact_ground(ff, d):
    return exact_spectrum(build_qubit_hamiltonian(ff, "compact", d), 1)[0]


def reference_energy(ff, d):
    h = build_qubit_hamiltonian(ff, "compact", d)
    return hamiltonian_matrix(h)[0, 0].real


def test_harmonic_is_exact_in_one_sweep():
    omega = [0.3, 0.5, 0.9]
    res = run(ForceField.harmonic(omega), 4)
    assert res.converged and res.iterations == 1
    assert res.energy == pytest.approx(0.5 * sum(omega), abs=1e-15)
    for phi in res.orbitals:
        np.testing.assert_allclose(np.abs(phi), [1, 0, 0, 0], atol=1e-15)


def separable(seed):
    rng = np.random.default_rng(seed)
    omega = rng.uniform(0.5, 1.5, size=3)
    k3 = {(i, i, i): rng.uniform(-0.02, 0.02) for i in range(3)}
    k4 = {(i, i, i, i): rng.uniform(0.0, 0.01) for i in range(3)}
    return ForceField(3, tuple(0.5 * omega**2), k3, k4)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3, 4]))
def test_separable_equals_exact(seed, d):
    ff = separable(seed)
    assert run(ff, d).energy == pytest.approx(exact_ground(ff, d), abs=1e-10)


@pytest.mark.parametrize("name", ["h2o", "so2"])
def test_brackets(request, name):
    ff = request.getfixturevalue(name)
    res = run(ff, 4)
    assert res.converged
    assert exact_ground(ff, 4) <= res.energy <= reference_energy(ff, 4)
    assert res.energy == pytest.approx(res.energy_history[-1])


@pytest.mark.parametrize("name", ["h2o", "so2"])
def test_energy_history_non_increasing(request, name):
    res = run(request.getfixturevalue(name), 4)
    assert np.all(np.diff(res.energy_history) <= 1e-12)


def test_idempotent_restart(h2o):
    first = run(h2o, 4)
    again = run(h2o, 4, initial=first.orbitals)
    assert again.converged and again.iterations == 1
    assert again.energy == pytest.approx(first.energy, abs=1e-10)


def test_orbitals_normalized_and_state_energy(h2o):
    res = run(h2o, 4)
    for phi in res.orbitals:
        assert np.linalg.norm(phi) == pytest.approx(1.0, abs=1e-12)
    h = build_qubit_hamiltonian(h2o, "compact", 4)
    assert expectation(res.state(h.scheme), h.qubit_form) == pytest.approx(res.energy, abs=1e-12)


def test_nonconvergence_is_flagged(h2o):
    res = run(h2o, 4, tol=0.0, max_iter=3)
    assert not res.converged and res.iterations == 3


@pytest.mark.parametrize("kw", [{"damping": 1.0}, {"damping": -0.1}])
def test_bad_options(h2o, kw):
    with pytest.raises(ValueError):
        run(h2o, 4, **kw)


def test_damping_reaches_same_energy(so2):
    assert run(so2, 4, damping=0.3).energy == pytest.approx(run(so2, 4).energy, abs=1e-9)

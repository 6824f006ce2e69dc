import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from oracles import dense_vib_hamiltonian
from vibsim.forcefield import (
    ForceField,
    ForceFieldError,
    Polynomial,
    force_field_from_dict,
    frequencies,
    localization_map,
    parse_force_field,
    transform_polynomial,
)


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


# tabulated force-field values, (1-based indices) -> coefficient
H2O_TABLE = {
    (1, 1): 0.275240e-4, (2, 2): 0.151618e-3, (3, 3): 0.161766e-3,
    (1, 1, 1): 0.121631e-6, (1, 1, 2): 0.698476e-6, (1, 2, 2): -0.266427e-6,
    (2, 2, 2): -0.312538e-5, (1, 3, 3): -0.915428e-6, (2, 3, 3): -0.964649e-5,
    (1, 1, 1, 1): -0.463748e-9, (1, 1, 2, 2): -0.449480e-7, (1, 2, 2, 2): 0.957558e-8,
    (2, 2, 2, 2): 0.433267e-7, (1, 1, 3, 3): -0.555026e-7, (1, 2, 3, 3): 0.563566e-7,
    (2, 2, 3, 3): 0.269239e-6, (3, 3, 3, 3): 0.462143e-7, (2, 3, 3, 3): 0.0,
}


def test_bundled_h2o_matches_table(h2o):
    assert h2o.modes == 3
    for key, val in H2O_TABLE.items():
        idx = tuple(i - 1 for i in key)
        if len(key) == 2:
            assert h2o.k2[idx[0]] == val
        elif len(key) == 3:
            assert h2o.k3.get(idx, 0.0) == val
        else:
            assert h2o.k4.get(idx, 0.0) == val
    assert (1, 2, 2, 2) in h2o.k4 and h2o.k4[(1, 2, 2, 2)] == 0.0


def test_bundled_so2(so2):
    assert so2.modes == 3
    assert so2.k2[0] == 0.252559e-5
    assert so2.k4[(1, 2, 2, 2)] == -0.720760e-11
    assert frequencies(so2)[0] == pytest.approx(np.sqrt(5.05118e-6), rel=1e-12)


@pytest.mark.parametrize("k, omega", [(0.275240e-4, 7.41944e-3), (0.5, 1.0)])
def test_frequency_examples(k, omega):
    ff = ForceField(1, (k,))
    assert frequencies(ff)[0] == pytest.approx(omega, rel=1e-5)


def test_nonpositive_harmonic_rejected():
    with pytest.raises(ForceFieldError, match=r"k\[2,2\]"):
        ForceField(2, (0.1, 0.0))


def test_identity_transform_unchanged(h2o):
    poly = h2o.potential()
    out = transform_polynomial(poly, np.eye(3))
    assert out.max_abs_difference(poly) == 0.0


def test_shift_binomial():
    omega, delta = 1.3, 0.4
    v = Polynomial(1, {(0, 0): 0.5 * omega**2})
    out = transform_polynomial(v, [[1.0]], [delta])
    expected = Polynomial(1, {(0, 0): 0.5 * omega**2, (0,): omega**2 * delta, (): 0.5 * omega**2 * delta**2})
    assert out.max_abs_difference(expected) < 1e-15


def test_dimension_mismatch():
    with pytest.raises(ForceFieldError):
        transform_polynomial(Polynomial(2, {(0, 1): 1.0}), np.eye(3))
    with pytest.raises(ForceFieldError):
        transform_polynomial(Polynomial(2, {(0, 1): 1.0}), np.eye(2), [0.0])


def test_rotated_harmonic_spectrum_unchanged():
    omega = np.array([1.0, 1.7])
    v = Polynomial(2, {(0, 0): 0.5 * omega[0] ** 2, (1, 1): 0.5 * omega[1] ** 2})
    rotated = transform_polynomial(v, rotation(0.3))
    # reference oscillators taken from the diagonal of the rotated potential
    ref = np.sqrt([2 * rotated.coeffs[(0, 0)], 2 * rotated.coeffs[(1, 1)]])
    evals = np.linalg.eigvalsh(dense_vib_hamiltonian(rotated.coeffs, ref, 16))[:5]
    exact = np.sort([omega @ [n0 + 0.5, n1 + 0.5] for n0 in range(4) for n1 in range(4)])[:5]
    np.testing.assert_allclose(evals, exact, atol=1e-6)


poly_coeff = st.floats(-2, 2, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(
    st.dictionaries(
        st.lists(st.integers(0, 2), min_size=1, max_size=4).map(lambda k: tuple(sorted(k))),
        poly_coeff,
        min_size=1,
        max_size=10,
    ),
    st.integers(0, 2**31 - 1),
)
def test_inverse_roundtrip_and_degree(coeffs, seed):
    rng = np.random.default_rng(seed)
    poly = Polynomial(3, coeffs)
    A = special_ortho_group.rvs(3, random_state=rng) * rng.uniform(0.5, 1.5)
    b = rng.normal(size=3)
    fwd = transform_polynomial(poly, A, b)
    assert fwd.degree() <= poly.degree()
    Ainv = np.linalg.inv(A)
    back = transform_polynomial(fwd, Ainv, -Ainv @ b)
    assert back.max_abs_difference(poly) < 1e-12 * max(1.0, max((abs(c) for c in fwd.coeffs.values()), default=0.0))
    x = rng.normal(size=3)
    assert fwd.evaluate(x) == pytest.approx(poly.evaluate(A @ x + b), abs=1e-10)


def test_localization_identity():
    m = localization_map(np.eye(3), [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(m.Wp, np.eye(3))
    np.testing.assert_array_equal(m.Wq, np.eye(3))


def test_localization_equal_frequencies():
    U = rotation(np.pi / 4)
    m = localization_map(U, [0.7, 0.7])
    np.testing.assert_allclose(m.Wp, U, atol=1e-15)
    np.testing.assert_allclose(m.Wq, U, atol=1e-15)


def test_localization_swap():
    m = localization_map([[0, 1], [1, 0]], [1.0, 4.0])
    assert m.Wp[0, 1] == pytest.approx(0.5)
    assert m.Wp[1, 0] == pytest.approx(2.0)
    assert m.Wq[0, 1] == pytest.approx(2.0)
    assert m.Wq[1, 0] == pytest.approx(0.5)
    assert m.Wp[0, 0] == 0 and m.Wp[1, 1] == 0


@settings(max_examples=25)
@given(st.integers(0, 2**31 - 1))
def test_localization_weights_mutually_inverse(seed):
    rng = np.random.default_rng(seed)
    U = special_ortho_group.rvs(4, random_state=rng)
    m = localization_map(U, rng.uniform(0.1, 3.0, size=4))
    np.testing.assert_allclose(m.Wp @ m.Wq.T, np.eye(4), atol=1e-12)


def test_localization_rejects_non_orthogonal():
    with pytest.raises(ForceFieldError, match="orthogonal"):
        localization_map([[1.0, 0.1], [0.0, 1.0]], [1.0, 1.0])


@pytest.mark.parametrize(
    "data, message",
    [
        ({"modes": 1, "k2": [[1, 1, -1.0]]}, "positive"),
        ({"modes": 2, "k2": [[1, 2, 1.0], [2, 2, 1.0]]}, "off-diagonal"),
        ({"modes": 1, "k2": [[1, 1, 1.0]], "k3": [[1, 1, 2, 0.1]]}, "out of range"),
        ({"modes": 1, "k2": [[1, 1, 1.0]], "units": "cm-1"}, "atomic"),
        ({"modes": 1, "k2": [[1, 1, 1.0], [1, 1, 2.0]]}, "twice"),
        ({"modes": 0}, "modes"),
    ],
)
def test_json_validation(data, message):
    with pytest.raises(ForceFieldError, match=message):
        force_field_from_dict(data)


def test_json_roundtrip(tmp_path, h2o):
    path = tmp_path / "ff.json"
    path.write_text(json.dumps(h2o.to_json_dict()))
    back = parse_force_field(path)
    assert back == h2o


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ForceFieldError, match="malformed"):
        parse_force_field(path)

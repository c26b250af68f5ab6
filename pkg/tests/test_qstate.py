import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starcluster.cluster import star_state
from starcluster.qstate import (
    CNOT, CZ, GATES, H, KET, T, DensityMatrix, PureState, apply_gate, as_density, dumps_state,
    hwp, is_unitary, loads_state, maximally_mixed, partial_trace, pauli_expectation,
    permute_qubits, product_state, state_fidelity, tensor,
)

S2 = np.sqrt(2)


def random_density(n, rng, rank=None):
    d = 2**n
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho))


def random_pure(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState(v / np.linalg.norm(v))


def test_tensor_zero_plus():
    out = tensor(PureState(KET["0"]), PureState(KET["+"]))
    np.testing.assert_allclose(out.amplitudes, np.array([1, 1, 0, 0]) / S2, atol=1e-12)


def test_tensor_mixed():
    out = tensor(maximally_mixed(1), maximally_mixed(1))
    np.testing.assert_allclose(out.data, np.eye(4) / 4, atol=1e-12)


def test_tensor_kind_mismatch():
    with pytest.raises(TypeError):
        tensor(PureState(KET["0"]), maximally_mixed(1))


def test_gate_actions():
    plus = apply_gate(PureState(KET["0"]), H, [0])
    np.testing.assert_allclose(plus.amplitudes, KET["+"], atol=1e-12)
    cz = apply_gate(product_state("++"), CZ, [0, 1])
    np.testing.assert_allclose(cz.amplitudes, np.array([1, 1, 1, -1]) / 2, atol=1e-12)
    t = apply_gate(PureState(KET["+"]), T, [0])
    np.testing.assert_allclose(t.amplitudes, np.array([1, np.exp(1j * np.pi / 4)]) / S2,
                               atol=1e-12)
    cn = apply_gate(product_state("10"), CNOT, [0, 1])
    np.testing.assert_allclose(cn.amplitudes, product_state("11").amplitudes, atol=1e-12)


def test_gate_on_reversed_targets():
    # control on qubit 1, target on qubit 0
    out = apply_gate(product_state("01"), CNOT, [1, 0])
    np.testing.assert_allclose(out.amplitudes, product_state("11").amplitudes, atol=1e-12)


def test_non_unitary_gate_rejected():
    with pytest.raises(ValueError):
        apply_gate(product_state("0"), np.diag([1.0, 0.0]), [0])


def test_hwp_45_is_bit_flip():
    np.testing.assert_allclose(hwp(np.pi / 4), [[0, 1], [1, 0]], atol=1e-12)
    assert is_unitary(hwp(0.3))


@pytest.mark.parametrize("name", sorted(GATES))
def test_gate_then_inverse_restores(name):
    rng = np.random.default_rng(1)
    u = GATES[name]
    k = int(np.log2(u.shape[0]))
    psi = random_pure(3, rng)
    targets = [2, 0][:k] if k == 2 else [1]
    back = apply_gate(apply_gate(psi, u, targets), u.conj().T, targets)
    assert np.abs(back.amplitudes - psi.amplitudes).max() < 1e-9


def test_partial_trace_examples():
    bell = PureState(np.array([1, 0, 0, 1]) / S2)
    for keep in ([0], [1]):
        np.testing.assert_allclose(partial_trace(bell, keep).data, np.eye(2) / 2, atol=1e-12)
    zp = product_state("0+")
    np.testing.assert_allclose(partial_trace(zp, [0, 1]).data, as_density(zp).data, atol=1e-12)
    np.testing.assert_allclose(partial_trace(zp, [0]).data, np.diag([1, 0]), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 2))
def test_tensor_then_trace_returns_factor(seed, n, m):
    rng = np.random.default_rng(seed)
    a, b = random_density(n, rng), random_density(m, rng)
    out = partial_trace(tensor(a, b), range(n))
    assert np.abs(out.data - a.data).max() < 1e-9


def test_permute_qubits_moves_first_to_last():
    psi = product_state("01+")
    out = permute_qubits(psi, [1, 2, 0])
    np.testing.assert_allclose(out.amplitudes, product_state("1+0").amplitudes, atol=1e-12)


def test_fidelity_examples():
    star = star_state()
    assert state_fidelity(star, star) == pytest.approx(1.0, abs=1e-12)
    assert state_fidelity(star, maximally_mixed(4)) == pytest.approx(1 / 16, abs=1e-12)
    p = 0.36267
    mix = DensityMatrix((1 - p) * as_density(star).data + p * np.eye(16) / 16)
    assert state_fidelity(star, mix) == pytest.approx(0.66, abs=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_fidelity_linear_in_rho(seed, a):
    rng = np.random.default_rng(seed)
    psi = random_pure(2, rng)
    r1, r2 = random_density(2, rng), random_density(2, rng)
    mix = DensityMatrix(a * r1.data + (1 - a) * r2.data)
    lhs = state_fidelity(psi, mix)
    rhs = a * state_fidelity(psi, r1) + (1 - a) * state_fidelity(psi, r2)
    assert abs(lhs - rhs) < 1e-9


def test_pauli_expectation_examples():
    assert pauli_expectation(PureState(KET["+"]), "X") == pytest.approx(1.0)
    bell = PureState(np.array([1, 0, 0, 1]) / S2)
    assert pauli_expectation(bell, "ZZ") == pytest.approx(1.0)
    assert pauli_expectation(bell, "XX") == pytest.approx(1.0)
    assert pauli_expectation(bell, "YY") == pytest.approx(-1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_identity_string_gives_trace(seed, n):
    rho = random_density(n, np.random.default_rng(seed))
    assert pauli_expectation(rho, "I" * n) == pytest.approx(1.0, abs=1e-9)


def test_ket_conventions():
    np.testing.assert_allclose(KET["L"], np.array([1, 1j]) / S2)
    np.testing.assert_allclose(KET["R"], np.array([1, -1j]) / S2)
    # L is the +1 eigenvector of Y
    assert pauli_expectation(PureState(KET["L"]), "Y") == pytest.approx(1.0)


def test_density_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        PureState(np.ones(3) / np.sqrt(3))
    assert not DensityMatrix(np.diag([1.5, -0.5])).is_physical()


def test_json_round_trip():
    rng = np.random.default_rng(3)
    for state in (random_pure(2, rng), random_density(3, rng)):
        back = loads_state(dumps_state(state))
        assert type(back) is type(state)
        a = getattr(state, "data", getattr(state, "amplitudes", None))
        b = getattr(back, "data", getattr(back, "amplitudes", None))
        np.testing.assert_array_equal(a, b)

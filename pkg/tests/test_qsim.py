import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_unitary, statevector
from groverdd.errors import NumericIntegrityError, OperandError, SizeError, ValidationError
from groverdd.grover import GroverSpec, build_grover_circuit
from groverdd.qsim import (
    DensityMatrix,
    KrausChannel,
    MeasurementDistribution,
    apply_channel,
    apply_unitary,
    bitstring_index,
    index_bitstring,
    init_state,
    measure_distribution,
    sample_counts,
)
from groverdd.qsim.state import normalize_probabilities

X = np.array([[0, 1], [1, 0]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def test_init_state_one_qubit():
    assert np.array_equal(init_state(1).data, np.array([[1, 0], [0, 0]]))


def test_init_state_two_qubits():
    data = init_state(2).data
    assert data.shape == (4, 4) and data[0, 0] == 1 and np.count_nonzero(data) == 1


@pytest.mark.parametrize("n", [0, 8])
def test_init_state_size_error(n):
    with pytest.raises(SizeError):
        init_state(n)


def test_x_flips_qubit():
    rho = apply_unitary(init_state(1), X, [0])
    assert np.allclose(rho.data, [[0, 0], [0, 1]], atol=1e-15)


def test_hadamard_gives_uniform_entries():
    rho = apply_unitary(init_state(1), H, [0])
    assert np.allclose(rho.data, 0.5, atol=1e-15)


def test_big_endian_convention():
    rho = apply_unitary(init_state(3), X, [0])
    dist = measure_distribution(rho)
    assert dist.probability("100") == pytest.approx(1.0)
    assert bitstring_index("100") == 4 and index_bitstring(4, 3) == "100"


def test_grover_one_iteration_three_qubits():
    from groverdd.circuit import Kind, gate_matrix

    circ = build_grover_circuit(GroverSpec(3, "010", 1))
    rho = init_state(3)
    for g in circ.gates:
        if g.kind != Kind.MEASURE:
            rho = apply_unitary(rho, gate_matrix(g), g.qubits)
    p = measure_distribution(rho).probability("010")
    assert p == pytest.approx(25 / 32, abs=1e-12)
    assert p == pytest.approx(np.abs(statevector(circ)[bitstring_index("010")]) ** 2, abs=1e-12)


def test_non_unitary_rejected():
    with pytest.raises(ValidationError):
        apply_unitary(init_state(1), np.array([[1, 0], [0, 2]]), [0])


def test_duplicate_targets_rejected():
    with pytest.raises(OperandError):
        apply_unitary(init_state(2), np.eye(4), [1, 1])


def test_identity_channel_noop(rng):
    rho = DensityMatrix(2, random_density(2, rng))
    out = apply_channel(rho, KrausChannel((np.eye(2),)), [1])
    assert np.allclose(out.data, rho.data, atol=1e-14)


def test_full_amplitude_damping():
    ch = KrausChannel((np.array([[1, 0], [0, 0]]), np.array([[0, 1], [0, 0]])))
    rho = apply_channel(apply_unitary(init_state(1), X, [0]), ch, [0])
    assert np.allclose(rho.data, [[1, 0], [0, 0]], atol=1e-15)


def test_full_depolarizing_one_qubit(rng):
    paulis = [np.eye(2), X, np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    ch = KrausChannel(tuple(0.5 * p for p in paulis))
    out = apply_channel(DensityMatrix(1, random_density(1, rng)), ch, [0])
    assert np.allclose(out.data, np.eye(2) / 2, atol=1e-14)


def test_non_trace_preserving_channel_rejected():
    with pytest.raises(ValidationError):
        apply_channel(init_state(1), KrausChannel((0.5 * np.eye(2),)), [0])


def test_measure_ground():
    assert np.array_equal(measure_distribution(init_state(1)).probabilities, [1.0, 0.0])


def test_uniform_five_qubits():
    rho = init_state(5)
    for q in range(5):
        rho = apply_unitary(rho, H, [q])
    assert np.allclose(measure_distribution(rho).probabilities, 1 / 32, atol=1e-14)


def test_drift_is_integrity_error():
    with pytest.raises(NumericIntegrityError):
        normalize_probabilities(np.array([0.5, 0.5 + 1e-6]))


def test_small_drift_renormalized():
    p = normalize_probabilities(np.array([0.5, 0.5 + 5e-10, -1e-12]))
    assert p.min() >= 0 and p.sum() == pytest.approx(1.0, abs=1e-15)


def test_sample_counts_point_mass():
    counts = sample_counts(MeasurementDistribution(np.array([1.0, 0.0])), 100, 3)
    assert list(counts) == [100, 0]


def test_sample_counts_binomial_spread():
    counts = sample_counts(MeasurementDistribution(np.array([0.5, 0.5])), 10**6, 11)
    assert abs(counts[0] - 500000) <= 5 * 500 and counts.sum() == 10**6


def test_sample_counts_deterministic():
    d = MeasurementDistribution(np.full(8, 1 / 8))
    assert np.array_equal(sample_counts(d, 1000, 5), sample_counts(d, 1000, 5))


def test_sample_counts_needs_shots():
    with pytest.raises(ValueError):
        sample_counts(MeasurementDistribution(np.array([1.0, 0.0])), 0, 1)


def test_three_qubit_unitary_matches_dense(rng):
    rho = DensityMatrix(4, random_density(4, rng))
    U = random_unitary(8, rng)
    out = apply_unitary(rho, U, [3, 0, 2])
    # dense reference: permute qubits so targets lead, then U x I
    from groverdd.circuit import _embed

    full = _embed(U, [3, 0, 2], 4)
    assert np.allclose(out.data, full @ rho.data @ full.conj().T, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_unitary_inverse_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    rho = DensityMatrix(n, random_density(n, rng))
    k = min(n, 2)
    targets = list(rng.permutation(n)[:k])
    U = random_unitary(1 << k, rng)
    back = apply_unitary(apply_unitary(rho, U, targets), U.conj().T, targets)
    assert np.max(np.abs(back.data - rho.data)) < 1e-10


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_long_sequences_preserve_trace_and_hermiticity(seed):
    rng = np.random.default_rng(seed)
    n = 3
    rho = init_state(n)
    gamma = 0.3
    damp = KrausChannel((np.array([[1, 0], [0, np.sqrt(1 - gamma)]]), np.array([[0, np.sqrt(gamma)], [0, 0]])))
    for step in range(1000):
        if step % 3 == 0:
            rho = apply_channel(rho, damp, [int(rng.integers(n))])
        else:
            a, b = rng.permutation(n)[:2]
            rho = apply_unitary(rho, random_unitary(4, rng), [int(a), int(b)])
    assert abs(rho.trace() - 1) < 1e-9
    assert rho.hermiticity_error() < 1e-9
    assert rho.min_eigenvalue() > -1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_statevector_equivalence(n, seed):
    from groverdd.circuit import Circuit, Gate, Kind

    rng = np.random.default_rng(seed)
    circ = Circuit(n)
    for _ in range(20):
        r = rng.integers(4)
        q = int(rng.integers(n))
        if r == 0:
            circ.append(Gate(Kind.H, (q,)))
        elif r == 1:
            circ.append(Gate(Kind.RZ, (q,), (float(rng.uniform(-4, 4)),)))
        elif r == 2:
            circ.append(Gate(Kind.SX, (q,)))
        else:
            a, b = rng.permutation(n)[:2]
            circ.append(Gate(Kind.CZ, (int(a), int(b))))
    from groverdd.circuit import gate_matrix

    rho = init_state(n)
    for g in circ.gates:
        rho = apply_unitary(rho, gate_matrix(g), g.qubits)
    psi = statevector(circ)
    assert np.max(np.abs(np.real(np.diag(rho.data)) - np.abs(psi) ** 2)) < 1e-10

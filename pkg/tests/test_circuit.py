import math

import numpy as np
import pytest

from conftest import statevector
from groverdd.circuit import (
    Circuit,
    Gate,
    GateDurations,
    IdleWindow,
    Kind,
    busy_fraction,
    busy_intervals,
    circuit_unitary,
    cz,
    dump,
    equal_up_to_phase,
    extract_idle_windows,
    gate_matrix,
    h,
    lower_to_native,
    mcz,
    measure,
    parse_dump,
    per_qubit_twoq_count,
    schedule_alap,
    x,
)
from groverdd.errors import ConfigurationError, LoweringError, OperandError
from groverdd.grover import GroverSpec, build_grover_circuit
from groverdd.simulator import simulate

D = GateDurations()


def _grover_tc(n, k, target=None):
    target = target or ("01011" if n == 5 else "0" * n)
    return schedule_alap(lower_to_native(build_grover_circuit(GroverSpec(n, target, k))), D)


def test_hadamard_lowering():
    native = lower_to_native(Circuit(1, [h(0)]))
    assert [g.kind for g in native.gates] == [Kind.RZ, Kind.SX, Kind.RZ]
    assert equal_up_to_phase(circuit_unitary(1, native.gates), gate_matrix(h(0)))


def test_cz_unchanged():
    assert lower_to_native(Circuit(2, [cz(0, 1)])).gates == [cz(0, 1)]


def test_ccz_lowering():
    native = lower_to_native(Circuit(3, [mcz([0, 1, 2])]))
    assert equal_up_to_phase(circuit_unitary(3, native.gates), np.diag([1, 1, 1, 1, 1, 1, 1, -1]))


@pytest.mark.parametrize("qubits", [(2, 0), (1, 3, 0), (4, 2, 0, 1), (3, 0, 4, 1, 2), (5, 0, 2, 1, 4, 3)])
def test_relabelled_mcz_is_faithful(qubits):
    n = max(qubits) + 1
    native = lower_to_native(Circuit(n, [mcz(qubits)]))
    want = statevector_unitary(Circuit(n, [mcz(qubits)]))
    assert equal_up_to_phase(circuit_unitary(n, native.gates), want)


def statevector_unitary(circ):
    n = circ.n_qubits
    cols = []
    for b in range(1 << n):
        prep = Circuit(n, [x(q) for q in range(n) if (b >> (n - 1 - q)) & 1] + list(circ.gates))
        cols.append(statevector(prep))
    return np.array(cols).T


def test_seven_qubit_mcz_unsupported():
    with pytest.raises(Exception) as err:
        lower_to_native(Circuit(7, [mcz(range(7))]))
    assert "MCZ" in str(err.value)


def test_unknown_macro():
    with pytest.raises(LoweringError):
        schedule_alap(Circuit(1, [h(0)]))


def test_duplicate_operands():
    with pytest.raises(OperandError):
        cz(1, 1)


def test_forced_placement():
    tc = schedule_alap(Circuit(1, [x(0), measure(0)]), D)
    xg = tc.gates[0]
    assert xg.start == pytest.approx(tc.total_duration - D.measure - D.single_qubit, abs=1e-18)


def test_short_chain_is_late():
    tc = schedule_alap(Circuit(2, [x(0), x(1), x(1), x(1)]), D)
    starts0 = [sg.start for sg in tc.on_qubit(0)]
    assert starts0 == [pytest.approx(2 * D.single_qubit)]
    w = [w for w in extract_idle_windows(tc) if w.qubit == 0]
    assert w == [IdleWindow(0, 0.0, pytest.approx(2 * D.single_qubit))]


def test_measurements_end_together():
    tc = _grover_tc(5, 1)
    ms = [sg for sg in tc.gates if sg.kind == Kind.MEASURE]
    assert len(ms) == 5
    assert all(abs(sg.end - tc.total_duration) < 1e-15 for sg in ms)


def test_missing_duration():
    with pytest.raises(ConfigurationError):
        schedule_alap(Circuit(2, [cz(0, 1)]), GateDurations(two_qubit=None))


def test_durations_from_mapping():
    tc = schedule_alap(Circuit(1, [x(0)]), {"single_qubit": 50e-9})
    assert tc.total_duration == pytest.approx(50e-9)


def test_invariants_on_grover():
    tc = _grover_tc(5, 2)
    for q in range(5):
        iv = sorted(busy_intervals(tc, q))
        assert all(a[1] <= b[0] + 1e-15 for a, b in zip(iv, iv[1:])), "overlap"
    assert tc.total_duration == pytest.approx(max(sg.end for sg in tc.gates))
    # per-qubit order matches the lowered circuit
    lowered = lower_to_native(build_grover_circuit(GroverSpec(5, "01011", 2)))
    for q in range(5):
        want = [g for g in lowered.gates if q in g.qubits]
        assert [sg.gate for sg in tc.on_qubit(q)] == want


def test_idle_and_busy_tile_each_qubit():
    tc = _grover_tc(4, 2)
    windows = extract_idle_windows(tc)
    for q in range(4):
        meas = min(sg.start for sg in tc.gates if sg.kind == Kind.MEASURE and q in sg.qubits)
        pieces = [(a, b) for a, b in busy_intervals(tc, q) if a < meas]
        pieces += [(w.start, w.end) for w in windows if w.qubit == q]
        pieces.sort()
        cursor = 0.0
        for a, b in pieces:
            assert abs(a - cursor) < 1e-15
            cursor = b
        assert abs(cursor - meas) < 1e-15


def test_fully_packed_qubit_has_no_windows():
    tc = schedule_alap(Circuit(1, [x(0), x(0), measure(0)]), D)
    assert extract_idle_windows(tc) == []


def test_idle_until_measure():
    tc = schedule_alap(Circuit(2, [x(0), x(0), x(0), measure(0), measure(1)]), D)
    w = [w for w in extract_idle_windows(tc) if w.qubit == 1]
    assert len(w) == 1 and w[0].length == pytest.approx(tc.total_duration - D.measure)


def test_two_most_connected_qubits_idle_least():
    tc = _grover_tc(5, 4)
    idle = np.zeros(5)
    for w in extract_idle_windows(tc):
        idle[w.qubit] += w.length
    twoq = per_qubit_twoq_count(tc)
    hubs = set(np.argsort(-twoq, kind="stable")[:2])
    assert hubs == set(np.argsort(idle)[:2])


def test_busy_fraction_edges():
    tc = schedule_alap(Circuit(2, [x(0), x(0)]), D)
    assert list(busy_fraction(tc)) == [1.0, 0.0]


def test_delay_not_busy():
    tc = schedule_alap(Circuit(1, [Gate(Kind.DELAY, (0,), (1e-6,)), x(0)]), D)
    assert busy_fraction(tc)[0] == pytest.approx(D.single_qubit / tc.total_duration)
    assert extract_idle_windows(tc)[0].length == pytest.approx(1e-6)


@pytest.mark.parametrize("n,k", [(3, 2), (5, 1)])
def test_scheduling_preserves_semantics(n, k):
    lowered = lower_to_native(build_grover_circuit(GroverSpec(n, "1" * n, k)))
    tc = schedule_alap(lowered, D)
    psi = statevector(lowered)
    assert np.max(np.abs(simulate(tc).probabilities - np.abs(psi) ** 2)) < 1e-12


def test_dump_roundtrip():
    tc = _grover_tc(2, 1, "11")
    text = dump(tc)
    back = parse_dump(text, 2)
    assert dump(back) == text
    assert math.isclose(back.total_duration, tc.total_duration, rel_tol=1e-12)


GOLDEN_BELL = (
    "0.000000000000e+00  0.000000000000e+00  RZ  0  1.57079632679\n"
    "0.000000000000e+00  3.200000000000e-08  SX  0  -\n"
    "3.200000000000e-08  0.000000000000e+00  RZ  0  1.57079632679\n"
    "3.200000000000e-08  6.800000000000e-08  CZ  0,1  -\n"
    "1.000000000000e-07  1.500000000000e-06  MEASURE  0  -\n"
    "1.000000000000e-07  1.500000000000e-06  MEASURE  1  -\n"
)


def test_golden_dump():
    circ = Circuit(2, [h(0), cz(0, 1), measure(0), measure(1)])
    tc = schedule_alap(lower_to_native(circ), D)
    assert dump(tc) == GOLDEN_BELL

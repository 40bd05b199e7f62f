"""Timed circuit representation, lowering to native gates and ALAP scheduling.

Native gate set: ``X``, ``SX``, ``RZ`` (virtual, zero duration), ``CZ``,
``MEASURE`` and ``DELAY``.  ``H``, ``Z`` and ``MCZ`` are macros that
:func:`lower_to_native` expands; ``BARRIER`` is a zero-duration fence.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from groverdd.errors import ConfigurationError, LoweringError, OperandError

TIME_EPS = 1e-15


class Kind(str, enum.Enum):
    X = "X"
    SX = "SX"
    RZ = "RZ"
    H = "H"
    Z = "Z"
    CZ = "CZ"
    MCZ = "MCZ"
    BARRIER = "BARRIER"
    MEASURE = "MEASURE"
    DELAY = "DELAY"

    def __str__(self):
        return self.value


NATIVE_KINDS = frozenset({Kind.X, Kind.SX, Kind.RZ, Kind.CZ, Kind.MEASURE, Kind.DELAY})
MACRO_KINDS = frozenset({Kind.H, Kind.Z, Kind.MCZ})


@dataclass(frozen=True)
class Gate:
    kind: Kind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(self.qubits)) != len(self.qubits):
            raise OperandError(f"duplicate operands in {self.kind}: {self.qubits}")


def x(q: int) -> Gate:
    return Gate(Kind.X, (q,))


def sx(q: int) -> Gate:
    return Gate(Kind.SX, (q,))


def rz(q: int, angle: float) -> Gate:
    return Gate(Kind.RZ, (q,), (angle,))


def h(q: int) -> Gate:
    return Gate(Kind.H, (q,))


def cz(a: int, b: int) -> Gate:
    return Gate(Kind.CZ, (a, b))


def mcz(qubits: Sequence[int]) -> Gate:
    return Gate(Kind.MCZ, tuple(qubits))


def measure(q: int) -> Gate:
    return Gate(Kind.MEASURE, (q,))


def barrier(qubits: Sequence[int]) -> Gate:
    return Gate(Kind.BARRIER, tuple(qubits))


@dataclass
class Circuit:
    """Unscheduled gate list."""

    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def append(self, gate: Gate) -> "Circuit":
        if any(q < 0 or q >= self.n_qubits for q in gate.qubits):
            raise OperandError(f"{gate.kind} operands {gate.qubits} out of range")
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def count(self, kind: Kind) -> int:
        return sum(1 for g in self.gates if g.kind == kind)


@dataclass(frozen=True)
class GateDurations:
    """Gate durations in seconds.  ``None`` marks a kind with no known duration."""

    single_qubit: float | None = 32e-9
    two_qubit: float | None = 68e-9
    measure: float | None = 1500e-9

    def of(self, gate: Gate) -> float:
        if gate.kind in (Kind.RZ, Kind.BARRIER):
            return 0.0
        if gate.kind == Kind.DELAY:
            return gate.params[0]
        value = {
            Kind.X: self.single_qubit,
            Kind.SX: self.single_qubit,
            Kind.CZ: self.two_qubit,
            Kind.MEASURE: self.measure,
        }.get(gate.kind)
        if gate.kind not in NATIVE_KINDS:
            raise ConfigurationError(f"cannot time non-native gate {gate.kind}; lower it first")
        if value is None or value <= 0:
            raise ConfigurationError(f"no duration configured for {gate.kind}")
        return float(value)


@dataclass(frozen=True)
class ScheduledGate:
    gate: Gate
    start: float
    duration: float

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def kind(self) -> Kind:
        return self.gate.kind

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.gate.qubits


@dataclass(frozen=True)
class TimedCircuit:
    """Scheduled circuit; ``gates`` is in execution order (sorted by start time)."""

    n_qubits: int
    gates: tuple[ScheduledGate, ...]
    total_duration: float

    def on_qubit(self, q: int) -> list[ScheduledGate]:
        return [sg for sg in self.gates if q in sg.qubits]

    def count(self, kind: Kind) -> int:
        return sum(1 for sg in self.gates if sg.kind == kind)


@dataclass(frozen=True)
class IdleWindow:
    qubit: int
    start: float
    length: float

    @property
    def end(self) -> float:
        return self.start + self.length


# ---------------------------------------------------------------- matrices

_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def rz_matrix(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def gate_matrix(gate: Gate) -> np.ndarray:
    """Unitary of a gate on its own operands (first operand most significant)."""
    kind = gate.kind
    if kind == Kind.X:
        return _X.copy()
    if kind == Kind.SX:
        return _SX.copy()
    if kind == Kind.RZ:
        return rz_matrix(gate.params[0])
    if kind == Kind.H:
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    if kind in (Kind.Z, Kind.CZ, Kind.MCZ):
        d = np.ones(1 << len(gate.qubits), dtype=complex)
        d[-1] = -1
        return np.diag(d)
    raise LoweringError(f"{kind} has no unitary")


def circuit_unitary(n_qubits: int, gates: Iterable[Gate]) -> np.ndarray:
    """Dense unitary of a gate list; non-unitary kinds (measure, delay, barrier) are skipped."""
    dim = 1 << n_qubits
    U = np.eye(dim, dtype=complex)
    for g in gates:
        if g.kind in (Kind.MEASURE, Kind.DELAY, Kind.BARRIER):
            continue
        U = _embed(gate_matrix(g), g.qubits, n_qubits) @ U
    return U


def _embed(M: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    order = list(qubits) + rest
    full = np.kron(M, np.eye(1 << (n - k)))
    t = full.reshape((2,) * (2 * n))
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(1 << n, 1 << n)


def equal_up_to_phase(A: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    if abs(A[idx]) < 1e-12:
        return False
    phase = B[idx] / A[idx]
    phase /= abs(phase)
    return bool(np.max(np.abs(A * phase - B)) <= tol)


# ---------------------------------------------------------------- lowering

def lower_gate(gate: Gate) -> list[Gate]:
    kind = gate.kind
    if kind in NATIVE_KINDS or kind == Kind.BARRIER:
        return [gate]
    if kind == Kind.H:
        (q,) = gate.qubits
        return [rz(q, math.pi / 2), sx(q), rz(q, math.pi / 2)]
    if kind == Kind.Z:
        return [rz(gate.qubits[0], math.pi)]
    if kind == Kind.MCZ:
        if len(gate.qubits) == 1:
            return [rz(gate.qubits[0], math.pi)]
        from groverdd.grover import decompose_mcz

        local = decompose_mcz(len(gate.qubits))
        return [_relabel(g, gate.qubits) for g in local.circuit.gates]
    raise LoweringError(f"unsupported macro {kind}")


def _relabel(gate: Gate, mapping: Sequence[int]) -> Gate:
    return Gate(gate.kind, tuple(mapping[q] for q in gate.qubits), gate.params, gate.tag)


def lower_to_native(circuit: Circuit) -> Circuit:
    """Expand macros into {X, SX, RZ, CZ} and merge adjacent RZ rotations per qubit."""
    native: list[Gate] = []
    for g in circuit.gates:
        native.extend(lower_gate(g))
    return Circuit(circuit.n_qubits, _merge_rz(native))


def _merge_rz(gates: list[Gate]) -> list[Gate]:
    out: list[Gate | None] = []
    last_rz: dict[int, int] = {}
    for g in gates:
        if g.kind == Kind.RZ:
            q = g.qubits[0]
            if q in last_rz:
                i = last_rz[q]
                out[i] = rz(q, out[i].params[0] + g.params[0])
                continue
            last_rz[q] = len(out)
            out.append(g)
            continue
        for q in g.qubits:
            last_rz.pop(q, None)
        if g.kind == Kind.BARRIER:
            last_rz.clear()
        out.append(g)
    result = []
    for g in out:
        if g.kind == Kind.RZ:
            # RZ(2*pi*m) is a global phase on the register
            angle = math.remainder(g.params[0], 2 * math.pi)
            if abs(angle) < 1e-12:
                continue
            g = rz(g.qubits[0], angle)
        result.append(g)
    return result


# ---------------------------------------------------------------- scheduling

def _durations_of(durations) -> GateDurations:
    if isinstance(durations, GateDurations):
        return durations
    if hasattr(durations, "durations"):
        return durations.durations
    if isinstance(durations, Mapping):
        return GateDurations(**durations)
    raise ConfigurationError(f"unusable duration source {durations!r}")


def schedule_alap(circuit: Circuit, durations=None) -> TimedCircuit:
    """Place every gate as late as its successors and qubit occupancy allow.

    Works backwards from the end of the circuit, so the final measurements
    all finish at ``total_duration``.  Barriers align their qubits.
    """
    durs = _durations_of(durations) if durations is not None else GateDurations()
    n = circuit.n_qubits
    rev = [0.0] * n  # time measured backwards from the circuit end
    placed: list[tuple[float, float]] = []
    for g in reversed(circuit.gates):
        if g.kind not in NATIVE_KINDS and g.kind != Kind.BARRIER:
            raise LoweringError(f"schedule_alap needs a lowered circuit, found {g.kind}")
        d = durs.of(g)
        finish = max(rev[q] for q in g.qubits)
        for q in g.qubits:
            rev[q] = finish + d
        placed.append((finish, d))
    total = max(rev) if rev else 0.0
    placed.reverse()
    # total - (finish + d) is monotone along each qubit, so per-qubit order survives the sort
    sched = [
        ScheduledGate(g, max(0.0, total - (finish + d)), d)
        for g, (finish, d) in zip(circuit.gates, placed)
    ]
    return TimedCircuit(n, tuple(sort_gates(sched)), total)


def sort_gates(gates: Iterable[ScheduledGate]) -> list[ScheduledGate]:
    """Stable sort by start time; equal-start gates keep their given order."""
    return sorted(gates, key=lambda sg: sg.start)


def busy_intervals(tc: TimedCircuit, q: int) -> list[tuple[float, float]]:
    return [
        (sg.start, sg.end)
        for sg in tc.gates
        if q in sg.qubits and sg.duration > 0 and sg.kind != Kind.DELAY
    ]


def extract_idle_windows(tc: TimedCircuit) -> list[IdleWindow]:
    """Per-qubit gaps between busy intervals, up to that qubit's measurement."""
    windows = []
    for q in range(tc.n_qubits):
        horizon = tc.total_duration
        measures = [sg.start for sg in tc.gates if sg.kind == Kind.MEASURE and q in sg.qubits]
        if measures:
            horizon = min(measures)
        cursor = 0.0
        for start, end in sorted(busy_intervals(tc, q)):
            if start >= horizon - TIME_EPS:
                break
            if start - cursor > TIME_EPS:
                windows.append(IdleWindow(q, cursor, start - cursor))
            cursor = max(cursor, end)
        if horizon - cursor > TIME_EPS:
            windows.append(IdleWindow(q, cursor, horizon - cursor))
    return windows


def busy_fraction(tc: TimedCircuit) -> np.ndarray:
    """Fraction of the circuit duration each qubit spends inside gates (delays excluded)."""
    busy = np.zeros(tc.n_qubits)
    for sg in tc.gates:
        if sg.kind == Kind.DELAY:
            continue
        for q in sg.qubits:
            busy[q] += sg.duration
    if tc.total_duration <= 0:
        return busy
    return busy / tc.total_duration


def twoq_count(circuit) -> int:
    gates = circuit.gates
    return sum(1 for g in gates if (g.gate if isinstance(g, ScheduledGate) else g).kind == Kind.CZ)


def per_qubit_twoq_count(circuit) -> np.ndarray:
    counts = defaultdict(int)
    for g in circuit.gates:
        g = g.gate if isinstance(g, ScheduledGate) else g
        if g.kind == Kind.CZ:
            for q in g.qubits:
                counts[q] += 1
    return np.array([counts[q] for q in range(circuit.n_qubits)])


# ---------------------------------------------------------------- debug dump

def dump(tc: TimedCircuit) -> str:
    """Line-oriented text dump: ``t_start  duration  kind  targets  params``."""
    lines = []
    for sg in tc.gates:
        targets = ",".join(str(q) for q in sg.qubits)
        params = ",".join(f"{p:.12g}" for p in sg.gate.params) or "-"
        lines.append(f"{sg.start:.12e}  {sg.duration:.12e}  {sg.kind.value}  {targets}  {params}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_dump(text: str, n_qubits: int) -> TimedCircuit:
    gates = []
    for line in text.splitlines():
        if not line.strip():
            continue
        start, duration, kind, targets, params = line.split()
        ps = () if params == "-" else tuple(float(p) for p in params.split(","))
        qs = tuple(int(q) for q in targets.split(","))
        gates.append(ScheduledGate(Gate(Kind(kind), qs, ps), float(start), float(duration)))
    total = max((sg.end for sg in gates), default=0.0)
    return TimedCircuit(n_qubits, tuple(gates), total)

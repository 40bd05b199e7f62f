"""Dynamical-decoupling sequences and idle-window padding.

Phases are kept as exact fractions of pi and reduced modulo 2*pi only when
gates are emitted.  A pulse at phase ``phi`` is a pi rotation about the
in-plane axis ``cos(phi) X + sin(phi) Y``; phase pi/2 is +Y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from groverdd.circuit import (
    TIME_EPS,
    Gate,
    IdleWindow,
    Kind,
    ScheduledGate,
    TimedCircuit,
    extract_idle_windows,
)
from groverdd.errors import InputError

TN_PULSES = (2, 4, 6, 8, 10, 12)
SEQUENCE_NAMES = ("CPMG", "XY4") + tuple(f"T{n}" for n in TN_PULSES)


@dataclass(frozen=True)
class DDSequence:
    name: str
    phases_pi: tuple[Fraction, ...]

    @property
    def n_pulses(self) -> int:
        return len(self.phases_pi)

    @property
    def phases(self) -> tuple[float, ...]:
        """Phases in radians, unreduced."""
        return tuple(float(p) * math.pi for p in self.phases_pi)

    def reduced_pi(self) -> tuple[Fraction, ...]:
        return tuple(p % 2 for p in self.phases_pi)

    def reduced(self) -> tuple[float, ...]:
        return tuple(float(p) * math.pi for p in self.reduced_pi())

    def propagator(self) -> np.ndarray:
        """Product of the ideal pulse unitaries, first pulse rightmost."""
        U = np.eye(2, dtype=complex)
        for phi in self.phases:
            U = pulse_matrix(phi) @ U
        return U


def make_cpmg() -> DDSequence:
    return DDSequence("CPMG", (Fraction(0), Fraction(0)))


def make_xy4() -> DDSequence:
    half = Fraction(1, 2)
    return DDSequence("XY4", (Fraction(0), half, Fraction(0), half))


def tn_phase(k: int, n_pulses: int) -> Fraction:
    """Phase of pulse ``k`` (1-based) of the ``n_pulses`` topological sequence, in units of pi."""
    half = Fraction(n_pulses, 2)
    return (k - 1) * (half - k) / half


def _check_tn(n_pulses: int) -> None:
    if n_pulses not in TN_PULSES:
        raise InputError(f"Tn needs an even pulse count in {TN_PULSES}, got {n_pulses}")


def make_tn(n_pulses: int) -> DDSequence:
    """Topological sequence ``T<n>`` from the closed-form phase rule, reduced mod 2*pi."""
    _check_tn(n_pulses)
    phases = tuple(tn_phase(k, n_pulses) % 2 for k in range(1, n_pulses + 1))
    return DDSequence(f"T{n_pulses}", phases)


def tn_block_phases(n_pulses: int) -> tuple[Fraction, ...]:
    """Same sequence assembled from its block structure.

    ``n = 4l``: ``r, reversed(r), r + pi, reversed(r) + pi`` with ``r`` the first ``l`` phases.
    ``n = 2m`` (m odd): ``r, r + pi`` with ``r`` the first ``m`` phases.
    """
    _check_tn(n_pulses)
    if n_pulses % 4 == 0:
        r = [tn_phase(k, n_pulses) for k in range(1, n_pulses // 4 + 1)]
        blocks = r + r[::-1] + [p + 1 for p in r] + [p + 1 for p in r[::-1]]
    else:
        r = [tn_phase(k, n_pulses) for k in range(1, n_pulses // 2 + 1)]
        blocks = r + [p + 1 for p in r]
    return tuple(p % 2 for p in blocks)


def make_sequence(name: str) -> DDSequence | None:
    """Look up a sequence by name; ``"free"`` (no decoupling) returns ``None``."""
    key = name.strip()
    if key.lower() == "free":
        return None
    upper = key.upper()
    if upper == "CPMG":
        return make_cpmg()
    if upper == "XY4":
        return make_xy4()
    if upper.startswith("T") and upper[1:].isdigit():
        return make_tn(int(upper[1:]))
    raise InputError(f"unknown DD option {name!r}; expected free, {', '.join(SEQUENCE_NAMES)}")


def all_sequences() -> list[DDSequence]:
    return [make_sequence(name) for name in SEQUENCE_NAMES]


def pulse_matrix(phi: float) -> np.ndarray:
    """Ideal pi pulse about the in-plane axis at angle ``phi``."""
    return -1j * np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]])


def pulse_to_gates(phase: float, qubit: int = 0) -> list[Gate]:
    """Native gates for one phased pulse, in circuit order: ``RZ(-phi), X, RZ(phi)``.

    Their product ``RZ(phi) X RZ(-phi)`` is the pi rotation about the axis at
    ``phi``; the RZ gates are virtual, so the pulse costs one X duration.
    """
    phi = math.remainder(phase, 2 * math.pi)
    return [
        Gate(Kind.RZ, (qubit,), (-phi,), "dd"),
        Gate(Kind.X, (qubit,), (), "dd"),
        Gate(Kind.RZ, (qubit,), (phi,), "dd"),
    ]


def sequence_catalog() -> str:
    """Text table of every supported sequence: name, pulse count, phases in units of pi."""
    lines = [f"{'name':<6}{'pulses':>7}  phases/pi"]
    for seq in all_sequences():
        phases = " ".join(str(p) for p in seq.reduced_pi())
        lines.append(f"{seq.name:<6}{seq.n_pulses:>7}  {phases}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- padding

@dataclass
class PaddingReport:
    sequence: str
    n_qubits: int
    windows: list[tuple[IdleWindow, int]] = field(default_factory=list)
    pulses_per_sequence: int = 0

    @property
    def per_qubit(self) -> np.ndarray:
        counts = np.zeros(self.n_qubits, dtype=int)
        for w, reps in self.windows:
            counts[w.qubit] += reps
        return counts

    @property
    def total_sequences(self) -> int:
        return int(sum(reps for _, reps in self.windows))

    @property
    def total_pulses(self) -> int:
        return self.total_sequences * self.pulses_per_sequence


def repetitions(length: float, n_pulses: int, pulse_duration: float, s_min: float = 0.0) -> int:
    """Whole sequence repetitions that fit in an idle window of ``length`` seconds."""
    block = n_pulses * pulse_duration
    r = math.floor(length / (block * (1.0 + s_min)) + 1e-9)
    while r > 0 and r * block > length + TIME_EPS:
        r -= 1
    return max(r, 0)


def pad_circuit(
    tc: TimedCircuit,
    seq: DDSequence,
    pulse_duration: float,
    s_min: float = 0.0,
) -> tuple[TimedCircuit, PaddingReport]:
    """Fill every idle window with whole repetitions of ``seq``.

    A window of length ``L`` receives ``r`` repetitions; each repetition spans
    ``L / r`` and spaces its pulses ``tau/2, tau, ..., tau, tau/2``.
    """
    if pulse_duration <= 0:
        raise InputError("pulse_duration must be positive")
    report = PaddingReport(seq.name, tc.n_qubits, pulses_per_sequence=seq.n_pulses)
    # (start, order) sort key: pulses slot in just before the gate that closes their window
    keyed = [(sg.start, float(i), sg) for i, sg in enumerate(tc.gates)]
    phases = seq.reduced()
    n_p = seq.n_pulses
    by_qubit: dict[int, list[tuple[float, int]]] = {q: [] for q in range(tc.n_qubits)}
    for i, sg in enumerate(tc.gates):
        for q in sg.qubits:
            by_qubit[q].append((sg.start, i))
    for w in extract_idle_windows(tc):
        r = repetitions(w.length, n_p, pulse_duration, s_min)
        report.windows.append((w, r))
        if r == 0:
            continue
        nxt = next(
            (i for start, i in by_qubit[w.qubit] if start >= w.end - TIME_EPS),
            len(tc.gates),
        )
        seg = w.length / r
        tau = max((seg - n_p * pulse_duration) / n_p, 0.0)
        j = 0
        for rep in range(r):
            base = w.start + rep * seg + tau / 2
            for i, phi in enumerate(phases):
                t0 = base + i * (pulse_duration + tau)
                pre, pulse, post = pulse_to_gates(phi, w.qubit)
                for sg in (
                    ScheduledGate(pre, t0, 0.0),
                    ScheduledGate(pulse, t0, pulse_duration),
                    ScheduledGate(post, t0 + pulse_duration, 0.0),
                ):
                    keyed.append((sg.start, nxt - 0.5 + j * 1e-7, sg))
                    j += 1
    keyed.sort(key=lambda item: (item[0], item[1]))
    padded = TimedCircuit(tc.n_qubits, tuple(sg for _, _, sg in keyed), tc.total_duration)
    return padded, report


def free_evolution_check(seq: DDSequence) -> float:
    """Distance of the ideal pulse train from identity, up to global phase."""
    U = seq.propagator()
    phase = U[0, 0] / abs(U[0, 0]) if abs(U[0, 0]) > 1e-12 else 1.0
    return float(np.max(np.abs(U / phase - np.eye(2))))


__all__ = [
    "DDSequence",
    "PaddingReport",
    "SEQUENCE_NAMES",
    "TN_PULSES",
    "all_sequences",
    "free_evolution_check",
    "make_cpmg",
    "make_sequence",
    "make_tn",
    "make_xy4",
    "pad_circuit",
    "pulse_matrix",
    "pulse_to_gates",
    "repetitions",
    "sequence_catalog",
    "tn_block_phases",
    "tn_phase",
]

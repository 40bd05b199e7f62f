"""Grover circuit construction and the analytic success-probability reference."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from groverdd.circuit import (
    Circuit,
    Gate,
    Kind,
    _merge_rz,
    cz,
    h,
    lower_gate,
    mcz,
    measure,
    rz,
    x,
)
from groverdd.errors import InputError, SizeError

MAX_QUBITS = 7
MCZ_MAX_QUBITS = 6


def theta(n_qubits: int) -> float:
    return math.asin(2.0 ** (-n_qubits / 2))


def optimal_iterations(n_qubits: int) -> int:
    """``floor(pi / (4 theta))`` with ``theta = arcsin(2**(-n/2))``."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    return max(1, math.floor(math.pi / (4 * theta(n_qubits)) + 1e-12))


def ideal_success(n_qubits: int, k: int) -> float:
    """Noiseless probability of reading the single marked item after ``k`` iterations."""
    if k < 0:
        raise InputError(f"iterations must be >= 0, got {k}")
    return math.sin((2 * k + 1) * theta(n_qubits)) ** 2


@dataclass(frozen=True)
class IterationPlan:
    n_qubits: int
    theta: float
    optimal_iterations: int

    @classmethod
    def for_qubits(cls, n_qubits: int) -> "IterationPlan":
        return cls(n_qubits, theta(n_qubits), optimal_iterations(n_qubits))

    def ideal_success(self, k: int) -> float:
        return ideal_success(self.n_qubits, k)


@dataclass(frozen=True)
class GroverSpec:
    n_qubits: int
    target: str
    iterations: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        _check_bitstring(self.target)
        if len(self.target) != self.n_qubits:
            raise InputError(
                f"target {self.target!r} has length {len(self.target)}, expected {self.n_qubits}"
            )
        limit = 2 * optimal_iterations(self.n_qubits)
        if not 0 <= self.iterations <= limit:
            raise InputError(f"iterations must be in [0, {limit}], got {self.iterations}")


def _check_bitstring(bits: str) -> None:
    if not bits or any(c not in "01" for c in bits):
        raise InputError(f"target must be a nonempty string of 0/1, got {bits!r}")


def build_oracle(target: str) -> Circuit:
    """Phase flip on ``|target>``: X on the 0-valued qubits around a multi-controlled Z."""
    _check_bitstring(target)
    n = len(target)
    zeros = [q for q, b in enumerate(target) if b == "0"]
    frag = Circuit(n)
    frag.extend(x(q) for q in zeros)
    frag.append(Gate(Kind.Z, (0,)) if n == 1 else mcz(range(n)))
    frag.extend(x(q) for q in zeros)
    return frag


def build_diffusion(n_qubits: int) -> Circuit:
    """Reflection about the uniform superposition, up to global phase."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    qs = range(n_qubits)
    frag = Circuit(n_qubits)
    frag.extend(h(q) for q in qs)
    frag.extend(x(q) for q in qs)
    frag.append(Gate(Kind.Z, (0,)) if n_qubits == 1 else mcz(qs))
    frag.extend(x(q) for q in qs)
    frag.extend(h(q) for q in qs)
    return frag


def build_grover_circuit(spec: GroverSpec) -> Circuit:
    """Hadamard layer, ``spec.iterations`` oracle+diffusion rounds, then measure all."""
    n = spec.n_qubits
    circ = Circuit(n)
    circ.extend(h(q) for q in range(n))
    oracle = build_oracle(spec.target)
    diffusion = build_diffusion(n)
    for _ in range(spec.iterations):
        circ.extend(oracle.gates)
        circ.extend(diffusion.gates)
    circ.extend(measure(q) for q in range(n))
    return circ


# ---------------------------------------------------------------- MCZ

class MCZDecomposition(NamedTuple):
    circuit: Circuit
    twoq_count: int


def _cx(control: int, target: int) -> list[Gate]:
    return [h(target), cz(control, target), h(target)]


def _mcphase(lam: float, qubits: Sequence[int]) -> list[Gate]:
    """``exp(i lam |1..1><1..1|)`` up to global phase, without ancillas.

    Expands the projector into Z-parity terms; the terms containing the last
    qubit are visited in Gray-code order of the remaining qubits, so each
    step needs one CX onto the last qubit.  The other terms form the same
    gate on one fewer qubit with half the angle; its target is the control
    flipped most often here, which concentrates load on two hub qubits.
    """
    m = len(qubits)
    if m == 1:
        return [rz(qubits[0], lam)]
    if m == 2 and math.isclose(lam, math.pi):
        return [cz(qubits[0], qubits[1])]
    t = qubits[-1]
    controls = qubits[:-1]
    c = len(controls)
    scale = lam / 2**m
    gates: list[Gate] = []
    prev = 0
    for i in range(1 << c):
        code = i ^ (i >> 1)
        if i:
            flipped = (code ^ prev).bit_length() - 1
            gates.extend(_cx(controls[flipped], t))
        sign = -1 if (bin(code).count("1") + 1) % 2 else 1
        # exp(i a Z_S) on the parity register equals RZ(-2a)
        gates.append(rz(t, -2 * sign * scale))
        prev = code
    gates.extend(_cx(controls[prev.bit_length() - 1], t))
    gates.extend(_mcphase(lam / 2, list(controls[1:]) + [controls[0]]))
    return gates


def decompose_mcz(n_qubits: int) -> MCZDecomposition:
    """Native {RZ, SX, CZ} fragment for a Z controlled on ``n_qubits - 1`` qubits.

    Uses ``2**n - 2`` CZ gates for ``n >= 3`` and a single CZ for ``n = 2``.
    """
    if not 2 <= n_qubits <= MCZ_MAX_QUBITS:
        raise SizeError(f"MCZ supports 2..{MCZ_MAX_QUBITS} qubits, got {n_qubits}")
    macro = _mcphase(math.pi, list(range(n_qubits)))
    native = []
    for g in macro:
        native.extend(lower_gate(g))
    circ = Circuit(n_qubits, _merge_rz(native))
    return MCZDecomposition(circ, circ.count(Kind.CZ))

"""Noisy execution of a :class:`~groverdd.circuit.TimedCircuit`.

Each gate acts instantaneously at the midpoint of its scheduled interval;
every qubit evolves freely (relaxation, dephasing, detuning) between those
instants, so total decoherence depends only on the schedule.  Measurement
stops a qubit's clock at the measurement start; readout error is applied to
the final distribution.

An ensemble of quasi-static detunings is simulated as one batch of density
matrices.  Consecutive single-qubit maps on a qubit (free evolution, 1Q
gates, DD pulses) are multiplied into one pending superoperator and only
applied to the state when a CZ or the end of the circuit needs that qubit.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from groverdd.circuit import Kind, TimedCircuit, gate_matrix
from groverdd.errors import NumericIntegrityError
from groverdd.noise import NoiseModel, depolarizing_parameter, idle_superop
from groverdd.qsim import MeasurementDistribution, backend, unitary_superop
from groverdd.qsim.state import normalize_probabilities

INTEGRITY_TOL = 1e-9
DEFAULT_CHUNK = 128

_X_SUPEROP = unitary_superop(np.array([[0, 1], [1, 0]], dtype=complex))
_SX_SUPEROP = unitary_superop(0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]))


@lru_cache(maxsize=4096)
def _cached_idle(T1: float, T2: float, t: float) -> np.ndarray:
    S = idle_superop(T1, T2, t)
    S.setflags(write=False)
    return S


def _rz_superop(angle: float) -> np.ndarray:
    return np.diag([1.0, np.exp(-1j * angle), np.exp(1j * angle), 1.0])


class _BatchEvolver:
    def __init__(self, tc: TimedCircuit, noise: NoiseModel, detunings: np.ndarray | None):
        self.tc = tc
        self.noise = noise
        self.n = tc.n_qubits
        self.detunings = detunings  # (B, n) rad/s or None
        B = 1 if detunings is None else detunings.shape[0]
        dim = 1 << self.n
        self.rho = np.zeros((B, dim, dim), dtype=complex)
        self.rho[:, 0, 0] = 1.0
        self.clock = [0.0] * self.n
        self.pending: list[np.ndarray | None] = [None] * self.n
        self.relax = noise.has_relaxation

    def _push(self, q: int, S: np.ndarray) -> None:
        cur = self.pending[q]
        self.pending[q] = S if cur is None else np.matmul(S, cur)

    def advance(self, q: int, t: float) -> None:
        dt = t - self.clock[q]
        if dt <= 0:
            return
        self.clock[q] = t
        S = None
        if self.relax:
            S = _cached_idle(self.noise.t1[q], self.noise.t2[q], dt)
        if self.detunings is not None:
            theta = self.detunings[:, q] * dt
            phase = np.exp(-1j * theta)
            d = np.ones((theta.size, 4), dtype=complex)
            d[:, 1] = phase
            d[:, 2] = phase.conj()
            # RZ(theta) superoperator is diagonal; idle channel commutes with it
            S = d[:, None, :] * (np.eye(4) if S is None else S)[None]
        if S is not None:
            self._push(q, S)

    def flush(self, q: int) -> None:
        S = self.pending[q]
        if S is None:
            return
        self.pending[q] = None
        if S.ndim == 2:
            S = S[None]
        backend.apply_superop_1q(self.rho, np.ascontiguousarray(S, dtype=complex), q, self.n)

    def run(self) -> np.ndarray:
        measured = [False] * self.n
        noise = self.noise
        for sg in self.tc.gates:
            kind = sg.kind
            if kind in (Kind.DELAY, Kind.BARRIER):
                continue
            if kind == Kind.MEASURE:
                for q in sg.qubits:
                    self.advance(q, sg.start)
                    measured[q] = True
                continue
            mid = sg.start + 0.5 * sg.duration
            for q in sg.qubits:
                self.advance(q, mid)
            if kind == Kind.CZ:
                a, b = sg.qubits
                self.flush(a)
                self.flush(b)
                backend.apply_cz(self.rho, a, b, self.n)
                e = noise.pair_error(a, b)
                if e > 0:
                    backend.apply_depolarizing_2q(self.rho, depolarizing_parameter(e), a, b, self.n)
                continue
            (q,) = sg.qubits
            if kind == Kind.X:
                self._push(q, _X_SUPEROP)
            elif kind == Kind.SX:
                self._push(q, _SX_SUPEROP)
            elif kind == Kind.RZ:
                self._push(q, _rz_superop(sg.gate.params[0]))
            else:
                self._push(q, unitary_superop(gate_matrix(sg.gate)))
        for q in range(self.n):
            if not measured[q]:
                self.advance(q, self.tc.total_duration)
            self.flush(q)
        return self.rho


def _check_integrity(rho: np.ndarray) -> None:
    traces = np.real(np.einsum("bii->b", rho))
    drift = np.max(np.abs(traces - 1.0))
    if drift > INTEGRITY_TOL:
        raise NumericIntegrityError(f"trace drift {drift:.3e} after evolution")
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2))))
    if herm > INTEGRITY_TOL:
        raise NumericIntegrityError(f"hermiticity error {herm:.3e} after evolution")
    diag = np.real(np.einsum("bii->bi", rho))
    if np.min(diag) < -INTEGRITY_TOL:
        raise NumericIntegrityError(f"negative population {np.min(diag):.3e} after evolution")


def evolve(
    tc: TimedCircuit,
    noise: NoiseModel | None = None,
    detunings: np.ndarray | None = None,
) -> np.ndarray:
    """Final density matrices, shape ``(B, D, D)``; ``B = 1`` without detunings."""
    noise = noise or NoiseModel.ideal(tc.n_qubits)
    if detunings is not None:
        detunings = np.asarray(detunings, dtype=float)
        if detunings.ndim != 2 or detunings.shape[1] != tc.n_qubits:
            raise ValueError(f"detunings must have shape (B, {tc.n_qubits})")
    rho = _BatchEvolver(tc, noise, detunings).run()
    _check_integrity(rho)
    return rho


def simulate(
    tc: TimedCircuit,
    noise: NoiseModel | None = None,
    detunings: np.ndarray | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> MeasurementDistribution:
    """Ensemble-averaged measured distribution, including readout error.

    ``detunings`` holds one row of per-qubit detunings (rad/s) per ensemble
    member; the ensemble is processed in chunks of ``chunk`` members and the
    chunk sums are reduced in index order.
    """
    noise = noise or NoiseModel.ideal(tc.n_qubits)
    if detunings is None or len(detunings) == 0:
        rho = evolve(tc, noise)
        probs = np.real(np.diagonal(rho[0])).copy()
    else:
        detunings = np.asarray(detunings, dtype=float)
        total = np.zeros(1 << tc.n_qubits)
        for lo in range(0, len(detunings), chunk):
            rho = evolve(tc, noise, detunings[lo : lo + chunk])
            total += np.real(np.einsum("bii->i", rho))
        probs = total / len(detunings)
    probs = normalize_probabilities(probs)
    return MeasurementDistribution(normalize_probabilities(noise.confuse(probs)))

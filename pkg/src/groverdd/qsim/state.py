"""Density-matrix register, Kraus channels and measurement sampling.

Bitstring convention: basis index ``i`` of a register of ``n`` qubits is the
big-endian integer of the bits of qubits ``0..n-1`` (qubit 0 leftmost).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from groverdd.errors import (
    NumericIntegrityError,
    OperandError,
    SizeError,
    ValidationError,
)
from groverdd.qsim import backend

MAX_QUBITS = 7
UNITARY_TOL = 1e-10
TP_TOL = 1e-10
DRIFT_TOL = 1e-9


@dataclass
class DensityMatrix:
    n_qubits: int
    data: np.ndarray

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, self.data.copy())


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive map given by its Kraus operators on 1 or 2 qubits."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValidationError("channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if dim not in (2, 4) or any(k.shape != (dim, dim) for k in ops):
            raise ValidationError("Kraus operators must be 2x2 or 4x4 and equally sized")
        object.__setattr__(self, "operators", ops)

    @property
    def n_qubits(self) -> int:
        return 1 if self.operators[0].shape[0] == 2 else 2

    def completeness_error(self) -> float:
        total = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def is_trace_preserving(self, tol: float = TP_TOL) -> bool:
        return self.completeness_error() <= tol

    def superop(self) -> np.ndarray:
        return kraus_superop(self.operators)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Channel that applies ``self`` first and ``other`` second."""
        return KrausChannel(tuple(b @ a for b in other.operators for a in self.operators))


@dataclass(frozen=True)
class MeasurementDistribution:
    probabilities: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(self.probabilities.size).bit_length() - 1

    def probability(self, bitstring: str) -> float:
        return float(self.probabilities[bitstring_index(bitstring)])

    def as_dict(self) -> dict[str, float]:
        n = self.n_qubits
        return {index_bitstring(i, n): float(p) for i, p in enumerate(self.probabilities)}


def bitstring_index(bits: str) -> int:
    return int(bits, 2)


def index_bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def unitary_superop(U: np.ndarray) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    return np.kron(U, U.conj())


def kraus_superop(operators: Sequence[np.ndarray]) -> np.ndarray:
    return sum(np.kron(k, np.conj(k)) for k in operators)


def _check_targets(targets: Sequence[int], n_qubits: int, arity: int) -> list[int]:
    targets = [int(q) for q in targets]
    if len(targets) != arity:
        raise OperandError(f"operator acts on {arity} qubit(s), got targets {targets}")
    if len(set(targets)) != len(targets):
        raise OperandError(f"duplicate targets {targets}")
    if any(q < 0 or q >= n_qubits for q in targets):
        raise OperandError(f"targets {targets} out of range for {n_qubits} qubits")
    return targets


def _apply_superop(data: np.ndarray, S: np.ndarray, targets: list[int], n: int) -> np.ndarray:
    batch = np.ascontiguousarray(data, dtype=complex)[None].copy()
    S = np.ascontiguousarray(S, dtype=complex)[None]
    if len(targets) == 1:
        backend.apply_superop_1q(batch, S, targets[0], n)
    elif len(targets) == 2:
        backend.apply_superop_2q(batch, S, targets[0], targets[1], n)
    else:
        from groverdd.qsim._fallback import _apply_superop as general

        general(batch, S, targets, n)
    return batch[0]


def init_state(n_qubits: int) -> DensityMatrix:
    """Return ``|0...0><0...0|`` on ``n_qubits`` qubits (1 to 7)."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    dim = 1 << n_qubits
    data = np.zeros((dim, dim), dtype=complex)
    data[0, 0] = 1.0
    return DensityMatrix(n_qubits, data)


def apply_unitary(rho: DensityMatrix, U: np.ndarray, targets: Sequence[int]) -> DensityMatrix:
    """Return ``(U x I) rho (U x I)^dagger`` with ``U`` acting on ``targets``.

    ``targets[0]`` is the most significant qubit of ``U``'s local index.
    """
    U = np.asarray(U, dtype=complex)
    k = int(U.shape[0]).bit_length() - 1
    if U.shape != (1 << k, 1 << k):
        raise ValidationError(f"unitary must be square with power-of-two size, got {U.shape}")
    targets = _check_targets(targets, rho.n_qubits, k)
    if np.max(np.abs(U.conj().T @ U - np.eye(1 << k))) > UNITARY_TOL:
        raise ValidationError("operator is not unitary within tolerance")
    if k <= 2:
        data = _apply_superop(rho.data, unitary_superop(U), targets, rho.n_qubits)
    else:
        # direct product is cheaper than a 4**k superoperator for wide unitaries
        n = rho.n_qubits
        t = rho.data.reshape((2,) * (2 * n))
        rows = list(targets)
        cols = [n + q for q in targets]
        Ut = U.reshape((2,) * (2 * k))
        t = np.tensordot(Ut, t, axes=(list(range(k, 2 * k)), rows))
        t = np.moveaxis(t, list(range(k)), rows)
        t = np.tensordot(Ut.conj(), t, axes=(list(range(k, 2 * k)), cols))
        t = np.moveaxis(t, list(range(k)), cols)
        data = t.reshape(rho.dim, rho.dim)
    return DensityMatrix(rho.n_qubits, data)


def apply_channel(rho: DensityMatrix, ch: KrausChannel, targets: Sequence[int]) -> DensityMatrix:
    """Return ``sum_i K_i rho K_i^dagger`` for the channel acting on ``targets``."""
    if not ch.is_trace_preserving():
        raise ValidationError(
            f"channel is not trace preserving (error {ch.completeness_error():.3e})"
        )
    targets = _check_targets(targets, rho.n_qubits, ch.n_qubits)
    data = _apply_superop(rho.data, ch.superop(), targets, rho.n_qubits)
    return DensityMatrix(rho.n_qubits, data)


def normalize_probabilities(diag: np.ndarray, tol: float = DRIFT_TOL) -> np.ndarray:
    """Clamp at zero and renormalize; drift beyond ``tol`` is an integrity error."""
    p = np.real(np.asarray(diag)).astype(float)
    if not np.all(np.isfinite(p)):
        raise NumericIntegrityError("non-finite probabilities")
    if np.min(p) < -tol:
        raise NumericIntegrityError(f"negative probability {np.min(p):.3e}")
    drift = abs(p.sum() - 1.0)
    if drift > tol:
        raise NumericIntegrityError(f"probability drift {drift:.3e} exceeds {tol:.0e}")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def measure_distribution(rho: DensityMatrix) -> MeasurementDistribution:
    return MeasurementDistribution(normalize_probabilities(np.diag(rho.data)))


def sample_counts(dist: MeasurementDistribution, shots: int, seed: int) -> np.ndarray:
    """Multinomial sample of ``shots`` outcomes; index order matches ``dist``."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, dist.probabilities)

"""Calibration data and the noise model built from it.

Every qubit relaxes (T1) and dephases (T2) for all wall-clock time, idle or
not; each CZ is followed by a two-qubit depolarizing channel with
``p = 16 e / 15`` for calibrated 2Q error ``e`` (process infidelity ``e``,
average gate infidelity ``4 e / 5``); readout flips every bit
independently.  A quasi-static detuning adds a random Z rotation rate per
qubit that is constant within one ensemble member.
"""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from groverdd.circuit import GateDurations
from groverdd.errors import ConfigurationError, InputError
from groverdd.qsim import KrausChannel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class CalibrationSet:
    """Per-qubit coherence and error data for one device qubit set.

    Times are stored in seconds.  ``twoq_error`` maps logical qubit pairs
    ``(i, j)`` with ``i < j``; pairs not listed use ``twoq_default``.
    """

    label: str
    qubits: tuple[int, ...]
    t1: tuple[float, ...]
    t2: tuple[float, ...]
    readout_error: tuple[float, ...]
    twoq_default: float
    twoq_error: Mapping[tuple[int, int], float] = field(default_factory=dict)
    durations: GateDurations = GateDurations()
    device: str = ""
    clamped: tuple[str, ...] = ()

    @property
    def n_qubits(self) -> int:
        return len(self.t1)

    def pair_error(self, a: int, b: int) -> float:
        return self.twoq_error.get((min(a, b), max(a, b)), self.twoq_default)

    def scaled(self, twoq_scale: float) -> "CalibrationSet":
        """Copy with every 2Q error multiplied by ``twoq_scale``."""
        return replace(
            self,
            twoq_default=self.twoq_default * twoq_scale,
            twoq_error={k: v * twoq_scale for k, v in self.twoq_error.items()},
        )


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 0.5:
        raise ConfigurationError(f"{name} = {value} outside [0, 0.5]")
    return value


def make_calibration(
    label: str,
    t1: Sequence[float],
    t2: Sequence[float],
    readout_error: Sequence[float],
    twoq_default: float,
    twoq_error: Mapping[tuple[int, int], float] | None = None,
    qubits: Sequence[int] | None = None,
    durations: GateDurations | None = None,
    device: str = "",
) -> CalibrationSet:
    """Validate raw values (seconds) and build a :class:`CalibrationSet`.

    ``T2 > 2 T1`` is clamped to ``2 T1`` with a logged warning.
    """
    n = len(t1)
    if not (len(t2) == len(readout_error) == n):
        raise ConfigurationError("t1, t2 and readout_error must have one entry per qubit")
    qubits = tuple(qubits) if qubits is not None else tuple(range(n))
    if len(qubits) != n:
        raise ConfigurationError(f"qubit list has {len(qubits)} entries, expected {n}")
    clamped = []
    t2_out = []
    for i, (a, b) in enumerate(zip(t1, t2)):
        if a <= 0 or b <= 0:
            raise ConfigurationError(f"qubit {qubits[i]}: T1 and T2 must be positive")
        if b > 2 * a:
            msg = f"qubit {qubits[i]}: T2={b:.6g}s exceeds 2*T1={2 * a:.6g}s, clamped"
            log.warning(msg)
            clamped.append(msg)
            b = 2 * a
        t2_out.append(float(b))
    ro = tuple(_check_probability(f"readout_error[{i}]", e) for i, e in enumerate(readout_error))
    pairs = {}
    for (a, b), e in (twoq_error or {}).items():
        if not (0 <= a < n and 0 <= b < n and a != b):
            raise ConfigurationError(f"2Q pair ({a}, {b}) out of range")
        pairs[(min(a, b), max(a, b))] = _check_probability(f"twoq_error[{a},{b}]", e)
    return CalibrationSet(
        label=label,
        qubits=qubits,
        t1=tuple(float(a) for a in t1),
        t2=tuple(t2_out),
        readout_error=ro,
        twoq_default=_check_probability("twoq_error", twoq_default),
        twoq_error=pairs,
        durations=durations or GateDurations(),
        device=device,
        clamped=tuple(clamped),
    )


def parse_calibration(data: Mapping, source: str = "<calibration>") -> CalibrationSet:
    """Build a calibration from a parsed TOML document.

    Accepts either an ``[aggregate]`` table (mean/min/max values; the means
    are expanded to every qubit) or a ``[per_qubit]`` table with ``t1_us``,
    ``t2_us`` and ``readout_error`` vectors, plus an optional ``[twoq_error]``
    table keyed ``"i-j"`` on logical indices and optional ``[durations_ns]``.
    """
    try:
        label = str(data.get("label", Path(source).stem))
        qubits = [int(q) for q in data["qubits"]]
        n = len(qubits)
        pairs: dict[tuple[int, int], float] = {}
        if "per_qubit" in data:
            pq = data["per_qubit"]
            t1 = [float(v) * 1e-6 for v in pq["t1_us"]]
            t2 = [float(v) * 1e-6 for v in pq["t2_us"]]
            ro = [float(v) for v in pq["readout_error"]]
            default = float(data.get("twoq_error", {}).get("default", pq.get("twoq_error", 0.0)))
        elif "aggregate" in data:
            agg = data["aggregate"]
            t1 = [float(agg["t1_mean_us"]) * 1e-6] * n
            t2 = [float(agg["t2_mean_us"]) * 1e-6] * n
            ro = [float(agg["readout_error_mean"])] * n
            default = float(agg["twoq_error_mean"])
        else:
            raise ConfigurationError(f"{source}: needs an [aggregate] or [per_qubit] table")
        for key, value in data.get("twoq_error", {}).items():
            if key == "default":
                continue
            a, b = (int(s) for s in key.split("-"))
            pairs[(a, b)] = float(value)
        durations = None
        if "durations_ns" in data:
            d = data["durations_ns"]
            base = GateDurations()
            durations = GateDurations(
                single_qubit=float(d["single_qubit"]) * 1e-9 if "single_qubit" in d else base.single_qubit,
                two_qubit=float(d["two_qubit"]) * 1e-9 if "two_qubit" in d else base.two_qubit,
                measure=float(d["measure"]) * 1e-9 if "measure" in d else base.measure,
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{source}: malformed calibration ({exc})") from exc
    return make_calibration(
        label, t1, t2, ro, default, pairs, qubits, durations, device=str(data.get("device", ""))
    )


def available_calibrations() -> list[str]:
    files = resources.files("groverdd") / "calibrations"
    return sorted(p.name[: -len(".toml")] for p in files.iterdir() if p.name.endswith(".toml"))


def load_calibration(ref: str | Path) -> CalibrationSet:
    """Load a calibration by bundled label (``"pittsburgh-5q"``) or file path."""
    path = Path(ref)
    if path.suffix == ".toml" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read calibration {path}: {exc}") from exc
        source = str(path)
    else:
        res = resources.files("groverdd") / "calibrations" / f"{ref}.toml"
        if not res.is_file():
            raise ConfigurationError(
                f"unknown calibration {ref!r}; bundled: {', '.join(available_calibrations())}"
            )
        text = res.read_text()
        source = str(ref)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    return parse_calibration(data, source)


# ---------------------------------------------------------------- channels

def idle_channel(T1: float, T2: float, t: float) -> KrausChannel:
    """Amplitude damping over ``t`` composed with the pure dephasing implied by T2."""
    if t < 0:
        raise InputError(f"idle time must be non-negative, got {t}")
    gamma, f = _relaxation_factors(T1, T2, t)
    damping = KrausChannel(
        (
            np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
            np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex),
        )
    )
    dephasing = KrausChannel(
        (
            math.sqrt((1 + f) / 2) * np.eye(2, dtype=complex),
            math.sqrt((1 - f) / 2) * _PAULI[3],
        )
    )
    return damping.then(dephasing)


def _relaxation_factors(T1: float, T2: float, t: float) -> tuple[float, float]:
    """Return (damping probability, pure-dephasing coherence factor)."""
    if t == 0:
        return 0.0, 1.0
    T2 = min(T2, 2 * T1)
    gamma = -math.expm1(-t / T1) if math.isfinite(T1) else 0.0
    rate_phi = 1.0 / T2 - 0.5 / T1 if math.isfinite(T2) else 0.0
    f = math.exp(-t * max(rate_phi, 0.0))
    return gamma, f


def idle_superop(T1: float, T2: float, t: float) -> np.ndarray:
    """Row-major 4x4 superoperator of :func:`idle_channel`, built without Kraus sums."""
    gamma, f = _relaxation_factors(T1, T2, t)
    coh = math.sqrt(1 - gamma) * f
    S = np.zeros((4, 4), dtype=complex)
    S[0, 0] = 1.0
    S[0, 3] = gamma
    S[1, 1] = coh
    S[2, 2] = coh
    S[3, 3] = 1 - gamma
    return S


TWOQ_DIM = 16


def depolarizing_parameter(e: float) -> float:
    """``p = 16 e / 15``: the depolarizing probability whose process infidelity is ``e``."""
    return e * TWOQ_DIM / (TWOQ_DIM - 1)


def two_qubit_error_channel(e: float) -> KrausChannel:
    """Two-qubit depolarizing channel ``(1-p) rho + p I/4`` with ``p`` from :func:`depolarizing_parameter`."""
    if not 0.0 <= e <= (TWOQ_DIM - 1) / TWOQ_DIM:
        raise InputError(f"2Q error {e} outside [0, 15/16]")
    p = depolarizing_parameter(e)
    ops = [math.sqrt(1 - p * (TWOQ_DIM - 1) / TWOQ_DIM) * np.eye(4, dtype=complex)]
    w = math.sqrt(p / TWOQ_DIM)
    for i in range(4):
        for j in range(4):
            if i or j:
                ops.append(w * np.kron(_PAULI[i], _PAULI[j]))
    return KrausChannel(tuple(ops))


def depolarizing_superop_2q(e: float) -> np.ndarray:
    """Superoperator of :func:`two_qubit_error_channel`: ``(1-p) rho + p Tr(rho) I/4``."""
    p = depolarizing_parameter(e)
    S = (1 - p) * np.eye(16, dtype=complex)
    vec_identity = np.eye(4, dtype=complex).reshape(16)
    S += p / 4 * np.outer(vec_identity, vec_identity)
    return S


def confusion_matrix(error: float) -> np.ndarray:
    return np.array([[1 - error, error], [error, 1 - error]])


def readout_confuse(probabilities: np.ndarray, readout_error: Sequence[float]) -> np.ndarray:
    """Flip each bit independently with its qubit's readout error."""
    p = np.asarray(probabilities, dtype=float)
    n = len(readout_error)
    if p.size != 1 << n:
        raise InputError(f"distribution of size {p.size} does not match {n} qubits")
    t = p.reshape((2,) * n)
    for q, e in enumerate(readout_error):
        if e == 0:
            continue
        t = np.moveaxis(np.tensordot(confusion_matrix(e), t, axes=(1, q)), 0, q)
    return t.reshape(-1)


def sample_detuning(sigma_z: float, seed, n_qubits: int = 1) -> np.ndarray:
    """Per-qubit quasi-static detuning (rad/s) drawn from N(0, sigma_z**2)."""
    if sigma_z < 0:
        raise InputError(f"sigma_z must be non-negative, got {sigma_z}")
    if sigma_z == 0:
        return np.zeros(n_qubits)
    if isinstance(seed, (tuple, list)):
        seed = np.random.SeedSequence(list(seed))
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, sigma_z, n_qubits)


# ---------------------------------------------------------------- model

@dataclass(frozen=True)
class NoiseModel:
    """Immutable noise description for a register.

    ``t1``/``t2`` may be ``inf`` to disable relaxation; ``sigma_z = 0``
    disables detuning.  :meth:`ideal` gives the noiseless model.
    """

    n_qubits: int
    t1: tuple[float, ...]
    t2: tuple[float, ...]
    readout_error: tuple[float, ...]
    twoq_default: float = 0.0
    twoq_error: Mapping[tuple[int, int], float] = field(default_factory=dict)
    sigma_z: float = 0.0

    @classmethod
    def ideal(cls, n_qubits: int, sigma_z: float = 0.0) -> "NoiseModel":
        inf = (math.inf,) * n_qubits
        return cls(n_qubits, inf, inf, (0.0,) * n_qubits, 0.0, {}, sigma_z)

    @classmethod
    def from_calibration(
        cls, cal: CalibrationSet, sigma_z: float = 0.0, twoq_scale: float = 1.0
    ) -> "NoiseModel":
        if twoq_scale != 1.0:
            cal = cal.scaled(twoq_scale)
        return cls(
            cal.n_qubits,
            cal.t1,
            cal.t2,
            cal.readout_error,
            cal.twoq_default,
            dict(cal.twoq_error),
            sigma_z,
        )

    @property
    def has_relaxation(self) -> bool:
        return any(math.isfinite(t) for t in self.t1 + self.t2)

    @property
    def has_twoq_error(self) -> bool:
        return self.twoq_default > 0 or any(v > 0 for v in self.twoq_error.values())

    def pair_error(self, a: int, b: int) -> float:
        return self.twoq_error.get((min(a, b), max(a, b)), self.twoq_default)

    def idle_channel(self, q: int, t: float) -> KrausChannel:
        return idle_channel(self.t1[q], self.t2[q], t)

    def idle_superop(self, q: int, t: float) -> np.ndarray:
        return idle_superop(self.t1[q], self.t2[q], t)

    def twoq_channel(self, a: int, b: int) -> KrausChannel:
        return two_qubit_error_channel(self.pair_error(a, b))

    def confuse(self, probabilities: np.ndarray) -> np.ndarray:
        if not any(self.readout_error):
            return np.asarray(probabilities, dtype=float)
        return readout_confuse(probabilities, self.readout_error)

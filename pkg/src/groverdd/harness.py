"""Experiment orchestration: build, schedule, pad, simulate, sample and report.

Seeding: every random stream is a ``SeedSequence`` keyed on the master seed.
Detuning draw ``j`` for ``k`` iterations uses ``(seed, 0, k, j)`` so every DD
option at the same ``k`` sees the same detuning ensemble; shot sampling for
a grid cell uses ``(seed, 1, k, dd_code)``.  No stream depends on execution
order, so sweeps can run in worker processes.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from groverdd import dd as ddmod
from groverdd.circuit import (
    GateDurations,
    TimedCircuit,
    busy_fraction,
    lower_to_native,
    schedule_alap,
    twoq_count,
)
from groverdd.errors import ConfigurationError, GroverDDError, InputError
from groverdd.grover import GroverSpec, build_grover_circuit, ideal_success
from groverdd.noise import CalibrationSet, NoiseModel, load_calibration
from groverdd.qsim import MeasurementDistribution, index_bitstring
from groverdd.simulator import simulate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

DD_OPTIONS = ("free",) + ddmod.SEQUENCE_NAMES
DEFAULT_TARGETS = {1: "1", 2: "11", 3: "010", 4: "0101", 5: "01011", 6: "010110", 7: "0101101"}
RESULTS_HEADER = ("iterations", "dd", "success_prob", "ci_low", "ci_high", "twoq_count", "total_duration_s")

# Smallest sigma_z (rad/s) that pushes free-evolution success for n=5, k=3
# below 0.6 with every other noise source off, found with bisect_sigma_z
# over a 400-draw ensemble at seed 0 and rounded up.
A5_SIGMA_Z = 1.7e5


def canonical_dd(name: str) -> str:
    key = name.strip()
    for option in DD_OPTIONS:
        if option.lower() == key.lower():
            return option
    raise InputError(f"unknown DD option {name!r}; expected one of {', '.join(DD_OPTIONS)}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a grid of iteration counts by DD options.

    ``calibration`` is a bundled label or TOML path; ``None`` means noiseless
    apart from the detuning ``sigma_z`` (rad/s).  ``exact`` reports the exact
    success probability with a degenerate interval instead of the sampled one.
    """

    n_qubits: int = 5
    target: str | None = None
    iterations: tuple[int, ...] = (1,)
    dd: tuple[str, ...] = ("free",)
    calibration: str | None = None
    shots: int = 10000
    seed: int = 0
    sigma_z: float = 0.0
    exact: bool = False
    ensemble_size: int = 400
    twoq_scale: float = 1.0
    s_min: float = 0.0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.target is None:
            object.__setattr__(self, "target", DEFAULT_TARGETS.get(self.n_qubits, "1" * self.n_qubits))
        object.__setattr__(self, "iterations", tuple(int(k) for k in self.iterations))
        dd = (self.dd,) if isinstance(self.dd, str) else self.dd
        object.__setattr__(self, "dd", tuple(canonical_dd(d) for d in dd))
        if self.shots < 1:
            raise ConfigurationError(f"shots must be >= 1, got {self.shots}")
        if self.sigma_z < 0 or not math.isfinite(self.sigma_z):
            raise ConfigurationError(f"sigma_z must be finite and >= 0, got {self.sigma_z}")
        if self.ensemble_size < 1:
            raise ConfigurationError("ensemble_size must be >= 1")
        if self.twoq_scale < 0:
            raise ConfigurationError("twoq_scale must be >= 0")
        if self.s_min < 0:
            raise ConfigurationError("s_min must be >= 0")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        try:
            for k in self.iterations:
                GroverSpec(self.n_qubits, self.target, k)
        except GroverDDError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if isinstance(kwargs.get("iterations"), str):
            kwargs["iterations"] = parse_iterations(kwargs["iterations"])
        elif isinstance(kwargs.get("iterations"), int):
            kwargs["iterations"] = (kwargs["iterations"],)
        if "dd" in kwargs and not isinstance(kwargs["dd"], str):
            kwargs["dd"] = tuple(kwargs["dd"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        try:
            data = tomllib.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def parse_iterations(text: str) -> tuple[int, ...]:
    """``"3"`` or ``"1..4"`` (inclusive) or ``"1,3,5"``."""
    text = text.strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ConfigurationError(f"bad iterations value {text!r}; use N, a..b or a,b,c") from None


@dataclass
class CellResult:
    iterations: int
    dd: str
    success_prob: float
    ci_low: float
    ci_high: float
    probabilities: np.ndarray
    counts: np.ndarray
    twoq_count: int
    total_duration: float
    busy_fraction: np.ndarray
    inserted_sequences: np.ndarray
    ideal_success: float = 0.0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    cells: list[CellResult] = field(default_factory=list)

    def cell(self, iterations: int, dd: str) -> CellResult:
        dd = canonical_dd(dd)
        for c in self.cells:
            if c.iterations == iterations and c.dd == dd:
                return c
        raise KeyError((iterations, dd))

    def success(self, dd: str = "free") -> dict[int, float]:
        dd = canonical_dd(dd)
        return {c.iterations: c.success_prob for c in self.cells if c.dd == dd}


# ---------------------------------------------------------------- statistics

def wilson_ci(successes: int, shots: int, confidence: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if shots < 1 or not 0 <= successes <= shots:
        raise InputError(f"need 0 <= successes <= shots and shots >= 1, got {successes}/{shots}")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / shots
    z2n = z * z / shots
    centre = (p + z2n / 2) / (1 + z2n)
    half = z * math.sqrt(p * (1 - p) / shots + z2n / (4 * shots)) / (1 + z2n)
    low = 0.0 if successes == 0 else max(0.0, centre - half)
    high = 1.0 if successes == shots else min(1.0, centre + half)
    return low, high


def success_threshold(n: int) -> float:
    """Random-guess probability ``2**-n``."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    return 2.0 ** (-n)


# ---------------------------------------------------------------- pipeline

def detuning_ensemble(sigma_z: float, seed: int, iterations: int, n_qubits: int, size: int) -> np.ndarray | None:
    """``(size, n_qubits)`` detunings in rad/s, or ``None`` when ``sigma_z`` is 0."""
    if sigma_z == 0:
        return None
    rows = [
        np.random.default_rng(np.random.SeedSequence([seed, 0, iterations, j])).normal(0.0, sigma_z, n_qubits)
        for j in range(size)
    ]
    return np.array(rows)


def _shot_seed(seed: int, iterations: int, dd: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 1, iterations, DD_OPTIONS.index(dd)])


def _resolve_calibration(cfg: ExperimentConfig) -> CalibrationSet | None:
    if cfg.calibration is None:
        return None
    cal = load_calibration(cfg.calibration)
    if cal.n_qubits != cfg.n_qubits:
        raise ConfigurationError(
            f"calibration {cal.label!r} covers {cal.n_qubits} qubits, config has {cfg.n_qubits}"
        )
    return cal


def build_timed_circuit(n_qubits: int, target: str, iterations: int, durations: GateDurations | None = None) -> TimedCircuit:
    spec = GroverSpec(n_qubits, target, iterations)
    return schedule_alap(lower_to_native(build_grover_circuit(spec)), durations or GateDurations())


def pad(tc: TimedCircuit, dd: str, durations: GateDurations, s_min: float = 0.0) -> tuple[TimedCircuit, np.ndarray]:
    seq = ddmod.make_sequence(dd)
    if seq is None:
        return tc, np.zeros(tc.n_qubits, dtype=int)
    padded, report = ddmod.pad_circuit(tc, seq, durations.single_qubit, s_min)
    return padded, report.per_qubit


def _run_cell(cfg: ExperimentConfig, cal: CalibrationSet | None, k: int, dd: str) -> CellResult:
    durations = cal.durations if cal is not None else GateDurations()
    noise = (
        NoiseModel.from_calibration(cal, cfg.sigma_z, cfg.twoq_scale)
        if cal is not None
        else NoiseModel.ideal(cfg.n_qubits, cfg.sigma_z)
    )
    tc = build_timed_circuit(cfg.n_qubits, cfg.target, k, durations)
    n2q = twoq_count(tc)
    padded, inserted = pad(tc, dd, durations, cfg.s_min)
    dets = detuning_ensemble(cfg.sigma_z, cfg.seed, k, cfg.n_qubits, cfg.ensemble_size)
    dist = simulate(padded, noise, dets)
    rng = np.random.default_rng(_shot_seed(cfg.seed, k, dd))
    counts = rng.multinomial(cfg.shots, dist.probabilities)
    idx = int(cfg.target, 2)
    if cfg.exact:
        p = float(dist.probabilities[idx])
        lo = hi = p
    else:
        hits = int(counts[idx])
        p = hits / cfg.shots
        lo, hi = wilson_ci(hits, cfg.shots)
    return CellResult(
        iterations=k,
        dd=dd,
        success_prob=p,
        ci_low=lo,
        ci_high=hi,
        probabilities=dist.probabilities,
        counts=counts,
        twoq_count=n2q,
        total_duration=padded.total_duration,
        busy_fraction=busy_fraction(padded),
        inserted_sequences=inserted,
        ideal_success=ideal_success(cfg.n_qubits, k),
    )


def _run_cell_job(args) -> CellResult:
    return _run_cell(*args)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every (iterations, dd) cell of ``cfg``; cells are ordered k-major."""
    cal = _resolve_calibration(cfg)
    jobs = [(cfg, cal, k, d) for k in cfg.iterations for d in cfg.dd]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            cells = list(pool.map(_run_cell_job, jobs))
    else:
        cells = [_run_cell_job(j) for j in jobs]
    for c in cells:
        log.info("k=%d dd=%s success=%.6f", c.iterations, c.dd, c.success_prob)
    return ExperimentResult(cfg, cells)


def exact_success(
    n_qubits: int,
    iterations: int,
    dd: str = "free",
    *,
    target: str | None = None,
    calibration: str | None = None,
    sigma_z: float = 0.0,
    ensemble_size: int = 400,
    seed: int = 0,
    twoq_scale: float = 1.0,
) -> float:
    cfg = ExperimentConfig(
        n_qubits=n_qubits,
        target=target,
        iterations=(iterations,),
        dd=(dd,),
        calibration=calibration,
        sigma_z=sigma_z,
        ensemble_size=ensemble_size,
        seed=seed,
        twoq_scale=twoq_scale,
        exact=True,
    )
    return run_experiment(cfg).cells[0].success_prob


def bisect_sigma_z(
    threshold: float = 0.6,
    n_qubits: int = 5,
    iterations: int = 3,
    lo: float = 0.0,
    hi: float = 1e6,
    rel_tol: float = 0.01,
    ensemble_size: int = 400,
    seed: int = 0,
) -> float:
    """Smallest ``sigma_z`` (to ``rel_tol``) whose free-evolution success is below ``threshold``.

    Everything except the detuning is noiseless.  Returns the upper bracket,
    which is guaranteed to satisfy the threshold.
    """

    def below(sigma: float) -> bool:
        return exact_success(n_qubits, iterations, sigma_z=sigma, ensemble_size=ensemble_size, seed=seed) < threshold

    if not below(hi):
        raise InputError(f"success stays >= {threshold} up to sigma_z = {hi}")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------- output

def _fmt(x: float) -> str:
    return repr(float(x))


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def results_csv(res: ExperimentResult) -> str:
    rows = [
        (c.iterations, c.dd, _fmt(c.success_prob), _fmt(c.ci_low), _fmt(c.ci_high), c.twoq_count, _fmt(c.total_duration))
        for c in res.cells
    ]
    return _csv_text(RESULTS_HEADER, rows)


def histogram_csv(res: ExperimentResult, cell: CellResult) -> str:
    n = res.config.n_qubits
    shots = res.config.shots
    rows = []
    for i, count in enumerate(cell.counts):
        prob = cell.probabilities[i] if res.config.exact else count / shots
        rows.append((index_bitstring(i, n), int(count), _fmt(prob)))
    return _csv_text(("bitstring", "count", "probability"), rows)


def metrics_csv(cell: CellResult) -> str:
    rows = [
        (q, _fmt(b), int(s)) for q, (b, s) in enumerate(zip(cell.busy_fraction, cell.inserted_sequences))
    ]
    return _csv_text(("qubit", "busy_fraction", "inserted_sequences"), rows)


def emit_results(res: ExperimentResult, path: str | Path) -> list[Path]:
    """Write ``results.csv`` plus a histogram and a metrics CSV per cell into ``path``."""
    out = Path(path)
    files = {out / "results.csv": results_csv(res)}
    for c in res.cells:
        stem = f"k{c.iterations}_{c.dd}"
        files[out / f"hist_{stem}.csv"] = histogram_csv(res, c)
        files[out / f"metrics_{stem}.csv"] = metrics_csv(c)
    written = []
    for p, text in files.items():
        try:
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {p}: {exc}") from exc
        written.append(p)
    return written


def distribution_of(cell: CellResult) -> MeasurementDistribution:
    return MeasurementDistribution(cell.probabilities)


__all__ = [
    "A5_SIGMA_Z",
    "CellResult",
    "DD_OPTIONS",
    "DEFAULT_TARGETS",
    "ExperimentConfig",
    "ExperimentResult",
    "bisect_sigma_z",
    "build_timed_circuit",
    "canonical_dd",
    "detuning_ensemble",
    "emit_results",
    "exact_success",
    "histogram_csv",
    "metrics_csv",
    "parse_iterations",
    "results_csv",
    "run_experiment",
    "success_threshold",
    "wilson_ci",
]

"""Compare the compiled kernels with the numpy fallback.

Times each kernel on a batch of density matrices, then one full noisy
5-qubit simulation under each backend (run in subprocesses so the backend
choice is made at import).  Usage: ``python benchmarks/bench_kernels.py``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from groverdd.qsim import _fallback, unitary_superop

try:
    from groverdd.qsim import _kernels
except ImportError:
    _kernels = None

SIM_SNIPPET = """
import time
from groverdd.harness import exact_success
from groverdd.qsim import BACKEND
exact_success(5, 1, "XY4", calibration="pittsburgh-5q", sigma_z=1.7e5, ensemble_size=8)
t0 = time.perf_counter()
exact_success(5, 4, "XY4", calibration="pittsburgh-5q", sigma_z=1.7e5, ensemble_size={draws})
print(BACKEND, time.perf_counter() - t0)
"""


def kernel_table(n: int, batch: int, repeat: int) -> None:
    rng = np.random.default_rng(0)
    d = 1 << n
    rho = np.ascontiguousarray(rng.normal(size=(batch, d, d)) + 1j * rng.normal(size=(batch, d, d)))
    u1 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    u2 = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    S1, S2 = unitary_superop(u1)[None], unitary_superop(u2)[None]
    diag = np.exp(1j * rng.uniform(0, 6, size=(1, d)))
    cases = {
        "superop_1q": lambda m: m.apply_superop_1q(rho, S1, n // 2, n),
        "superop_2q": lambda m: m.apply_superop_2q(rho, S2, 0, n - 1, n),
        "depolarize": lambda m: m.apply_depolarizing_2q(rho, 0.01, 1, n - 2, n),
        "diagonal": lambda m: m.apply_diagonal(rho, diag),
        "cz": lambda m: m.apply_cz(rho, 0, n - 1, n),
    }
    print(f"kernels: n={n}, batch={batch}, best of {repeat}")
    print(f"{'kernel':<12}{'python ms':>11}{'cython ms':>11}{'speedup':>9}")
    for name, fn in cases.items():
        py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=repeat)) * 1e3
        if _kernels is None:
            print(f"{name:<12}{py:>11.3f}{'-':>11}{'-':>9}")
            continue
        cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=repeat)) * 1e3
        print(f"{name:<12}{py:>11.3f}{cy:>11.3f}{py / cy:>8.1f}x")


def simulation_table(draws: int) -> None:
    print(f"\nfull simulation: n=5, k=4, XY4, Pittsburgh 5q, {draws} detuning draws")
    times = {}
    for flag in ("1", ""):
        env = dict(os.environ, GROVERDD_PURE_PYTHON=flag)
        out = subprocess.run(
            [sys.executable, "-c", SIM_SNIPPET.format(draws=draws)], env=env, capture_output=True, text=True, check=True
        )
        backend, secs = out.stdout.split()
        times[backend] = float(secs)
        print(f"{backend:<8}{float(secs):>8.2f} s")
    if len(times) == 2:
        print(f"speedup {times['python'] / times['cython']:.1f}x")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=6)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--draws", type=int, default=100)
    args = ap.parse_args()
    kernel_table(args.qubits, args.batch, args.repeat)
    simulation_table(args.draws)


if __name__ == "__main__":
    main()

import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_density, random_unitary
from groverdd.qsim import _fallback, backend, kraus_superop, unitary_superop

kernels = pytest.importorskip("groverdd.qsim._kernels")

IMPLS = [_fallback, kernels]


def _batch(n, B, rng):
    return np.ascontiguousarray(np.stack([random_density(n, rng) for _ in range(B)]))


def _dense_reference(rho, U, targets, n):
    from groverdd.circuit import _embed

    F = _embed(U, targets, n)
    return np.einsum("ij,bjk,lk->bil", F, rho, F.conj())


@pytest.mark.parametrize("n", [1, 3, 5])
def test_superop_1q_against_dense(n, rng):
    rho = _batch(n, 3, rng)
    U = random_unitary(2, rng)
    for q in range(n):
        want = _dense_reference(rho, U, [q], n)
        for impl in IMPLS:
            got = rho.copy()
            impl.apply_superop_1q(got, unitary_superop(U)[None], q, n)
            assert np.max(np.abs(got - want)) < 1e-12, impl.__name__


@pytest.mark.parametrize("pair", [(0, 1), (1, 0), (0, 3), (3, 1), (2, 3)])
def test_superop_2q_against_dense(pair, rng):
    n = 4
    rho = _batch(n, 2, rng)
    U = random_unitary(4, rng)
    want = _dense_reference(rho, U, list(pair), n)
    for impl in IMPLS:
        got = rho.copy()
        impl.apply_superop_2q(got, unitary_superop(U)[None], pair[0], pair[1], n)
        assert np.max(np.abs(got - want)) < 1e-12, impl.__name__


@pytest.mark.parametrize("pair", [(0, 1), (3, 1), (2, 0)])
def test_depolarizing_kernel_matches_superop(pair, rng):
    from groverdd.noise import depolarizing_parameter, depolarizing_superop_2q

    n, e = 4, 0.07
    rho = _batch(n, 3, rng)
    want = rho.copy()
    _fallback.apply_superop_2q(want, depolarizing_superop_2q(e)[None], pair[0], pair[1], n)
    for impl in IMPLS:
        got = rho.copy()
        impl.apply_depolarizing_2q(got, depolarizing_parameter(e), pair[0], pair[1], n)
        assert np.max(np.abs(got - want)) < 1e-13, impl.__name__


@pytest.mark.parametrize("pair", [(0, 1), (2, 0), (1, 3)])
def test_cz_kernel_matches_dense(pair, rng):
    from groverdd.circuit import cz, gate_matrix

    n = 4
    rho = _batch(n, 2, rng)
    want = _dense_reference(rho, gate_matrix(cz(*pair)), list(pair), n)
    for impl in IMPLS:
        got = rho.copy()
        impl.apply_cz(got, pair[0], pair[1], n)
        assert np.max(np.abs(got - want)) < 1e-15, impl.__name__


def test_batched_superops_agree(rng):
    n, B = 3, 5
    rho = _batch(n, B, rng)
    S1 = np.stack([unitary_superop(random_unitary(2, rng)) for _ in range(B)])
    ops = [rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) for _ in range(2)]
    S2 = kraus_superop(ops)[None]
    diag = np.exp(1j * rng.uniform(0, 6, size=(B, 1 << n)))
    out = []
    for impl in IMPLS:
        r = rho.copy()
        impl.apply_superop_1q(r, S1, 1, n)
        impl.apply_superop_2q(r, S2, 2, 0, n)
        impl.apply_diagonal(r, diag)
        out.append(r)
    assert np.max(np.abs(out[0] - out[1])) < 1e-12


def test_read_only_operator_accepted(rng):
    S = unitary_superop(random_unitary(2, rng))[None]
    S.setflags(write=False)
    rho = _batch(2, 1, rng)
    kernels.apply_superop_1q(rho, S, 0, 2)


def test_backend_selection_env():
    code = "from groverdd.qsim import BACKEND; print(BACKEND)"
    env = dict(os.environ, GROVERDD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert backend.BACKEND == "cython"


def test_pure_python_simulation_matches(tmp_path):
    code = (
        "from groverdd.harness import exact_success;"
        "print(repr(exact_success(5, 2, 'XY4', calibration='pittsburgh-5q', sigma_z=1e5, ensemble_size=8)))"
    )
    vals = []
    for flag in ("", "1"):
        env = dict(os.environ, GROVERDD_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert vals[0] == pytest.approx(vals[1], abs=1e-12)

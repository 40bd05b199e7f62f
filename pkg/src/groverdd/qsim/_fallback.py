"""Pure numpy implementation of the in-place density-matrix kernels.

Every kernel acts on a batch of density matrices ``rho`` with shape
``(B, D, D)`` where ``D = 2**n``.  Qubit 0 is the most significant bit of
the basis index.  Superoperators use row-major vectorization: for a
``k``-qubit map the element ``S[A*dk + Bc, C*dk + E]`` sends
``rho[C, E]`` to ``rho[A, Bc]`` on the local subspace.  The leading axis of
``S`` (or of ``diag``) is either 1 (shared by the batch) or ``B``.
"""

import numpy as np


def _apply_superop(rho, S, targets, n):
    B, D, _ = rho.shape
    k = len(targets)
    t = rho.reshape((B,) + (2,) * (2 * n))
    src = [1 + q for q in targets] + [1 + n + q for q in targets]
    dst = list(range(1, 1 + 2 * k))
    moved = np.moveaxis(t, src, dst)
    shape = moved.shape
    flat = moved.reshape(B, 4**k, -1)
    out = np.matmul(S, flat).reshape(shape)
    rho[...] = np.moveaxis(out, dst, src).reshape(B, D, D)


def apply_superop_1q(rho, S, qubit, n):
    _apply_superop(rho, S, [qubit], n)


def apply_superop_2q(rho, S, q0, q1, n):
    _apply_superop(rho, S, [q0, q1], n)


def apply_diagonal(rho, diag):
    rho *= diag[:, :, None] * diag.conj()[:, None, :]


def apply_depolarizing_2q(rho, p, q0, q1, n):
    """``(1-p) rho + p Tr_{q0,q1}(rho) x I/4`` in place."""
    B, D, _ = rho.shape
    t = rho.reshape((B,) + (2,) * (2 * n))
    src = [1 + q0, 1 + q1, 1 + n + q0, 1 + n + q1]
    moved = np.moveaxis(t, src, [1, 2, 3, 4])
    partial = np.einsum("zaa...->z...", moved.reshape((B, 4, 4) + moved.shape[5:]))
    out = np.ascontiguousarray((1 - p) * moved)
    local = out.reshape((B, 4, 4) + moved.shape[5:])
    for a in range(4):
        local[:, a, a] += 0.25 * p * partial
    rho[...] = np.moveaxis(out, [1, 2, 3, 4], src).reshape(B, D, D)


def apply_cz(rho, q0, q1, n):
    """Conjugate by CZ: flip the sign where exactly one index has both bits set."""
    idx = np.arange(rho.shape[1])
    mask = (1 << (n - 1 - q0)) | (1 << (n - 1 - q1))
    hit = (idx & mask) == mask
    rho[:, hit, :] *= -1
    rho[:, :, hit] *= -1

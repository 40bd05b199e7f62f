import numpy as np
import pytest

from groverdd.circuit import Kind

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _apply1(psi, M, q, n):
    t = psi.reshape((2,) * n)
    t = np.moveaxis(np.tensordot(M, t, axes=(1, q)), 0, q)
    return t.reshape(-1)


def statevector(circuit):
    """Independent statevector run of a macro-level circuit.

    Multi-qubit phase gates are applied as sign flips on basis indices, with
    no reference to any decomposition.
    """
    n = circuit.n_qubits
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    idx = np.arange(1 << n)
    for g in circuit.gates:
        if g.kind in (Kind.MEASURE, Kind.BARRIER, Kind.DELAY):
            continue
        if g.kind == Kind.H:
            psi = _apply1(psi, _H, g.qubits[0], n)
        elif g.kind == Kind.X:
            psi = _apply1(psi, _X, g.qubits[0], n)
        elif g.kind == Kind.SX:
            psi = _apply1(psi, 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]), g.qubits[0], n)
        elif g.kind == Kind.RZ:
            a = g.params[0]
            psi = _apply1(psi, np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)]), g.qubits[0], n)
        elif g.kind in (Kind.Z, Kind.CZ, Kind.MCZ):
            mask = np.ones_like(idx, dtype=bool)
            for q in g.qubits:
                mask &= ((idx >> (n - 1 - q)) & 1) == 1
            psi = np.where(mask, -psi, psi)
        else:
            raise AssertionError(f"oracle cannot run {g.kind}")
    return psi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(n, rng):
    d = 1 << n
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def random_unitary(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


@pytest.fixture
def record():
    def _record(criterion, ok, detail=""):
        ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        parts = ACCEPTANCE[crit]
        ok = all(p for p, _ in parts)
        failed = "; ".join(d for p, d in parts if not p)
        detail = failed if failed else "; ".join(d for _, d in parts if d)
        terminalreporter.write_line(f"{crit} {'PASS' if ok else 'FAIL'}  {detail}")

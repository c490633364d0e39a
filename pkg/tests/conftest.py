import math

import numpy as np
import pytest
from hypothesis import settings

from qbs.grid import grid_from_smax
from qbs.payoff import ContractParams

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

BASE_SMAX = 135.0


@pytest.fixture
def base_contract():
    return ContractParams(side="put", strike=50.0, rate=0.3, sigma=0.2, maturity=1.0)


@pytest.fixture
def base_grid():
    return grid_from_smax(8, BASE_SMAX)


def kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_z_word(word, n_qubits):
    """Dense ``Z_word`` with qubit 0 as the most significant tensor factor."""
    z = np.diag([1.0, -1.0])
    return kron_all([z if (word >> j) & 1 else np.eye(2) for j in range(n_qubits)])


def walsh_brute(h):
    """``(1/N) sum_k h_k prod_{j in I} (-1)^{bit (n-1-j) of k}`` by explicit loops."""
    n = len(h)
    nq = int(math.log2(n))
    out = np.zeros(n)
    for word in range(n):
        total = 0.0
        for k in range(n):
            sign = 1
            for j in range(nq):
                if (word >> j) & 1 and (k >> (nq - 1 - j)) & 1:
                    sign = -sign
            total += sign * h[k]
        out[word] = total / n
    return out


def mp_walsh_drift(n_qubits, s_max, contract, dps=40):
    """Drift Cartan coefficients in extended precision: spectrum and FWHT both in mpmath.

    Float64 eigenvalues carry ~1e-16 absolute rounding, which is already
    ~1e-9 relative to the smallest coefficients at eight qubits.
    """
    import mpmath

    from qbs.hamiltonian import bit_reverse_permutation

    with mpmath.workdps(dps):
        n = 2**n_qubits
        x_max = 2 * mpmath.log(mpmath.mpf(s_max))
        dx = 2 * x_max / (n - 1)
        a = -(mpmath.mpf(contract.sigma) ** 2 / 2 - mpmath.mpf(contract.rate))
        h = [a * mpmath.sin(2 * mpmath.pi * k / n) / dx for k in range(n)]
        step = 1
        while step < n:
            for i in range(0, n, 2 * step):
                for j in range(i, i + step):
                    x, y = h[j], h[j + step]
                    h[j], h[j + step] = x + y, x - y
            step *= 2
        rev = bit_reverse_permutation(n_qubits)
        return [h[rev[w]] / n for w in range(n)]


def embed_gate(local, qubits, width):
    """Full ``2^w x 2^w`` matrix of a local gate by basis enumeration (qubit 0 = MSB)."""
    dim = 1 << width
    out = np.zeros((dim, dim), dtype=complex)
    k = len(qubits)
    for col in range(dim):
        sub = 0
        for q in qubits:
            sub = (sub << 1) | ((col >> (width - 1 - q)) & 1)
        for new_sub in range(1 << k):
            amp = local[new_sub, sub]
            if amp == 0:
                continue
            row = col
            for pos, q in enumerate(qubits):
                bit = (new_sub >> (k - 1 - pos)) & 1
                shift = width - 1 - q
                row = (row & ~(1 << shift)) | (bit << shift)
            out[row, col] += amp
    return out


LOCAL = {
    "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
    "Z": np.diag([1, -1]),
    "X": np.array([[0, 1], [1, 0]]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}


def reference_local(gate):
    if gate.kind == "Rz":
        return np.diag([np.exp(-0.5j * gate.angle), np.exp(0.5j * gate.angle)])
    if gate.kind == "CPhase":
        return np.diag([1, 1, 1, np.exp(1j * gate.angle)])
    return LOCAL[gate.kind].astype(complex)


def reference_unitary(circuit):
    u = np.eye(1 << circuit.width, dtype=complex)
    for g in circuit.gates:
        u = embed_gate(reference_local(g), g.qubits, circuit.width) @ u
    return u * np.exp(1j * circuit.global_phase)


def random_circuit(rng, width, n_gates):
    from qbs.circuit import CNOT, SWAP, CPhase, Gate, H, Rz, S, Sdg, X, Z, Circuit

    gates = []
    for _ in range(n_gates):
        kind = rng.integers(0, 10)
        a, b = (int(v) for v in rng.choice(width, 2, replace=False))
        theta = float(rng.uniform(-np.pi, np.pi))
        gates.append(
            [H(a), S(a), Sdg(a), Z(a), X(a), Rz(a, theta), CNOT(a, b), CPhase(a, b, theta), SWAP(a, b), CNOT(b, a)][kind]
        )
    return Circuit(width, tuple(gates))


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; the terminal summary prints them in order."""

    def report(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])

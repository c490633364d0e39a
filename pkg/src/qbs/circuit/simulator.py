"""Exact statevector execution.

Amplitudes live in a ``(2,) * width`` tensor (plus an optional trailing batch
axis), qubit 0 on the leading axis.  Gates touch slices in place, so a
``width``-qubit state costs ``O(2**width)`` per gate.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from qbs.circuit.gates import Circuit, Gate

_SQ = 1.0 / math.sqrt(2.0)
_H = np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex)


def gate_matrix(gate: Gate) -> np.ndarray:
    """Local matrix in the order of ``gate.qubits`` (controls first)."""
    k = gate.kind
    if k == "H":
        return _H.copy()
    if k == "S":
        return np.diag([1.0, 1j])
    if k == "Sdg":
        return np.diag([1.0, -1j])
    if k == "Z":
        return np.diag([1.0, -1.0]).astype(complex)
    if k == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if k == "Rz":
        t = gate.angle
        return np.diag([cmath.exp(-0.5j * t), cmath.exp(0.5j * t)])
    if k == "CNOT":
        m = np.eye(4, dtype=complex)
        m[2:, 2:] = [[0, 1], [1, 0]]
        return m
    if k == "CPhase":
        return np.diag([1, 1, 1, cmath.exp(1j * gate.angle)])
    if k == "SWAP":
        return np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    raise ValueError(k)


def _slc(width: int, fixed: dict[int, int]) -> tuple:
    idx = [slice(None)] * width
    for q, v in fixed.items():
        idx[q] = v
    return tuple(idx)


def _apply(psi: np.ndarray, gate: Gate, width: int) -> None:
    k = gate.kind
    if k in ("Z", "S", "Sdg", "Rz"):
        (q,) = gate.targets
        d = np.diag(gate_matrix(gate))
        if d[0] != 1.0:
            psi[_slc(width, {q: 0})] *= d[0]
        psi[_slc(width, {q: 1})] *= d[1]
    elif k in ("H", "X"):
        (q,) = gate.targets
        a0 = psi[_slc(width, {q: 0})].copy()
        a1 = psi[_slc(width, {q: 1})]
        if k == "X":
            psi[_slc(width, {q: 0})] = a1
            psi[_slc(width, {q: 1})] = a0
        else:
            psi[_slc(width, {q: 0})] = (a0 + a1) * _SQ
            psi[_slc(width, {q: 1})] = (a0 - a1) * _SQ
    elif k == "CNOT":
        (c,), (t,) = gate.controls, gate.targets
        s0, s1 = _slc(width, {c: 1, t: 0}), _slc(width, {c: 1, t: 1})
        tmp = psi[s0].copy()
        psi[s0] = psi[s1]
        psi[s1] = tmp
    elif k == "CPhase":
        (c,), (t,) = gate.controls, gate.targets
        psi[_slc(width, {c: 1, t: 1})] *= cmath.exp(1j * gate.angle)
    elif k == "SWAP":
        a, b = gate.targets
        s0, s1 = _slc(width, {a: 0, b: 1}), _slc(width, {a: 1, b: 0})
        tmp = psi[s0].copy()
        psi[s0] = psi[s1]
        psi[s1] = tmp
    else:
        raise ValueError(k)


def simulate(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """Run ``circuit`` on ``state`` (length ``2**width``, or ``(2**width, batch)``)."""
    state = np.asarray(state)
    dim = 1 << circuit.width
    if state.shape[0] != dim:
        raise ValueError(f"state has {state.shape[0]} amplitudes, circuit width {circuit.width} needs {dim}")
    batch = state.shape[1:]
    psi = np.array(state, dtype=complex).reshape((2,) * circuit.width + batch)
    for gate in circuit.gates:
        _apply(psi, gate, circuit.width)
    out = psi.reshape((dim,) + batch)
    if circuit.global_phase:
        out *= cmath.exp(1j * circuit.global_phase)
    return out


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    dim = 1 << circuit.width
    return simulate(circuit, np.eye(dim, dtype=complex))


def basis_state(width: int, index: int = 0) -> np.ndarray:
    v = np.zeros(1 << width, dtype=complex)
    v[index] = 1.0
    return v

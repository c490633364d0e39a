"""Gate IR, compiler, optimizer and statevector engine."""

from qbs.circuit.gates import CNOT, SWAP, Circuit, CPhase, Gate, H, Rz, S, Sdg, X, Z, dumps, loads
from qbs.circuit.simulator import basis_state, circuit_unitary, gate_matrix, simulate
from qbs.circuit.compiler import (
    Layout,
    compile_plan,
    dilation_prefix,
    entangling_gate_count,
    gate_budget,
    inverse_qft_circuit,
    optimize_cnot_cancellation,
    pauli_z_exponential_block,
    qft_circuit,
)
from qbs.circuit.propagator import exact_propagator, register_embedding_block

__all__ = [
    "CNOT",
    "CPhase",
    "Circuit",
    "Gate",
    "H",
    "Layout",
    "Rz",
    "S",
    "SWAP",
    "Sdg",
    "X",
    "Z",
    "basis_state",
    "circuit_unitary",
    "compile_plan",
    "dilation_prefix",
    "dumps",
    "entangling_gate_count",
    "exact_propagator",
    "gate_budget",
    "gate_matrix",
    "inverse_qft_circuit",
    "loads",
    "optimize_cnot_cancellation",
    "pauli_z_exponential_block",
    "qft_circuit",
    "register_embedding_block",
    "simulate",
]

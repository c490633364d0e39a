"""Dense matrix form of the dilated propagator, used as the circuit oracle."""

from __future__ import annotations

import numpy as np

from qbs.grid import GridSpec, dft_matrix
from qbs.hamiltonian import (
    decay_exponent,
    embedded_eigenvalues,
    hermitian_eigenvalues,
    inverse_walsh,
)
from qbs.payoff import ContractParams
from qbs.truncation import TruncationPlan


def momentum_diagonals(
    grid: GridSpec, contract: ContractParams, plan: TruncationPlan | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """``(h_drift, h_embedded)`` per momentum mode, optionally from truncated sums."""
    if contract.rate < 0 or contract.maturity < 0:
        raise ValueError("rate * maturity < 0 makes the decay operator non-contractive")
    if plan is None:
        return hermitian_eigenvalues(grid, contract).h, embedded_eigenvalues(grid, contract).h
    if plan.n_qubits != grid.n_qubits:
        raise ValueError(f"plan was built for {plan.n_qubits} qubits, grid has {grid.n_qubits}")
    return (
        inverse_walsh(plan.dense_coefficients("hermitian")),
        inverse_walsh(plan.dense_coefficients("embedded")),
    )


def exact_propagator(
    grid: GridSpec, contract: ContractParams, plan: TruncationPlan | None = None
) -> np.ndarray:
    """``(Z_E x 1) exp(i Y_E x H~) (1 x exp(-i T H))`` conjugated into position space.

    Returned as a ``2N x 2N`` matrix indexed ``e * N + register``; the top-left
    block is the decay operator times the drift phase.
    """
    h, h_emb = momentum_diagonals(grid, contract, plan)
    phase = np.exp(-1j * contract.maturity * h)
    f = dft_matrix(grid.n_points)
    fd = f.conj().T

    def conj(diag: np.ndarray) -> np.ndarray:
        return fd @ (diag[:, None] * f)

    o = conj(np.cos(h_emb) * phase)
    s = conj(np.sin(h_emb) * phase)
    return np.block([[o, s], [s, -o]])


def decay_operator(grid: GridSpec, contract: ContractParams) -> np.ndarray:
    """Position-space ``O = F^dagger exp(-T(sigma^2 p^2/2 + r)) F``."""
    f = dft_matrix(grid.n_points)
    return f.conj().T @ (np.exp(-decay_exponent(grid, contract))[:, None] * f)


def register_embedding_block(unitary: np.ndarray, n_qubits: int) -> tuple[np.ndarray, float]:
    """Restrict a full-width circuit unitary to ``q_G = 0`` in and out.

    Reorders to the ``e * N + register`` convention of :func:`exact_propagator`
    and also returns the largest amplitude leaked into ``q_G = 1``.
    """
    n = 1 << n_qubits
    reg = np.arange(n)
    e = np.arange(2)
    # full index = reg * 4 + e * 2 + g with q_E = n_qubits, q_G = n_qubits + 1
    idx0 = (reg[None, :] * 4 + e[:, None] * 2).reshape(-1)
    block = unitary[np.ix_(idx0, idx0)]
    leak = float(np.max(np.abs(unitary[np.ix_(idx0 + 1, idx0)])))
    return block, leak

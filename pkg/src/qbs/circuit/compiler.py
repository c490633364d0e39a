"""Compile a truncation plan into QFT + Pauli-exponential blocks + inverse QFT.

Register qubits are ``0 .. n-1`` (qubit 0 = most significant), the embedding
ancilla ``q_E = n`` and the parity ancilla ``q_G = n + 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from qbs.circuit.gates import (
    CNOT,
    DIAGONAL,
    H,
    S,
    SWAP,
    Circuit,
    CPhase,
    Gate,
    Rz,
    Sdg,
    Z,
)
from qbs.grid import GridSpec
from qbs.hamiltonian import word_qubits
from qbs.payoff import ContractParams
from qbs.truncation import Term, TruncationPlan


@dataclass(frozen=True)
class Layout:
    n_qubits: int

    @property
    def q_e(self) -> int:
        return self.n_qubits

    @property
    def q_g(self) -> int:
        return self.n_qubits + 1

    @property
    def width(self) -> int:
        return self.n_qubits + 2

    def roles(self) -> dict:
        return {"q_E": self.q_e, "q_G": self.q_g}


def qft_circuit(n_qubits: int, width: int | None = None, tag: str = "qft") -> Circuit:
    """``|x> -> sum_k exp(2 pi i x k / N) |k> / sqrt(N)`` on qubits ``0..n-1``.

    Hadamard + controlled-phase ladder, then the qubit-reversal swaps.
    """
    gates: list[Gate] = []
    for i in range(n_qubits):
        gates.append(H(i, tag))
        for j in range(i + 1, n_qubits):
            gates.append(CPhase(j, i, math.pi / 2 ** (j - i), tag))
    for i in range(n_qubits // 2):
        gates.append(SWAP(i, n_qubits - 1 - i, tag))
    return Circuit(width or n_qubits, tuple(gates))


def inverse_qft_circuit(n_qubits: int, width: int | None = None) -> Circuit:
    return qft_circuit(n_qubits, width).inverse().retagged("iqft")


def _ladder(qubits: Sequence[int], ancilla: int, tag: str) -> list[Gate]:
    return [CNOT(q, ancilla, tag) for q in qubits]


def pauli_z_exponential_block(
    word: int, beta: float, onto_embedding: bool, n_qubits: int
) -> Circuit:
    """``exp(i beta Z_word)`` or, with ``onto_embedding``, ``exp(i beta Y_E Z_word)``.

    The Z-parity of the word (and of ``q_E`` when embedding, after rotating
    ``Y_E`` to ``Z_E`` with ``H S^dagger``) is copied onto ``q_G``, which then
    takes ``Rz(-2 beta)``; ``q_G`` must enter in ``|0>`` and leaves in ``|0>``.
    A single-qubit drift word skips the ancilla.  The identity drift word is a
    pure global phase.
    """
    lay = Layout(n_qubits)
    qubits = word_qubits(word)
    if qubits and qubits[-1] >= n_qubits:
        raise ValueError(f"word {word:#b} exceeds the {n_qubits}-qubit register")
    tag = "emb" if onto_embedding else "herm"
    if not onto_embedding:
        if not qubits:
            return Circuit(lay.width, (), beta, lay.roles())
        if len(qubits) == 1:
            return Circuit(lay.width, (Rz(qubits[0], -2.0 * beta, tag),), 0.0, lay.roles())
        ladder = _ladder(qubits, lay.q_g, tag)
        gates = ladder + [Rz(lay.q_g, -2.0 * beta, tag)] + ladder[::-1]
        return Circuit(lay.width, tuple(gates), 0.0, lay.roles())

    e = lay.q_e
    pre = [Sdg(e, tag), H(e, tag)]
    post = [H(e, tag), S(e, tag)]
    if not qubits:
        core = [Rz(e, -2.0 * beta, tag)]
    else:
        ladder = _ladder(qubits + [e], lay.q_g, tag)
        core = ladder + [Rz(lay.q_g, -2.0 * beta, tag)] + ladder[::-1]
    return Circuit(lay.width, tuple(pre + core + post), 0.0, lay.roles())


def dilation_prefix(n_qubits: int) -> Circuit:
    """The ``Z`` on ``q_E`` that turns ``exp(i Y_E H~)`` into the dilation."""
    lay = Layout(n_qubits)
    return Circuit(lay.width, (Z(lay.q_e, "dilation"),), 0.0, lay.roles())


def _ladder_set(word: int, embedded: bool, n_qubits: int) -> frozenset[int]:
    qs = set(word_qubits(word))
    if embedded and qs:
        qs.add(n_qubits)
    if not embedded and len(qs) < 2:
        return frozenset()
    return frozenset(qs)


def order_for_cancellation(
    terms: Sequence[Term], n_qubits: int, start: frozenset[int] = frozenset()
) -> list[Term]:
    """Greedy nearest-neighbour ordering of blocks by ladder set difference.

    Consecutive blocks with ladder sets ``A`` and ``B`` leave ``|A ^ B|``
    CNOTs after cancellation, so each step takes the remaining term whose set
    is Gray-code-closest to the previous one (ties by ascending bitmask).
    """
    remaining = list(terms)
    out: list[Term] = []
    prev = start
    while remaining:
        best = min(
            remaining,
            key=lambda t: (len(_ladder_set(t.word, t.kind == "embedded", n_qubits) ^ prev), t.word),
        )
        remaining.remove(best)
        out.append(best)
        ls = _ladder_set(best.word, best.kind == "embedded", n_qubits)
        if ls:
            prev = ls
    return out


def compile_plan(
    plan: TruncationPlan,
    grid: GridSpec,
    contract: ContractParams,
    optimize: bool = True,
    hermitian_first: bool = False,
) -> Circuit:
    """QFT, embedded blocks, ``Z_E``, drift blocks, inverse QFT.

    Drift blocks rotate by ``beta = -T h'`` (so they realize ``exp(-i T H)``);
    embedded blocks by ``beta = h'`` since the embedded generator already
    carries the maturity.  ``hermitian_first`` swaps the two sections, which
    commute.
    """
    if plan.n_qubits != grid.n_qubits:
        raise ValueError(f"plan was built for {plan.n_qubits} qubits, grid has {grid.n_qubits}")
    if abs(plan.maturity - contract.maturity) > 1e-15 * max(1.0, contract.maturity):
        raise ValueError("plan maturity does not match the contract")
    n = grid.n_qubits
    lay = Layout(n)
    circ = Circuit(lay.width, (), 0.0, lay.roles()).then(qft_circuit(n, lay.width))

    emb_terms = order_for_cancellation(
        sorted(plan.of_kind("embedded"), key=lambda t: (bool(t.word), t.word)), n
    )
    herm_terms = plan.of_kind("hermitian")

    def emit_emb(c: Circuit) -> Circuit:
        for t in emb_terms:
            c = c.then(pauli_z_exponential_block(t.word, t.coefficient, True, n))
        return c.then(dilation_prefix(n))

    def emit_herm(c: Circuit, start: frozenset[int]) -> Circuit:
        for t in order_for_cancellation(herm_terms, n, start):
            c = c.then(pauli_z_exponential_block(t.word, -contract.maturity * t.coefficient, False, n))
        return c

    last_emb = frozenset()
    for t in reversed(emb_terms):
        last_emb = _ladder_set(t.word, True, n)
        if last_emb:
            break
    if hermitian_first:
        circ = emit_emb(emit_herm(circ, frozenset()))
    else:
        circ = emit_herm(emit_emb(circ), last_emb)
    circ = circ.then(inverse_qft_circuit(n, lay.width))
    return optimize_cnot_cancellation(circ) if optimize else circ


_INVOLUTIONS = {"H", "Z", "X", "CNOT", "SWAP"}


def _cancels(a: Gate, b: Gate) -> bool:
    if a.kind in _INVOLUTIONS and a.kind == b.kind:
        if a.kind == "SWAP":
            return set(a.targets) == set(b.targets)
        return a.targets == b.targets and a.controls == b.controls
    return {a.kind, b.kind} == {"S", "Sdg"} and a.targets == b.targets


def _commutes(a: Gate, b: Gate) -> bool:
    qa, qb = set(a.qubits), set(b.qubits)
    if not qa & qb:
        return True
    if a.kind in DIAGONAL and b.kind in DIAGONAL:
        return True
    if a.kind == "CNOT" and b.kind == "CNOT":
        return a.controls[0] != b.targets[0] and a.targets[0] != b.controls[0]
    for g, o in ((a, b), (b, a)):
        if g.kind != "CNOT":
            continue
        c, t = g.controls[0], g.targets[0]
        if o.kind in DIAGONAL and t not in o.qubits:
            return True  # diagonal gate only on the control side
        if o.kind == "X" and o.targets == (t,):
            return True
    return False


def optimize_cnot_cancellation(circuit: Circuit) -> Circuit:
    """Remove inverse gate pairs that can be brought together by exact commutations.

    A gate cancels a later inverse (identical CNOT, H, Z, X, SWAP, or an
    ``S``/``Sdg`` pair) when every gate in between commutes with it: disjoint
    support, both diagonal, CNOTs sharing only a control or only a target,
    diagonal gates on a CNOT's control, ``X`` on its target.  Repeats to a
    fixed point.  The unitary is unchanged.
    """
    gates = list(circuit.gates)
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(gates):
            g = gates[i]
            hit = None
            for j in range(i + 1, len(gates)):
                o = gates[j]
                if _cancels(g, o):
                    hit = j
                    break
                if not _commutes(g, o):
                    break
            if hit is not None:
                del gates[hit]
                del gates[i]
                changed = True
            else:
                i += 1
    return Circuit(circuit.width, tuple(gates), circuit.global_phase, circuit.roles)


def entangling_gate_count(circuit: Circuit, exclude_tags: Iterable[str] = ()) -> int:
    """CNOT + CPhase + 3 per SWAP, skipping gates whose tag is excluded."""
    skip = set(exclude_tags)
    total = 0
    for g in circuit.gates:
        if g.tag in skip:
            continue
        if g.kind in ("CNOT", "CPhase"):
            total += 1
        elif g.kind == "SWAP":
            total += 3
    return total


def gate_budget(circuit: Circuit) -> dict:
    """Inclusive (whole circuit) and exclusive (Hamiltonian section only) tallies."""
    return {
        "width": circuit.width,
        "inclusive": entangling_gate_count(circuit),
        "inclusive_no_swaps": entangling_gate_count(circuit) - 3 * sum(g.kind == "SWAP" for g in circuit.gates),
        "exclusive": entangling_gate_count(circuit, exclude_tags=("qft", "iqft")),
        "total_gates": len(circuit),
    }

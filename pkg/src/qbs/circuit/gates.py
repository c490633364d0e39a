"""Gate-level circuit representation and its line-oriented text format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

ONE_QUBIT = {"H", "S", "Sdg", "Z", "X", "Rz"}
TWO_QUBIT = {"CNOT", "CPhase", "SWAP"}
PARAMETRIC = {"Rz", "CPhase"}
DIAGONAL = {"S", "Sdg", "Z", "Rz", "CPhase"}
KINDS = ONE_QUBIT | TWO_QUBIT


@dataclass(frozen=True)
class Gate:
    """One gate.  ``controls`` is used by CNOT and CPhase only.

    ``tag`` labels the block a gate came from (``qft``, ``iqft``, ``emb``,
    ``herm``, ``dilation``); it plays no role in the gate's action.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    angle: float | None = None
    tag: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = self.qubits
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{self.kind} acts on repeated qubits {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError("negative qubit index")
        expected = 2 if self.kind in TWO_QUBIT else 1
        if len(qubits) != expected:
            raise ValueError(f"{self.kind} needs {expected} qubit(s), got {qubits}")
        if self.kind in ("CNOT", "CPhase") and len(self.controls) != 1:
            raise ValueError(f"{self.kind} needs exactly one control")
        if self.kind in PARAMETRIC:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def inverse(self) -> "Gate":
        if self.kind == "S":
            return Gate("Sdg", self.targets, tag=self.tag)
        if self.kind == "Sdg":
            return Gate("S", self.targets, tag=self.tag)
        if self.kind in PARAMETRIC:
            return Gate(self.kind, self.targets, self.controls, -self.angle, tag=self.tag)
        return self


def H(q: int, tag: str = "") -> Gate:
    return Gate("H", (q,), tag=tag)


def S(q: int, tag: str = "") -> Gate:
    return Gate("S", (q,), tag=tag)


def Sdg(q: int, tag: str = "") -> Gate:
    return Gate("Sdg", (q,), tag=tag)


def Z(q: int, tag: str = "") -> Gate:
    return Gate("Z", (q,), tag=tag)


def X(q: int, tag: str = "") -> Gate:
    return Gate("X", (q,), tag=tag)


def Rz(q: int, theta: float, tag: str = "") -> Gate:
    return Gate("Rz", (q,), angle=float(theta), tag=tag)


def CNOT(control: int, target: int, tag: str = "") -> Gate:
    return Gate("CNOT", (target,), (control,), tag=tag)


def CPhase(control: int, target: int, theta: float, tag: str = "") -> Gate:
    return Gate("CPhase", (target,), (control,), float(theta), tag=tag)


def SWAP(a: int, b: int, tag: str = "") -> Gate:
    return Gate("SWAP", (a, b), tag=tag)


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``width`` qubits plus a tracked global phase.

    Qubit 0 is the most significant bit of the statevector index.  ``roles``
    names special qubits, e.g. ``{"q_E": 8, "q_G": 9}``.
    """

    width: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0
    roles: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise ValueError(f"{g} exceeds circuit width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)

    def extended(self, gates: Iterable[Gate], phase: float = 0.0) -> "Circuit":
        return Circuit(self.width, self.gates + tuple(gates), self.global_phase + phase, self.roles)

    def then(self, other: "Circuit") -> "Circuit":
        if other.width > self.width:
            raise ValueError("appended fragment is wider than the circuit")
        return self.extended(other.gates, other.global_phase)

    def inverse(self) -> "Circuit":
        return Circuit(
            self.width, tuple(g.inverse() for g in reversed(self.gates)), -self.global_phase, self.roles
        )

    def retagged(self, tag: str) -> "Circuit":
        return Circuit(
            self.width,
            tuple(Gate(g.kind, g.targets, g.controls, g.angle, tag) for g in self.gates),
            self.global_phase,
            self.roles,
        )

    def with_width(self, width: int) -> "Circuit":
        return Circuit(width, self.gates, self.global_phase, self.roles)


def dumps(circuit: Circuit) -> str:
    """Text form: header comments, then ``KIND q... [angle]`` per gate.

    Qubits are listed controls first.  Angles carry 17 significant digits,
    which round-trips IEEE doubles exactly.
    """
    lines = [f"# width {circuit.width}", f"# phase {circuit.global_phase:.17g}"]
    for name, q in sorted(circuit.roles.items()):
        lines.append(f"# role {name} {q}")
    for g in circuit.gates:
        parts = [g.kind, *(str(q) for q in g.qubits)]
        if g.angle is not None:
            parts.append(f"{g.angle:.17g}")
        if g.tag:
            parts.append(f"@{g.tag}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Circuit:
    width = None
    phase = 0.0
    roles: dict = {}
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if fields[:1] == ["width"]:
                width = int(fields[1])
            elif fields[:1] == ["phase"]:
                phase = float(fields[1])
            elif fields[:1] == ["role"]:
                roles[fields[1]] = int(fields[2])
            continue
        fields = line.split()
        tag = ""
        if fields[-1].startswith("@"):
            tag = fields.pop()[1:]
        kind = fields[0]
        try:
            if kind in PARAMETRIC:
                qs, angle = [int(f) for f in fields[1:-1]], float(fields[-1])
            else:
                qs, angle = [int(f) for f in fields[1:]], None
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}") from exc
        if kind in ("CNOT", "CPhase"):
            gates.append(Gate(kind, (qs[1],), (qs[0],), angle, tag))
        else:
            gates.append(Gate(kind, tuple(qs), (), angle, tag))
    if width is None:
        width = 1 + max((max(g.qubits) for g in gates), default=0)
    return Circuit(width, tuple(gates), phase, roles)

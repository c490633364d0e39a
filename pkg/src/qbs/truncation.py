"""Term ranking, truncation error bounds and truncation plans.

Drift (Hermitian) words all contain qubit 0.  Each such word gets an integer
index ``I'`` with ``|h'_J| <= C * 2**(-I')``, so dropping every word with
``I' >= M`` costs at most ``sqrt(2 (1 - cos(2 T C' 2**-M)))`` in operator norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from qbs.grid import GridSpec
from qbs.hamiltonian import (
    embedded_eigenvalues,
    hermitian_eigenvalues,
    hermitian_scale,
    walsh_coefficients,
    word_qubits,
)
from qbs.payoff import ContractParams

Kind = Literal["hermitian", "embedded"]


def max_index(n_qubits: int) -> int:
    return n_qubits * (n_qubits - 1) // 2 - 1


def truncation_index(word: int, n_qubits: int) -> int:
    """Decay index ``I'`` of a drift word ``{0, j_1, ..., j_m}``.

    Odd-body words (``m`` even) use ``sum (j_l - 1)``.  Even-body words inherit
    the index of their odd-body partner with qubit ``n-1`` appended, which
    shares the same coefficient magnitude; for words already ending on
    ``n-1`` the partner is taken in an ``n+1`` register and the index shifted
    down by one.  Both cases reduce to ``sum (j_l - 1) + n - 2``.
    """
    qubits = word_qubits(word)
    if not qubits or qubits[0] != 0:
        raise ValueError(f"word {word:#b} does not contain qubit 0")
    if qubits[-1] >= n_qubits:
        raise ValueError(f"word {word:#b} exceeds a {n_qubits}-qubit register")
    rest = qubits[1:]
    base = sum(j - 1 for j in rest)
    if len(rest) % 2 == 0:
        return base
    return base + n_qubits - 2


def index_degeneracy(n_qubits: int) -> np.ndarray:
    """``g[I']``: how many drift words share each index (both body parities)."""
    g = np.zeros(max_index(n_qubits) + 1, dtype=int)
    for word in range(1, 1 << n_qubits, 2):
        g[truncation_index(word, n_qubits)] += 1
    return g


def _partition_prefactor(n_qubits: int) -> float:
    return 2.0 / (n_qubits**2 - 3 * n_qubits + 4) + math.pi / (2.0 * math.sqrt(3.0))


def degeneracy_bound(i_prime: int, n_qubits: int) -> float:
    """Upper bound on ``g_{I'}`` from distinct-part partition counting.

    ``2 * (2/(n^2-3n+4) + pi/(2 sqrt 3)) * exp(pi sqrt(I'/3))``, with ``I'``
    capped at the middle of the index range where the degeneracy peaks
    (it is symmetric about the middle).  The leading 2 covers even-body words.
    """
    if i_prime < 1:
        raise ValueError("bound is stated for I' >= 1")
    if i_prime > max_index(n_qubits):
        raise ValueError(f"I'={i_prime} exceeds the index range 0..{max_index(n_qubits)}")
    mid = n_qubits * (n_qubits - 1) / 4.0
    eff = min(float(i_prime), mid)
    return 2.0 * _partition_prefactor(n_qubits) * math.exp(math.pi / math.sqrt(3.0) * math.sqrt(eff))


def prefactor_c(grid: GridSpec, contract: ContractParams) -> float:
    """``C = |scale| * cot(pi/2^n)``: the magnitude of the single-body drift term."""
    return abs(hermitian_scale(grid, contract)) / math.tan(math.pi / grid.n_points)


def prefactor_c_prime(grid: GridSpec, contract: ContractParams) -> float:
    n = grid.n_qubits
    g_max = 2.0 * _partition_prefactor(n) * math.exp(math.pi / math.sqrt(3.0) * math.sqrt(n * (n - 1) / 4.0))
    return g_max * prefactor_c(grid, contract)


def min_valid_index(grid: GridSpec, contract: ContractParams) -> int:
    """Smallest ``M`` with ``C' 2^-M <= pi/4``."""
    cp = prefactor_c_prime(grid, contract)
    if cp == 0.0:
        return 0
    return max(0, math.ceil(math.log2(cp / (math.pi / 4.0)) - 1e-12))


def truncation_error_bound(m: int, maturity: float, grid: GridSpec, contract: ContractParams) -> float:
    """Operator-norm bound for discarding every drift word with ``I' >= m``."""
    cp = prefactor_c_prime(grid, contract)
    if cp * 2.0**-m > math.pi / 4.0 * (1 + 1e-12):
        raise ValueError(
            f"bound needs C' 2^-M <= pi/4; M={m} is too small, use M >= {min_valid_index(grid, contract)}"
        )
    angle = 2.0 * maturity * cp * 2.0**-m
    # sqrt(2 (1 - cos a)) without the cancellation at small a
    return 2.0 * abs(math.sin(angle / 2.0))


def min_terms_for_epsilon(epsilon: float, maturity: float, grid: GridSpec, contract: ContractParams) -> int:
    """Smallest index threshold whose bound meets ``epsilon``.

    ``M >= log2(2 T C') - log2(arccos(1 - eps^2/2))``, clamped to the range
    where the bound itself is valid.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    floor_m = min_valid_index(grid, contract)
    scale = 2.0 * maturity * prefactor_c_prime(grid, contract)
    if scale == 0.0:
        return floor_m
    need = math.log2(scale) - math.log2(math.acos(1.0 - epsilon**2 / 2.0))
    m = max(floor_m, math.ceil(need - 1e-12))
    while truncation_error_bound(m, maturity, grid, contract) > epsilon:
        m += 1
    return m


@dataclass(frozen=True)
class Term:
    word: int
    coefficient: float
    kind: Kind
    index: int | None = None  # I' for drift words; embedded words have none


@dataclass(frozen=True)
class TruncationPlan:
    """Retained Cartan terms, each kind sorted by descending magnitude.

    ``error_bound`` is ``T * sum|dropped drift| + sum|dropped embedded|``, a
    rigorous bound on the operator-norm deviation of the truncated propagator
    (``|e^{ia} - e^{ib}| <= |a - b|`` for commuting generators).
    ``index_threshold`` is the smallest ``I'`` among dropped drift words and
    ``index_bound`` the index-based bound at that threshold, when it is valid.
    """

    n_qubits: int
    maturity: float
    terms: tuple[Term, ...]
    m_herm: int
    m_emb: int
    error_bound: float
    index_threshold: int | None = None
    index_bound: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def of_kind(self, kind: Kind) -> list[Term]:
        return [t for t in self.terms if t.kind == kind]

    def dense_coefficients(self, kind: Kind) -> np.ndarray:
        out = np.zeros(1 << self.n_qubits)
        for t in self.of_kind(kind):
            out[t.word] = t.coefficient
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_qubits": self.n_qubits,
                "maturity": repr(self.maturity),
                "m_herm": self.m_herm,
                "m_emb": self.m_emb,
                "error_bound": repr(self.error_bound),
                "index_threshold": self.index_threshold,
                "index_bound": None if self.index_bound is None else repr(self.index_bound),
                "terms": [
                    {"word": t.word, "coefficient": repr(t.coefficient), "kind": t.kind, "index": t.index}
                    for t in self.terms
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "TruncationPlan":
        d = json.loads(text)
        return cls(
            n_qubits=d["n_qubits"],
            maturity=float(d["maturity"]),
            terms=tuple(
                Term(t["word"], float(t["coefficient"]), t["kind"], t["index"]) for t in d["terms"]
            ),
            m_herm=d["m_herm"],
            m_emb=d["m_emb"],
            error_bound=float(d["error_bound"]),
            index_threshold=d["index_threshold"],
            index_bound=None if d["index_bound"] is None else float(d["index_bound"]),
        )


def ranked_words(coeffs: np.ndarray) -> list[int]:
    """Words by descending ``|coefficient|``, ties broken by ascending bitmask."""
    return sorted(range(len(coeffs)), key=lambda w: (-abs(coeffs[w]), w))


def build_truncation_plan(
    grid: GridSpec, contract: ContractParams, m_herm: int, m_emb: int
) -> TruncationPlan:
    n = grid.n_points
    if not 0 <= m_herm <= n or not 0 <= m_emb <= n:
        raise ValueError(f"retained counts must lie in [0, {n}]")
    herm = walsh_coefficients(hermitian_eigenvalues(grid, contract)).coeffs
    emb = walsh_coefficients(embedded_eigenvalues(grid, contract)).coeffs
    n_q = grid.n_qubits

    herm_rank = ranked_words(herm)
    emb_rank = ranked_words(emb)
    kept_h, dropped_h = herm_rank[:m_herm], herm_rank[m_herm:]
    kept_e, dropped_e = emb_rank[:m_emb], emb_rank[m_emb:]

    terms = [Term(w, float(herm[w]), "hermitian", truncation_index(w, n_q) if w & 1 else None) for w in kept_h]
    terms += [Term(w, float(emb[w]), "embedded") for w in kept_e]

    bound = contract.maturity * float(np.abs(herm[dropped_h]).sum()) + float(np.abs(emb[dropped_e]).sum())

    dropped_idx = [truncation_index(w, n_q) for w in dropped_h if w & 1]
    threshold = min(dropped_idx) if dropped_idx else max_index(n_q) + 1
    try:
        idx_bound = truncation_error_bound(threshold, contract.maturity, grid, contract)
    except ValueError:
        idx_bound = None

    return TruncationPlan(
        n_qubits=n_q,
        maturity=contract.maturity,
        terms=tuple(terms),
        m_herm=m_herm,
        m_emb=m_emb,
        error_bound=bound,
        index_threshold=threshold,
        index_bound=idx_bound,
    )


def lossless_plan(grid: GridSpec, contract: ContractParams) -> TruncationPlan:
    """Every drift word containing qubit 0 and every embedded word."""
    return build_truncation_plan(grid, contract, grid.n_points // 2, grid.n_points)

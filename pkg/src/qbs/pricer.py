"""End-to-end pricing: evolve, post-select on the embedding qubit, read prices.

The post-selected branch holds ``O exp(-i T H) |phi_0>``; the joint probability
of reading ``(x_i, 0_E)`` times ``Lambda`` is the squared price at ``S_i``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from qbs.circuit.compiler import compile_plan
from qbs.circuit.propagator import momentum_diagonals
from qbs.circuit.simulator import simulate
from qbs.grid import GridSpec, build_grid, to_momentum, to_position
from qbs.hamiltonian import (
    decay_exponent,
    embedded_eigenvalues,
    hermitian_eigenvalues,
    inverse_walsh,
    walsh_coefficients,
)
from qbs.payoff import ContractParams, PreparedState, physical_log_prices, prepare_initial_state
from qbs.truncation import TruncationPlan, ranked_words

ABS_FLOOR = 1e-10


# -- closed-form oracle ------------------------------------------------------


def _d1_d2(s: np.ndarray, c: ContractParams) -> tuple[np.ndarray, np.ndarray]:
    vol = c.sigma * math.sqrt(c.maturity)
    with np.errstate(divide="ignore"):
        d1 = (np.log(s / c.strike) + (c.rate + c.sigma**2 / 2.0) * c.maturity) / vol
    return d1, d1 - vol


def analytic_put(s, contract: ContractParams):
    """``K e^{-rT} N(-d2) - S N(-d1)``; the payoff at ``T = 0``."""
    s_arr = np.asarray(s, dtype=float)
    if contract.maturity == 0.0:
        out = np.maximum(contract.strike - s_arr, 0.0)
    else:
        d1, d2 = _d1_d2(s_arr, contract)
        disc = contract.strike * math.exp(-contract.rate * contract.maturity)
        out = disc * ndtr(-d2) - s_arr * ndtr(-d1)
    return out if out.ndim else float(out)


def analytic_call(s, contract: ContractParams):
    """``S N(d1) - K e^{-rT} N(d2)``; the payoff at ``T = 0``."""
    s_arr = np.asarray(s, dtype=float)
    if contract.maturity == 0.0:
        out = np.maximum(s_arr - contract.strike, 0.0)
    else:
        d1, d2 = _d1_d2(s_arr, contract)
        disc = contract.strike * math.exp(-contract.rate * contract.maturity)
        out = s_arr * ndtr(d1) - disc * ndtr(d2)
    return out if out.ndim else float(out)


def analytic_price(s, contract: ContractParams):
    return analytic_put(s, contract) if contract.side == "put" else analytic_call(s, contract)


# -- results -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PriceCurve:
    stock_prices: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)

    def analytic(self) -> np.ndarray:
        return np.asarray(analytic_price(self.stock_prices, self.metadata["contract"]))

    def rows(self) -> list[tuple[float, float, float, float]]:
        ref = self.analytic()
        return [
            (float(s), float(v), float(a), abs(float(v) - float(a)))
            for s, v, a in zip(self.stock_prices, self.values, ref)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["S", "C_quantum", "C_analytic", "abs_err"])
        for row in self.rows():
            w.writerow([repr(x) for x in row])
        return buf.getvalue()

    def to_json(self) -> str:
        meta = dict(self.metadata)
        c = meta.pop("contract")
        g = meta.pop("grid", None)
        meta["contract"] = {k: getattr(c, k) for k in ("side", "strike", "rate", "sigma", "maturity")}
        if g is not None:
            meta["grid"] = {"n_qubits": g.n_qubits, "x_max": g.x_max}
        rows = [dict(zip(("S", "C_quantum", "C_analytic", "abs_err"), r)) for r in self.rows()]
        return json.dumps({"metadata": meta, "points": rows}, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True, eq=False)
class PostSelectionResult:
    success_probability: float
    conditional_probabilities: np.ndarray  # p(x | 0_E) over the full register, sums to 1
    shots_used: int | str  # "exact" for amplitude readout
    joint_probabilities: np.ndarray | None = None  # full register, q_E = 0
    gate_leak: float = 0.0  # largest amplitude left on q_G = 1


def _curve(
    grid: GridSpec,
    contract: ContractParams,
    joint_half: np.ndarray,
    lam: float,
    method: str,
    **meta,
) -> PriceCurve:
    s = np.exp(physical_log_prices(grid))
    values = np.sqrt(np.clip(joint_half, 0.0, None) * lam)
    values.setflags(write=False)
    return PriceCurve(s, values, {"contract": contract, "grid": grid, "method": method, **meta})


def _evolve_fast(grid: GridSpec, contract: ContractParams, state: PreparedState, plan=None) -> np.ndarray:
    """Post-selected branch ``O exp(-i T H) phi_0`` via FFTs."""
    h, h_emb = momentum_diagonals(grid, contract, plan)
    if plan is None:
        decay = np.exp(-decay_exponent(grid, contract))
    else:
        decay = np.cos(h_emb)
    diag = decay * np.exp(-1j * contract.maturity * h)
    return to_position(diag * to_momentum(state.amplitudes))


def price_exact(grid: GridSpec, contract: ContractParams) -> PriceCurve:
    """Exact non-unitary propagation, no truncation, no circuit."""
    state = prepare_initial_state(grid, contract)
    branch = _evolve_fast(grid, contract, state)
    joint = np.abs(branch[: grid.n_points // 2]) ** 2
    return _curve(grid, contract, joint, state.lam, "exact")


def price_truncated(grid: GridSpec, contract: ContractParams, plan: TruncationPlan) -> PriceCurve:
    """Same as the exact-mode circuit result, computed from the plan's diagonals."""
    state = prepare_initial_state(grid, contract)
    branch = _evolve_fast(grid, contract, state, plan)
    joint = np.abs(branch[: grid.n_points // 2]) ** 2
    return _curve(grid, contract, joint, state.lam, "truncated", plan=(plan.m_herm, plan.m_emb))


def circuit_input_state(state: PreparedState, n_qubits: int) -> np.ndarray:
    """``|phi_0> (x) |0_E> (x) |0_G>`` in the full-width basis."""
    full = np.zeros(4 << n_qubits, dtype=complex)
    full[::4] = state.amplitudes
    return full


def run_circuit(
    grid: GridSpec, contract: ContractParams, plan: TruncationPlan, optimize: bool = True
) -> tuple[np.ndarray, PreparedState, float]:
    """Simulate the compiled circuit; returns ``(amps[reg, e], state, q_G leak)``."""
    state = prepare_initial_state(grid, contract)
    circ = compile_plan(plan, grid, contract, optimize=optimize)
    out = simulate(circ, circuit_input_state(state, grid.n_qubits)).reshape(grid.n_points, 2, 2)
    leak = float(np.max(np.abs(out[:, :, 1])))
    return out[:, :, 0], state, leak


def price_circuit(
    grid: GridSpec,
    contract: ContractParams,
    plan: TruncationPlan,
    shots: int | None = None,
    seed: int = 0,
    optimize: bool = True,
) -> tuple[PriceCurve, PostSelectionResult]:
    """Gate-level pricing with post-selection on ``q_E = 0``.

    ``shots=None`` (or 0) reads probabilities from amplitudes.  Otherwise the
    register and ``q_E`` are sampled ``shots`` times from a seeded PCG64
    generator; outcomes with ``q_E = 1`` are discarded.
    """
    amps, state, leak = run_circuit(grid, contract, plan, optimize)
    half = grid.n_points // 2
    probs = np.abs(amps) ** 2  # [reg, e]
    if not shots:
        joint = probs[:, 0]
        ps = float(joint.sum())
        cond = joint / ps if ps > 0 else np.zeros_like(joint)
        post = PostSelectionResult(ps, cond, "exact", joint, leak)
        curve = _curve(grid, contract, joint[:half], state.lam, "circuit", plan=(plan.m_herm, plan.m_emb), shots="exact")
        return curve, post
    if shots < 0:
        raise ValueError("shots must be positive (or 0 / None for exact readout)")
    rng = np.random.default_rng(seed)
    flat = probs.reshape(-1)
    counts = rng.multinomial(shots, flat / flat.sum()).reshape(grid.n_points, 2)
    hits = counts[:, 0]
    successes = int(hits.sum())
    if successes == 0:
        raise RuntimeError(f"no q_E = 0 outcomes in {shots} shots; increase the shot count")
    joint = hits / shots
    cond = hits / successes
    post = PostSelectionResult(successes / shots, cond, shots, joint, leak)
    curve = _curve(
        grid, contract, joint[:half], state.lam, "circuit",
        plan=(plan.m_herm, plan.m_emb), shots=shots, seed=seed,
    )
    return curve, post


@dataclass(frozen=True)
class SpotEstimate:
    index: int
    stock_price: float
    probability: float  # estimate of p(x_i, 0_E)
    price: float
    shots: int


def spot_probability(
    grid: GridSpec,
    contract: ContractParams,
    index: int,
    shots: int,
    plan: TruncationPlan | None = None,
    seed: int = 0,
) -> SpotEstimate:
    """Two-outcome readout at one stock price: does the run land on ``(x_i, 0_E)``?

    Only the hit rate is sampled, so the cost does not grow with the grid.
    """
    half = grid.n_points // 2
    if not 0 <= index < half:
        raise ValueError(f"index must lie in the physical half-window [0, {half})")
    if shots <= 0:
        raise ValueError("shots must be positive")
    state = prepare_initial_state(grid, contract)
    branch = _evolve_fast(grid, contract, state, plan)
    p = float(abs(branch[index]) ** 2)
    hits = np.random.default_rng(seed).binomial(shots, min(p, 1.0))
    est = hits / shots
    s = float(np.exp(physical_log_prices(grid)[index]))
    return SpotEstimate(index, s, est, math.sqrt(est * state.lam), shots)


# -- success probability -----------------------------------------------------


def success_probability(grid: GridSpec, contract: ContractParams) -> float:
    """``sum_k |phi_0^(k)|^2 exp(-2 T (sigma^2 p_k^2/2 + r))``."""
    state = prepare_initial_state(grid, contract)
    weights = np.exp(-2.0 * decay_exponent(grid, contract))
    return float(np.sum(np.abs(to_momentum(state.amplitudes)) ** 2 * weights))


def constrained_grid(n_points: int, strike: float) -> GridSpec:
    """Grid with ``exp(x_max/2) = 3K``."""
    n_qubits = int(n_points).bit_length() - 1
    if n_points < 4 or 1 << n_qubits != n_points:
        raise ValueError("n_points must be a power of two >= 4")
    return build_grid(n_qubits, 2.0 * math.log(3.0 * strike))


def gamma_factor(n_points: int, strike: float) -> float:
    """``(sum_j phi_0[j])^2 / N``: weight of the zero-momentum mode under ``e^{x_max/2} = 3K``.

    Zero momentum is the only undamped mode, so ``Ps >= e^{-2rT} * gamma``.
    """
    grid = constrained_grid(n_points, strike)
    amps = prepare_initial_state(grid, ContractParams(strike=strike)).amplitudes.real
    return float(amps.sum() ** 2 / n_points)


def gamma_lower_bound(n_points: int, strike: float, rate: float, maturity: float) -> float:
    return math.exp(-2.0 * maturity * rate) * gamma_factor(n_points, strike)


def gamma_asymptote(strike: float) -> float:
    """Stated closed form for the large-grid limit of ``gamma``."""
    k = strike
    lk = math.log(k)
    num = (-1.0 + k**2 - 6.0 * k**2 * lk) ** 2
    den = (-1.0 + 12.0 * k**2 - 11.0 * k**4 + 36.0 * k**4 * lk) * math.log(3.0 * k)
    return num / den


def gamma_continuum_limit(strike: float) -> float:
    """``(int f)^2 / (L int f^2)`` for the put payoff ``f`` on ``[-ln 3K, ln K]``.

    ``L = 2 ln 3K`` is the physical window length.  Closed form with
    ``A = K ln 3K + K ln K - K + 1/(3K)`` and
    ``B = K^2 (ln 3K + ln K) - 2K(K - 1/(3K)) + (K^2 - 1/(9K^2))/2``.
    """
    k = strike
    a_len = math.log(3.0 * k) + math.log(k)
    area = k * a_len - (k - 1.0 / (3.0 * k))
    sq = k**2 * a_len - 2.0 * k * (k - 1.0 / (3.0 * k)) + 0.5 * (k**2 - 1.0 / (9.0 * k**2))
    return area**2 / (2.0 * math.log(3.0 * k) * sq)


def gamma_continuum_quadrature(strike: float) -> float:
    """Quadrature version of :func:`gamma_continuum_limit`, for cross-checking."""
    lo, hi = -math.log(3.0 * strike), math.log(strike)
    area = integrate.quad(lambda y: strike - math.exp(y), lo, hi, epsabs=0, epsrel=1e-13)[0]
    sq = integrate.quad(lambda y: (strike - math.exp(y)) ** 2, lo, hi, epsabs=0, epsrel=1e-13)[0]
    return area**2 / (2.0 * math.log(3.0 * strike) * sq)


# -- error metrics -----------------------------------------------------------


def l1_relative_error(curve: PriceCurve, contract: ContractParams | None = None) -> float:
    """``sum |C - C_ref| / sum |C_ref|`` over points where ``|C_ref| >= 1e-10``."""
    if len(curve) == 0:
        raise ValueError("empty price curve")
    contract = contract or curve.metadata["contract"]
    ref = np.asarray(analytic_price(curve.stock_prices, contract))
    mask = np.abs(ref) >= ABS_FLOOR
    if not mask.any():
        raise ValueError("analytic reference vanishes on every point")
    return float(np.abs(curve.values[mask] - ref[mask]).sum() / np.abs(ref[mask]).sum())


def l1_distance(a: PriceCurve, b: PriceCurve) -> float:
    """``sum |a - b| / sum |b|`` between two curves on the same grid."""
    if len(a) != len(b):
        raise ValueError("curves live on different grids")
    den = float(np.abs(b.values).sum())
    return float(np.abs(a.values - b.values).sum() / den)


def success_map(
    grid: GridSpec, contract: ContractParams, maturities: Sequence[float], rates: Sequence[float]
) -> np.ndarray:
    """``Ps[i, j]`` at ``(maturities[i], rates[j])``."""
    return np.array(
        [[success_probability(grid, contract.with_(maturity=t, rate=r)) for r in rates] for t in maturities]
    )


def truncation_error_surface(
    grid: GridSpec,
    contract: ContractParams,
    m_herm_values: Sequence[int],
    m_emb_values: Sequence[int],
) -> np.ndarray:
    """L1 error vs the closed form for every ``(m_herm, m_emb)`` pair.

    Keeping the top ``m`` ranked words adds their Walsh rows one at a time, so
    cumulative sums give every truncated diagonal without re-transforming.
    """
    n = grid.n_points
    eye = np.eye(n)

    def cumulative(coeffs: np.ndarray) -> np.ndarray:
        order = ranked_words(coeffs)
        rows = np.stack([coeffs[w] * inverse_walsh(eye[w]) for w in order])
        return np.vstack([np.zeros(n), np.cumsum(rows, axis=0)])

    h_cum = cumulative(walsh_coefficients(hermitian_eigenvalues(grid, contract)).coeffs)
    e_cum = cumulative(walsh_coefficients(embedded_eigenvalues(grid, contract)).coeffs)
    state = prepare_initial_state(grid, contract)
    phi_k = to_momentum(state.amplitudes)
    s = np.exp(physical_log_prices(grid))
    ref = np.asarray(analytic_price(s, contract))
    mask = np.abs(ref) >= ABS_FLOOR
    half = n // 2
    out = np.empty((len(m_herm_values), len(m_emb_values)))
    for i, mh in enumerate(m_herm_values):
        drift = np.exp(-1j * contract.maturity * h_cum[mh]) * phi_k
        for j, me in enumerate(m_emb_values):
            branch = to_position(np.cos(e_cum[me]) * drift)
            vals = np.abs(branch[:half]) * math.sqrt(state.lam)
            out[i, j] = np.abs(vals[mask] - ref[mask]).sum() / np.abs(ref[mask]).sum()
    return out

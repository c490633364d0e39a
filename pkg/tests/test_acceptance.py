"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from conftest import mp_walsh_drift
from qbs.circuit import (
    circuit_unitary,
    compile_plan,
    exact_propagator,
    gate_budget,
    register_embedding_block,
)
from qbs.cn import convergence_sweep, plateau_ratio
from qbs.grid import grid_from_smax
from qbs.hamiltonian import closed_form_hermitian_coefficient, hermitian_eigenvalues, walsh_coefficients
from qbs.payoff import ContractParams
from qbs.pricer import (
    gamma_asymptote,
    gamma_continuum_limit,
    gamma_factor,
    gamma_lower_bound,
    l1_distance,
    l1_relative_error,
    price_circuit,
    price_exact,
    price_truncated,
    run_circuit,
    success_probability,
)
from qbs.truncation import (
    build_truncation_plan,
    lossless_plan,
    max_index,
    min_valid_index,
    truncation_error_bound,
    truncation_index,
)

BASE = ContractParams(side="put", strike=50.0, rate=0.3, sigma=0.2, maturity=1.0)
S_MAX = 135.0
MAP_S_MAX = 150.0
MAP_MATURITIES = np.linspace(0.05, 1.0, 20)
MAP_RATES = np.linspace(0.0, 0.3, 13)


def test_criterion_01_dilation_unitarity(criterion):
    start = time.perf_counter()
    worst = 0.0
    for n in range(2, 9):
        u = exact_propagator(grid_from_smax(n, S_MAX), BASE)
        worst = max(worst, float(np.abs(u.conj().T @ u - np.eye(2 << n)).max()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 10.0
    criterion(1, ok, f"max |U^H U - 1| = {worst:.2e} over n=2..8 (< 1e-10), {elapsed:.2f}s (< 10s)")
    assert ok


def test_criterion_02_circuit_matches_propagator(criterion):
    start = time.perf_counter()
    worst, leak = 0.0, 0.0
    for n in (2, 3, 4):
        g = grid_from_smax(n, S_MAX)
        circ = compile_plan(lossless_plan(g, BASE), g, BASE)
        block, lk = register_embedding_block(circuit_unitary(circ), n)
        worst = max(worst, float(np.abs(block - exact_propagator(g, BASE)).max()))
        leak = max(leak, lk)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and leak < 1e-10 and elapsed < 30.0
    criterion(2, ok, f"max deviation {worst:.2e} (< 1e-8), q_G residual {leak:.1e} (< 1e-10), {elapsed:.2f}s (< 30s)")
    assert ok


def test_criterion_03_closed_form_coefficients(criterion):
    worst = 0.0
    for n in range(3, 9):
        g = grid_from_smax(n, S_MAX)
        ref = mp_walsh_drift(n, S_MAX, BASE)
        fast = walsh_coefficients(hermitian_eigenvalues(g, BASE)).coeffs
        for w in range(1, 2**n, 2):
            got = closed_form_hermitian_coefficient(w, g, BASE)
            exact = float(ref[w])
            worst = max(worst, abs(got - exact) / abs(exact))
            # float64 transform agrees to its own rounding floor
            assert abs(fast[w] - exact) <= 1e-15 * np.abs(fast).max()
    ok = worst < 1e-9
    criterion(3, ok, f"max relative error {worst:.2e} over all qubit-0 words, n=3..8 (< 1e-9)")
    assert ok


def _walsh_signs(n_qubits):
    n = 2**n_qubits
    k = np.arange(n)
    out = np.ones((n, n))
    for word in range(n):
        for j in range(n_qubits):
            if (word >> j) & 1:
                out[word] *= 1 - 2 * ((k >> (n_qubits - 1 - j)) & 1)
    return out


def test_criterion_04_truncation_bound(criterion):
    g = grid_from_smax(8, S_MAX)
    signs = _walsh_signs(8)
    coeffs = {w: closed_form_hermitian_coefficient(w, g, BASE) for w in range(1, 256, 2)}
    lines = []
    ok = True
    m_lo, m_hi = min_valid_index(g, BASE), max_index(8)
    tightest = math.inf
    for m in range(m_lo, m_hi + 1):
        dropped = np.zeros(256)
        for w, c in coeffs.items():
            if truncation_index(w, 8) >= m:
                dropped[w] = c
        deviation = float(np.abs(np.exp(1j * BASE.maturity * (dropped @ signs)) - 1.0).max())
        bound = truncation_error_bound(m, BASE.maturity, g, BASE)
        ok &= deviation <= bound
        tightest = min(tightest, bound / max(deviation, 1e-300))
    plan = build_truncation_plan(g, BASE, 14, 6)
    price_gap = l1_distance(price_truncated(g, BASE, plan), price_exact(g, BASE))
    ok &= price_gap <= plan.error_bound
    lines.append(f"deviation <= bound for M={m_lo}..{m_hi} (min slack x{tightest:.0f})")
    lines.append(f"(14,6) L1 gap vs lossless {price_gap:.3e} <= bound {plan.error_bound:.3e}")
    criterion(4, ok, "; ".join(lines))
    assert ok


def test_criterion_05_success_probability(criterion):
    grid = grid_from_smax(8, MAP_S_MAX)
    gamma = gamma_factor(256, 50.0)
    worst, violations = math.inf, 0
    for t in MAP_MATURITIES:
        for r in MAP_RATES:
            c = BASE.with_(maturity=float(t), rate=float(r))
            ps = success_probability(grid, c)
            worst = min(worst, ps)
            if ps < math.exp(-2 * t * r) * gamma:
                violations += 1
    corner = math.exp(-2 * MAP_RATES.max() * MAP_MATURITIES.max())
    ok = worst > 0.6 and violations == 0
    criterion(
        5,
        ok,
        f"min Ps {worst:.4f} (> 0.6) on T in [0.05,1] x r in [0,0.3]; lower-bound violations {violations}; "
        f"Ps <= exp(-2rT) = {corner:.4f} at the T=1, r=0.3 corner",
    )
    assert ok


def test_criterion_06_gamma_asymptote(criterion):
    gaps = {k: abs(gamma_factor(2**14, k) - gamma_asymptote(k)) for k in (10.0, 50.0, 100.0)}
    continuum = {k: abs(gamma_factor(2**14, k) - gamma_continuum_limit(k)) for k in (10.0, 50.0, 100.0)}
    ok = all(v < 1e-3 for v in gaps.values())
    detail = ", ".join(f"K={k:g}: {v:.3e}" for k, v in gaps.items())
    cont = ", ".join(f"{v:.1e}" for v in continuum.values())
    criterion(6, ok, f"|gamma(2^14,K) - stated limit| = {detail} (< 1e-3); gap to continuum limit {cont}")
    assert ok


def test_criterion_07_convergence(criterion):
    errs = [l1_relative_error(price_exact(grid_from_smax(n, S_MAX), BASE)) for n in (5, 6, 7, 8)]
    ok = all(b < a for a, b in zip(errs, errs[1:]))
    criterion(7, ok, "L1 errors n=5..8: " + ", ".join(f"{e:.3e}" for e in errs) + " (strictly decreasing)")
    assert ok


def test_criterion_08_gate_budget(criterion):
    g = grid_from_smax(8, S_MAX)
    plan = build_truncation_plan(g, BASE, 14, 6)
    b = gate_budget(compile_plan(plan, g, BASE))
    ok = b["width"] == 10 and (b["exclusive"] <= 94 or b["exclusive"] <= 94 <= b["inclusive"])
    criterion(
        8,
        ok,
        f"width {b['width']}, entangling exclusive {b['exclusive']}, inclusive {b['inclusive']} "
        f"(without swaps {b['inclusive_no_swaps']}), target 94",
    )
    assert ok


def test_criterion_09_cn_plateau(criterion):
    rows = convergence_sweep(BASE, [2**k for k in range(5, 11)], s_max=S_MAX)
    cn_ratio = plateau_ratio(rows)
    q_ratio = plateau_ratio(rows, "quantum_error")
    ok = cn_ratio > 0.8 and q_ratio < 0.8
    criterion(9, ok, f"CN error ratio 2^10/2^9 = {cn_ratio:.3f} (> 0.8), propagation ratio {q_ratio:.3f} (< 0.8)")
    assert ok


def test_criterion_10_shot_statistics(criterion):
    g = grid_from_smax(8, S_MAX)
    plan = build_truncation_plan(g, BASE, 14, 6)
    amps, _, _ = run_circuit(g, BASE, plan)
    joint = np.abs(amps[:, 0]) ** 2
    exact = joint / joint.sum()
    inside = total = 0
    for seed in range(20):
        _, post = price_circuit(g, BASE, plan, shots=10**6, seed=seed)
        n = round(post.success_probability * 10**6)
        sigma = np.sqrt(exact * (1 - exact) / n)
        dev = np.abs(post.conditional_probabilities - exact)
        inside += int(np.sum(dev <= 4 * sigma + 1e-15))
        total += exact.size
    frac = inside / total
    ok = frac >= 0.99
    criterion(10, ok, f"{frac:.2%} of {total} point-runs within 4 sigma (>= 99%), 20 seeds x 1e6 shots")
    assert ok


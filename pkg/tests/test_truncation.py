import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qbs.grid import grid_from_smax
from qbs.hamiltonian import closed_form_hermitian_coefficient
from qbs.truncation import (
    TruncationPlan,
    build_truncation_plan,
    degeneracy_bound,
    index_degeneracy,
    lossless_plan,
    max_index,
    min_terms_for_epsilon,
    min_valid_index,
    prefactor_c,
    truncation_error_bound,
    truncation_index,
)


def walsh_sign_matrix(n_qubits):
    """``W[word, k]`` from bit arithmetic, qubit j reading bit ``n-1-j`` of k."""
    n = 2**n_qubits
    k = np.arange(n)
    out = np.ones((n, n))
    for word in range(n):
        for j in range(n_qubits):
            if (word >> j) & 1:
                out[word] *= 1 - 2 * ((k >> (n_qubits - 1 - j)) & 1)
    return out


def distinct_part_degeneracy(n_qubits):
    """Index counts from subsets of {0..n-2}: even-size subsets as-is, odd-size shifted by n-2."""
    g = np.zeros(max_index(n_qubits) + 1, dtype=int)
    parts = range(n_qubits - 1)
    for size in range(n_qubits):
        for subset in itertools.combinations(parts, size):
            g[sum(subset) + (n_qubits - 2 if size % 2 else 0)] += 1
    return g


class TestIndex:
    def test_single_body(self):
        assert truncation_index(0b1, 8) == 0

    def test_three_body(self):
        assert truncation_index(0b111, 8) == 1

    def test_two_body_is_shifted(self):
        assert truncation_index(0b11, 8) == 6

    def test_requires_qubit_zero(self):
        with pytest.raises(ValueError):
            truncation_index(0b110, 8)

    @pytest.mark.parametrize("n", [3, 4, 6, 8])
    def test_range(self, n):
        idx = [truncation_index(w, n) for w in range(1, 2**n, 2)]
        assert min(idx) == 0 and max(idx) == max_index(n) == n * (n - 1) // 2 - 1

    def test_ranking_agrees_with_magnitudes(self, base_grid, base_contract):
        words = range(1, 256, 2)
        mag = {w: abs(closed_form_hermitian_coefficient(w, base_grid, base_contract)) for w in words}
        idx = {w: truncation_index(w, 8) for w in words}
        for a in words:
            for b in words:
                if idx[a] < idx[b]:
                    assert mag[a] >= mag[b] * (1 - 1e-12)

    def test_geometric_envelope(self, base_grid, base_contract):
        c = prefactor_c(base_grid, base_contract)
        for w in range(1, 256, 2):
            mag = abs(closed_form_hermitian_coefficient(w, base_grid, base_contract))
            assert mag <= c * 2.0 ** -truncation_index(w, 8) * (1 + 1e-12)


class TestDegeneracy:
    @pytest.mark.parametrize("n", range(3, 11))
    def test_matches_enumeration(self, n):
        np.testing.assert_array_equal(index_degeneracy(n), distinct_part_degeneracy(n))

    @pytest.mark.parametrize("n", range(3, 11))
    def test_bound_dominates(self, n):
        g = distinct_part_degeneracy(n)
        for i in range(1, len(g)):
            assert g[i] <= degeneracy_bound(i, n)

    def test_first_index_at_eight(self):
        g = distinct_part_degeneracy(8)
        assert g[1] == 1
        assert degeneracy_bound(1, 8) > g[1]

    @pytest.mark.parametrize("n", range(3, 11))
    def test_symmetric(self, n):
        g = distinct_part_degeneracy(n)
        np.testing.assert_array_equal(g, g[::-1])
        assert g.sum() == 2 ** (n - 1)

    @pytest.mark.parametrize("i", [0, 28])
    def test_out_of_range(self, i):
        with pytest.raises(ValueError):
            degeneracy_bound(i, 8)


class TestErrorBound:
    def test_validity_floor(self, base_grid, base_contract):
        m0 = min_valid_index(base_grid, base_contract)
        assert m0 == 13
        truncation_error_bound(m0, 1.0, base_grid, base_contract)
        with pytest.raises(ValueError, match="M >= 13"):
            truncation_error_bound(m0 - 1, 1.0, base_grid, base_contract)

    def test_monotone_and_vanishing(self, base_grid, base_contract):
        vals = [truncation_error_bound(m, 1.0, base_grid, base_contract) for m in range(13, 80)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-15

    def test_zero_maturity(self, base_grid, base_contract):
        assert truncation_error_bound(20, 0.0, base_grid, base_contract) == 0.0

    @pytest.mark.parametrize("m", [13, 14, 18, 22, 27])
    def test_dominates_dense_deviation(self, m, base_grid, base_contract):
        w = walsh_sign_matrix(8)
        dropped = np.zeros(256)
        for word in range(1, 256, 2):
            if truncation_index(word, 8) >= m:
                dropped[word] = closed_form_hermitian_coefficient(word, base_grid, base_contract)
        delta = dropped @ w
        u_full = np.diag(np.exp(1j * delta))
        deviation = np.abs(u_full - np.eye(256)).max()
        assert deviation <= truncation_error_bound(m, 1.0, base_grid, base_contract)


class TestMinTerms:
    def test_loosest_tolerance(self, base_grid, base_contract):
        assert min_terms_for_epsilon(1.0, 1.0, base_grid, base_contract) == min_valid_index(base_grid, base_contract)

    @pytest.mark.parametrize("eps", [1e-1, 1e-2, 5e-3, 1e-6])
    def test_meets_tolerance_minimally(self, eps, base_grid, base_contract):
        m = min_terms_for_epsilon(eps, 1.0, base_grid, base_contract)
        assert truncation_error_bound(m, 1.0, base_grid, base_contract) <= eps
        if m > min_valid_index(base_grid, base_contract):
            assert truncation_error_bound(m - 1, 1.0, base_grid, base_contract) > eps

    def test_halving_adds_one(self, base_grid, base_contract):
        a = min_terms_for_epsilon(1e-2, 1.0, base_grid, base_contract)
        b = min_terms_for_epsilon(5e-3, 1.0, base_grid, base_contract)
        assert b - a in (0, 1, 2)

    @pytest.mark.parametrize("eps", [0.0, -1.0, 1.5])
    def test_rejects(self, eps, base_grid, base_contract):
        with pytest.raises(ValueError):
            min_terms_for_epsilon(eps, 1.0, base_grid, base_contract)


class TestPlan:
    def test_reference_plan_size(self, base_grid, base_contract):
        plan = build_truncation_plan(base_grid, base_contract, 14, 6)
        assert len(plan.terms) == 20
        assert len(plan.of_kind("hermitian")) == 14 and len(plan.of_kind("embedded")) == 6

    def test_sorted_descending(self, base_grid, base_contract):
        plan = build_truncation_plan(base_grid, base_contract, 40, 40)
        for kind in ("hermitian", "embedded"):
            mags = [abs(t.coefficient) for t in plan.of_kind(kind)]
            assert mags == sorted(mags, reverse=True)

    def test_drift_terms_dominate_embedded(self, base_grid, base_contract):
        plan = lossless_plan(base_grid, base_contract)
        top_h = abs(plan.of_kind("hermitian")[0].coefficient) * base_contract.maturity
        second_e = abs(plan.of_kind("embedded")[1].coefficient)
        assert top_h > second_e

    def test_lossless_plan(self, base_grid, base_contract):
        plan = lossless_plan(base_grid, base_contract)
        assert plan.error_bound < 1e-12
        assert all(t.word & 1 for t in plan.of_kind("hermitian"))
        assert len(plan.of_kind("hermitian")) == 128

    def test_empty_plan_bound_is_full_norm_sum(self, base_grid, base_contract):
        plan = build_truncation_plan(base_grid, base_contract, 0, 0)
        full = lossless_plan(base_grid, base_contract)
        expected = sum(abs(t.coefficient) for t in full.of_kind("hermitian")) + sum(
            abs(t.coefficient) for t in full.of_kind("embedded")
        )
        assert plan.terms == ()
        assert plan.error_bound == pytest.approx(expected, rel=1e-12)

    def test_index_bound_attached_only_when_valid(self, base_grid, base_contract):
        small = build_truncation_plan(base_grid, base_contract, 14, 6)
        assert small.index_threshold < 13 and small.index_bound is None
        big = build_truncation_plan(base_grid, base_contract, 120, 6)
        assert big.index_threshold >= 13 and big.index_bound is not None

    @pytest.mark.parametrize("mh, me", [(-1, 0), (0, 257), (300, 0)])
    def test_rejects_counts(self, mh, me, base_grid, base_contract):
        with pytest.raises(ValueError):
            build_truncation_plan(base_grid, base_contract, mh, me)

    @given(st.integers(0, 32), st.integers(0, 32))
    def test_json_round_trip(self, mh, me):
        from qbs.payoff import ContractParams

        g = grid_from_smax(5, 135.0)
        plan = build_truncation_plan(g, ContractParams(), mh, me)
        back = TruncationPlan.from_json(plan.to_json())
        assert back == plan

    @given(st.integers(0, 16), st.integers(0, 16))
    def test_bound_non_increasing_in_counts(self, mh, me):
        from qbs.payoff import ContractParams

        g = grid_from_smax(5, 135.0)
        c = ContractParams()
        a = build_truncation_plan(g, c, mh, me).error_bound
        b = build_truncation_plan(g, c, mh + 1, me + 1).error_bound
        assert b <= a + 1e-15 and math.isfinite(a)

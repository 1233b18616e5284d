import math
from fractions import Fraction

import pytest

from tet4d.complexity import (
    DEFAULT_MODEL,
    CostModel,
    batched_cost_exponents,
    leaf_size,
    premature_query_exponent,
    q_tradeoff_exponent,
    stop_r_omega,
    tradeoff_samples,
    unfold_main,
    unfold_premature,
    unfold_wide,
)

F = Fraction


class TestTradeoffExponent:
    def test_breakpoint_value(self):
        assert q_tradeoff_exponent(2) == F(1, 2)

    def test_extremes(self):
        assert q_tradeoff_exponent(1) == F(5, 6)
        assert q_tradeoff_exponent(6) == 0

    def test_continuity_at_breakpoint(self):
        eps = F(1, 10 ** 9)
        left = q_tradeoff_exponent(2 - eps)
        right = q_tradeoff_exponent(2 + eps)
        assert abs(left - right) < F(1, 10 ** 8)
        assert F(7, 6) - F(2) / 3 == F(3, 4) - F(2) / 8 == F(1, 2)

    def test_piecewise_linear_non_increasing(self):
        vals = [q_tradeoff_exponent(F(k, 10)) for k in range(10, 61)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            q_tradeoff_exponent(F(1, 2))


class TestBatchedExponents:
    def test_known_values(self):
        assert batched_cost_exponents(1) == F(13, 8)
        assert batched_cost_exponents(0) == 1

    def test_crossover(self):
        mu = F(3, 2)
        assert F(3) * mu / 4 + F(7, 8) == F(8) * mu / 9 + F(2, 3) == 2
        assert batched_cost_exponents(mu) == 2

    def test_linear_floor_above_n6(self):
        assert batched_cost_exponents(7) == 7


class TestLeafFormulas:
    def test_s_equals_n(self):
        assert math.isclose(leaf_size(4096, 4096), 4096)

    def test_s_equals_n6(self):
        assert math.isclose(leaf_size(4096, 4096 ** 6), 1)

    def test_stop_r_omega_limit(self):
        n, s = 100, 100 ** 3
        assert math.isclose(stop_r_omega(n, s, 1e-12), (s / n) ** 1.2, rel_tol=1e-6)
        # delta shrinks the exponent
        assert stop_r_omega(n, s, 0.1) < stop_r_omega(n, s, 0.01)


class TestUnfoldWide:
    def test_exponents_at_quadratic_storage(self):
        sfit, qfit = unfold_wide()
        assert abs(sfit.exponent - 2.0) <= 0.05
        assert abs(qfit.exponent - 0.5) <= 0.05

    def test_base_clause(self):
        from tet4d.complexity import _wide_costs

        # s = n makes the stopping size equal n, so the cost is exactly N
        S, Q = _wide_costs(10.0, 10.0, DEFAULT_MODEL)
        assert S == 10.0 and Q == 10.0

    def test_monotone_in_n(self):
        from tet4d.complexity import _wide_costs

        vals = [_wide_costs(float(2 ** k), float(2 ** k) ** 2, DEFAULT_MODEL)
                for k in range(10, 25)]
        assert all(a[0] <= b[0] and a[1] <= b[1] for a, b in zip(vals, vals[1:]))


class TestUnfoldMain:
    def test_exponents(self):
        sfit, qfit = unfold_main()
        assert abs(sfit.exponent - 2.0) <= 0.05
        assert abs(qfit.exponent - 0.5) <= 0.05

    def test_s1_zero_still_at_most_quadratic(self):
        sfit, _ = unfold_main(s1_zero=True)
        assert sfit.exponent <= 2.05

    def test_doubling_D_insensitive(self):
        base_s, base_q = unfold_main()
        alt_s, alt_q = unfold_main(model=CostModel(D=16.0, r0=64.0, c0=4.0, delta=0.01))
        assert abs(alt_s.exponent - base_s.exponent) < 0.02
        assert abs(alt_q.exponent - base_q.exponent) < 0.02

    def test_residual_reported(self):
        sfit, qfit = unfold_main()
        assert sfit.residual >= 0 and qfit.residual >= 0


class TestPremature:
    def test_balancing_at_sigma_two(self):
        # D^k = sqrt(s/n) = n^{1/2} balances to exponent 1/2
        assert premature_query_exponent(2) == F(1, 2)

    def test_sigma_six_zero(self):
        assert premature_query_exponent(6) == 0

    def test_grid_agreement(self):
        for k in range(0, 51):
            sig = 1 + F(k, 10)
            assert abs(premature_query_exponent(sig) - q_tradeoff_exponent(sig)) <= F(1, 50)

    def test_breakpoint_location(self):
        # the piecewise-linear kink sits at sigma = 2
        d1 = premature_query_exponent(F(19, 10)) - premature_query_exponent(2)
        d2 = premature_query_exponent(2) - premature_query_exponent(F(21, 10))
        assert d1 == F(1, 30)  # slope 1/3 over 0.1
        assert d2 == F(1, 80)  # slope 1/8 over 0.1

    def test_unfold_premature_signature(self):
        assert unfold_premature(1024, 2) == F(1, 2)


class TestModelValidation:
    def test_r0_must_dominate_D(self):
        with pytest.raises(ValueError):
            CostModel(D=8.0, r0=8.0)

    def test_delta_range(self):
        with pytest.raises(ValueError):
            CostModel(delta=0.5)

    def test_samples_helper(self):
        rows = tradeoff_samples(["1", "2", "6"])
        assert rows[1][1] == F(1, 2) and rows[2][1] == 0

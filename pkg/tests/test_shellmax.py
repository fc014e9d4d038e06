import math

import numpy as np
import pytest

from helpers import dense_grid_max, random_box, random_total_expr
from sepenv.errors import DomainAmbiguityError
from sepenv.expr import eval_point, parse
from sepenv.geometry import unit_product_exhaustion
from sepenv.intervals import from_bounds
from sepenv.shellmax import (
    IntervalBB,
    SampledLipschitz,
    ShellMaxima,
    backend_from_config,
    certified_max,
    clamp_nonnegative,
    estimate_lipschitz,
)


class TestClamp:
    def test_constant_negative(self):
        e = clamp_nonnegative(parse("-1", 1, 1))
        assert eval_point(e, (0.5,), (0.5,)) == 0.0

    def test_positive_unchanged(self):
        e = clamp_nonnegative(parse("t1*x1", 1, 1))
        assert eval_point(e, (2.0,), (3.0,)) == 6.0

    def test_clamps_sine(self):
        e = clamp_nonnegative(parse("sin(t1)", 1, 0))
        assert eval_point(e, (-math.pi / 2,)) == 0.0


class TestCertifiedMax:
    def test_corner_maximum(self):
        e = parse("t1*t1 + x1*x1", 1, 1)
        res = certified_max(e, from_bounds([(-2, 2)], [(-2, 2)]), IntervalBB(tol=1e-6))
        assert res.certified
        assert 8.0 <= res.upper <= 8.0 + 1e-6 + 1e-9
        assert res.lower <= 8.0

    def test_monotone_exponential(self):
        e = parse("exp(t1*x1)", 1, 1)
        res = certified_max(e, from_bounds([(-1, 1)], [(-1, 1)]), IntervalBB(tol=1e-6))
        assert math.e <= res.upper <= math.e + 1e-5
        assert res.upper - res.lower <= 1e-6 or not res.budget_exhausted

    def test_trig_sum(self):
        e = parse("sin(t1)+cos(x1)", 1, 1)
        res = certified_max(e, from_bounds([(0, 4)], [(-4, 4)]), IntervalBB(tol=1e-6))
        assert 2.0 <= res.upper <= 2.0 + 1e-5

    def test_budget_exhaustion_is_reported_not_raised(self):
        e = parse("sin(t1*7)+cos(x1*13)", 1, 1)
        res = certified_max(e, from_bounds([(-4, 4)], [(-4, 4)]), IntervalBB(tol=1e-12, max_subdiv=10))
        assert res.budget_exhausted
        assert res.certified
        assert res.upper >= res.lower

    def test_domain_ambiguity_bubbles_up(self):
        e = parse("1/t1", 1, 1)
        with pytest.raises(DomainAmbiguityError):
            certified_max(e, from_bounds([(-1, 1)], [(-1, 1)]), IntervalBB())

    def test_soundness_and_tightness_against_grid(self):
        rng = np.random.default_rng(20240815)
        backend = IntervalBB(tol=1e-6, max_subdiv=4000)
        for _ in range(50):
            m = int(rng.integers(1, 3))
            n = 2 - m
            e = random_total_expr(rng, m, n, depth=2)
            box = random_box(rng, m, n, radius=0.25)
            res = certified_max(e, box, backend)
            brute = dense_grid_max(e, box, per_axis=200)
            assert res.upper >= brute
            if not res.budget_exhausted:
                assert res.upper - brute <= 1e-3


class TestLipschitzBackend:
    def test_certified_only_with_user_constant(self):
        e = parse("t1 + x1", 1, 1)
        box = from_bounds([(0, 1)], [(0, 1)])
        given = certified_max(e, box, SampledLipschitz(grid=16, lipschitz=2.0))
        assert given.certified
        assert given.upper >= 2.0
        estimated = certified_max(e, box, SampledLipschitz(grid=16))
        assert not estimated.certified

    def test_grid_maximum_plus_slack(self):
        e = parse("t1", 1, 0)
        box = from_bounds([(0.0, 1.0)])
        res = certified_max(e, box, SampledLipschitz(grid=11, lipschitz=1.0))
        assert res.lower == 1.0
        assert res.upper == 1.0 + 0.05


class TestEstimateLipschitz:
    def test_linear_slope(self):
        e = parse("t1", 1, 0)
        est = estimate_lipschitz(e, from_bounds([(0, 1)]), samples=64)
        assert est >= 1.0

    def test_zero_function(self):
        e = parse("0", 1, 0)
        assert estimate_lipschitz(e, from_bounds([(0, 1)])) == 0.0

    def test_degenerate_box(self):
        e = parse("t1", 1, 0)
        assert estimate_lipschitz(e, from_bounds([(0.5, 0.5)])) == 0.0

    def test_weighted_sum_slope(self):
        e = parse("3*t1 + x1", 1, 1)
        est = estimate_lipschitz(e, from_bounds([(0, 1)], [(0, 1)]), samples=256)
        assert est >= 3.0


class TestShellMaxima:
    def test_zero_function(self):
        sm = ShellMaxima(parse("0", 1, 1), unit_product_exhaustion(1, 1), IntervalBB())
        assert [sm.shell_max(i) for i in range(1, 5)] == [0.0, 0.0, 0.0, 0.0]

    def test_clamp_dominates_negative_constant(self):
        sm = ShellMaxima(parse("-5", 1, 1), unit_product_exhaustion(1, 1), IntervalBB())
        assert sm.shell_max(3) == 0.0

    def test_squares_of_index_with_grid_cross_check(self):
        f = parse("abs(t1)*abs(x1)", 1, 1)
        pex = unit_product_exhaustion(1, 1)
        sm = ShellMaxima(f, pex, IntervalBB(tol=1e-6))
        for i in range(1, 7):
            brute = dense_grid_max(f, pex.product_box(i), per_axis=200)
            assert brute == pytest.approx(i * i, abs=1e-9)
            assert abs(sm.shell_max(i) - i * i) <= 1e-3

    def test_monotone_exactly(self):
        f = parse("exp(-(t1*t1) - x1*x1)", 1, 1)
        sm = ShellMaxima(f, unit_product_exhaustion(1, 1), IntervalBB())
        values = [sm.shell_max(i) for i in range(1, 8)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_deterministic_bitwise(self):
        def run():
            f = parse("sin(t1)*cos(x1) + t1*t1*0.1", 1, 1)
            sm = ShellMaxima(
                f, unit_product_exhaustion(1, 1), IntervalBB(tol=1e-4, max_subdiv=2000)
            )
            return [sm.shell_max(i) for i in range(1, 5)]

        first, second = run(), run()
        assert all(a == b for a, b in zip(first, second))

    def test_memoization_returns_identical_objects(self):
        sm = ShellMaxima(parse("t1*x1", 1, 1), unit_product_exhaustion(1, 1), IntervalBB())
        a = sm.shell_max(3)
        b = sm.shell_max(3)
        assert a == b
        assert sm.computed_through() == 3


def test_backend_config_round_trip():
    bb = IntervalBB(tol=1e-7, max_subdiv=1234)
    assert backend_from_config(bb.to_config()) == bb
    sl = SampledLipschitz(grid=32, lipschitz=4.5)
    restored = backend_from_config(sl.to_config())
    assert restored.grid == 32 and restored.lipschitz == 4.5

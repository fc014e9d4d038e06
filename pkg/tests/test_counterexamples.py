import math

import numpy as np
import pytest

from sepenv.counterexamples import (
    EVAL_MAP_FAMILY,
    EvalMapDemo,
    L1Demo,
    SearchConfig,
    TabulatedFunction,
    eval_map_falsify,
    find_violation,
    gaussian_density,
    l1_integral,
    sup_on_unit_interval,
)
from sepenv.errors import OracleError
from sepenv.expr import eval_point, parse


@pytest.fixture(scope="module")
def gaussian_demo():
    return L1Demo()


class TestKernel:
    def test_diagonal_value_is_rho_at_zero(self, gaussian_demo):
        rho0 = gaussian_demo.rho_at_zero()
        assert rho0 == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-15)
        for xv in (-2.0, 0.0, 1.7):
            assert eval_point(gaussian_demo.f, (xv,), (xv,)) == rho0

    def test_validation(self):
        with pytest.raises(ValueError, match="panels"):
            L1Demo(panels=10)
        with pytest.raises(ValueError, match="one-variable"):
            L1Demo(rho=parse("t1*x1", 1, 1))
        with pytest.raises(ValueError, match="positive"):
            L1Demo(rho=parse("t1", 1, 0))


class TestL1Integral:
    def test_default_config_close_to_one(self, gaussian_demo):
        q = l1_integral(gaussian_demo)
        assert abs(q - 1.0) <= 1e-3

    def test_refinement_strictly_shrinks_error(self, gaussian_demo):
        coarse = abs(l1_integral(L1Demo(radius=4.0, panels=100)) - 1.0)
        fine = abs(l1_integral(gaussian_demo) - 1.0)
        assert fine < coarse

    def test_underflowing_density_panels_skipped(self):
        demo = L1Demo(radius=42.0, panels=100)
        with pytest.warns(RuntimeWarning, match="skipped"):
            q = l1_integral(demo)
        assert abs(q - 1.0) <= 1e-2


class TestFindViolation:
    def test_zero_pair_yields_diagonal_witness(self, gaussian_demo):
        zero = parse("0", 1, 0)
        out = find_violation(gaussian_demo, zero, zero)
        assert out.found
        w = out.witness
        assert w.x == w.y
        assert abs(w.excess - gaussian_demo.rho_at_zero()) <= 1e-12
        assert w.f_value > w.bound

    def test_integrable_pair_beaten(self, gaussian_demo):
        g = parse("exp(-abs(t1))", 1, 0)
        out = find_violation(gaussian_demo, g, g)
        assert out.found
        assert out.witness.excess > 0.1

    def test_big_constant_survives_the_scan(self, gaussian_demo):
        # constants are not integrable, so the claim does not cover them;
        # the finder legitimately reports not-found
        big = parse("10", 1, 0)
        out = find_violation(gaussian_demo, big, big)
        assert not out.found
        assert out.scanned > 0

    def test_nonnegativity_precondition(self, gaussian_demo):
        neg = parse("-1", 1, 0)
        zero = parse("0", 1, 0)
        with pytest.raises(ValueError, match="nonnegative"):
            find_violation(gaussian_demo, neg, zero)

    def test_deterministic_first_witness(self, gaussian_demo):
        zero = parse("0", 1, 0)
        a = find_violation(gaussian_demo, zero, zero)
        b = find_violation(gaussian_demo, zero, zero)
        assert a.witness == b.witness

    def test_scan_respects_config(self, gaussian_demo):
        zero = parse("0", 1, 0)
        cfg = SearchConfig(window=2.0, x_count=11, s_count=5, band=1e-4)
        out = find_violation(gaussian_demo, zero, zero, cfg)
        assert out.scanned == 55


class TestEvalMapFalsify:
    def test_identity_with_zero_oracle(self):
        demo = EvalMapDemo(parse("t1", 1, 0), oracle=lambda tab: 0.0, window=4.0)
        out = eval_map_falsify(demo)
        assert out.found and out.witness.stage == 1
        assert out.witness.lhs > out.witness.rhs

    def test_constant_candidate_with_constant_oracle(self):
        demo = EvalMapDemo(parse("0", 1, 0), oracle=lambda tab: 5.0, window=6.0)
        out = eval_map_falsify(demo)
        assert out.found and out.witness.stage == 2
        assert abs(out.witness.y) > 5.0

    def test_bounded_above_candidate(self):
        demo = EvalMapDemo(parse("-t1^2", 1, 0), oracle=lambda tab: 1.5, window=4.0)
        out = eval_map_falsify(demo)
        assert out.found

    def test_family_all_falsified_within_tagged_windows(self):
        for source, window in EVAL_MAP_FAMILY:
            demo = EvalMapDemo(parse(source, 1, 0), window=window)
            out = eval_map_falsify(demo)
            assert out.found, source

    def test_window_too_small_reports_not_found(self):
        demo = EvalMapDemo(parse("0", 1, 0), oracle=lambda tab: 50.0, window=2.0)
        out = eval_map_falsify(demo)
        assert not out.found
        assert out.scanned == 2 * demo.grid

    def test_oracle_failure_wrapped(self):
        def bad(tab):
            raise RuntimeError("boom")

        demo = EvalMapDemo(parse("0", 1, 0), oracle=bad)
        with pytest.raises(OracleError, match="boom"):
            eval_map_falsify(demo)

    def test_packaged_oracle(self):
        ys = np.linspace(-2, 2, 41)
        tab = TabulatedFunction(ys, ys**2)
        assert sup_on_unit_interval(tab) == 1.0

"""Relaxation recipes, exact maximization, residuals, alpha audit."""

from fractions import Fraction as F

import pytest

from relaxround import (FractionalPoint, PiecewiseCurve, RelaxedObjective,
                        UnsupportedFamilyError, audit_alpha, build_polytope,
                        build_relaxation, contains, enumerate_feasible,
                        indicator, make_gap_toy, make_no_money,
                        make_single_item, make_single_minded_ca, profile_for,
                        residual_objective, solve_relaxation)

ZERO = F(0)
ONE = F(1)


class TestBuildRelaxation:
    def test_single_item_recipe(self):
        inst = make_single_item(2)
        objective, poly = build_relaxation(inst, profile_for(inst, [F(5), F(3)]))
        assert objective.linear_coeffs == (F(5), F(3))
        assert objective.alpha == 1
        assert contains(poly, FractionalPoint((F(1, 2), F(1, 2))))
        assert not contains(poly, FractionalPoint((F(3, 4), F(1, 2))))

    def test_single_minded_constraint_counts(self):
        inst = make_single_minded_ca(2, [{0}, {1}, {0, 1}])
        objective, poly = build_relaxation(inst, profile_for(inst, [F(3), F(3), F(5)]))
        assert poly.num_vars == 3
        assert len(poly.constraints) == 3 + 2  # bidder rows + item rows
        for alloc in enumerate_feasible(inst):
            assert contains(poly, FractionalPoint(indicator(inst, alloc)))

    def test_zero_profile_gives_zero_objective(self):
        inst = make_single_item(3)
        objective, _ = build_relaxation(inst, profile_for(inst, [ZERO] * 3))
        assert objective.linear_coeffs == (ZERO, ZERO, ZERO)

    def test_no_money_families_have_no_recipe(self):
        inst = make_no_money(2, "lottery")
        with pytest.raises(UnsupportedFamilyError):
            build_polytope(inst)

    def test_feasible_indicators_always_contained(self):
        for inst in (make_single_item(3),
                     make_single_minded_ca(3, [{0, 1}, {1, 2}, {0}]),
                     make_gap_toy(3, 2)):
            profile = profile_for(inst, [F(2)] * inst.n)
            _, poly = build_relaxation(inst, profile)
            for alloc in enumerate_feasible(inst):
                assert contains(poly, FractionalPoint(indicator(inst, alloc)))


class TestSolveRelaxation:
    def test_highest_bid_wins(self):
        inst = make_single_item(2)
        objective, poly = build_relaxation(inst, profile_for(inst, [F(5), F(3)]))
        assert solve_relaxation(objective, poly).coords == (ONE, ZERO)

    def test_tie_breaks_to_lowest_index(self):
        inst = make_single_item(2)
        objective, poly = build_relaxation(inst, profile_for(inst, [F(4), F(4)]))
        assert solve_relaxation(objective, poly).coords == (ONE, ZERO)

    def test_zero_bids_stay_at_origin(self):
        inst = make_single_item(2)
        objective, poly = build_relaxation(inst, profile_for(inst, [ZERO, ZERO]))
        assert solve_relaxation(objective, poly).coords == (ZERO, ZERO)

    def test_dominates_every_integral_point(self):
        """First inequality of the ratio proof: L(x*) >= L(chi(s)) for all s."""
        inst = make_single_minded_ca(2, [{0}, {0, 1}])
        profile = profile_for(inst, [F(3), F(4)])
        objective, poly = build_relaxation(inst, profile)
        best = objective.evaluate(solve_relaxation(objective, poly).coords)
        for alloc in enumerate_feasible(inst):
            assert best >= objective.evaluate(indicator(inst, alloc))

    def test_concave_objective_splits_symmetric_mass(self):
        inst = make_gap_toy(2, 1)
        objective, poly = build_relaxation(inst, profile_for(inst, [F(4), F(4)]))
        optimum = solve_relaxation(objective, poly)
        assert optimum.coords == (F(1, 2), F(1, 2))

    def test_concave_value_matches_curve_evaluation(self):
        inst = make_gap_toy(2, 1)
        objective, poly = build_relaxation(inst, profile_for(inst, [F(4), F(1)]))
        optimum = solve_relaxation(objective, poly)
        direct = sum((curve.value_at(x) for curve, x
                      in zip(objective.curves, optimum.coords)), ZERO)
        assert direct == objective.evaluate(optimum.coords)


class TestResidualObjective:
    def test_zeroes_the_named_bidder(self):
        inst = make_single_item(2)
        objective, _ = build_relaxation(inst, profile_for(inst, [F(5), F(3)]))
        assert residual_objective(objective, 0).linear_coeffs == (ZERO, F(3))
        assert residual_objective(objective, 1).linear_coeffs == (F(5), ZERO)

    def test_idempotent_and_commutative(self):
        inst = make_single_item(3)
        objective, _ = build_relaxation(inst, profile_for(inst, [F(5), F(3), F(2)]))
        once = residual_objective(objective, 1)
        assert residual_objective(once, 1) == once
        ab = residual_objective(residual_objective(objective, 0), 2)
        ba = residual_objective(residual_objective(objective, 2), 0)
        assert ab == ba

    def test_zero_objective_unchanged(self):
        inst = make_single_item(2)
        objective, _ = build_relaxation(inst, profile_for(inst, [ZERO, ZERO]))
        assert residual_objective(objective, 0) == objective

    def test_index_out_of_range(self):
        inst = make_single_item(2)
        objective, _ = build_relaxation(inst, profile_for(inst, [F(5), F(3)]))
        with pytest.raises(IndexError):
            residual_objective(objective, 5)


class TestAuditAlpha:
    def test_single_item_passes_with_equality(self):
        inst = make_single_item(2)
        profile = profile_for(inst, [F(5), F(3)])
        objective, _ = build_relaxation(inst, profile)
        audit = audit_alpha(objective, inst, profile)
        assert audit.passed and audit.equality_holds

    def test_single_minded_passes_with_equality(self):
        inst = make_single_minded_ca(2, [{0}, {1}, {0, 1}])
        profile = profile_for(inst, [F(3), F(3), F(5)])
        objective, _ = build_relaxation(inst, profile)
        audit = audit_alpha(objective, inst, profile)
        assert audit.passed and audit.equality_holds

    def test_corrupted_objective_fails_with_counterexample(self):
        inst = make_single_item(2)
        profile = profile_for(inst, [F(5), F(3)])
        objective, _ = build_relaxation(inst, profile)
        halved = RelaxedObjective(alpha=objective.alpha,
                                  owners=objective.owners,
                                  linear_coeffs=(F(5, 2), F(3)))
        audit = audit_alpha(halved, inst, profile)
        assert not audit.passed
        alloc, lval, fval = audit.counterexample
        assert alloc.bundles[0] == frozenset({0})
        assert (lval, fval) == (F(5, 2), F(5))

    def test_gap_toy_passes_at_declared_alpha(self):
        inst = make_gap_toy(2, 1)
        profile = profile_for(inst, [F(4), F(2)])
        objective, _ = build_relaxation(inst, profile)
        audit = audit_alpha(objective, inst, profile)
        assert audit.passed
        assert inst.spec.alpha == F(1, 2)


class TestPiecewiseCurve:
    def test_breakpoints_match_quadratic(self):
        from relaxround import unit_gap_curve
        curve = unit_gap_curve(16)
        for k in range(17):
            t = F(k, 16)
            assert curve.value_at(t) == t * (2 - t) / 2

    def test_secant_lies_below_the_diagonal(self):
        from relaxround import unit_gap_curve
        curve = unit_gap_curve(8)
        for num in range(1, 33):
            t = F(num, 32)
            assert curve.value_at(t) <= t

    def test_inverse_round_trips(self):
        from relaxround import unit_gap_curve
        curve = unit_gap_curve(4)
        for num in range(0, 17):
            t = F(num, 16)
            assert curve.inverse(curve.value_at(t)) == t

    def test_convex_curve_rejected(self):
        with pytest.raises(ValueError):
            PiecewiseCurve(((ZERO, ZERO), (F(1, 2), F(1, 8)), (ONE, ONE)))

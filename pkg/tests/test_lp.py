"""Exact simplex: optima, membership, feasibility, vertex-enumeration oracle."""

import random
from fractions import Fraction as F

import pytest

from relaxround import (FractionalPoint, LPInputError, Polytope,
                        UnboundedError, contains, enumerate_vertices,
                        maximize_linear, solve_feasibility)

ZERO = F(0)
ONE = F(1)


def box(n):
    rows = []
    for i in range(n):
        rows.append((tuple(ONE if j == i else ZERO for j in range(n)), ONE))
    return Polytope(n, tuple(rows))


class TestMaximizeLinear:
    def test_box_maximum(self):
        point, value = maximize_linear([F(1), F(2)], box(2))
        assert point.coords == (F(1), F(1))
        assert value == 3

    def test_single_item_lp_highest_coefficient_wins(self):
        poly = Polytope(2, (((ONE, ONE), ONE),))
        point, value = maximize_linear([F(5), F(3)], poly)
        assert point.coords == (F(1), F(0))
        assert value == 5

    def test_zero_objective_stays_at_origin(self):
        poly = Polytope(2, (((ONE, ONE), ONE),))
        point, value = maximize_linear([ZERO, ZERO], poly)
        assert point.coords == (ZERO, ZERO)
        assert value == 0

    def test_tie_breaks_to_lowest_index(self):
        poly = Polytope(2, (((ONE, ONE), ONE),))
        point, _ = maximize_linear([F(4), F(4)], poly)
        assert point.coords == (F(1), F(0))

    def test_unbounded_direction_raises(self):
        poly = Polytope(2, (((ONE, ZERO), ONE),))  # x2 unconstrained
        with pytest.raises(UnboundedError):
            maximize_linear([ZERO, ONE], poly)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(LPInputError):
            maximize_linear([ONE], box(2))

    def test_deterministic_bit_identical(self):
        poly = Polytope(3, (((ONE, ONE, ZERO), ONE), ((ZERO, ONE, ONE), ONE)))
        first = maximize_linear([F(2), F(3), F(2)], poly)
        second = maximize_linear([F(2), F(3), F(2)], poly)
        assert first == second

    def test_optimum_matches_vertex_enumeration_oracle(self):
        """Exhaustive oracle: the simplex optimum equals the vertex maximum."""
        rng = random.Random(2024)
        for trial in range(25):
            n = rng.randint(2, 4)
            rows = []
            for _ in range(rng.randint(1, 4)):
                coeffs = tuple(F(rng.randint(0, 3)) for _ in range(n))
                if all(c == 0 for c in coeffs):
                    coeffs = tuple(ONE for _ in range(n))
                rows.append((coeffs, F(rng.randint(1, 5))))
            for i in range(n):  # keep every direction bounded
                rows.append((tuple(ONE if j == i else ZERO for j in range(n)),
                             F(rng.randint(1, 3))))
            poly = Polytope(n, tuple(rows))
            objective = [F(rng.randint(0, 6)) for _ in range(n)]
            point, value = maximize_linear(objective, poly)
            assert contains(poly, point)
            oracle = max(sum((c * v for c, v in zip(objective, vert.coords)), ZERO)
                         for vert in enumerate_vertices(poly))
            assert value == oracle


class TestContains:
    def test_boundary_membership(self):
        poly = Polytope(2, (((ONE, ONE), ONE),))
        assert contains(poly, FractionalPoint((F(1, 2), F(1, 2))))

    def test_outside(self):
        poly = Polytope(2, (((ONE, ONE), ONE),))
        assert not contains(poly, FractionalPoint((F(3, 5), F(1, 2))))

    def test_origin_always_inside(self):
        poly = Polytope(3, (((ONE, ONE, ONE), F(2)), ((ZERO, ONE, ONE), ONE)))
        assert contains(poly, FractionalPoint((ZERO, ZERO, ZERO)))

    def test_dimension_mismatch_raises(self):
        with pytest.raises(LPInputError):
            contains(box(2), FractionalPoint((ONE,)))


class TestPolytopeValidation:
    def test_negative_bound_rejected(self):
        with pytest.raises(LPInputError):
            Polytope(1, (((ONE,), F(-1)),))

    def test_packing_requires_nonnegative_coefficients(self):
        with pytest.raises(LPInputError):
            Polytope(2, (((ONE, F(-1)), ONE),))
        Polytope(2, (((ONE, F(-1)), ONE),), packing=False)


class TestSolveFeasibility:
    def test_symmetric_system(self):
        rows = [((ONE, ONE), ONE), ((ONE, -ONE), ZERO)]
        assert solve_feasibility(rows, 2) == (F(1, 2), F(1, 2))

    def test_infeasible_system(self):
        rows = [((ONE, ONE), ONE), ((ONE, ZERO), F(2))]
        assert solve_feasibility(rows, 2) is None

    def test_single_equation(self):
        assert solve_feasibility([((ONE,), ONE)], 1) == (ONE,)

    def test_negative_rhs_is_normalized(self):
        rows = [((-ONE, ZERO), F(-2)), ((ZERO, ONE), F(3))]
        assert solve_feasibility(rows, 2) == (F(2), F(3))

    def test_solution_is_basic(self):
        # 2 rows -> at most 2 nonzero entries in the returned solution
        rows = [((ONE, ONE, ONE, ONE), ONE), ((ONE, ZERO, ONE, ZERO), F(1, 2))]
        solution = solve_feasibility(rows, 4)
        assert solution is not None
        assert sum(1 for v in solution if v != 0) <= 2


class TestEnumerateVertices:
    def test_triangle(self):
        poly = Polytope(2, (((ONE, ONE), ONE),))
        verts = {v.coords for v in enumerate_vertices(poly)}
        assert verts == {(ZERO, ZERO), (ONE, ZERO), (ZERO, ONE)}

    def test_guard_on_large_dimension(self):
        with pytest.raises(LPInputError):
            enumerate_vertices(box(9))

"""Tests for lowering generalized problems to standard GP form."""

import math

import pytest

from gpdesign.expr import (
    GgpProblem,
    Max,
    Monomial,
    Posy,
    Posynomial,
    Pow,
    Prod,
    Sum,
    const,
    make_registry,
    max_of,
    var,
)
from gpdesign.lower import lower_to_gp
from gpdesign.solver import Status, solve_ggp

import _oracles as O


def _mono(c, **e):
    return Monomial(c, dict(e))


class TestStructure:
    def test_plain_posynomial_problem_passes_through(self):
        p = GgpProblem(make_registry(["x", "y"]),
                       var("x") + var("y"),
                       [(_mono(1, x=-1, y=-1), const(1))])
        gp = lower_to_gp(p)
        assert gp.aux_vars == []
        assert gp.names() == ["x", "y"]
        assert len(gp.ineq) == 1
        # constraint becomes f / rhs <= 1
        assert gp.ineq[0].eval({"x": 1.0, "y": 1.0}) == pytest.approx(1.0)
        assert gp.objective.eval({"x": 2.0, "y": 3.0}) == pytest.approx(5.0)

    def test_constraint_max_distributes_without_aux(self):
        p = GgpProblem(make_registry(["x"]),
                       var("x"),
                       [(max_of(var("x"), _mono(2, x=-1)), const(5))])
        gp = lower_to_gp(p)
        assert gp.aux_vars == []
        assert len(gp.ineq) == 2

    def test_objective_max_uses_one_epigraph_variable(self):
        p = GgpProblem(make_registry(["x"]),
                       max_of(var("x"), _mono(2, x=-1)), [])
        gp = lower_to_gp(p)
        assert len(gp.aux_vars) == 1
        t = gp.aux_vars[0].name
        assert t.startswith("_t")
        assert gp.objective.is_monomial()
        assert gp.objective.as_monomial().exps == {t: 1.0}
        assert len(gp.ineq) == 2

    def test_pow_constraint_moves_exponent_to_rhs(self):
        # (x + y)^2 <= 9 is equivalent to x + y <= 3
        p = GgpProblem(make_registry(["x", "y"]),
                       var("x"),
                       [(Pow(var("x") + var("y"), 2.0), const(9))])
        gp = lower_to_gp(p)
        assert gp.aux_vars == []
        assert len(gp.ineq) == 1
        assert gp.ineq[0].eval({"x": 1.0, "y": 2.0}) == pytest.approx(1.0)

    def test_pow_inside_sum_gets_epigraph(self):
        e = Sum([Pow(var("x") + var("y"), 2.0), Posy(var("x"))])
        p = GgpProblem(make_registry(["x", "y"]), e, [])
        gp = lower_to_gp(p)
        assert len(gp.aux_vars) == 1
        assert len(gp.ineq) == 1

    def test_nested_max_in_sum_objective(self):
        e = Sum([Max([var("x"), var("y")]), Posy(const(1.0))])
        p = GgpProblem(make_registry(["x", "y"]), e, [])
        gp = lower_to_gp(p)
        assert len(gp.aux_vars) == 1
        assert len(gp.ineq) == 2

    def test_registry_keeps_original_variables_first(self):
        p = GgpProblem(make_registry(["a", "b"]),
                       max_of(var("a"), var("b")), [])
        gp = lower_to_gp(p)
        assert gp.names()[:2] == ["a", "b"]
        assert all(v.name.startswith("_t") for v in gp.aux_vars)
        assert [v.index for v in gp.registry] == list(range(len(gp.registry)))

    def test_fresh_names_avoid_collisions(self):
        p = GgpProblem(make_registry(["_t0"]),
                       max_of(var("_t0"), _mono(2, _t0=-1)), [])
        gp = lower_to_gp(p)
        assert gp.aux_vars[0].name != "_t0"

    def test_equalities_become_unit_monomials(self):
        p = GgpProblem(make_registry(["x", "y"]), var("x"), [],
                       [(var("x") * var("y"), const(4))])
        gp = lower_to_gp(p)
        assert len(gp.eq) == 1
        g = gp.eq[0]
        # g = 1 encodes x*y = 4
        assert g.eval({"x": 2.0, "y": 2.0}) == pytest.approx(1.0)

    def test_provenance_written_for_every_row(self):
        p = GgpProblem(make_registry(["x"]),
                       max_of(var("x"), _mono(2, x=-1)),
                       [(var("x"), const(5))],
                       [(var("x"), var("x"))])
        gp = lower_to_gp(p)
        assert "objective" in gp.provenance
        for i in range(len(gp.ineq)):
            assert ("ineq:%d" % i) in gp.provenance
        for i in range(len(gp.eq)):
            assert ("eq:%d" % i) in gp.provenance


class TestValuePreservation:
    """Lowered problems keep the original optimal value."""

    def test_minimax_value(self):
        p = GgpProblem(make_registry(["x"]),
                       max_of(var("x"), _mono(2, x=-1)), [])
        sol = solve_ggp(p)
        assert sol.status == Status.OPTIMAL
        assert sol.objective_value == pytest.approx(math.sqrt(2.0), rel=1e-6)

    def test_squared_sum_value(self):
        p = GgpProblem(make_registry(["x", "y"]),
                       Pow(var("x") + var("y"), 2.0),
                       [(_mono(1, x=-1, y=-1), const(1))])
        sol = solve_ggp(p)
        assert sol.status == Status.OPTIMAL
        assert sol.objective_value == pytest.approx(4.0, rel=1e-6)

    def test_max_constraint_value(self):
        # min x with max(x, 8/x) <= 4: feasible band [2, 4], optimum 2
        p = GgpProblem(make_registry(["x"]),
                       var("x"),
                       [(max_of(var("x"), _mono(8, x=-1)), const(4))])
        sol = solve_ggp(p)
        assert sol.status == Status.OPTIMAL
        assert sol.objective_value == pytest.approx(2.0, rel=1e-6)

    def test_product_with_power_value(self):
        # min (x + 1) * (y + 1)^1.5 with x >= 1, y >= 1: both bounds active
        e = Prod([Posy(var("x") + 1), Pow(var("y") + 1, 1.5)])
        p = GgpProblem(make_registry(["x", "y"]), e,
                       [(_mono(1, x=-1), const(1)), (_mono(1, y=-1), const(1))])
        sol = solve_ggp(p)
        assert sol.status == Status.OPTIMAL
        assert sol.objective_value == pytest.approx(2.0 * 2.0 ** 1.5, rel=1e-6)

    def test_lowered_objective_matches_original_at_tight_aux(self):
        """Setting each epigraph variable to its branch maximum reproduces
        the original objective value."""
        p = GgpProblem(make_registry(["x", "y"]),
                       Sum([Max([var("x"), var("y")]), Posy(const(2.0))]),
                       [])
        gp = lower_to_gp(p)
        t = gp.aux_vars[0].name
        for x, y in ((1.0, 2.0), (3.0, 0.5), (2.0, 2.0)):
            pt = {"x": x, "y": y, t: max(x, y)}
            assert gp.objective.eval(pt) == pytest.approx(max(x, y) + 2.0)
            for f in gp.ineq:
                assert f.eval(pt) <= 1.0 + 1e-12


class TestAgainstGridOracle:
    """Full pipeline against an independent refined grid search on a few
    seeded compact problems (the broad sweep lives in the acceptance suite)."""

    @pytest.mark.parametrize("idx", [0, 1, 2, 3, 4])
    def test_random_compact_problem(self, idx):
        from gpdesign.instances import random_ggp
        inst = random_ggp(3, idx=idx)
        sol = solve_ggp(inst.problem)
        assert sol.status == Status.OPTIMAL
        ref = O.grid_search(inst.problem, inst.names, inst.lo, inst.hi)
        assert ref is not None
        assert sol.objective_value == pytest.approx(ref, rel=1e-3)

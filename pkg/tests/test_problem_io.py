"""Tests for the JSON problem interchange format."""

import json

import pytest

from gpdesign.expr import (
    GgpProblem,
    Max,
    ModelingError,
    Monomial,
    Posynomial,
    Pow,
    Prod,
    Sum,
    const,
    make_registry,
    max_of,
)
from gpdesign.instances import random_ggp
from gpdesign.problem_io import (
    dump_problem,
    expr_to_obj,
    load_problem,
    load_problem_dict,
    obj_to_expr,
    save_problem,
    schema_path,
)
from gpdesign.solver import solve_ggp

AMGM = {
    "variables": ["x", "y"],
    "objective": [{"c": 1.0, "e": {"x": 1.0}}, {"c": 1.0, "e": {"y": 1.0}}],
    "constraints": [
        {"rel": "<=", "lhs": [{"c": 1.0, "e": {"x": -1.0, "y": -1.0}}],
         "rhs": {"c": 1.0}},
    ],
}


def sample_problem():
    reg = make_registry(["x", "y"])
    x = Monomial(1.0, {"x": 1.0})
    y = Monomial(1.0, {"y": 1.0})
    objective = Sum([max_of(Posynomial([x]), Posynomial([y])),
                     Pow(Prod([Posynomial([x, y])]), 2.0)])
    ineqs = [(Posynomial([x, y]), const(10.0)), (const(1.0) / x, const(1.0))]
    eqs = [(x * y, const(2.0))]
    return GgpProblem(reg, objective, ineqs, eqs)


class TestLoad:
    def test_amgm_document(self):
        prob = load_problem_dict(AMGM)
        assert prob.names() == ["x", "y"]
        sol = solve_ggp(prob)
        assert sol.objective_value == pytest.approx(2.0, rel=1e-6)

    def test_all_node_kinds(self):
        obj = {"sum": [
            {"max": [[{"c": 1.0, "e": {"x": 1.0}}], [{"c": 2.0}]]},
            {"prod": [[{"c": 1.0, "e": {"x": 1.0}}],
                      {"pow": {"base": [{"c": 1.0, "e": {"x": 1.0}},
                                        {"c": 1.0}], "p": 2.5}}]},
        ]}
        e = obj_to_expr(obj)
        assert isinstance(e, Sum)
        assert e.eval({"x": 3.0}) == pytest.approx(3.0 + 3.0 * 4.0 ** 2.5)

    def test_bare_term_where_expr_expected(self):
        e = obj_to_expr({"c": 2.0, "e": {"x": 1.5}})
        assert e.eval({"x": 4.0}) == pytest.approx(2.0 * 4.0 ** 1.5)

    def test_singleton_max_unwraps(self):
        e = obj_to_expr({"max": [[{"c": 3.0}]]})
        assert not isinstance(e, Max)
        assert e.eval({}) == pytest.approx(3.0, rel=1e-12)

    @pytest.mark.parametrize("doc,frag", [
        ({}, "missing required fields"),
        ({"variables": [], "objective": [], "constraints": []},
         "nonempty list of names"),
        ({"variables": ["x", 3], "objective": [], "constraints": []},
         "nonempty list of names"),
        ({"variables": ["x"], "objective": [], "constraints": []},
         "problem.objective: posynomial term list is empty"),
        ({"variables": ["x"], "objective": [{"c": 1}], "constraints": {}},
         "'constraints' must be a list"),
        ({"variables": ["x"], "objective": [{"c": 1}], "constraints": [{}]},
         "constraints[0]: constraint needs 'lhs' and 'rhs'"),
        ({"variables": ["x"], "objective": [{"c": 1}],
          "constraints": [{"rel": ">=", "lhs": [{"c": 1}], "rhs": {"c": 1}}]},
         "'rel' must be"),
        ({"variables": ["x"], "objective": [{"c": 1}],
          "constraints": [{"lhs": [{"c": 1}],
                           "rhs": [{"c": 1}, {"c": 2}]}]},
         "constraints[0].rhs: expected a single monomial term"),
        ({"variables": ["x"], "objective": [{"c": 1}],
          "constraints": [{"rel": "=", "lhs": {"max": [[{"c": 1}]]},
                           "rhs": {"c": 1}}]},
         "constraints[0].lhs"),
    ])
    def test_document_errors(self, doc, frag):
        with pytest.raises(ModelingError) as err:
            load_problem_dict(doc)
        assert frag in str(err.value)

    @pytest.mark.parametrize("obj,frag", [
        (3, "expected a term list or node object"),
        ({"c": True}, "'c' must be a number"),
        ({"c": 1.0, "e": {"x": "two"}}, "exponent of 'x' must be a number"),
        ({"c": 1.0, "zz": 1}, "unknown term fields"),
        ({"c": -1.0}, "expr"),
        ({"max": []}, "'max' needs a nonempty list"),
        ({"sum": 3}, "'sum' needs a nonempty list"),
        ({"pow": {"base": [{"c": 1}]}}, "'pow' needs"),
        ({"pow": {"base": [{"c": 1}], "p": "q"}}, "'p' must be a number"),
        ({"club": []}, "unrecognized expression object"),
        ({"e": {"x": 1}}, "unrecognized expression object"),
    ])
    def test_expression_errors(self, obj, frag):
        with pytest.raises(ModelingError) as err:
            obj_to_expr(obj)
        assert frag in str(err.value)

    def test_nested_error_paths(self):
        with pytest.raises(ModelingError) as err:
            obj_to_expr({"sum": [[{"c": 1}], {"max": [[{"c": 1}], 7]}]},
                        where="objective")
        assert "objective.sum[1].max[1]" in str(err.value)

    def test_fractional_power_of_sum_rejected_with_context(self):
        with pytest.raises(ModelingError) as err:
            obj_to_expr({"pow": {"base": [{"c": 1.0, "e": {"x": 1.0}},
                                          {"c": 1.0}], "p": 0.5}})
        assert "expr" in str(err.value)


class TestRoundTrip:
    def test_dump_load_preserves_structure(self):
        prob = sample_problem()
        doc = dump_problem(prob)
        back = load_problem_dict(doc)
        assert back.names() == prob.names()
        assert len(back.ineq_constraints) == len(prob.ineq_constraints)
        assert len(back.eq_constraints) == len(prob.eq_constraints)
        assert dump_problem(back) == doc

    def test_round_trip_preserves_values(self):
        prob = sample_problem()
        back = load_problem_dict(dump_problem(prob))
        pt = {"x": 1.7, "y": 2.3}
        assert back.objective.eval(pt) == pytest.approx(
            prob.objective.eval(pt), rel=1e-12)

    def test_random_problems_round_trip(self):
        for idx in range(8):
            inst = random_ggp(5, idx=idx)
            doc = dump_problem(inst.problem)
            back = load_problem_dict(doc)
            assert dump_problem(back) == doc
            a = solve_ggp(inst.problem)
            b = solve_ggp(back)
            assert b.objective_value == pytest.approx(a.objective_value, rel=1e-9)

    def test_save_and_load_files(self, tmp_path):
        prob = sample_problem()
        path = tmp_path / "p.json"
        save_problem(prob, path)
        back = load_problem(path)
        assert dump_problem(back) == dump_problem(prob)

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ModelingError) as err:
            load_problem(path)
        assert "invalid JSON" in str(err.value)

    def test_exponents_serialized_sorted(self):
        m = Monomial(2.0, {"b": 1.0, "a": -1.0})
        obj = expr_to_obj(m)
        assert list(obj[0]["e"]) == ["a", "b"]

    def test_unserializable_object_rejected(self):
        with pytest.raises(ModelingError):
            expr_to_obj("x + y")


class TestSchema:
    def test_dumps_validate_against_bundled_schema(self):
        jsonschema = pytest.importorskip("jsonschema")
        schema = json.loads(schema_path().read_text())
        validator = jsonschema.Draft202012Validator(schema)
        validator.validate(AMGM)
        validator.validate(dump_problem(sample_problem()))
        for idx in range(5):
            validator.validate(dump_problem(random_ggp(5, idx=idx).problem))

    def test_schema_rejects_malformed_documents(self):
        jsonschema = pytest.importorskip("jsonschema")
        schema = json.loads(schema_path().read_text())
        validator = jsonschema.Draft202012Validator(schema)
        bad = {"variables": ["x"], "objective": [], "constraints": []}
        assert list(validator.iter_errors(bad))
        bad2 = {"variables": ["x"], "objective": [{"c": 1}],
                "constraints": [{"rel": "between", "lhs": [{"c": 1}],
                                 "rhs": {"c": 1}}]}
        assert list(validator.iter_errors(bad2))

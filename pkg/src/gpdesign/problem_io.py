"""JSON interchange for GGP problems.

Layout:

    {
      "variables": ["x", "y"],
      "objective": <expr>,
      "constraints": [
        {"rel": "<=", "lhs": <expr>, "rhs": <term>},
        {"rel": "=",  "lhs": <term>, "rhs": <term>}
      ]
    }

An <expr> is one of
    [ <term>, ... ]                      posynomial (sum of terms)
    {"max":  [<expr>, ...]}              pointwise maximum
    {"sum":  [<expr>, ...]}
    {"prod": [<expr>, ...]}
    {"pow":  {"base": <expr>, "p": number}}
and a <term> is {"c": coeff, "e": {"varname": exponent, ...}} with "e"
optional.  The machine-readable version of this grammar ships as
data/problem.schema.json.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Union

from .expr import (
    GenExpr,
    GgpProblem,
    Max,
    Monomial,
    ModelingError,
    Posy,
    Posynomial,
    Pow,
    Prod,
    Sum,
    as_genexpr,
    make_registry,
)

__all__ = ["load_problem", "load_problem_dict", "dump_problem", "save_problem",
           "expr_to_obj", "obj_to_expr", "schema_path"]


def schema_path() -> Path:
    return Path(__file__).parent / "data" / "problem.schema.json"


class _Ctx:
    """Tracks a JSON path for error messages like constraints[2].rhs."""

    def __init__(self, where: str):
        self.where = where

    def fail(self, msg: str):
        raise ModelingError("%s: %s" % (self.where, msg))

    def at(self, suffix: str) -> "_Ctx":
        return _Ctx(self.where + suffix)


def _term_from_obj(obj: Any, ctx: _Ctx) -> Monomial:
    if not isinstance(obj, dict) or "c" not in obj:
        ctx.fail("expected a term object with a 'c' field, got %r" % (obj,))
    extra = set(obj) - {"c", "e"}
    if extra:
        ctx.fail("unknown term fields %s" % sorted(extra))
    c = obj["c"]
    if not isinstance(c, (int, float)) or isinstance(c, bool):
        ctx.fail("'c' must be a number, got %r" % (c,))
    exps = obj.get("e", {})
    if not isinstance(exps, dict):
        ctx.fail("'e' must map variable names to exponents")
    for k, v in exps.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            ctx.fail("exponent of %r must be a number, got %r" % (k, v))
    try:
        return Monomial(float(c), {k: float(v) for k, v in exps.items()})
    except ModelingError as e:
        ctx.fail(str(e))


def obj_to_expr(obj: Any, where: str = "expr") -> GenExpr:
    """Parse the JSON form of an expression into a GenExpr."""
    return _expr_from_obj(obj, _Ctx(where))


def _expr_from_obj(obj: Any, ctx: _Ctx) -> GenExpr:
    if isinstance(obj, list):
        if not obj:
            ctx.fail("posynomial term list is empty")
        terms = [_term_from_obj(t, ctx.at("[%d]" % i)) for i, t in enumerate(obj)]
        return as_genexpr(Posynomial(terms))
    if isinstance(obj, dict):
        keys = set(obj)
        if keys == {"max"} or keys == {"sum"} or keys == {"prod"}:
            (kind,) = keys
            parts = obj[kind]
            if not isinstance(parts, list) or not parts:
                ctx.fail("'%s' needs a nonempty list" % kind)
            children = [_expr_from_obj(p, ctx.at(".%s[%d]" % (kind, i)))
                        for i, p in enumerate(parts)]
            try:
                if kind == "max":
                    if len(children) == 1:
                        return children[0]
                    return Max(children)
                if kind == "sum":
                    return Sum(children)
                return Prod(children)
            except ModelingError as e:
                ctx.fail(str(e))
        if keys == {"pow"}:
            body = obj["pow"]
            if not isinstance(body, dict) or set(body) != {"base", "p"}:
                ctx.fail("'pow' needs {'base': expr, 'p': number}")
            p = body["p"]
            if not isinstance(p, (int, float)) or isinstance(p, bool):
                ctx.fail("'p' must be a number")
            base = _expr_from_obj(body["base"], ctx.at(".pow.base"))
            try:
                return Pow(base, float(p))
            except ModelingError as e:
                ctx.fail(str(e))
        if "c" in keys:
            # single bare term allowed where an expression is expected
            return as_genexpr(_term_from_obj(obj, ctx))
        ctx.fail("unrecognized expression object with keys %s" % sorted(keys))
    ctx.fail("expected a term list or node object, got %r" % (obj,))


def _monomial_from_obj(obj: Any, ctx: _Ctx) -> Monomial:
    if isinstance(obj, list):
        if len(obj) != 1:
            ctx.fail("expected a single monomial term, got %d terms" % len(obj))
        obj = obj[0]
    return _term_from_obj(obj, ctx)


def load_problem_dict(doc: Dict[str, Any]) -> GgpProblem:
    ctx = _Ctx("problem")
    if not isinstance(doc, dict):
        ctx.fail("top level must be an object")
    missing = {"variables", "objective", "constraints"} - set(doc)
    if missing:
        ctx.fail("missing required fields %s" % sorted(missing))
    names = doc["variables"]
    if (not isinstance(names, list) or not names
            or not all(isinstance(n, str) and n for n in names)):
        ctx.fail("'variables' must be a nonempty list of names")
    registry = make_registry(names)
    objective = _expr_from_obj(doc["objective"], ctx.at(".objective"))
    ineqs = []
    eqs = []
    cons = doc["constraints"]
    if not isinstance(cons, list):
        ctx.fail("'constraints' must be a list")
    for i, c in enumerate(cons):
        cctx = ctx.at(".constraints[%d]" % i)
        if not isinstance(c, dict) or "lhs" not in c or "rhs" not in c:
            cctx.fail("constraint needs 'lhs' and 'rhs'")
        rel = c.get("rel", "<=")
        if rel == "<=":
            lhs = _expr_from_obj(c["lhs"], cctx.at(".lhs"))
            rhs = _monomial_from_obj(c["rhs"], cctx.at(".rhs"))
            ineqs.append((lhs, rhs))
        elif rel == "=":
            g = _monomial_from_obj(c["lhs"], cctx.at(".lhs"))
            h = _monomial_from_obj(c["rhs"], cctx.at(".rhs"))
            eqs.append((g, h))
        else:
            cctx.fail("'rel' must be '<=' or '=', got %r" % (rel,))
    return GgpProblem(registry, objective, ineqs, eqs)


def load_problem(path: Union[str, Path]) -> GgpProblem:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ModelingError("%s: invalid JSON (%s)" % (path, e)) from None
    return load_problem_dict(doc)


def _term_to_obj(m: Monomial) -> Dict[str, Any]:
    out: Dict[str, Any] = {"c": m.c}
    if m.exps:
        out["e"] = {k: m.exps[k] for k in sorted(m.exps)}
    return out


def expr_to_obj(e) -> Any:
    """Serialize a GenExpr / Posynomial / Monomial to the JSON form."""
    if isinstance(e, Monomial):
        e = Posynomial([e])
    if isinstance(e, Posynomial):
        return [_term_to_obj(t) for t in e.terms]
    if isinstance(e, Posy):
        return expr_to_obj(e.posy)
    if isinstance(e, Max):
        return {"max": [expr_to_obj(c) for c in e.parts]}
    if isinstance(e, Sum):
        return {"sum": [expr_to_obj(c) for c in e.parts]}
    if isinstance(e, Prod):
        return {"prod": [expr_to_obj(c) for c in e.parts]}
    if isinstance(e, Pow):
        return {"pow": {"base": expr_to_obj(e.base), "p": e.p}}
    raise ModelingError("cannot serialize %r" % (e,))


def dump_problem(p: GgpProblem) -> Dict[str, Any]:
    cons: List[Dict[str, Any]] = []
    for lhs, rhs in p.ineq_constraints:
        cons.append({"rel": "<=", "lhs": expr_to_obj(lhs), "rhs": _term_to_obj(rhs)})
    for g, h in p.eq_constraints:
        cons.append({"rel": "=", "lhs": _term_to_obj(g), "rhs": _term_to_obj(h)})
    return {
        "variables": p.names(),
        "objective": expr_to_obj(p.objective),
        "constraints": cons,
    }


def save_problem(p: GgpProblem, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(dump_problem(p), fh, indent=2, sort_keys=False)
        fh.write("\n")

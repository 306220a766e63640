"""Lowering of generalized geometric programs to standard-form GPs.

Max and non-monomial Pow nodes are replaced by auxiliary epigraph variables.
A Max that forms the entire left side of an inequality is distributed over
its branches instead (one posynomial constraint per branch, no new variable),
and a Max objective is lowered through a single scalar epigraph variable.
The optimal value is unchanged by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from .expr import (
    GenExpr,
    GgpProblem,
    Max,
    ModelingError,
    Monomial,
    Posy,
    Posynomial,
    Pow,
    Prod,
    Sum,
    VarId,
    var,
)

__all__ = ["GpProblem", "lower_to_gp"]


@dataclass
class GpProblem:
    """Standard-form GP: minimize a posynomial subject to posynomial <= 1
    and monomial = 1 constraints."""

    registry: List[VarId]
    objective: Posynomial
    ineq: List[Posynomial] = field(default_factory=list)
    eq: List[Monomial] = field(default_factory=list)
    aux_vars: List[VarId] = field(default_factory=list)
    provenance: Dict[str, str] = field(default_factory=dict)

    def names(self) -> List[str]:
        return [v.name for v in self.registry]

    def n_vars(self) -> int:
        return len(self.registry)


class _Lowerer:
    def __init__(self, p: GgpProblem):
        self.problem = p
        self.registry = list(p.registry)
        self.taken = set(v.name for v in self.registry)
        self.aux: List[VarId] = []
        self.ineq: List[Posynomial] = []
        self.prov: Dict[str, str] = {}
        self._counter = 0

    def fresh(self, hint: str = "t") -> Monomial:
        while True:
            name = "_%s%d" % (hint, self._counter)
            self._counter += 1
            if name not in self.taken:
                break
        vid = VarId(len(self.registry), name)
        self.registry.append(vid)
        self.aux.append(vid)
        self.taken.add(name)
        return var(name)

    def add_ineq(self, posy: Posynomial, source: str):
        self.prov["ineq:%d" % len(self.ineq)] = source
        self.ineq.append(posy)

    def lower_node(self, e: GenExpr, source: str) -> Posynomial:
        """Rewrite e into a posynomial over the extended variable set, adding
        epigraph constraints as needed.  Valid wherever e appears in a position
        that is monotone increasing in its value (objectives and <=-lhs)."""
        if isinstance(e, Posy):
            return e.posy
        if isinstance(e, Sum):
            out = None
            for c in e.parts:
                p = self.lower_node(c, source)
                out = p if out is None else out + p
            return out
        if isinstance(e, Prod):
            out = None
            for c in e.parts:
                p = self.lower_node(c, source)
                out = p if out is None else out * p
            return out
        if isinstance(e, Pow):
            base = self.lower_node(e.base, source)
            if base.is_monomial():
                return Posynomial([base.as_monomial() ** e.p])
            t = self.fresh()
            self.add_ineq(base * t ** -1.0, source + " (power epigraph)")
            return Posynomial([t ** e.p])
        if isinstance(e, Max):
            t = self.fresh()
            for i, c in enumerate(e.parts):
                p = self.lower_node(c, source)
                self.add_ineq(p * t ** -1.0, source + " (max branch %d)" % i)
            return Posynomial([t])
        raise ModelingError("cannot lower node %r" % (e,))

    def lower_constraint(self, lhs: GenExpr, rhs: Monomial, source: str):
        if isinstance(lhs, Max):
            for i, c in enumerate(lhs.parts):
                self.lower_constraint(c, rhs, source + " (max branch %d)" % i)
            return
        if isinstance(lhs, Pow):
            # f^p <= m  <=>  f <= m^(1/p) for p > 0 and monomial m
            self.lower_constraint(lhs.base, rhs ** (1.0 / lhs.p), source)
            return
        p = self.lower_node(lhs, source)
        self.add_ineq(p * rhs ** -1.0, source)


def lower_to_gp(p: GgpProblem) -> GpProblem:
    """Lower a GgpProblem to a standard-form GpProblem with equal optimal value."""
    low = _Lowerer(p)

    obj = p.objective
    if isinstance(obj, Max):
        t = low.fresh()
        for i, c in enumerate(obj.parts):
            low.lower_constraint(c, t, "objective (max branch %d)" % i)
        objective = Posynomial([t])
        low.prov["objective"] = "objective epigraph"
    else:
        objective = low.lower_node(obj, "objective")
        low.prov["objective"] = "objective"

    for k, (lhs, rhs) in enumerate(p.ineq_constraints):
        low.lower_constraint(lhs, rhs, "constraint %d" % k)

    eq: List[Monomial] = []
    prov = low.prov
    for k, (g, h) in enumerate(p.eq_constraints):
        eq.append(g * h ** -1.0)
        prov["eq:%d" % k] = "equality %d" % k

    return GpProblem(
        registry=low.registry,
        objective=objective,
        ineq=low.ineq,
        eq=eq,
        aux_vars=low.aux,
        provenance=prov,
    )

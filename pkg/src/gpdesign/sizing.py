"""Gate-sizing GGP construction for combinational circuits.

Every node defined by a gate line carries a scale variable x >= 1.  Gate
resistance shrinks as Rbar/x while its input and internal capacitances grow
linearly with x, so path delays (0.69 R C per stage) trade off against power
and total active volume.  Primary outputs that are themselves gates drive a
fixed external load capacitance; dedicated sink nodes act as pure loads.

The worst-case delay is expressed either as a Max over all enumerated
PI->PO paths or, for path-rich circuits, through per-gate arrival-time
variables T_i with propagation constraints T_j + D_i <= T_i.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .expr import GenExpr, GgpProblem, Monomial, ModelingError, Posynomial, const, max_of, make_registry, var
from .netlist import CircuitGraph, PathList, enumerate_paths

__all__ = ["SizingBuildError", "SizingParams", "SizingConstraints", "SizingReport",
           "MODE_PATHS", "MODE_ARRIVAL", "sized_gates", "x_name", "t_name",
           "CapTable", "build_capacitances", "build_power", "DelayModel", "build_delay",
           "build_sizing_ggp", "evaluate_report", "write_sizes_csv", "write_report_csv"]

MODE_PATHS = "paths"
MODE_ARRIVAL = "arrival"
_MODE_ALIASES = {
    "paths": MODE_PATHS, "pathenumeration": MODE_PATHS, "path": MODE_PATHS,
    "arrival": MODE_ARRIVAL, "arrivaltime": MODE_ARRIVAL,
}


class SizingBuildError(ValueError):
    pass


_COLUMNS = ("node", "f", "rbar", "cin", "cint", "vol", "ileak", "cload", "x_max")


@dataclass
class SizingParams:
    """Per-node electrical parameters plus the global supply voltage."""

    f: Dict[str, float] = field(default_factory=dict)        # activity frequency, Hz
    rbar: Dict[str, float] = field(default_factory=dict)     # resistance at unit scaling
    cin: Dict[str, float] = field(default_factory=dict)      # unit input capacitance
    cint: Dict[str, float] = field(default_factory=dict)     # unit internal capacitance
    vol: Dict[str, float] = field(default_factory=dict)      # unit volume
    ileak: Dict[str, float] = field(default_factory=dict)    # unit leakage current
    cload: Dict[str, float] = field(default_factory=dict)    # fixed load at outputs/sinks
    x_max: Dict[str, float] = field(default_factory=dict)    # per-gate upper bound
    v_dd: float = 1.0
    delay_coeff: float = 0.69

    @classmethod
    def from_csv(cls, source: Union[str, Path], v_dd: float = 1.0) -> "SizingParams":
        text = Path(source).read_text() if not isinstance(source, str) or "\n" not in source else source
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise SizingBuildError("empty parameter file")
        unknown = set(rows[0]) - set(_COLUMNS)
        if unknown:
            raise SizingBuildError("unknown parameter columns: %s" % ", ".join(sorted(unknown)))
        p = cls(v_dd=v_dd)
        seen = set()
        for i, row in enumerate(rows, start=2):
            name = (row.get("node") or "").strip()
            if not name:
                raise SizingBuildError("row %d: missing node name" % i)
            if name in seen:
                raise SizingBuildError("row %d: duplicate node %r" % (i, name))
            seen.add(name)
            for col in _COLUMNS[1:]:
                raw = (row.get(col) or "").strip()
                if not raw:
                    continue
                try:
                    val = float(raw)
                except ValueError:
                    raise SizingBuildError("row %d: column %r is not a number: %r" % (i, col, raw)) from None
                if not math.isfinite(val) or val < 0 or (val == 0 and col != "f"):
                    raise SizingBuildError("row %d: column %r must be positive" % (i, col))
                getattr(p, col)[name] = val
        return p


@dataclass
class SizingConstraints:
    p_max: float
    vol_max: float
    x_max_default: float = 100.0

    def __post_init__(self):
        if self.p_max <= 0 or self.vol_max <= 0:
            raise SizingBuildError("power and volume caps must be positive")
        if self.x_max_default < 1:
            raise SizingBuildError("default x_max must be at least 1")


def sized_gates(g: CircuitGraph) -> List[str]:
    """Nodes carrying a scale variable: everything defined by a gate line."""
    return sorted(n for n in g.names() if g.node(n).kind == "gate")


def x_name(node: str) -> str:
    return "x_" + node


def t_name(node: str) -> str:
    return "T_" + node


def _need(table: Mapping[str, float], node: str, what: str) -> float:
    if node not in table:
        raise SizingBuildError("missing %s for node %r" % (what, node))
    return table[node]


@dataclass
class CapTable:
    """Input, load and total capacitance expressions per node (posynomials
    in the scale variables; absent entries mean zero)."""

    cin: Dict[str, Posynomial]
    cl: Dict[str, Posynomial]
    c: Dict[str, Posynomial]


def build_capacitances(g: CircuitGraph, params: SizingParams) -> CapTable:
    gates = set(sized_gates(g))
    cin: Dict[str, Posynomial] = {}
    for n in g.names():
        nd = g.node(n)
        if n in gates:
            cin[n] = Posynomial([Monomial(_need(params.cin, n, "unit input capacitance"),
                                          {x_name(n): 1.0})])
        elif nd.kind == "output" or (nd.kind == "input" and not g.fo(n) and n in g.po):
            if n in params.cload:
                cin[n] = Posynomial([const(params.cload[n])])
    cl: Dict[str, Posynomial] = {}
    ctot: Dict[str, Posynomial] = {}
    for n in g.names():
        parts = []
        for m in g.fo(n):
            if m in cin:
                parts.append(cin[m])
            elif g.node(m).kind == "output":
                raise SizingBuildError("missing load capacitance for output sink %r" % m)
        if not parts and n in gates and not g.fo(n):
            # gate that is itself a primary output: fixed external load
            parts.append(Posynomial([const(_need(params.cload, n, "output load capacitance"))]))
        if parts:
            acc = parts[0]
            for q in parts[1:]:
                acc = acc + q
            cl[n] = acc
        if n in gates:
            internal = Monomial(_need(params.cint, n, "unit internal capacitance"), {x_name(n): 1.0})
            ctot[n] = (cl[n] + internal) if n in cl else Posynomial([internal])
        elif g.node(n).kind == "input" and n in cl:
            ctot[n] = cl[n]
    return CapTable(cin, cl, ctot)


def build_power(g: CircuitGraph, params: SizingParams,
                caps: Optional[CapTable] = None) -> Posynomial:
    """P = sum_{PI and gates} F_i C_i V^2  +  sum_{gates} x_i Ibar_i V."""
    caps = caps or build_capacitances(g, params)
    gates = sized_gates(g)
    active = [n for n in g.names() if g.node(n).kind == "input"] + gates
    terms: List[Monomial] = []
    v = params.v_dd
    for n in active:
        fi = _need(params.f, n, "activity frequency")
        if fi == 0.0 or n not in caps.c:
            continue
        for t in (caps.c[n] * const(fi * v * v)).terms:
            terms.append(t)
    for n in gates:
        il = _need(params.ileak, n, "unit leakage current")
        terms.append(Monomial(il * v, {x_name(n): 1.0}))
    if not terms:
        raise SizingBuildError("power expression is identically zero")
    return Posynomial(terms)


def _gate_delay(n: str, g: CircuitGraph, params: SizingParams, caps: CapTable) -> Posynomial:
    r = _need(params.rbar, n, "unit-scaling resistance")
    k = Monomial(params.delay_coeff * r, {x_name(n): -1.0})
    return caps.c[n] * k


@dataclass
class DelayModel:
    """Worst-case delay expression plus any arrival-time side constraints."""

    expr: GenExpr
    constraints: List[Tuple[GenExpr, Monomial]] = field(default_factory=list)
    aux_names: List[str] = field(default_factory=list)
    mode: str = MODE_PATHS
    paths: Optional[PathList] = None


def build_delay(g: CircuitGraph, params: SizingParams,
                paths: Optional[PathList] = None, mode: str = MODE_PATHS,
                path_cap: int = 10 ** 6) -> DelayModel:
    key = mode.replace("_", "").replace("-", "").lower()
    if key not in _MODE_ALIASES:
        raise SizingBuildError("unknown delay mode %r (use %r or %r)" % (mode, MODE_PATHS, MODE_ARRIVAL))
    mode = _MODE_ALIASES[key]
    caps = build_capacitances(g, params)
    gates = set(sized_gates(g))
    delays = {n: _gate_delay(n, g, params, caps) for n in gates}

    if mode == MODE_PATHS:
        if paths is None:
            paths = enumerate_paths(g, cap=path_cap)
        branches = []
        for p in paths.paths:
            stage = [delays[n] for n in p if n in gates]
            if not stage:
                continue
            acc = stage[0]
            for q in stage[1:]:
                acc = acc + q
            branches.append(acc)
        if not branches:
            raise SizingBuildError("no gate delays along any PI->PO path")
        return DelayModel(max_of(*branches), mode=MODE_PATHS, paths=paths)

    # arrival-time formulation
    cons: List[Tuple[GenExpr, Monomial]] = []
    aux: List[str] = []
    for n in sorted(gates):
        aux.append(t_name(n))
        arrival = Monomial(1.0, {t_name(n): 1.0})
        d = delays[n]
        preds = [j for j in g.fi(n) if j in gates]
        if len(preds) < len([j for j in g.fi(n) if g.node(j).kind != "input"]):
            raise SizingBuildError("gate %r has a non-gate, non-input predecessor" % n)
        if len(preds) < len(g.fi(n)):
            # at least one primary-input predecessor arrives at time zero
            cons.append((d, arrival))
        for j in sorted(preds):
            cons.append((Monomial(1.0, {t_name(j): 1.0}) + d, arrival))
    terminals = [n for n in sorted(gates) if not any(m in gates for m in g.fo(n))]
    if not terminals:
        raise SizingBuildError("no terminal gates for the arrival-time objective")
    expr = max_of(*[Monomial(1.0, {t_name(n): 1.0}) for n in terminals])
    return DelayModel(expr, cons, aux, MODE_ARRIVAL, None)


def build_sizing_ggp(g: CircuitGraph, params: SizingParams, cons: SizingConstraints,
                     mode: str = MODE_PATHS, paths: Optional[PathList] = None,
                     path_cap: int = 10 ** 6) -> GgpProblem:
    gates = sized_gates(g)
    if not gates:
        raise SizingBuildError("circuit has no gates to size")
    dm = build_delay(g, params, paths, mode, path_cap)
    power = build_power(g, params)
    volume = Posynomial([Monomial(_need(params.vol, n, "unit volume"), {x_name(n): 1.0})
                         for n in gates])
    names = [x_name(n) for n in gates] + dm.aux_names
    ineqs: List[Tuple[GenExpr, Monomial]] = []
    ineqs.append((power, const(cons.p_max)))
    ineqs.append((volume, const(cons.vol_max)))
    for n in gates:
        xm = params.x_max.get(n, cons.x_max_default)
        if xm < 1:
            raise SizingBuildError("x_max for gate %r is %g, below the lower bound 1" % (n, xm))
        ineqs.append((Monomial(1.0, {x_name(n): -1.0}), const(1.0)))     # x >= 1
        ineqs.append((Monomial(1.0, {x_name(n): 1.0}), const(xm)))       # x <= x_max
    ineqs.extend(dm.constraints)
    return GgpProblem(make_registry(names), dm.expr, ineqs, [])


# ---------------------------------------------------------------------------
# numeric reporting (independent of the posynomial machinery)
# ---------------------------------------------------------------------------


@dataclass
class SizingReport:
    x: Dict[str, float]
    paths: PathList
    delay_before: Tuple[float, ...]
    delay_after: Tuple[float, ...]
    worst_before: float
    worst_after: float
    improvement_pct: float


def _numeric_node_delays(g: CircuitGraph, params: SizingParams,
                         x: Mapping[str, float]) -> Dict[str, float]:
    gates = set(sized_gates(g))
    cin_num: Dict[str, float] = {}
    for n in g.names():
        if n in gates:
            cin_num[n] = params.cin[n] * x[n]
        elif n in params.cload:
            cin_num[n] = params.cload[n]
    d: Dict[str, float] = {}
    for n in gates:
        cl = sum(cin_num.get(m, 0.0) for m in g.fo(n))
        if not g.fo(n):
            cl = params.cload[n]
        c = cl + params.cint[n] * x[n]
        d[n] = params.delay_coeff * params.rbar[n] / x[n] * c
    return d


def evaluate_report(g: CircuitGraph, params: SizingParams, x: Mapping[str, float],
                    paths: Optional[PathList] = None, path_cap: int = 10 ** 6) -> SizingReport:
    gates = sized_gates(g)
    for n in gates:
        if x[n] < 1.0 - 1e-9:
            raise SizingBuildError("scale of gate %r is %g, below 1" % (n, x[n]))
    if paths is None:
        paths = enumerate_paths(g, cap=path_cap)
    ones = {n: 1.0 for n in gates}
    d0 = _numeric_node_delays(g, params, ones)
    d1 = _numeric_node_delays(g, params, x)
    gset = set(gates)
    before = tuple(sum(d0[n] for n in p if n in gset) for p in paths.paths)
    after = tuple(sum(d1[n] for n in p if n in gset) for p in paths.paths)
    wb, wa = max(before), max(after)
    return SizingReport(dict(x), paths, before, after, wb, wa,
                        (wb - wa) / wb * 100.0 if wb > 0 else 0.0)


def write_sizes_csv(report: SizingReport, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["gate", "x_star"])
    for n in sorted(report.x):
        w.writerow([n, repr(report.x[n])])


def write_report_csv(report: SizingReport, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["path_id", "delay_before", "delay_after"])
    for i, (b, a) in enumerate(zip(report.delay_before, report.delay_after)):
        w.writerow([i, repr(b), repr(a)])

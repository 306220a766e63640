"""RC-tree interconnect sizing.

Each interconnect segment is replaced by a pi model with resistance
R_i = alpha_i * l_i / w_i and capacitance C_i = beta_i * l_i * w_i +
gamma_i * l_i.  Total capacitance at a segment adds its own load, its own
pi capacitance and the pi capacitances of the segments immediately
downstream.  The delay to a leaf is the Elmore sum over the root path:
each upstream resistance times the total capacitance hanging below it.

The sizing problem picks lengths and widths minimizing the worst leaf
delay subject to per-segment bounds and a total volume cap sum(l * w^2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .expr import (GenExpr, GgpProblem, Monomial, Posynomial, const,
                   make_registry, max_of)

__all__ = [
    "InterconnectError",
    "Segment",
    "RcTree",
    "RcExprs",
    "InterconnectSolution",
    "parse_tree",
    "load_tree",
    "write_tree_csv",
    "build_rc_exprs",
    "elmore_delay_expr",
    "elmore_delay_numeric",
    "build_interconnect_ggp",
    "summarize_solution",
    "l_name",
    "w_name",
]

_COLUMNS = ("id", "parent", "alpha", "beta", "gamma", "c_load",
            "wmin", "wmax", "lmin", "lmax")
_ROOT_TOKENS = ("root", "")


class InterconnectError(ValueError):
    """Raised for malformed trees and structurally infeasible builds."""


def l_name(sid: str) -> str:
    return "l_" + sid


def w_name(sid: str) -> str:
    return "w_" + sid


@dataclass(frozen=True)
class Segment:
    """One interconnect with pi-model coefficients and sizing bounds."""

    sid: str
    parent: Optional[str]  # None means attached to the source
    alpha: float
    beta: float
    gamma: float
    c_load: float
    w_min: float
    w_max: float
    l_min: float
    l_max: float


class RcTree:
    """Segments linked by parent ids into a tree rooted at the source.

    `r0` is an optional constant drive resistance at the source; when set
    it adds a term r0 * (total tree capacitance) to every leaf delay.
    Segment order follows construction order and fixes the variable
    layout of the sizing problem.
    """

    def __init__(self, segments: Sequence[Segment], r0: Optional[float] = None):
        if not segments:
            raise InterconnectError("tree has no segments")
        if r0 is not None and r0 <= 0:
            raise InterconnectError("root drive resistance must be positive, got %g" % r0)
        self.order: List[str] = []
        self.segments: Dict[str, Segment] = {}
        for s in segments:
            if s.sid in self.segments:
                raise InterconnectError("duplicate segment id %r" % s.sid)
            self.segments[s.sid] = s
            self.order.append(s.sid)
        self.r0 = r0
        self._children: Dict[str, List[str]] = {sid: [] for sid in self.order}
        for s in segments:
            if s.parent is not None:
                if s.parent not in self.segments:
                    raise InterconnectError(
                        "segment %r names unknown parent %r" % (s.sid, s.parent))
                self._children[s.parent].append(s.sid)
        self._check_rooted()
        self._validate_numbers()

    def _check_rooted(self) -> None:
        for sid in self.order:
            seen = set()
            cur: Optional[str] = sid
            while cur is not None:
                if cur in seen:
                    raise InterconnectError(
                        "parent links of segment %r form a cycle" % sid)
                seen.add(cur)
                cur = self.segments[cur].parent

    def _validate_numbers(self) -> None:
        for sid in self.order:
            s = self.segments[sid]
            for field in ("alpha", "beta", "gamma"):
                v = getattr(s, field)
                if not v > 0:
                    raise InterconnectError(
                        "segment %r: %s must be positive, got %g" % (sid, field, v))
            if s.c_load < 0:
                raise InterconnectError(
                    "segment %r: c_load must be nonnegative, got %g" % (sid, s.c_load))
            for lo, hi, what in ((s.w_min, s.w_max, "width"), (s.l_min, s.l_max, "length")):
                if not 0 < lo <= hi:
                    raise InterconnectError(
                        "segment %r: %s bounds need 0 < min <= max, got [%g, %g]"
                        % (sid, what, lo, hi))

    def children(self, sid: str) -> List[str]:
        return list(self._children[sid])

    def leaves(self) -> List[str]:
        return [sid for sid in self.order if not self._children[sid]]

    def path(self, sid: str) -> Tuple[str, ...]:
        """Root-to-segment id sequence (source excluded)."""
        out: List[str] = []
        cur: Optional[str] = sid
        while cur is not None:
            out.append(cur)
            cur = self.segments[cur].parent
        return tuple(reversed(out))

    def downstream(self, sid: str) -> Tuple[str, ...]:
        """Subtree ids below `sid`, including `sid` itself, in tree order."""
        out: List[str] = []
        stack = [sid]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(reversed(self._children[cur]))
        return tuple(out)

    def with_segment(self, sid: str, **changes) -> "RcTree":
        """A copy of the tree with some fields of one segment replaced."""
        if sid not in self.segments:
            raise InterconnectError("no segment %r" % sid)
        segs = [replace(self.segments[s], **changes) if s == sid else self.segments[s]
                for s in self.order]
        return RcTree(segs, r0=self.r0)


def parse_tree(text: str, r0: Optional[float] = None) -> RcTree:
    """Parse the CSV tree description.

    Columns: id,parent,alpha,beta,gamma,c_load,wmin,wmax,lmin,lmax.  The
    parent cell is another id, or "root" (or empty) for segments attached
    directly to the source.
    """
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None:
        raise InterconnectError("tree file is empty")
    got = [h.strip() for h in reader.fieldnames]
    unknown = [h for h in got if h not in _COLUMNS]
    if unknown:
        raise InterconnectError("unknown column(s) %s in tree file" % ", ".join(map(repr, unknown)))
    missing = [h for h in _COLUMNS if h not in got]
    if missing:
        raise InterconnectError("tree file is missing column(s) %s" % ", ".join(map(repr, missing)))
    segments: List[Segment] = []
    for rownum, row in enumerate(reader, start=2):
        sid = (row["id"] or "").strip()
        if not sid:
            raise InterconnectError("row %d: empty segment id" % rownum)
        parent_raw = (row["parent"] or "").strip()
        parent = None if parent_raw.lower() in _ROOT_TOKENS else parent_raw
        nums = {}
        for col in _COLUMNS[2:]:
            raw = (row[col] or "").strip()
            try:
                nums[col] = float(raw)
            except ValueError:
                raise InterconnectError(
                    "row %d: column %r is not a number: %r" % (rownum, col, raw)) from None
        segments.append(Segment(sid, parent, nums["alpha"], nums["beta"], nums["gamma"],
                                nums["c_load"], nums["wmin"], nums["wmax"],
                                nums["lmin"], nums["lmax"]))
    return RcTree(segments, r0=r0)


def load_tree(path, r0: Optional[float] = None) -> RcTree:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_tree(fh.read(), r0=r0)


def write_tree_csv(t: RcTree, fh) -> None:
    w = csv.writer(fh)
    w.writerow(_COLUMNS)
    for sid in t.order:
        s = t.segments[sid]
        w.writerow([s.sid, s.parent if s.parent is not None else "root",
                    repr(s.alpha), repr(s.beta), repr(s.gamma), repr(s.c_load),
                    repr(s.w_min), repr(s.w_max), repr(s.l_min), repr(s.l_max)])


@dataclass
class RcExprs:
    """Per-segment pi-model expressions in the l and w variables."""

    r: Dict[str, Monomial]
    c: Dict[str, Posynomial]
    c_tot: Dict[str, Posynomial]


def build_rc_exprs(t: RcTree) -> RcExprs:
    r: Dict[str, Monomial] = {}
    c: Dict[str, Posynomial] = {}
    for sid in t.order:
        s = t.segments[sid]
        r[sid] = Monomial(s.alpha, {l_name(sid): 1.0, w_name(sid): -1.0})
        c[sid] = Posynomial([Monomial(s.beta, {l_name(sid): 1.0, w_name(sid): 1.0}),
                             Monomial(s.gamma, {l_name(sid): 1.0})])
    c_tot: Dict[str, Posynomial] = {}
    for sid in t.order:
        s = t.segments[sid]
        acc = c[sid]
        if s.c_load > 0:
            acc = acc + const(s.c_load)
        for child in t.children(sid):
            acc = acc + c[child]
        c_tot[sid] = acc
    return RcExprs(r, c, c_tot)


def elmore_delay_expr(t: RcTree, leaf: str,
                      exprs: Optional[RcExprs] = None) -> Posynomial:
    """Posynomial Elmore delay from the source to `leaf`."""
    if leaf not in t.segments:
        raise InterconnectError("no segment %r" % leaf)
    if t.children(leaf):
        raise InterconnectError("segment %r is not a leaf" % leaf)
    exprs = exprs or build_rc_exprs(t)
    total: Optional[Posynomial] = None
    for j in t.path(leaf):
        below = exprs.c_tot[j]
        for k in t.downstream(j):
            if k != j:
                below = below + exprs.c_tot[k]
        term = below * exprs.r[j]
        total = term if total is None else total + term
    if t.r0 is not None:
        tree_cap: Optional[Posynomial] = None
        for k in t.order:
            ck = exprs.c_tot[k]
            tree_cap = ck if tree_cap is None else tree_cap + ck
        total = total + tree_cap * const(t.r0)
    assert total is not None
    return total


def elmore_delay_numeric(t: RcTree, l: Mapping[str, float],
                         w: Mapping[str, float], leaf: str) -> float:
    """Elmore delay by direct tree traversal on concrete sizes.

    Deliberately avoids the expression machinery so it can serve as an
    independent check of the posynomial construction.
    """
    if leaf not in t.segments:
        raise InterconnectError("no segment %r" % leaf)
    if t.children(leaf):
        raise InterconnectError("segment %r is not a leaf" % leaf)
    c_tot: Dict[str, float] = {}

    def pi_cap(sid: str) -> float:
        s = t.segments[sid]
        return s.beta * l[sid] * w[sid] + s.gamma * l[sid]

    for sid in t.order:
        s = t.segments[sid]
        c_tot[sid] = s.c_load + pi_cap(sid) + sum(pi_cap(ch) for ch in t.children(sid))

    def subtree_cap(sid: str) -> float:
        return c_tot[sid] + sum(subtree_cap(ch) for ch in t.children(sid))

    delay = 0.0
    for j in t.path(leaf):
        s = t.segments[j]
        delay += (s.alpha * l[j] / w[j]) * subtree_cap(j)
    if t.r0 is not None:
        delay += t.r0 * sum(c_tot[sid] for sid in t.order)
    return delay


def min_volume(t: RcTree) -> float:
    """Smallest achievable total volume sum(l_min * w_min^2)."""
    return sum(t.segments[sid].l_min * t.segments[sid].w_min ** 2 for sid in t.order)


def build_interconnect_ggp(t: RcTree, vol_max: float) -> GgpProblem:
    """Minimize the worst leaf Elmore delay under bounds and a volume cap.

    Tight bounds (min equal to max) become monomial equalities so that an
    exactly pinned size does not force the solver through a feasibility
    search with an empty interior.
    """
    if vol_max <= 0:
        raise InterconnectError("vol_max must be positive, got %g" % vol_max)
    floor = min_volume(t)
    if vol_max < floor:
        raise InterconnectError(
            "infeasible volume cap: vol_max=%g is below the minimum achievable "
            "volume %g at the lower bounds" % (vol_max, floor))
    names: List[str] = []
    for sid in t.order:
        names.append(l_name(sid))
        names.append(w_name(sid))
    exprs = build_rc_exprs(t)
    leaves = t.leaves()
    objective: GenExpr = max_of(*[elmore_delay_expr(t, leaf, exprs) for leaf in leaves])
    ineqs: List[Tuple[GenExpr, Monomial]] = []
    eqs: List[Tuple[Monomial, Monomial]] = []
    for sid in t.order:
        s = t.segments[sid]
        for var_of, lo, hi in ((w_name, s.w_min, s.w_max), (l_name, s.l_min, s.l_max)):
            v = Monomial(1.0, {var_of(sid): 1.0})
            if lo == hi:
                eqs.append((v, const(lo)))
            else:
                ineqs.append((const(lo) / v, const(1.0)))
                ineqs.append((v, const(hi)))
    volume: Optional[Posynomial] = None
    for sid in t.order:
        term = Posynomial([Monomial(1.0, {l_name(sid): 1.0, w_name(sid): 2.0})])
        volume = term if volume is None else volume + term
    assert volume is not None
    ineqs.append((volume, const(vol_max)))
    return GgpProblem(make_registry(names), objective, ineqs, eqs)


@dataclass
class InterconnectSolution:
    """Numeric summary of a solved sizing problem."""

    l: Dict[str, float]
    w: Dict[str, float]
    leaf_delay: Dict[str, float]
    worst_delay: float
    binding: List[str]


def summarize_solution(t: RcTree, values: Mapping[str, float], vol_max: float,
                       tol: float = 1e-6) -> InterconnectSolution:
    """Build the per-leaf delay and binding-constraint report.

    `values` maps variable names (l_<id>, w_<id>) to sizes.  A bound or
    the volume cap counts as binding when its relative slack is at most
    `tol`.
    """
    l = {sid: float(values[l_name(sid)]) for sid in t.order}
    w = {sid: float(values[w_name(sid)]) for sid in t.order}
    leaf_delay = {leaf: elmore_delay_numeric(t, l, w, leaf) for leaf in t.leaves()}
    worst = max(leaf_delay.values())
    binding: List[str] = []
    for sid in t.order:
        s = t.segments[sid]
        checks = (("w_min[%s]" % sid, (w[sid] - s.w_min) / s.w_min),
                  ("w_max[%s]" % sid, (s.w_max - w[sid]) / s.w_max),
                  ("l_min[%s]" % sid, (l[sid] - s.l_min) / s.l_min),
                  ("l_max[%s]" % sid, (s.l_max - l[sid]) / s.l_max))
        for label, slack in checks:
            if slack <= tol:
                binding.append(label)
    vol = sum(l[sid] * w[sid] ** 2 for sid in t.order)
    if (vol_max - vol) / vol_max <= tol:
        binding.append("volume")
    return InterconnectSolution(l, w, leaf_delay, worst, binding)

"""ISCAS-85 .bench parsing, node classification and PI->PO path enumeration.

A circuit is a DAG over named signals.  Primary inputs are the nodes with no
fan-in, primary outputs the nodes with no fan-out, and the combinational
block CB is everything else.  OUTPUT(name) normally just marks a signal; a
separate sink node is created only when the named signal also drives other
gates, so that "no fan-out" stays literally true for every primary output.
"""

from __future__ import annotations

import csv
import graphlib
import heapq
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

__all__ = ["BenchParseError", "PathCountError", "Node", "CircuitGraph", "PathList",
           "parse_bench", "enumerate_paths", "count_paths_dp", "to_bench",
           "write_paths_csv", "GATE_TYPES"]

GATE_TYPES = ("AND", "NAND", "OR", "NOR", "NOT", "XOR", "BUFF", "BUF")
_UNARY = {"NOT", "BUFF", "BUF"}


class BenchParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int = 1):
        super().__init__("line %d, column %d: %s" % (line, col, msg))
        self.line = line
        self.col = col


class PathCountError(RuntimeError):
    """Raised when full enumeration would exceed the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(
            "circuit has %d PI->PO paths, more than the enumeration cap %d; "
            "use the arrival-time formulation instead of path enumeration" % (count, cap)
        )
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Node:
    name: str
    kind: str                       # "input" | "output" | "gate"
    gate_type: Optional[str]        # None for inputs, sinks and synthetic nodes
    fanin: Tuple[str, ...]          # declared order


class CircuitGraph:
    """Immutable combinational circuit DAG with derived node sets."""

    def __init__(self, nodes: Sequence[Node], declared_outputs: Sequence[str] = ()):
        self._nodes: Dict[str, Node] = {}
        for nd in nodes:
            if nd.name in self._nodes:
                raise ValueError("duplicate node %r" % nd.name)
            self._nodes[nd.name] = nd
        fo: Dict[str, List[str]] = {n: [] for n in self._nodes}
        for nd in self._nodes.values():
            for src in nd.fanin:
                if src not in self._nodes:
                    raise ValueError("fan-in %r of %r is not a node" % (src, nd.name))
                fo[src].append(nd.name)
        self._fanout: Dict[str, Tuple[str, ...]] = {
            n: tuple(sorted(v)) for n, v in fo.items()
        }
        self.declared_outputs: Tuple[str, ...] = tuple(declared_outputs)
        # topological order, lexicographic among ready nodes
        indeg = {n: len(self._nodes[n].fanin) for n in self._nodes}
        ready = [n for n, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order: List[str] = []
        while ready:
            n = heapq.heappop(ready)
            order.append(n)
            for m in self._fanout[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    heapq.heappush(ready, m)
        if len(order) != len(self._nodes):
            stuck = sorted(n for n, d in indeg.items() if d > 0)
            raise ValueError("cycle involving %r" % stuck[0])
        self.topo_order: Tuple[str, ...] = tuple(order)
        self.pi = frozenset(n for n in self._nodes if not self._nodes[n].fanin)
        self.po = frozenset(n for n in self._nodes if not self._fanout[n])
        self.cb = frozenset(self._nodes) - self.pi - self.po

    # access ------------------------------------------------------------

    def node(self, name: str) -> Node:
        return self._nodes[name]

    def names(self) -> List[str]:
        return sorted(self._nodes)

    def fi(self, name: str) -> Tuple[str, ...]:
        return tuple(sorted(self._nodes[name].fanin))

    def fo(self, name: str) -> Tuple[str, ...]:
        return self._fanout[name]

    def n_nodes(self) -> int:
        return len(self._nodes)

    def n_edges(self) -> int:
        return sum(len(nd.fanin) for nd in self._nodes.values())

    def gates(self) -> List[str]:
        return sorted(n for n, nd in self._nodes.items() if nd.kind == "gate")

    @classmethod
    def from_edges(cls, edges: Iterable[Tuple[str, str]],
                   nodes: Iterable[str] = ()) -> "CircuitGraph":
        """Build a synthetic circuit from a directed edge list."""
        fanin: Dict[str, List[str]] = {str(n): [] for n in nodes}
        for a, b in edges:
            a, b = str(a), str(b)
            fanin.setdefault(a, [])
            fanin.setdefault(b, []).append(a)
        out = []
        for name in sorted(fanin):
            fin = tuple(fanin[name])
            kind = "input" if not fin else "gate"
            out.append(Node(name, kind, None, fin))
        return cls(out)


@dataclass(frozen=True)
class PathList:
    paths: Tuple[Tuple[str, ...], ...]
    count: int


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_NAME_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.[]-")


class _Scanner:
    def __init__(self, text: str, lineno: int):
        self.s = text
        self.i = 0
        self.lineno = lineno

    def fail(self, msg: str):
        raise BenchParseError(msg, self.lineno, self.i + 1)

    def skip_ws(self):
        while self.i < len(self.s) and self.s[self.i] in " \t":
            self.i += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.i >= len(self.s)

    def name(self) -> Tuple[str, int]:
        self.skip_ws()
        start = self.i
        while self.i < len(self.s) and self.s[self.i] in _NAME_CHARS:
            self.i += 1
        if self.i == start:
            self.fail("expected a signal name")
        return self.s[start:self.i], start + 1

    def expect(self, ch: str):
        self.skip_ws()
        if self.i >= len(self.s) or self.s[self.i] != ch:
            self.fail("expected '%s'" % ch)
        self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.s[self.i] if self.i < len(self.s) else ""


def parse_bench(text: str) -> CircuitGraph:
    inputs: Dict[str, int] = {}
    gates: Dict[str, Tuple[str, Tuple[str, ...], int, int]] = {}
    outputs: List[Tuple[str, int, int]] = []
    arg_sites: List[Tuple[str, int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        sc = _Scanner(line, lineno)
        if sc.at_end():
            continue
        ident, col = sc.name()
        if sc.peek() == "(":
            word = ident.upper()
            if word not in ("INPUT", "OUTPUT"):
                raise BenchParseError("unknown directive %r" % ident, lineno, col)
            sc.expect("(")
            sig, scol = sc.name()
            sc.expect(")")
            if not sc.at_end():
                sc.fail("trailing text after declaration")
            if word == "INPUT":
                if sig in inputs:
                    raise BenchParseError("duplicate INPUT declaration of %r" % sig, lineno, scol)
                inputs[sig] = lineno
            else:
                if any(sig == o[0] for o in outputs):
                    raise BenchParseError("duplicate OUTPUT declaration of %r" % sig, lineno, scol)
                outputs.append((sig, lineno, scol))
            continue
        # gate definition: name = GATE(a, b, ...)
        sc.expect("=")
        gt, gcol = sc.name()
        gate = gt.upper()
        if gate not in GATE_TYPES:
            raise BenchParseError("unknown gate type %r" % gt, lineno, gcol)
        sc.expect("(")
        args: List[str] = []
        while True:
            arg, acol = sc.name()
            args.append(arg)
            arg_sites.append((arg, lineno, acol))
            if sc.peek() == ",":
                sc.expect(",")
                continue
            break
        sc.expect(")")
        if not sc.at_end():
            sc.fail("trailing text after gate definition")
        if ident in gates or ident in inputs:
            raise BenchParseError("duplicate definition of %r" % ident, lineno, col)
        if gate in _UNARY and len(args) != 1:
            raise BenchParseError("%s takes exactly one input, got %d" % (gate, len(args)),
                                  lineno, gcol)
        if gate not in _UNARY and len(args) < 2:
            raise BenchParseError("%s needs at least two inputs, got %d" % (gate, len(args)),
                                  lineno, gcol)
        if len(set(args)) != len(args):
            dup = next(a for a in args if args.count(a) > 1)
            raise BenchParseError("repeated fan-in %r" % dup, lineno, gcol)
        gates[ident] = (gate, tuple(args), lineno, col)

    defined = set(inputs) | set(gates)
    for arg, lineno, col in arg_sites:
        if arg not in defined:
            raise BenchParseError("undeclared signal %r" % arg, lineno, col)
    for sig, lineno, col in outputs:
        if sig not in defined:
            raise BenchParseError("undeclared signal %r in OUTPUT" % sig, lineno, col)

    drives: Dict[str, int] = {n: 0 for n in defined}
    for gate, args, _, _ in gates.values():
        for a in args:
            drives[a] += 1

    nodes: List[Node] = []
    for name in inputs:
        nodes.append(Node(name, "input", None, ()))
    for name, (gate, args, _, _) in gates.items():
        nodes.append(Node(name, "gate", gate, args))
    for sig, lineno, col in outputs:
        if drives[sig] > 0:
            sink = sig + "__po"
            while sink in defined:
                sink += "_"
            nodes.append(Node(sink, "output", None, (sig,)))
    try:
        return CircuitGraph(nodes, declared_outputs=tuple(o[0] for o in outputs))
    except ValueError as e:
        msg = str(e)
        if msg.startswith("cycle involving"):
            name = msg.split("'")[1]
            if name in gates:
                raise BenchParseError("definition of %r closes a cycle" % name,
                                      gates[name][2], gates[name][3]) from None
        raise


def to_bench(g: CircuitGraph) -> str:
    """Serialize back to .bench text (sinks become OUTPUT declarations)."""
    lines: List[str] = []
    for name in sorted(n for n in g.names() if g.node(n).kind == "input"):
        lines.append("INPUT(%s)" % name)
    declared = g.declared_outputs
    if not declared:
        # synthetic graph: every no-fan-out gate is an output
        declared = tuple(sorted(n for n in g.po if g.node(n).kind != "input"))
    for name in sorted(declared):
        lines.append("OUTPUT(%s)" % name)
    for name in g.topo_order:
        nd = g.node(name)
        if nd.kind != "gate":
            continue
        gt = nd.gate_type or ("BUFF" if len(nd.fanin) == 1 else "AND")
        lines.append("%s = %s(%s)" % (name, gt, ", ".join(nd.fanin)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------


def count_paths_dp(g: CircuitGraph) -> int:
    """PI->PO path count by dynamic programming over a topological order."""
    ts = graphlib.TopologicalSorter({n: set(g.node(n).fanin) for n in g.names()})
    order = list(ts.static_order())
    ways: Dict[str, int] = {}
    for name in reversed(order):
        if name in g.po:
            ways[name] = 1
        else:
            ways[name] = sum(ways[m] for m in g.fo(name))
    return sum(ways[p] for p in sorted(g.pi))


def enumerate_paths(g: CircuitGraph, cap: int = 10 ** 6) -> PathList:
    """All PI->PO paths by depth-first search in sorted-id order."""
    total = count_paths_dp(g)
    if total > cap:
        raise PathCountError(total, cap)
    paths: List[Tuple[str, ...]] = []
    stack: List[str] = []

    def dfs(name: str):
        stack.append(name)
        if name in g.po:
            paths.append(tuple(stack))
        else:
            for m in g.fo(name):
                dfs(m)
        stack.pop()

    import sys
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, g.n_nodes() + 100))
    try:
        for p in sorted(g.pi):
            dfs(p)
    finally:
        sys.setrecursionlimit(old_limit)
    return PathList(tuple(paths), len(paths))


def write_paths_csv(pl: PathList, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["path_id", "node_sequence"])
    for i, p in enumerate(pl.paths):
        w.writerow([i, " ".join(p)])

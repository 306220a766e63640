"""Seeded random instance generation for experiments and tests.

All randomness flows through counter-based Philox streams keyed by
(seed, family-tag + index), so the same seed reproduces the same instance
on any platform and instances of different families never share a stream.
Parameter ranges are not hard-coded: they live in a versioned defaults
file (data/instance_defaults.json) so experiments can be pinned to a
distribution, not just a seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .expr import GenExpr, GgpProblem, Monomial, Posynomial, Pow, Prod, const, make_registry, max_of
from .floorplan import (AXES, ArrangementSpec, FloorplanConfig, KIND_CIRCUIT, KIND_HEAT,
                        ModuleSpec)
from .interconnect import RcTree, Segment
from .netlist import CircuitGraph, parse_bench
from .sizing import SizingConstraints, SizingParams, build_power, sized_gates, x_name

__all__ = ["InstanceError", "RngConfig", "DEFAULTS_VERSION", "load_defaults",
           "bundled_bench", "demo_graph",
           "SizingInstance", "seeded_sizing", "sizing_params_csv",
           "InterconnectInstance", "seeded_interconnect",
           "FloorplanPair", "seeded_floorplan_pair",
           "FloorplanInstance", "seeded_floorplan_grid",
           "RandomGgp", "random_ggp", "seeded_fit_dataset"]

DEFAULTS_VERSION = 1

_U64 = (1 << 64) - 1

# Stream tags keep instance families on disjoint Philox keys.
_FAMILY = {
    "sizing": 1 << 20,
    "interconnect": 2 << 20,
    "floorplan_pair": 3 << 20,
    "floorplan_grid": 4 << 20,
    "random_ggp": 5 << 20,
    "fit": 6 << 20,
}


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class RngConfig:
    """Seed for counter-based (splittable) random streams.

    Each instance family draws from Philox keyed by (seed, tag + index);
    identical seeds give identical parameter streams everywhere.
    """

    seed: int

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InstanceError("seed must be an integer, got %r" % (self.seed,))
        if not 0 <= self.seed <= _U64:
            raise InstanceError("seed must fit in 64 bits, got %d" % self.seed)

    def stream(self, family: str, idx: int = 0) -> np.random.Generator:
        if family not in _FAMILY:
            raise InstanceError("unknown stream family %r (use one of %s)"
                                % (family, ", ".join(sorted(_FAMILY))))
        if idx < 0:
            raise InstanceError("stream index must be nonnegative")
        key = np.array([self.seed, (_FAMILY[family] + idx) & _U64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _as_cfg(seed: Union[int, RngConfig]) -> RngConfig:
    return seed if isinstance(seed, RngConfig) else RngConfig(seed)


# ---------------------------------------------------------------------------
# defaults file and bundled fixtures
# ---------------------------------------------------------------------------


def load_defaults(path: Optional[Union[str, Path]] = None) -> Dict:
    """Load the versioned parameter-range table (bundled copy by default)."""
    if path is None:
        text = resources.files("gpdesign.data").joinpath("instance_defaults.json").read_text()
    else:
        text = Path(path).read_text()
    table = json.loads(text)
    if not isinstance(table, dict) or "version" not in table:
        raise InstanceError("defaults file has no version field")
    if table["version"] != DEFAULTS_VERSION:
        raise InstanceError("defaults version %r unsupported (expected %d)"
                            % (table["version"], DEFAULTS_VERSION))
    return table


def bundled_bench(name: str) -> str:
    """Text of a bundled ISCAS-85 benchmark ('c17' or 'c499')."""
    fname = name if name.endswith(".bench") else name + ".bench"
    ref = resources.files("gpdesign.data").joinpath(fname)
    if not ref.is_file():
        raise InstanceError("no bundled benchmark named %r" % name)
    return ref.read_text()


def demo_graph() -> CircuitGraph:
    """Small nonplanar 13-node topology: two primary inputs feeding three
    internal layers into two primary outputs, 40 distinct paths in total."""
    edges = [("1", "3"), ("1", "4"), ("2", "5"), ("2", "6"), ("3", "7")]
    for a in ("4", "5", "6"):
        edges += [(a, "7"), (a, "8"), (a, "9")]
    for a in ("7", "8", "9"):
        edges += [(a, "10"), (a, "11")]
    for a in ("10", "11"):
        edges += [(a, "12"), (a, "13")]
    return CircuitGraph.from_edges(edges)


def _lu(rng: np.random.Generator, rng_pair, size=None):
    """Log-uniform draw over [lo, hi]."""
    lo, hi = float(rng_pair[0]), float(rng_pair[1])
    if not 0 < lo <= hi:
        raise InstanceError("bad log-uniform range [%g, %g]" % (lo, hi))
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


# ---------------------------------------------------------------------------
# gate sizing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SizingInstance:
    graph: CircuitGraph
    params: SizingParams
    cons: SizingConstraints
    unit_power: float
    unit_volume: float


def seeded_sizing(seed: Union[int, RngConfig], graph: Optional[CircuitGraph] = None,
                  idx: int = 0, defaults: Optional[Dict] = None) -> SizingInstance:
    """Draw per-node electrical parameters for a circuit (bundled c17 when
    none is given).  The power and volume caps scale with the unit-sizing
    point so every instance is feasible at x = 1 by construction."""
    cfg = _as_cfg(seed)
    table = (defaults or load_defaults())["sizing"]
    g = graph if graph is not None else parse_bench(bundled_bench("c17"))
    rng = cfg.stream("sizing", idx)

    gates = sized_gates(g)
    params = SizingParams()
    for n in sorted(g.names()):
        nd = g.node(n)
        if nd.kind == "input":
            params.f[n] = float(_lu(rng, table["f"]))
        elif nd.kind == "gate":
            params.f[n] = float(_lu(rng, table["f"]))
            params.rbar[n] = float(_lu(rng, table["rbar"]))
            params.cin[n] = float(_lu(rng, table["cin"]))
            params.cint[n] = float(_lu(rng, table["cint"]))
            params.vol[n] = float(_lu(rng, table["vol"]))
            params.ileak[n] = float(_lu(rng, table["ileak"]))
            if not g.fo(n):
                params.cload[n] = float(_lu(rng, table["cload"]))
        elif nd.kind == "output":
            params.cload[n] = float(_lu(rng, table["cload"]))

    unit = {x_name(n): 1.0 for n in gates}
    unit_power = build_power(g, params).eval(unit)
    unit_volume = sum(params.vol[n] for n in gates)
    cons = SizingConstraints(p_max=table["p_max_factor"] * unit_power,
                             vol_max=table["vol_max_factor"] * unit_volume)
    return SizingInstance(g, params, cons, unit_power, unit_volume)


def sizing_params_csv(g: CircuitGraph, params: SizingParams) -> str:
    """Serialize drawn parameters in the column layout SizingParams.from_csv
    reads, so generated instances can be archived next to their results."""
    cols = ("f", "rbar", "cin", "cint", "vol", "ileak", "cload", "x_max")
    lines = ["node," + ",".join(cols)]
    for n in sorted(g.names()):
        cells = [n]
        for c in cols:
            tab = getattr(params, c)
            cells.append(repr(tab[n]) if n in tab else "")
        if any(cells[1:]):
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# interconnect
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterconnectInstance:
    tree: RcTree
    vol_max: float


def seeded_interconnect(seed: Union[int, RngConfig], idx: int = 0,
                        defaults: Optional[Dict] = None) -> InterconnectInstance:
    """Five-segment two-branch RC tree: the root splits into an inner branch
    (which splits again into two leaves) and a direct leaf.  The driver
    resistance r0 is always positive so that widening the root segment
    eventually stops paying off and the optimal width saturates."""
    cfg = _as_cfg(seed)
    table = (defaults or load_defaults())["interconnect"]
    rng = cfg.stream("interconnect", idx)

    topology = (("1", None), ("2", "1"), ("3", "2"), ("4", "2"), ("5", "1"))
    children = {p for _, p in topology if p is not None}
    segs = []
    for sid, parent in topology:
        a, b, c = (float(v) for v in _lu(rng, table["coeff"], 3))
        leaf = sid not in children
        cl = float(_lu(rng, table["c_load"])) if leaf else 0.0
        segs.append(Segment(sid, parent, a, b, c, cl,
                            w_min=table["w_min"], w_max=table["w_max"],
                            l_min=table["l_min"], l_max=table["l_max"]))
    r0 = float(_lu(rng, table["r0"]))
    return InterconnectInstance(RcTree(segs, r0=r0), float(table["vol_max"]))


# ---------------------------------------------------------------------------
# floorplanning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FloorplanPair:
    modules: Tuple[ModuleSpec, ...]
    arr_3d: ArrangementSpec
    arr_2d: ArrangementSpec


def seeded_floorplan_pair(seed: Union[int, RngConfig], idx: int = 0,
                          defaults: Optional[Dict] = None) -> FloorplanPair:
    """Four circuit modules arranged two ways over the same parameters:
    a stacked layout (three thin dies piled in z, a thin connector module
    standing beside them) versus the same modules side by side in a plane."""
    cfg = _as_cfg(seed)
    table = (defaults or load_defaults())["floorplan_pair"]
    rng = cfg.stream("floorplan_pair", idx)

    mods: List[ModuleSpec] = []
    for i in range(1, 4):
        xm, ym = (float(v) for v in _lu(rng, table["footprint_min"], 2))
        zm = float(_lu(rng, table["thin_min"]))
        p = float(_lu(rng, table["power"]))
        k = float(_lu(rng, table["conductivity"]))
        mods.append(ModuleSpec(str(i), KIND_CIRCUIT, xm, ym, zm, "Z", power=p, conductivity=k))
    xm = float(_lu(rng, table["thin_min"]))
    ym, zm = (float(v) for v in _lu(rng, table["side_min"], 2))
    p = float(_lu(rng, table["power"]))
    k = float(_lu(rng, table["conductivity"]))
    mods.append(ModuleSpec("4", KIND_CIRCUIT, xm, ym, zm, "X", power=p, conductivity=k))

    z_max = float(table["z_max"])
    arr_3d = ArrangementSpec({
        "X": (("1", "4"), ("2", "4"), ("3", "4")),
        "Y": (("1",), ("2",), ("3",), ("4",)),
        "Z": (("1", "2", "3"), ("4",)),
    }, z_max)
    arr_2d = ArrangementSpec({
        "X": (("1", "2", "3", "4"),),
        "Y": (("1",), ("2",), ("3",), ("4",)),
        "Z": (("1",), ("2",), ("3",), ("4",)),
    }, z_max)
    return FloorplanPair(tuple(mods), arr_3d, arr_2d)


@dataclass(frozen=True)
class FloorplanInstance:
    modules: Tuple[ModuleSpec, ...]
    arrangement: ArrangementSpec


def seeded_floorplan_grid(seed: Union[int, RngConfig], shape: Tuple[int, int, int] = (6, 5, 5),
                          idx: int = 0, defaults: Optional[Dict] = None) -> FloorplanInstance:
    """Random modules packed on an nx-by-ny-by-nz grid.  Every grid line is an
    alignment chain, so the arrangement covers each module once per axis.
    A fraction of modules are passive heat-removal blocks."""
    nx, ny, nz = shape
    if min(nx, ny, nz) < 1:
        raise InstanceError("grid shape must be positive, got %r" % (shape,))
    cfg = _as_cfg(seed)
    table = (defaults or load_defaults())["floorplan_grid"]
    rng = cfg.stream("floorplan_grid", idx)

    def mid(i: int, j: int, k: int) -> str:
        return "m%d_%d_%d" % (i, j, k)

    mods: List[ModuleSpec] = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                xm, ym = (float(v) for v in _lu(rng, table["xy_min"], 2))
                zm = float(_lu(rng, table["z_min"]))
                orient = AXES[int(rng.integers(0, 3))]
                heat = float(rng.random()) < float(table["heat_fraction"])
                if heat:
                    mods.append(ModuleSpec(mid(i, j, k), KIND_HEAT, xm, ym, zm, orient))
                else:
                    p = float(_lu(rng, table["power"]))
                    c = float(_lu(rng, table["conductivity"]))
                    mods.append(ModuleSpec(mid(i, j, k), KIND_CIRCUIT, xm, ym, zm, orient,
                                           power=p, conductivity=c))
    if all(m.kind == KIND_HEAT for m in mods):
        # degenerate draw on tiny grids; force one active module
        m0 = mods[0]
        mods[0] = ModuleSpec(m0.mid, KIND_CIRCUIT, m0.x_min, m0.y_min, m0.z_min,
                             m0.orientation, power=1.0, conductivity=1.0)

    chains = {
        "X": tuple(tuple(mid(i, j, k) for i in range(nx))
                   for j in range(ny) for k in range(nz)),
        "Y": tuple(tuple(mid(i, j, k) for j in range(ny))
                   for i in range(nx) for k in range(nz)),
        "Z": tuple(tuple(mid(i, j, k) for k in range(nz))
                   for i in range(nx) for j in range(ny)),
    }
    arr = ArrangementSpec(chains, float(table["z_max"]))
    return FloorplanInstance(tuple(mods), arr)


# ---------------------------------------------------------------------------
# random small GGPs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomGgp:
    """A compact random problem plus the box its variables live in.

    The anchor point is strictly feasible by construction: every random
    constraint gets its right-hand side set to the anchor value times a
    slack factor above one.  Box bounds keep the feasible set compact so
    grid search over [lo, hi] is a valid independent check."""

    problem: GgpProblem
    names: Tuple[str, ...]
    anchor: Tuple[float, ...]
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]


def _random_posy(rng: np.random.Generator, names: Sequence[str], table: Dict,
                 xbar: Dict[str, float]) -> Tuple[Posynomial, float]:
    """Random posynomial and its value at the anchor."""
    n_terms = int(rng.integers(1, int(table["max_terms"]) + 1))
    elo, ehi = table["exponent"]
    terms = []
    val = 0.0
    for _ in range(n_terms):
        c = float(_lu(rng, table["coeff"]))
        exps = {}
        tv = c
        for nm in names:
            a = float(rng.uniform(elo, ehi))
            if abs(a) > 0.15:  # keep some sparsity
                exps[nm] = a
                tv *= xbar[nm] ** a
        terms.append(Monomial(c, exps))
        val += tv
    return Posynomial(terms), val


def random_ggp(seed: Union[int, RngConfig], idx: int = 0,
               defaults: Optional[Dict] = None) -> RandomGgp:
    """Generate a random generalized problem with at most three variables.

    Constraint forms cycle through plain posynomials, pointwise maxima,
    and products with powers at least one, so lowering sees every
    generalized construct.  All right-hand sides are calibrated at a
    random anchor point, which therefore stays strictly feasible."""
    cfg = _as_cfg(seed)
    table = (defaults or load_defaults())["random_ggp"]
    rng = cfg.stream("random_ggp", idx)

    n = int(rng.integers(1, 4))
    names = tuple("x%d" % (j + 1) for j in range(n))
    anchor = [float(v) for v in _lu(rng, table["anchor"], n)]
    xbar = dict(zip(names, anchor))
    box = float(table["box_factor"])

    obj, _ = _random_posy(rng, names, table, xbar)
    objective: GenExpr = obj
    if rng.random() < 0.3:
        second, _ = _random_posy(rng, names, table, xbar)
        objective = max_of(obj, second)

    ineqs: List[Tuple[GenExpr, Monomial]] = []
    n_cons = int(rng.integers(1, int(table["max_constraints"]) + 1))
    for c_idx in range(n_cons):
        form = c_idx % 3
        u = float(_lu(rng, table["slack"]))
        if form == 0:
            p1, v1 = _random_posy(rng, names, table, xbar)
            lhs: GenExpr = p1
            val = v1
        elif form == 1:
            p1, v1 = _random_posy(rng, names, table, xbar)
            p2, v2 = _random_posy(rng, names, table, xbar)
            lhs = max_of(p1, p2)
            val = max(v1, v2)
        else:
            p1, v1 = _random_posy(rng, names, table, xbar)
            p2, v2 = _random_posy(rng, names, table, xbar)
            pw = float(rng.uniform(*table["power"]))
            lhs = Prod([p1, Pow(p2, pw)])
            val = v1 * v2 ** pw
        ineqs.append((lhs, const(val * u)))
    for nm in names:
        ineqs.append((Monomial(1.0 / (xbar[nm] * box), {nm: 1.0}), const(1.0)))
        ineqs.append((Monomial(xbar[nm] / box, {nm: -1.0}), const(1.0)))

    prob = GgpProblem(make_registry(names), objective, ineqs, [])
    lo = tuple(v / box for v in anchor)
    hi = tuple(v * box for v in anchor)
    return RandomGgp(prob, names, tuple(anchor), lo, hi)


# ---------------------------------------------------------------------------
# fitting datasets
# ---------------------------------------------------------------------------


def seeded_fit_dataset(seed: Union[int, RngConfig], n_vars: int = 2, n_terms: int = 2,
                       n_samples: int = 80, noise: float = 0.0, idx: int = 0,
                       defaults: Optional[Dict] = None):
    """Sample a hidden positive-coefficient model on log-uniform points.

    Returns (names, X, f, model): the sample matrix, the observed values
    (optionally with multiplicative log-normal noise), and the generating
    posynomial.  Kept free of the fitting module so its output can be fed
    to any estimator."""
    if n_vars < 1 or n_terms < 1 or n_samples < 1:
        raise InstanceError("n_vars, n_terms and n_samples must be positive")
    cfg = _as_cfg(seed)
    table = (defaults or load_defaults())["fit"]
    rng = cfg.stream("fit", idx)

    names = tuple("x%d" % (j + 1) for j in range(n_vars))
    elo, ehi = table["exponent"]
    terms = []
    for _ in range(n_terms):
        c = float(_lu(rng, table["coeff"]))
        exps = {nm: float(rng.uniform(elo, ehi)) for nm in names}
        terms.append(Monomial(c, exps))
    model = Posynomial(terms)

    X = np.asarray(_lu(rng, table["sample"], (n_samples, n_vars)))
    f = np.empty(n_samples)
    for s in range(n_samples):
        point = {nm: float(X[s, j]) for j, nm in enumerate(names)}
        f[s] = model.eval(point)
    if noise > 0.0:
        f *= np.exp(noise * rng.standard_normal(n_samples))
    return names, X, f, model

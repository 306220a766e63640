"""Temperature-aware floorplanning for stacked 3D module arrangements.

Each module i has free dimensions (x_i, y_i, z_i) above fixed minima.  Its
temperature is modeled by the monomial (P_i / K_i) * thickness / area where
the thickness is the dimension along the module's orientation axis and the
area is the product of the other two.  Heat-removal modules occupy space
but contribute no temperature term.

Relative positions enter through axis chains: an ordered group of modules
whose dimensions along one axis stack additively.  Per axis, the largest
chain sum bounds the corresponding dimension of the enclosing box (X, Y,
Z), and the objective alpha * X*Y*Z + (1 - alpha) * sum(T_i) trades box
volume against total temperature.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .expr import (GenExpr, GgpProblem, Monomial, Posynomial, const,
                   make_registry, max_of)

__all__ = [
    "FloorplanError",
    "KIND_CIRCUIT",
    "KIND_HEAT",
    "AXES",
    "ModuleSpec",
    "ArrangementSpec",
    "FloorplanConfig",
    "FloorplanSolution",
    "dim_name",
    "parse_modules",
    "load_modules",
    "write_modules_csv",
    "parse_arrangement",
    "load_arrangement",
    "write_arrangement_json",
    "temperature_exprs",
    "bounding_constraints",
    "build_floorplan_ggp",
    "summarize_floorplan",
    "min_point",
    "numeric_objective",
]

KIND_CIRCUIT = "circuit"
KIND_HEAT = "heat"
AXES = ("X", "Y", "Z")

_MODULE_COLUMNS = ("id", "kind", "xmin", "ymin", "zmin", "orientation", "P", "K")
_KIND_TOKENS = {
    "circuit": KIND_CIRCUIT,
    "circuitelement": KIND_CIRCUIT,
    "heat": KIND_HEAT,
    "heatremoval": KIND_HEAT,
}


class FloorplanError(ValueError):
    """Raised for malformed module lists, arrangements, or configs."""


def dim_name(axis: str, mid: str) -> str:
    """Variable name of a module dimension, e.g. dim_name("X", "4") == "x_4"."""
    return axis.lower() + "_" + mid


@dataclass(frozen=True)
class ModuleSpec:
    """One module: minimum dimensions, thickness axis, thermal data."""

    mid: str
    kind: str
    x_min: float
    y_min: float
    z_min: float
    orientation: str
    power: Optional[float] = None
    conductivity: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (KIND_CIRCUIT, KIND_HEAT):
            raise FloorplanError("module %r: unknown kind %r" % (self.mid, self.kind))
        if self.orientation not in AXES:
            raise FloorplanError(
                "module %r: orientation must be one of %s, got %r"
                % (self.mid, "/".join(AXES), self.orientation))
        for v, what in ((self.x_min, "xmin"), (self.y_min, "ymin"), (self.z_min, "zmin")):
            if not v > 0:
                raise FloorplanError(
                    "module %r: %s must be positive, got %g" % (self.mid, what, v))
        if self.kind == KIND_CIRCUIT:
            if self.power is None or not self.power > 0:
                raise FloorplanError(
                    "module %r: circuit elements need positive power P" % self.mid)
            if self.conductivity is None or not self.conductivity > 0:
                raise FloorplanError(
                    "module %r: circuit elements need positive conductivity K" % self.mid)

    def mins(self) -> Dict[str, float]:
        return {"X": self.x_min, "Y": self.y_min, "Z": self.z_min}


@dataclass(frozen=True)
class ArrangementSpec:
    """Axis chains plus the manufacturing cap on the Z dimension."""

    chains: Dict[str, Tuple[Tuple[str, ...], ...]]
    z_max: float

    def __post_init__(self):
        if set(self.chains) != set(AXES):
            raise FloorplanError(
                "arrangement must define chains for axes %s" % ", ".join(AXES))
        for axis in AXES:
            for chain in self.chains[axis]:
                if not chain:
                    raise FloorplanError("axis %s has an empty chain" % axis)
                if len(set(chain)) != len(chain):
                    raise FloorplanError(
                        "axis %s chain %r repeats a module" % (axis, list(chain)))
        if not self.z_max > 0:
            raise FloorplanError("zmax must be positive, got %g" % self.z_max)

    def check_covers(self, modules: Sequence[ModuleSpec]) -> None:
        """Every module must appear in at least one chain per axis, and
        chains must not mention unknown modules."""
        ids = {m.mid for m in modules}
        for axis in AXES:
            seen: set = set()
            for chain in self.chains[axis]:
                for mid in chain:
                    if mid not in ids:
                        raise FloorplanError(
                            "axis %s chain mentions unknown module %r" % (axis, mid))
                    seen.add(mid)
            missing = ids - seen
            if missing:
                raise FloorplanError(
                    "module(s) %s missing from axis %s chains"
                    % (", ".join(sorted(missing)), axis))


@dataclass(frozen=True)
class FloorplanConfig:
    """alpha = 1 optimizes box volume only; alpha = 0 temperature only."""

    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise FloorplanError("alpha must lie in [0, 1], got %g" % self.alpha)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def parse_modules(text: str) -> List[ModuleSpec]:
    """CSV columns: id,kind,xmin,ymin,zmin,orientation,P,K.

    P and K may be left empty for heat-removal modules.
    """
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None:
        raise FloorplanError("module file is empty")
    got = [h.strip() for h in reader.fieldnames]
    unknown = [h for h in got if h not in _MODULE_COLUMNS]
    if unknown:
        raise FloorplanError("unknown column(s) %s in module file" % ", ".join(map(repr, unknown)))
    missing = [h for h in _MODULE_COLUMNS if h not in got]
    if missing:
        raise FloorplanError("module file is missing column(s) %s" % ", ".join(map(repr, missing)))
    out: List[ModuleSpec] = []
    seen: set = set()
    for rownum, row in enumerate(reader, start=2):
        mid = (row["id"] or "").strip()
        if not mid:
            raise FloorplanError("row %d: empty module id" % rownum)
        if mid in seen:
            raise FloorplanError("row %d: duplicate module id %r" % (rownum, mid))
        seen.add(mid)
        kind_raw = (row["kind"] or "").strip().lower().replace("_", "").replace("-", "")
        if kind_raw not in _KIND_TOKENS:
            raise FloorplanError("row %d: unknown kind %r" % (rownum, row["kind"]))
        kind = _KIND_TOKENS[kind_raw]

        def num(col: str, optional: bool = False) -> Optional[float]:
            raw = (row[col] or "").strip()
            if not raw:
                if optional:
                    return None
                raise FloorplanError("row %d: column %r is empty" % (rownum, col))
            try:
                return float(raw)
            except ValueError:
                raise FloorplanError(
                    "row %d: column %r is not a number: %r" % (rownum, col, raw)) from None

        orientation = (row["orientation"] or "").strip().upper()
        try:
            out.append(ModuleSpec(mid, kind, num("xmin"), num("ymin"), num("zmin"),
                                  orientation, num("P", optional=True),
                                  num("K", optional=True)))
        except FloorplanError as e:
            raise FloorplanError("row %d: %s" % (rownum, e)) from None
    if not out:
        raise FloorplanError("module file has no rows")
    return out


def load_modules(path) -> List[ModuleSpec]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_modules(fh.read())


def write_modules_csv(modules: Sequence[ModuleSpec], fh) -> None:
    w = csv.writer(fh)
    w.writerow(_MODULE_COLUMNS)
    for m in modules:
        w.writerow([m.mid, m.kind, repr(m.x_min), repr(m.y_min), repr(m.z_min),
                    m.orientation,
                    "" if m.power is None else repr(m.power),
                    "" if m.conductivity is None else repr(m.conductivity)])


def parse_arrangement(doc) -> ArrangementSpec:
    """JSON object {"chains": {"X": [[ids]...], "Y": ..., "Z": ...}, "zmax": v}."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise FloorplanError("arrangement is not valid JSON: %s" % e) from None
    if not isinstance(doc, dict):
        raise FloorplanError("arrangement must be a JSON object")
    extra = set(doc) - {"chains", "zmax"}
    if extra:
        raise FloorplanError("unknown arrangement key(s) %s" % ", ".join(sorted(map(repr, extra))))
    if "chains" not in doc or "zmax" not in doc:
        raise FloorplanError("arrangement needs 'chains' and 'zmax'")
    raw = doc["chains"]
    if not isinstance(raw, dict):
        raise FloorplanError("'chains' must map axes to chain lists")
    chains: Dict[str, Tuple[Tuple[str, ...], ...]] = {}
    for axis, lst in raw.items():
        axis_u = str(axis).upper()
        if axis_u not in AXES:
            raise FloorplanError("unknown axis %r in chains" % axis)
        if not isinstance(lst, list):
            raise FloorplanError("chains for axis %s must be a list of lists" % axis_u)
        packed: List[Tuple[str, ...]] = []
        for chain in lst:
            if not isinstance(chain, list):
                raise FloorplanError("chains for axis %s must be a list of lists" % axis_u)
            packed.append(tuple(str(x) for x in chain))
        chains[axis_u] = tuple(packed)
    for axis in AXES:
        chains.setdefault(axis, ())
    zmax = doc["zmax"]
    if not isinstance(zmax, (int, float)) or isinstance(zmax, bool):
        raise FloorplanError("zmax must be a number")
    return ArrangementSpec(chains, float(zmax))


def load_arrangement(path) -> ArrangementSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_arrangement(fh.read())


def write_arrangement_json(arr: ArrangementSpec, fh) -> None:
    doc = {"chains": {axis: [list(c) for c in arr.chains[axis]] for axis in AXES},
           "zmax": arr.z_max}
    json.dump(doc, fh, indent=2, sort_keys=True)
    fh.write("\n")


# ---------------------------------------------------------------------------
# expression building
# ---------------------------------------------------------------------------


_ORIENT_AREA = {"X": ("Y", "Z"), "Y": ("X", "Z"), "Z": ("X", "Y")}


def temperature_exprs(modules: Sequence[ModuleSpec]) -> Dict[str, Monomial]:
    """Monomial temperature per circuit module; heat removers are omitted."""
    out: Dict[str, Monomial] = {}
    for m in modules:
        if m.kind != KIND_CIRCUIT:
            continue
        a1, a2 = _ORIENT_AREA[m.orientation]
        exps = {dim_name(m.orientation, m.mid): 1.0,
                dim_name(a1, m.mid): -1.0,
                dim_name(a2, m.mid): -1.0}
        out[m.mid] = Monomial(m.power / m.conductivity, exps)
    return out


def bounding_constraints(arr: ArrangementSpec,
                         modules: Optional[Sequence[ModuleSpec]] = None
                         ) -> List[Tuple[GenExpr, Monomial]]:
    """Per axis: the largest chain sum must fit inside the box dimension."""
    if modules is not None:
        arr.check_covers(modules)
    out: List[Tuple[GenExpr, Monomial]] = []
    for axis in AXES:
        sums: List[Posynomial] = []
        for chain in arr.chains[axis]:
            terms = [Monomial(1.0, {dim_name(axis, mid): 1.0}) for mid in chain]
            sums.append(Posynomial(terms))
        if not sums:
            continue
        out.append((max_of(*sums), Monomial(1.0, {axis: 1.0})))
    return out


def build_floorplan_ggp(modules: Sequence[ModuleSpec], arr: ArrangementSpec,
                        cfg: FloorplanConfig) -> GgpProblem:
    """minimize alpha*X*Y*Z + (1-alpha)*sum(T_i) over module dimensions.

    Zero-coefficient monomials are illegal, so the volume term is omitted
    at alpha = 0 and the temperature terms at alpha = 1.
    """
    if not modules:
        raise FloorplanError("no modules")
    arr.check_covers(modules)
    names: List[str] = []
    for m in modules:
        for axis in AXES:
            names.append(dim_name(axis, m.mid))
    names.extend(AXES)

    terms: List[Monomial] = []
    if cfg.alpha > 0.0:
        terms.append(Monomial(cfg.alpha, {"X": 1.0, "Y": 1.0, "Z": 1.0}))
    if cfg.alpha < 1.0:
        for m in modules:
            t = temperature_exprs([m]).get(m.mid)
            if t is not None:
                terms.append(Monomial((1.0 - cfg.alpha) * t.c, dict(t.exps)))
    if not terms:
        raise FloorplanError(
            "objective has no terms (alpha = 0 with no circuit modules)")
    objective = Posynomial(terms)

    ineqs: List[Tuple[GenExpr, Monomial]] = []
    for m in modules:
        for axis, lo in m.mins().items():
            v = Monomial(1.0, {dim_name(axis, m.mid): 1.0})
            ineqs.append((const(lo) / v, const(1.0)))
    ineqs.append((Monomial(1.0, {"Z": 1.0}), const(arr.z_max)))
    ineqs.extend(bounding_constraints(arr))
    return GgpProblem(make_registry(names), objective, ineqs, [])


# ---------------------------------------------------------------------------
# numeric evaluation (independent of the expression machinery)
# ---------------------------------------------------------------------------


def _numeric_temps(modules: Sequence[ModuleSpec],
                   dims: Mapping[str, Mapping[str, float]]) -> Dict[str, float]:
    temps: Dict[str, float] = {}
    for m in modules:
        if m.kind != KIND_CIRCUIT:
            continue
        d = dims[m.mid]
        a1, a2 = _ORIENT_AREA[m.orientation]
        temps[m.mid] = (m.power / m.conductivity) * d[m.orientation] / (d[a1] * d[a2])
    return temps


def _chain_extents(arr: ArrangementSpec,
                   dims: Mapping[str, Mapping[str, float]]) -> Dict[str, float]:
    ext: Dict[str, float] = {}
    for axis in AXES:
        best = 0.0
        for chain in arr.chains[axis]:
            best = max(best, sum(dims[mid][axis] for mid in chain))
        ext[axis] = best
    return ext


def min_point(modules: Sequence[ModuleSpec]) -> Dict[str, Dict[str, float]]:
    """All dimensions at their minima."""
    return {m.mid: dict(m.mins()) for m in modules}


def numeric_objective(modules: Sequence[ModuleSpec], arr: ArrangementSpec,
                      cfg: FloorplanConfig,
                      dims: Mapping[str, Mapping[str, float]],
                      box: Optional[Mapping[str, float]] = None) -> float:
    """Objective by plain arithmetic; the box defaults to the tightest one.

    Raises if the implied Z exceeds the manufacturing cap.
    """
    ext = _chain_extents(arr, dims)
    if box is None:
        box = ext
    else:
        for axis in AXES:
            if box[axis] < ext[axis] - 1e-9 * max(1.0, ext[axis]):
                raise FloorplanError(
                    "box dimension %s=%g smaller than chain extent %g"
                    % (axis, box[axis], ext[axis]))
    if box["Z"] > arr.z_max * (1.0 + 1e-9):
        raise FloorplanError(
            "Z=%g exceeds zmax=%g" % (box["Z"], arr.z_max))
    total = cfg.alpha * box["X"] * box["Y"] * box["Z"]
    if cfg.alpha < 1.0:
        total += (1.0 - cfg.alpha) * sum(_numeric_temps(modules, dims).values())
    return total


@dataclass
class FloorplanSolution:
    """Numeric summary of a solved floorplan."""

    dims: Dict[str, Dict[str, float]]
    box: Dict[str, float]
    temps: Dict[str, float]
    objective: float


def summarize_floorplan(modules: Sequence[ModuleSpec], arr: ArrangementSpec,
                        cfg: FloorplanConfig,
                        values: Mapping[str, float]) -> FloorplanSolution:
    """Summarize solver output given the variable-name to value mapping."""
    dims = {m.mid: {axis: float(values[dim_name(axis, m.mid)]) for axis in AXES}
            for m in modules}
    box = {axis: float(values[axis]) for axis in AXES}
    temps = _numeric_temps(modules, dims)
    obj = numeric_objective(modules, arr, cfg, dims, box)
    return FloorplanSolution(dims, box, temps, obj)

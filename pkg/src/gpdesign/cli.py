"""Command-line interface and experiment harness.

Subcommands cover the whole pipeline: `solve` for problem files, `paths`
for circuit path counting, `size` / `interconnect` / `floorplan` for the
seeded design studies, `fit` for posynomial regression, and `rerun` to
replay a recorded run manifest.  Every run that writes artifacts also
writes a manifest (inputs with digests, seed, configuration, solver
statistics) sufficient to reproduce its CSV outputs byte for byte.

Exit codes: 0 optimal/success, 2 usage errors, 3 infeasible, 4 unbounded,
5 parse or build errors, 6 numerical failure or iteration limit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .expr import DomainError, ModelingError
from .fit import FitConfig, FitError, fit_posynomial, parse_dataset, FitDataset
from .floorplan import (FloorplanConfig, FloorplanError, build_floorplan_ggp, parse_arrangement,
                        parse_modules, summarize_floorplan, write_arrangement_json,
                        write_modules_csv)
from .interconnect import (InterconnectError, build_interconnect_ggp, load_tree, min_volume,
                           parse_tree, summarize_solution, write_tree_csv)
from .netlist import BenchParseError, PathCountError, count_paths_dp, enumerate_paths, parse_bench, write_paths_csv
from .instances import (InstanceError, bundled_bench, demo_graph, seeded_floorplan_grid,
                        seeded_floorplan_pair, seeded_interconnect, seeded_sizing,
                        seeded_fit_dataset, sizing_params_csv)
from .problem_io import load_problem
from .sizing import (SizingBuildError, SizingConstraints, SizingParams, build_sizing_ggp,
                     evaluate_report, sized_gates, write_report_csv, write_sizes_csv, x_name)
from .solver import SolverConfig, Status, solve_ggp

__all__ = ["main", "SweepSpec", "parse_sweep"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_UNBOUNDED = 4
EXIT_PARSE = 5
EXIT_NUMERIC = 6

ENV_OUTDIR = "GPDESIGN_OUT"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

_PARSE_ERRORS = (BenchParseError, PathCountError, SizingBuildError, InterconnectError,
                 FloorplanError, FitError, ModelingError, DomainError, InstanceError,
                 json.JSONDecodeError)


# ---------------------------------------------------------------------------
# sweep specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep: `name:lo:hi:steps[:scale]` with linear or log
    spacing, endpoints included."""

    parameter: str
    lo: float
    hi: float
    steps: int
    scale: str = "linear"

    def __post_init__(self):
        if not self.parameter:
            raise ValueError("sweep parameter name is empty")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError("sweep needs finite lo < hi, got [%g, %g]" % (self.lo, self.hi))
        if self.steps < 2:
            raise ValueError("sweep needs at least 2 steps, got %d" % self.steps)
        if self.scale not in ("linear", "log"):
            raise ValueError("sweep scale must be linear or log, got %r" % self.scale)
        if self.scale == "log" and self.lo <= 0:
            raise ValueError("log-scale sweep needs lo > 0")

    def values(self) -> List[float]:
        if self.scale == "log":
            pts = np.geomspace(self.lo, self.hi, self.steps)
        else:
            pts = np.linspace(self.lo, self.hi, self.steps)
        return [float(v) for v in pts]


def parse_sweep(text: str) -> SweepSpec:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ValueError("sweep must look like name:lo:hi:steps[:scale], got %r" % text)
    name, lo, hi, steps = parts[:4]
    scale = parts[4] if len(parts) == 5 else "linear"
    try:
        return SweepSpec(name, float(lo), float(hi), int(steps), scale)
    except ValueError as e:
        raise ValueError("bad sweep %r: %s" % (text, e)) from None


def _sweep_arg(text: str) -> SweepSpec:
    try:
        return parse_sweep(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


def _existing_file(text: str) -> Path:
    p = Path(text)
    if not p.is_file():
        raise argparse.ArgumentTypeError("no such file: %s" % text)
    return p


def _bench_arg(text: str):
    p = Path(text)
    if p.is_file():
        return p
    if text in ("c17", "c499", "c17.bench", "c499.bench"):
        return text.replace(".bench", "")
    raise argparse.ArgumentTypeError("no such file or bundled benchmark: %s" % text)


def _grid_arg(text: str) -> Tuple[int, int, int]:
    try:
        nx, ny, nz = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid shape must look like 6x5x5") from None
    if min(nx, ny, nz) < 1:
        raise argparse.ArgumentTypeError("grid shape entries must be positive")
    return nx, ny, nz


def _fmt(v) -> str:
    if isinstance(v, float):
        # normalize numpy scalars so repr stays a plain digit string
        return repr(float(v))
    return str(v)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(c) for c in row])
    return buf.getvalue()


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _Run:
    """Collects artifacts for one invocation and writes the manifest."""

    def __init__(self, args, subcommand: str):
        out = args.outdir or os.environ.get(ENV_OUTDIR) or "gpdesign_out"
        self.dir = Path(out)
        self.subcommand = subcommand
        self.argv: List[str] = getattr(args, "_argv", [])
        self.inputs: List[Dict[str, str]] = []
        self.outputs: List[str] = []

    def note_input(self, path: Path) -> None:
        self.inputs.append({"path": str(path), "sha256": _sha256(path.read_bytes())})

    def write(self, name: str, text: str) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / name).write_text(text)
        self.outputs.append(name)

    def finish(self, config: Dict, stats: Dict) -> None:
        doc = {
            "manifest_version": MANIFEST_VERSION,
            "subcommand": self.subcommand,
            "argv": self.argv,
            "inputs": self.inputs,
            "config": config,
            "stats": stats,
            "outputs": sorted(self.outputs),
        }
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / MANIFEST_NAME).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _solver_config(args) -> Optional[SolverConfig]:
    fields = {}
    if args.mu is not None:
        fields["barrier_mu"] = args.mu
    if args.gap_tol is not None:
        fields["duality_gap_tol"] = args.gap_tol
    if args.newton_tol is not None:
        fields["newton_tol"] = args.newton_tol
    if args.max_newton is not None:
        fields["max_newton"] = args.max_newton
    if args.t0 is not None:
        fields["t0"] = args.t0
    return SolverConfig(**fields) if fields else None


def _config_dict(cfg: Optional[SolverConfig]) -> Dict:
    if cfg is None:
        return {}
    return {"barrier_mu": cfg.barrier_mu, "t0": cfg.t0, "newton_tol": cfg.newton_tol,
            "duality_gap_tol": cfg.duality_gap_tol, "max_newton": cfg.max_newton}


def _status_line(sol, prefix: str = "") -> str:
    head = (prefix + " " if prefix else "") + sol.status.value
    if math.isfinite(sol.objective_value) and sol.status in (Status.OPTIMAL, Status.ITERATION_LIMIT):
        return "%s %s" % (head, _fmt(sol.objective_value))
    return head


def _exit_for(status: Status) -> int:
    if status == Status.OPTIMAL:
        return EXIT_OK
    if status == Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    if status == Status.UNBOUNDED:
        return EXIT_UNBOUNDED
    return EXIT_NUMERIC


def _sol_stats(sol) -> Dict:
    stats = {"status": sol.status.value, "objective": sol.objective_value,
             "iterations": sol.raw.iterations, "t_final": sol.raw.t_final}
    if sol.raw.kkt is not None:
        stats["kkt"] = {"primal_residual": sol.raw.kkt.primal_residual,
                        "equality_residual": sol.raw.kkt.equality_residual,
                        "duality_gap": sol.raw.kkt.duality_gap}
    if sol.raw.message:
        stats["message"] = sol.raw.message
    return stats


# ---------------------------------------------------------------------------
# sweep execution (point builders are top-level so worker processes can
# receive plain picklable payloads)
# ---------------------------------------------------------------------------


def _sizing_instance(payload: Dict):
    g = parse_bench(payload["bench_text"])
    if payload.get("params_text") is not None:
        params = SizingParams.from_csv(payload["params_text"])
    else:
        params = seeded_sizing(payload["seed"], graph=g).params
    cons = SizingConstraints(p_max=payload["p_max"], vol_max=payload["vol_max"])
    return g, params, cons


def _interconnect_instance(payload: Dict):
    tree = parse_tree(payload["tree_text"], r0=payload.get("r0"))
    return tree, payload["vol_max"]


def _sweep_point(payload: Dict) -> Dict:
    """Build and solve one sweep point; returns a CSV row as a dict."""
    sub = payload["sub"]
    param = payload["param"]
    value = payload["value"]
    cfg = SolverConfig(**payload["solver"]) if payload["solver"] else None
    try:
        if sub == "size":
            g, params, cons = _sizing_instance(dict(payload))
            if param == "vol_max":
                cons = SizingConstraints(p_max=cons.p_max, vol_max=value)
            else:
                cons = SizingConstraints(p_max=value, vol_max=cons.vol_max)
            prob = build_sizing_ggp(g, params, cons, mode=payload["mode"])
        elif sub == "interconnect":
            tree, vol_max = _interconnect_instance(payload)
            if param == "vol_max":
                vol_max = value
            elif param.startswith("wmax."):
                sid = param[5:]
                s = tree.segments[sid]
                tree = tree.with_segment(sid, w_max=value, w_min=min(s.w_min, value))
            elif param.startswith("wmin."):
                sid = param[5:]
                s = tree.segments[sid]
                tree = tree.with_segment(sid, w_min=value, w_max=max(s.w_max, value))
            prob = build_interconnect_ggp(tree, vol_max)
        else:
            raise ValueError("unknown sweep subject %r" % sub)
    except _PARSE_ERRORS as e:
        return {"value": value, "status": Status.INFEASIBLE.value, "objective": "",
                "iterations": 0, "message": str(e)}
    sol = solve_ggp(prob, cfg)
    return {"value": value, "status": sol.status.value, "objective": sol.objective_value,
            "iterations": sol.raw.iterations, "message": sol.raw.message}


def _floorplan_pair_point(payload: Dict) -> Dict:
    cfg = SolverConfig(**payload["solver"]) if payload["solver"] else None
    pair = seeded_floorplan_pair(payload["seed"])
    fcfg = FloorplanConfig(alpha=payload["value"])
    row: Dict = {"value": payload["value"]}
    for tag, arr in (("3d", pair.arr_3d), ("2d", pair.arr_2d)):
        sol = solve_ggp(build_floorplan_ggp(pair.modules, arr, fcfg), cfg)
        row["status_" + tag] = sol.status.value
        row["objective_" + tag] = sol.objective_value
    return row


def _floorplan_single_point(payload: Dict) -> Dict:
    cfg = SolverConfig(**payload["solver"]) if payload["solver"] else None
    modules = parse_modules(payload["modules_text"])
    arr = parse_arrangement(payload["arrangement_text"])
    try:
        prob = build_floorplan_ggp(modules, arr, FloorplanConfig(alpha=payload["value"]))
    except _PARSE_ERRORS as e:
        return {"value": payload["value"], "status": Status.INFEASIBLE.value,
                "objective": "", "iterations": 0, "message": str(e)}
    sol = solve_ggp(prob, cfg)
    return {"value": payload["value"], "status": sol.status.value,
            "objective": sol.objective_value, "iterations": sol.raw.iterations,
            "message": sol.raw.message}


def _run_points(worker, payloads: List[Dict], jobs: int) -> List[Dict]:
    if jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads))


def _sweep_exit(rows: List[Dict], key: str = "status") -> int:
    statuses = {r[key] for r in rows}
    if Status.OPTIMAL.value in statuses:
        return EXIT_OK
    print("sweep produced no optimal point (statuses: %s)"
          % ", ".join(sorted(statuses)), file=sys.stderr)
    return EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_paths(args) -> int:
    if args.demo:
        g = demo_graph()
    elif args.bench is None:
        print("paths needs --bench or --demo", file=sys.stderr)
        return EXIT_USAGE
    else:
        text = bundled_bench(args.bench) if isinstance(args.bench, str) else args.bench.read_text()
        g = parse_bench(text)
    print(count_paths_dp(g))
    if args.csv:
        pl = enumerate_paths(g, cap=args.cap)
        buf = io.StringIO()
        write_paths_csv(pl, buf)
        Path(args.csv).write_text(buf.getvalue())
    return EXIT_OK


def cmd_solve(args) -> int:
    run = _Run(args, "solve")
    run.note_input(args.problem)
    p = load_problem(args.problem)
    cfg = _solver_config(args)
    sol = solve_ggp(p, cfg)
    print(_status_line(sol))
    if sol.raw.message:
        print(sol.raw.message, file=sys.stderr)
    rows = [(nm, val) for nm, val in sol.values.items()]
    run.write("solution.csv", _csv_text(("variable", "value"), rows))
    run.finish(_config_dict(cfg), _sol_stats(sol))
    return _exit_for(sol.status)


def cmd_size(args) -> int:
    run = _Run(args, "size")
    cfg = _solver_config(args)

    if args.bench is None:
        bench_text = bundled_bench("c17")
        bench_label = "c17"
    elif isinstance(args.bench, str):
        bench_text = bundled_bench(args.bench)
        bench_label = args.bench
    else:
        run.note_input(args.bench)
        bench_text = args.bench.read_text()
        bench_label = str(args.bench)
    g = parse_bench(bench_text)

    params_text = None
    if args.params is not None:
        run.note_input(args.params)
        params_text = args.params.read_text()
        params = SizingParams.from_csv(params_text)
        if args.p_max is None or args.vol_max is None:
            print("--params requires explicit --p-max and --vol-max", file=sys.stderr)
            return EXIT_USAGE
        p_max, vol_max = args.p_max, args.vol_max
    else:
        si = seeded_sizing(args.seed, graph=g)
        params = si.params
        p_max = args.p_max if args.p_max is not None else si.cons.p_max
        vol_max = args.vol_max if args.vol_max is not None else si.cons.vol_max
        run.write("params.csv", sizing_params_csv(g, params))

    base_config = {"bench": bench_label, "seed": args.seed, "p_max": p_max,
                   "vol_max": vol_max, "mode": args.mode, **_config_dict(cfg)}

    if args.sweep is not None:
        spec = args.sweep
        if spec.parameter not in ("vol_max", "p_max"):
            print("size sweeps support vol_max or p_max, got %r" % spec.parameter,
                  file=sys.stderr)
            return EXIT_USAGE
        payloads = [{"sub": "size", "param": spec.parameter, "value": v,
                     "bench_text": bench_text, "params_text": params_text,
                     "seed": args.seed, "p_max": p_max, "vol_max": vol_max,
                     "mode": args.mode, "solver": _config_dict(cfg)}
                    for v in spec.values()]
        rows = _run_points(_sweep_point, payloads, args.jobs)
        run.write("sweep.csv", _csv_text(
            (spec.parameter, "status", "objective", "iterations", "message"),
            [(r["value"], r["status"], r["objective"], r["iterations"], r["message"])
             for r in rows]))
        run.finish(base_config, {"sweep": spec.__dict__,
                                 "optimal_points": sum(r["status"] == "Optimal" for r in rows)})
        return _sweep_exit(rows)

    cons = SizingConstraints(p_max=p_max, vol_max=vol_max)
    sol = solve_ggp(build_sizing_ggp(g, params, cons, mode=args.mode), cfg)
    print(_status_line(sol))
    if sol.raw.message:
        print(sol.raw.message, file=sys.stderr)
    stats = _sol_stats(sol)
    if sol.status == Status.OPTIMAL:
        xstar = {n: sol.values[x_name(n)] for n in sized_gates(g)}
        report = evaluate_report(g, params, xstar)
        buf = io.StringIO()
        write_sizes_csv(report, buf)
        run.write("sizes.csv", buf.getvalue())
        buf = io.StringIO()
        write_report_csv(report, buf)
        run.write("report.csv", buf.getvalue())
        stats["improvement_pct"] = report.improvement_pct
    run.finish(base_config, stats)
    return _exit_for(sol.status)


def cmd_interconnect(args) -> int:
    run = _Run(args, "interconnect")
    cfg = _solver_config(args)

    if args.tree is not None:
        run.note_input(args.tree)
        tree_text = args.tree.read_text()
        tree = parse_tree(tree_text, r0=args.r0)
        vol_max = args.vol_max
        if vol_max is None:
            print("--tree requires an explicit --vol-max", file=sys.stderr)
            return EXIT_USAGE
    else:
        inst = seeded_interconnect(args.seed)
        tree = inst.tree
        vol_max = args.vol_max if args.vol_max is not None else inst.vol_max
        buf = io.StringIO()
        write_tree_csv(tree, buf)
        tree_text = buf.getvalue()
        run.write("tree.csv", tree_text)

    base_config = {"seed": args.seed, "vol_max": vol_max, "r0": tree.r0,
                   **_config_dict(cfg)}

    if args.sweep is not None:
        spec = args.sweep
        ok = spec.parameter == "vol_max" or (
            spec.parameter.startswith(("wmax.", "wmin."))
            and spec.parameter.split(".", 1)[1] in tree.segments)
        if not ok:
            print("interconnect sweeps support vol_max, wmax.<segment> or wmin.<segment>; "
                  "got %r" % spec.parameter, file=sys.stderr)
            return EXIT_USAGE
        payloads = [{"sub": "interconnect", "param": spec.parameter, "value": v,
                     "tree_text": tree_text, "r0": tree.r0, "vol_max": vol_max,
                     "solver": _config_dict(cfg)}
                    for v in spec.values()]
        rows = _run_points(_sweep_point, payloads, args.jobs)
        run.write("sweep.csv", _csv_text(
            (spec.parameter, "status", "objective", "iterations", "message"),
            [(r["value"], r["status"], r["objective"], r["iterations"], r["message"])
             for r in rows]))
        run.finish(base_config, {"sweep": spec.__dict__,
                                 "optimal_points": sum(r["status"] == "Optimal" for r in rows)})
        return _sweep_exit(rows)

    try:
        prob = build_interconnect_ggp(tree, vol_max)
    except InterconnectError as e:
        print(Status.INFEASIBLE.value)
        print(str(e), file=sys.stderr)
        run.finish(base_config, {"status": Status.INFEASIBLE.value, "message": str(e)})
        return EXIT_INFEASIBLE
    sol = solve_ggp(prob, cfg)
    print(_status_line(sol))
    if sol.raw.message:
        print(sol.raw.message, file=sys.stderr)
    stats = _sol_stats(sol)
    if sol.status == Status.OPTIMAL:
        summary = summarize_solution(tree, sol.values, vol_max)
        run.write("design.csv", _csv_text(
            ("segment", "length", "width"),
            [(sid, summary.l[sid], summary.w[sid]) for sid in tree.order]))
        run.write("delays.csv", _csv_text(
            ("leaf", "delay"),
            [(leaf, summary.leaf_delay[leaf]) for leaf in sorted(summary.leaf_delay)]))
        stats["worst_delay"] = summary.worst_delay
        stats["binding"] = list(summary.binding)
    run.finish(base_config, stats)
    return _exit_for(sol.status)


def cmd_floorplan(args) -> int:
    run = _Run(args, "floorplan")
    cfg = _solver_config(args)

    if args.pair:
        base_config = {"seed": args.seed, "instance": "pair", **_config_dict(cfg)}
        if args.sweep is not None:
            if args.sweep.parameter != "alpha":
                print("floorplan sweeps support only alpha", file=sys.stderr)
                return EXIT_USAGE
            payloads = [{"seed": args.seed, "value": v, "solver": _config_dict(cfg)}
                        for v in args.sweep.values()]
            rows = _run_points(_floorplan_pair_point, payloads, args.jobs)
            run.write("sweep.csv", _csv_text(
                ("alpha", "status_3d", "objective_3d", "status_2d", "objective_2d"),
                [(r["value"], r["status_3d"], r["objective_3d"],
                  r["status_2d"], r["objective_2d"]) for r in rows]))
            n_ok = sum(r["status_3d"] == "Optimal" and r["status_2d"] == "Optimal"
                       for r in rows)
            run.finish(base_config, {"sweep": args.sweep.__dict__, "optimal_points": n_ok})
            statuses = [{"status": r["status_3d"]} for r in rows] + \
                       [{"status": r["status_2d"]} for r in rows]
            return _sweep_exit(statuses)
        pair = seeded_floorplan_pair(args.seed)
        fcfg = FloorplanConfig(alpha=args.alpha)
        stats = {}
        code = EXIT_OK
        for tag, arr in (("3d", pair.arr_3d), ("2d", pair.arr_2d)):
            sol = solve_ggp(build_floorplan_ggp(pair.modules, arr, fcfg), cfg)
            print(_status_line(sol, prefix=tag))
            stats[tag] = _sol_stats(sol)
            if sol.status == Status.OPTIMAL:
                summary = summarize_floorplan(pair.modules, arr, fcfg, sol.values)
                run.write("dims_%s.csv" % tag, _csv_text(
                    ("module", "x", "y", "z"),
                    [(m.mid, summary.dims[m.mid]["X"], summary.dims[m.mid]["Y"],
                      summary.dims[m.mid]["Z"]) for m in pair.modules]))
            code = max(code, _exit_for(sol.status))
        buf = io.StringIO()
        write_modules_csv(pair.modules, buf)
        run.write("modules.csv", buf.getvalue())
        run.finish({**base_config, "alpha": args.alpha}, stats)
        return code

    if args.grid is not None:
        inst = seeded_floorplan_grid(args.seed, shape=args.grid)
        modules, arr = inst.modules, inst.arrangement
        label = "grid %dx%dx%d" % args.grid
    elif args.modules is not None and args.arrangement is not None:
        run.note_input(args.modules)
        run.note_input(args.arrangement)
        modules = parse_modules(args.modules.read_text())
        arr = parse_arrangement(args.arrangement.read_text())
        label = "files"
    else:
        print("floorplan needs --pair, --grid, or --modules with --arrangement",
              file=sys.stderr)
        return EXIT_USAGE

    base_config = {"seed": args.seed, "instance": label, "alpha": args.alpha,
                   **_config_dict(cfg)}
    buf = io.StringIO()
    write_modules_csv(modules, buf)
    run.write("modules.csv", buf.getvalue())
    buf = io.StringIO()
    write_arrangement_json(arr, buf)
    run.write("arrangement.json", buf.getvalue())

    if args.sweep is not None:
        if args.sweep.parameter != "alpha":
            print("floorplan sweeps support only alpha", file=sys.stderr)
            return EXIT_USAGE
        modules_text = (run.dir / "modules.csv").read_text()
        arrangement_text = (run.dir / "arrangement.json").read_text()
        payloads = [{"modules_text": modules_text, "arrangement_text": arrangement_text,
                     "value": v, "solver": _config_dict(cfg)}
                    for v in args.sweep.values()]
        rows = _run_points(_floorplan_single_point, payloads, args.jobs)
        run.write("sweep.csv", _csv_text(
            ("alpha", "status", "objective", "iterations", "message"),
            [(r["value"], r["status"], r["objective"], r["iterations"], r["message"])
             for r in rows]))
        run.finish(base_config, {"sweep": args.sweep.__dict__,
                                 "optimal_points": sum(r["status"] == "Optimal" for r in rows)})
        return _sweep_exit(rows)

    fcfg = FloorplanConfig(alpha=args.alpha)
    sol = solve_ggp(build_floorplan_ggp(modules, arr, fcfg), cfg)
    print(_status_line(sol))
    if sol.raw.message:
        print(sol.raw.message, file=sys.stderr)
    stats = _sol_stats(sol)
    if sol.status == Status.OPTIMAL:
        summary = summarize_floorplan(modules, arr, fcfg, sol.values)
        run.write("dims.csv", _csv_text(
            ("module", "x", "y", "z"),
            [(m.mid, summary.dims[m.mid]["X"], summary.dims[m.mid]["Y"],
              summary.dims[m.mid]["Z"]) for m in modules]))
        if summary.temps:
            run.write("temps.csv", _csv_text(
                ("module", "temperature"),
                [(mid, summary.temps[mid]) for mid in sorted(summary.temps)]))
        stats["box"] = summary.box
    run.finish(base_config, stats)
    return _exit_for(sol.status)


def cmd_fit(args) -> int:
    run = _Run(args, "fit")
    cfg = FitConfig(seed=args.seed)
    if args.data is not None:
        run.note_input(args.data)
        dataset = parse_dataset(args.data.read_text())
        names = dataset.names
    else:
        names, X, f, _model = seeded_fit_dataset(
            args.seed, n_vars=args.gen_vars, n_terms=args.gen_terms,
            n_samples=args.gen_samples, noise=args.noise)
        rows = [tuple(X[s]) + (f[s],) for s in range(len(f))]
        run.write("data.csv", _csv_text(tuple(names) + ("f",), rows))
        dataset = FitDataset(names, X, f)
    result = fit_posynomial(dataset, args.terms, cfg)
    print("residual %s terms %d converged %s"
          % (_fmt(result.residual), len(result.model.terms), result.converged))
    rows = []
    for i, term in enumerate(result.model.terms):
        rows.append((i, term.c) + tuple(term.exps.get(nm, 0.0) for nm in names))
    run.write("model.csv", _csv_text(("term", "coeff") + tuple(names), rows))
    run.finish({"seed": args.seed, "terms": args.terms},
               {"residual": result.residual, "converged": result.converged})
    return EXIT_OK


def cmd_rerun(args) -> int:
    doc = json.loads(args.manifest.read_text())
    if doc.get("manifest_version") != MANIFEST_VERSION:
        print("unsupported manifest version %r" % doc.get("manifest_version"),
              file=sys.stderr)
        return EXIT_PARSE
    argv = [a for a in doc.get("argv", []) if a]
    if not argv or argv[0] == "rerun":
        print("manifest has no replayable command line", file=sys.stderr)
        return EXIT_PARSE
    cleaned: List[str] = []
    skip = False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--outdir":
            skip = True
            continue
        if a.startswith("--outdir="):
            continue
        cleaned.append(a)
    if args.outdir:
        cleaned += ["--outdir", args.outdir]
    return main(cleaned)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="gpdesign",
        description="Generalized geometric programming for 3D circuit design studies.")
    sub = top.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--outdir", default=None,
                        help="artifact directory (default: $%s or ./gpdesign_out)" % ENV_OUTDIR)
    common.add_argument("--seed", type=int, default=0, help="instance seed (default 0)")
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel solves for sweep points (default 1)")
    common.add_argument("--sweep", type=_sweep_arg, default=None, metavar="NAME:LO:HI:STEPS[:SCALE]",
                        help="sweep one parameter instead of a single solve")
    common.add_argument("--mu", type=float, default=None, help="barrier growth factor")
    common.add_argument("--t0", type=float, default=None, help="initial barrier weight")
    common.add_argument("--gap-tol", type=float, default=None, help="duality gap tolerance")
    common.add_argument("--newton-tol", type=float, default=None, help="Newton decrement tolerance")
    common.add_argument("--max-newton", type=int, default=None, help="Newton step cap per centering")

    p = sub.add_parser("paths", help="count (and optionally enumerate) circuit paths")
    p.add_argument("--bench", type=_bench_arg, default=None,
                   help="bench file path, or bundled name c17 / c499")
    p.add_argument("--demo", action="store_true", help="use the built-in 13-node example")
    p.add_argument("--csv", default=None, help="also enumerate paths into this CSV file")
    p.add_argument("--cap", type=int, default=10 ** 6, help="enumeration safety cap")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("solve", parents=[common], help="solve a problem file")
    p.add_argument("--problem", type=_existing_file, required=True, help="problem JSON file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("size", parents=[common], help="gate sizing study")
    p.add_argument("--bench", type=_bench_arg, default=None,
                   help="bench file path or bundled name (default c17)")
    p.add_argument("--params", type=_existing_file, default=None,
                   help="parameter CSV (default: draw from --seed)")
    p.add_argument("--p-max", type=float, default=None, help="power cap override")
    p.add_argument("--vol-max", type=float, default=None, help="volume cap override")
    p.add_argument("--mode", choices=("paths", "arrival"), default="paths",
                   help="delay formulation (default paths)")
    p.set_defaults(func=cmd_size)

    p = sub.add_parser("interconnect", parents=[common], help="wire sizing study")
    p.add_argument("--tree", type=_existing_file, default=None,
                   help="RC tree CSV (default: seeded two-branch tree)")
    p.add_argument("--r0", type=float, default=None, help="driver resistance for --tree")
    p.add_argument("--vol-max", type=float, default=None, help="wiring volume cap override")
    p.set_defaults(func=cmd_interconnect)

    p = sub.add_parser("floorplan", parents=[common], help="thermal floorplanning study")
    p.add_argument("--pair", action="store_true",
                   help="seeded four-module instance, stacked vs coplanar")
    p.add_argument("--grid", type=_grid_arg, default=None, metavar="NXxNYxNZ",
                   help="seeded grid instance of this shape")
    p.add_argument("--modules", type=_existing_file, default=None, help="module CSV file")
    p.add_argument("--arrangement", type=_existing_file, default=None,
                   help="arrangement JSON file")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="volume/temperature trade-off weight (default 0.5)")
    p.set_defaults(func=cmd_floorplan)

    p = sub.add_parser("fit", parents=[common], help="fit a posynomial model to data")
    p.add_argument("--data", type=_existing_file, default=None,
                   help="sample CSV with an f column (default: generate from --seed)")
    p.add_argument("--terms", type=int, default=2, help="number of model terms (default 2)")
    p.add_argument("--gen-vars", type=int, default=2, help="generated dataset: variables")
    p.add_argument("--gen-terms", type=int, default=2, help="generated dataset: true terms")
    p.add_argument("--gen-samples", type=int, default=80, help="generated dataset: samples")
    p.add_argument("--noise", type=float, default=0.0, help="generated dataset: log-noise sigma")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rerun", help="replay a recorded run manifest")
    p.add_argument("manifest", type=_existing_file, help="manifest.json from a previous run")
    p.add_argument("--outdir", default=None, help="write artifacts here instead")
    p.set_defaults(func=cmd_rerun)

    return top


def main(argv: Optional[Sequence[str]] = None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(raw)
    args._argv = raw
    try:
        return args.func(args)
    except _PARSE_ERRORS as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

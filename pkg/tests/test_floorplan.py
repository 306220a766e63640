"""Tests for temperature-aware floorplan construction and solving."""

import io
import json
import math

import pytest

from gpdesign.expr import Max, Posy
from gpdesign.floorplan import (
    AXES,
    ArrangementSpec,
    FloorplanConfig,
    FloorplanError,
    KIND_CIRCUIT,
    KIND_HEAT,
    ModuleSpec,
    bounding_constraints,
    build_floorplan_ggp,
    dim_name,
    min_point,
    numeric_objective,
    parse_arrangement,
    parse_modules,
    summarize_floorplan,
    temperature_exprs,
    write_arrangement_json,
    write_modules_csv,
)
from gpdesign.instances import seeded_floorplan_pair
from gpdesign.solver import Status, solve_ggp

MOD_CSV = ("id,kind,xmin,ymin,zmin,orientation,P,K\n"
           "m1,circuit,0.5,0.5,1.0,Z,4.0,1.0\n"
           "h1,heat,0.2,0.2,0.2,Z,,\n")


def single_module(p=4.0, k=1.0, mins=(0.5, 0.5, 1.0), orientation="Z"):
    return ModuleSpec("m", KIND_CIRCUIT, *mins, orientation, p, k)


def single_arrangement(z_max=10.0):
    chains = {ax: (("m",),) for ax in AXES}
    return ArrangementSpec(chains, z_max)


class TestSpecs:
    def test_module_validation(self):
        m = single_module()
        assert m.mins() == {"X": 0.5, "Y": 0.5, "Z": 1.0}
        with pytest.raises(FloorplanError):
            ModuleSpec("m", "magnet", 1, 1, 1, "Z", 1, 1)
        with pytest.raises(FloorplanError):
            ModuleSpec("m", KIND_CIRCUIT, 1, 1, 1, "Q", 1, 1)
        with pytest.raises(FloorplanError):
            ModuleSpec("m", KIND_CIRCUIT, 0.0, 1, 1, "Z", 1, 1)
        with pytest.raises(FloorplanError):
            ModuleSpec("m", KIND_CIRCUIT, 1, 1, 1, "Z", None, 1)
        with pytest.raises(FloorplanError):
            ModuleSpec("m", KIND_CIRCUIT, 1, 1, 1, "Z", 1, -2.0)
        # heat removers need no thermal data
        ModuleSpec("h", KIND_HEAT, 1, 1, 1, "Z")

    def test_arrangement_validation(self):
        with pytest.raises(FloorplanError):
            ArrangementSpec({"X": (), "Y": ()}, 1.0)
        with pytest.raises(FloorplanError):
            ArrangementSpec({"X": ((),), "Y": (), "Z": ()}, 1.0)
        with pytest.raises(FloorplanError):
            ArrangementSpec({"X": (("m", "m"),), "Y": (), "Z": ()}, 1.0)
        with pytest.raises(FloorplanError):
            ArrangementSpec({ax: () for ax in AXES}, 0.0)

    def test_check_covers(self):
        arr = single_arrangement()
        arr.check_covers([single_module()])
        with pytest.raises(FloorplanError) as err:
            arr.check_covers([single_module(), ModuleSpec("n", KIND_HEAT, 1, 1, 1, "Z")])
        assert "missing from axis" in str(err.value)
        bad = ArrangementSpec({ax: (("ghost",),) for ax in AXES}, 1.0)
        with pytest.raises(FloorplanError) as err:
            bad.check_covers([single_module()])
        assert "unknown module" in str(err.value)

    def test_config_range(self):
        FloorplanConfig(0.0)
        FloorplanConfig(1.0)
        with pytest.raises(FloorplanError):
            FloorplanConfig(1.5)
        with pytest.raises(FloorplanError):
            FloorplanConfig(-0.1)


class TestFiles:
    def test_parse_modules(self):
        mods = parse_modules(MOD_CSV)
        assert [m.mid for m in mods] == ["m1", "h1"]
        assert mods[0].kind == KIND_CIRCUIT and mods[0].power == 4.0
        assert mods[1].kind == KIND_HEAT and mods[1].power is None

    def test_kind_tokens(self):
        text = MOD_CSV.replace("m1,circuit", "m1,Circuit_Element").replace(
            "h1,heat", "h1,HEAT-REMOVAL")
        mods = parse_modules(text)
        assert mods[0].kind == KIND_CIRCUIT
        assert mods[1].kind == KIND_HEAT

    @pytest.mark.parametrize("text,frag", [
        ("", "empty"),
        ("id,kind\nm,circuit\n", "missing column"),
        (MOD_CSV.replace(",P,K", ",P,K,zz").replace("4.0,1.0", "4.0,1.0,9"),
         "unknown column"),
        (MOD_CSV.replace("m1,circuit", ",circuit"), "row 2: empty module id"),
        (MOD_CSV.replace("h1,heat", "m1,heat"), "duplicate module id"),
        (MOD_CSV.replace("m1,circuit", "m1,gas"), "unknown kind"),
        (MOD_CSV.replace("0.5,0.5,1.0,Z", "x,0.5,1.0,Z"), "not a number"),
        (MOD_CSV.replace("0.5,0.5,1.0,Z", ",0.5,1.0,Z"), "is empty"),
        (MOD_CSV.replace("Z,4.0,1.0", "Z,,1.0"), "row 2"),
        ("id,kind,xmin,ymin,zmin,orientation,P,K\n", "no rows"),
    ])
    def test_parse_module_errors(self, text, frag):
        with pytest.raises(FloorplanError) as err:
            parse_modules(text)
        assert frag in str(err.value)

    def test_modules_round_trip(self):
        mods = parse_modules(MOD_CSV)
        buf = io.StringIO()
        write_modules_csv(mods, buf)
        assert parse_modules(buf.getvalue()) == mods

    def test_parse_arrangement(self):
        doc = {"chains": {"x": [["m"]], "Y": [["m"]], "Z": [["m"]]}, "zmax": 3}
        arr = parse_arrangement(json.dumps(doc))
        assert arr.chains["X"] == (("m",),)
        assert arr.z_max == 3.0
        arr2 = parse_arrangement({"chains": {"X": [["m"]]}, "zmax": 1.0})
        assert arr2.chains["Y"] == ()

    @pytest.mark.parametrize("doc,frag", [
        ("{bad json", "not valid JSON"),
        ("[1]", "must be a JSON object"),
        ({"chains": {}, "zmax": 1, "pad": 2}, "unknown arrangement key"),
        ({"zmax": 1}, "needs 'chains'"),
        ({"chains": [], "zmax": 1}, "must map axes"),
        ({"chains": {"W": []}, "zmax": 1}, "unknown axis"),
        ({"chains": {"X": "m"}, "zmax": 1}, "list of lists"),
        ({"chains": {"X": ["m"]}, "zmax": 1}, "list of lists"),
        ({"chains": {}, "zmax": True}, "zmax must be a number"),
        ({"chains": {}, "zmax": "3"}, "zmax must be a number"),
    ])
    def test_parse_arrangement_errors(self, doc, frag):
        with pytest.raises(FloorplanError) as err:
            parse_arrangement(doc)
        assert frag in str(err.value)

    def test_arrangement_round_trip(self):
        arr = single_arrangement(z_max=4.5)
        buf = io.StringIO()
        write_arrangement_json(arr, buf)
        assert parse_arrangement(buf.getvalue()) == arr


class TestExprs:
    def test_temperature_orientation(self):
        for axis, others in (("Z", ("x_m", "y_m")), ("X", ("y_m", "z_m")),
                             ("Y", ("x_m", "z_m"))):
            t = temperature_exprs([single_module(p=6.0, k=2.0, orientation=axis)])["m"]
            assert t.c == pytest.approx(3.0)
            assert t.exps[dim_name(axis, "m")] == 1.0
            for nm in others:
                assert t.exps[nm] == -1.0

    def test_heat_modules_have_no_temperature(self):
        assert temperature_exprs([ModuleSpec("h", KIND_HEAT, 1, 1, 1, "Z")]) == {}

    def test_bounding_constraints_shape(self):
        m2 = ModuleSpec("n", KIND_CIRCUIT, 0.5, 0.5, 1.0, "Z", 1.0, 1.0)
        arr = ArrangementSpec({"X": (("m", "n"),), "Y": (("m",), ("n",)),
                               "Z": (("m",), ("n",))}, 10.0)
        rows = bounding_constraints(arr, [single_module(), m2])
        assert len(rows) == 3
        x_lhs, x_rhs = rows[0]
        assert isinstance(x_lhs, Posy) and len(x_lhs.posy.terms) == 2
        assert x_rhs.exps == {"X": 1.0}
        y_lhs, _ = rows[1]
        assert isinstance(y_lhs, Max) and len(y_lhs.parts) == 2

    def test_single_chain_skips_max_wrapper(self):
        rows = bounding_constraints(single_arrangement())
        assert all(not isinstance(lhs, Max) for lhs, _ in rows)


class TestSolutions:
    def test_volume_only_hits_minima(self):
        mods = [single_module()]
        sol = solve_ggp(build_floorplan_ggp(mods, single_arrangement(),
                                            FloorplanConfig(1.0)))
        assert sol.status == Status.OPTIMAL
        assert sol.objective_value == pytest.approx(0.5 * 0.5 * 1.0, rel=1e-5)

    def test_balanced_tradeoff_matches_closed_form(self):
        # minimize a*u*zbar + b*zbar/u over the footprint u = x*y gives
        # u* = sqrt(b/a) and objective 2*zbar*sqrt(a*b) when u* clears the
        # minimum footprint; here a = 0.5, b = 0.5*4 = 2, zbar = 1
        alpha = 0.5
        mods = [single_module(p=4.0, k=1.0)]
        sol = solve_ggp(build_floorplan_ggp(mods, single_arrangement(),
                                            FloorplanConfig(alpha)))
        assert sol.status == Status.OPTIMAL
        b = (1 - alpha) * 4.0
        assert sol.objective_value == pytest.approx(2.0 * math.sqrt(alpha * b), rel=1e-5)
        u = sol.values["x_m"] * sol.values["y_m"]
        assert u == pytest.approx(math.sqrt(b / alpha), rel=1e-4)
        assert sol.values["z_m"] == pytest.approx(1.0, rel=1e-5)

    def test_temperature_only_is_unbounded(self):
        sol = solve_ggp(build_floorplan_ggp([single_module()], single_arrangement(),
                                            FloorplanConfig(0.0)))
        assert sol.status == Status.UNBOUNDED

    def test_z_cap_infeasible_when_below_minimum(self):
        sol = solve_ggp(build_floorplan_ggp([single_module()],
                                            single_arrangement(z_max=0.5),
                                            FloorplanConfig(1.0)))
        assert sol.status == Status.INFEASIBLE

    def test_objective_without_terms_rejected(self):
        mods = [ModuleSpec("h", KIND_HEAT, 1, 1, 1, "Z")]
        arr = ArrangementSpec({ax: (("h",),) for ax in AXES}, 10.0)
        with pytest.raises(FloorplanError):
            build_floorplan_ggp(mods, arr, FloorplanConfig(0.0))
        with pytest.raises(FloorplanError):
            build_floorplan_ggp([], single_arrangement(), FloorplanConfig(1.0))

    def test_stacked_beats_planar_for_pair_instance(self):
        inst = seeded_floorplan_pair(11)
        cfg = FloorplanConfig(0.5)
        a = solve_ggp(build_floorplan_ggp(list(inst.modules), inst.arr_3d, cfg))
        b = solve_ggp(build_floorplan_ggp(list(inst.modules), inst.arr_2d, cfg))
        assert a.status == Status.OPTIMAL and b.status == Status.OPTIMAL
        assert a.objective_value <= b.objective_value * (1 + 1e-9)


class TestNumeric:
    def test_numeric_objective_matches_expression(self):
        mods = [single_module()]
        arr = single_arrangement()
        cfg = FloorplanConfig(0.7)
        prob = build_floorplan_ggp(mods, arr, cfg)
        dims = {"m": {"X": 1.2, "Y": 0.9, "Z": 1.4}}
        named = {dim_name(ax, "m"): dims["m"][ax] for ax in AXES}
        named.update({"X": 1.2, "Y": 0.9, "Z": 1.4})
        assert prob.objective.eval(named) == pytest.approx(
            numeric_objective(mods, arr, cfg, dims), rel=1e-12)

    def test_numeric_objective_guards(self):
        mods = [single_module()]
        arr = single_arrangement(z_max=2.0)
        cfg = FloorplanConfig(1.0)
        dims = {"m": {"X": 1.0, "Y": 1.0, "Z": 1.0}}
        with pytest.raises(FloorplanError) as err:
            numeric_objective(mods, arr, cfg, dims, box={"X": 0.5, "Y": 1.0, "Z": 1.0})
        assert "smaller than chain extent" in str(err.value)
        with pytest.raises(FloorplanError) as err:
            numeric_objective(mods, arr, cfg, {"m": {"X": 1.0, "Y": 1.0, "Z": 3.0}})
        assert "exceeds zmax" in str(err.value)

    def test_min_point(self):
        assert min_point([single_module()]) == {"m": {"X": 0.5, "Y": 0.5, "Z": 1.0}}

    def test_summarize(self):
        mods = [single_module()]
        arr = single_arrangement()
        cfg = FloorplanConfig(0.5)
        sol = solve_ggp(build_floorplan_ggp(mods, arr, cfg))
        summary = summarize_floorplan(mods, arr, cfg, sol.values)
        assert summary.objective == pytest.approx(sol.objective_value, rel=1e-6)
        assert set(summary.temps) == {"m"}
        assert summary.box["Z"] == pytest.approx(summary.dims["m"]["Z"], rel=1e-5)

"""Tests for seeded instance generation and the defaults table."""

import json

import numpy as np
import pytest

from gpdesign.instances import (
    DEFAULTS_VERSION,
    InstanceError,
    RngConfig,
    bundled_bench,
    demo_graph,
    load_defaults,
    random_ggp,
    seeded_fit_dataset,
    seeded_floorplan_grid,
    seeded_floorplan_pair,
    seeded_interconnect,
    seeded_sizing,
    sizing_params_csv,
)
from gpdesign.netlist import count_paths_dp, parse_bench
from gpdesign.sizing import SizingParams, build_power, sized_gates, x_name


class TestRngConfig:
    @pytest.mark.parametrize("seed", [1.5, "7", True, -1, 1 << 64])
    def test_bad_seeds(self, seed):
        with pytest.raises(InstanceError):
            RngConfig(seed)

    def test_stream_validation(self):
        cfg = RngConfig(3)
        with pytest.raises(InstanceError):
            cfg.stream("martingale")
        with pytest.raises(InstanceError):
            cfg.stream("sizing", -1)

    def test_streams_are_reproducible(self):
        a = RngConfig(9).stream("sizing", 2).uniform(size=5)
        b = RngConfig(9).stream("sizing", 2).uniform(size=5)
        assert np.array_equal(a, b)

    def test_streams_are_separated(self):
        cfg = RngConfig(9)
        a = cfg.stream("sizing", 0).uniform(size=5)
        b = cfg.stream("sizing", 1).uniform(size=5)
        c = cfg.stream("interconnect", 0).uniform(size=5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_seed_changes_output(self):
        a = RngConfig(1).stream("fit", 0).uniform(size=4)
        b = RngConfig(2).stream("fit", 0).uniform(size=4)
        assert not np.array_equal(a, b)


class TestDefaults:
    def test_bundled_table(self):
        table = load_defaults()
        assert table["version"] == DEFAULTS_VERSION
        for family in ("sizing", "interconnect", "floorplan_pair",
                       "floorplan_grid", "random_ggp", "fit"):
            assert family in table

    def test_version_mismatch(self, tmp_path):
        p = tmp_path / "d.json"
        p.write_text(json.dumps({"version": 999}))
        with pytest.raises(InstanceError) as err:
            load_defaults(p)
        assert "version" in str(err.value)
        p.write_text(json.dumps({"sizing": {}}))
        with pytest.raises(InstanceError):
            load_defaults(p)


class TestBundles:
    def test_bundled_benchmarks(self):
        g17 = parse_bench(bundled_bench("c17"))
        assert count_paths_dp(g17) == 11
        g499 = parse_bench(bundled_bench("c499.bench"))
        assert count_paths_dp(g499) == 9440
        with pytest.raises(InstanceError):
            bundled_bench("c9999")

    def test_demo_graph(self):
        g = demo_graph()
        assert len(g.names()) == 13
        assert count_paths_dp(g) == 40


class TestSizingInstances:
    def test_structure_and_feasibility_at_unit(self, sizing7):
        g, p, cons = sizing7.graph, sizing7.params, sizing7.cons
        gates = sized_gates(g)
        for n in gates:
            assert n in p.rbar and n in p.cin and n in p.vol
        unit = {x_name(n): 1.0 for n in gates}
        assert build_power(g, p).eval(unit) == pytest.approx(sizing7.unit_power)
        assert sizing7.unit_power < cons.p_max
        assert sizing7.unit_volume < cons.vol_max
        assert sizing7.unit_volume == pytest.approx(sum(p.vol[n] for n in gates))

    def test_deterministic(self):
        a = seeded_sizing(7)
        b = seeded_sizing(7)
        assert a.params.rbar == b.params.rbar
        assert a.cons == b.cons
        c = seeded_sizing(8)
        assert a.params.rbar != c.params.rbar

    def test_custom_graph(self):
        inst = seeded_sizing(3, graph=demo_graph())
        assert set(sized_gates(inst.graph)) <= set(inst.params.rbar)

    def test_params_csv_round_trip(self, sizing7):
        text = sizing_params_csv(sizing7.graph, sizing7.params)
        back = SizingParams.from_csv(text)
        assert back.f == sizing7.params.f
        assert back.rbar == sizing7.params.rbar
        assert back.cload == sizing7.params.cload


class TestInterconnectInstances:
    def test_topology_and_ranges(self, tree7):
        t = tree7.tree
        assert t.order == ["1", "2", "3", "4", "5"]
        assert sorted(t.leaves()) == ["3", "4", "5"]
        assert t.r0 is not None and t.r0 > 0
        assert tree7.vol_max > 0
        for sid in t.order:
            s = t.segments[sid]
            loaded = s.c_load > 0
            assert loaded == (sid in t.leaves())

    def test_deterministic(self):
        a = seeded_interconnect(7)
        b = seeded_interconnect(7)
        assert a.tree.segments == b.tree.segments
        assert a.tree.r0 == b.tree.r0
        assert seeded_interconnect(8).tree.r0 != a.tree.r0


class TestFloorplanInstances:
    def test_pair_shapes(self):
        inst = seeded_floorplan_pair(11)
        assert len(inst.modules) == 4
        inst.arr_3d.check_covers(inst.modules)
        inst.arr_2d.check_covers(inst.modules)
        assert inst.arr_3d.z_max == inst.arr_2d.z_max
        # stacked chain piles the three dies in z
        assert ("1", "2", "3") in inst.arr_3d.chains["Z"]

    def test_grid_shapes(self):
        inst = seeded_floorplan_grid(19, shape=(3, 2, 2))
        assert len(inst.modules) == 12
        inst.arrangement.check_covers(inst.modules)
        assert len(inst.arrangement.chains["X"]) == 4
        assert any(m.kind == "circuit" for m in inst.modules)
        with pytest.raises(InstanceError):
            seeded_floorplan_grid(19, shape=(0, 2, 2))

    def test_deterministic(self):
        a = seeded_floorplan_pair(11)
        b = seeded_floorplan_pair(11)
        assert a.modules == b.modules


class TestRandomGgp:
    def test_anchor_strictly_feasible(self):
        for idx in range(12):
            inst = random_ggp(3, idx=idx)
            point = dict(zip(inst.names, inst.anchor))
            for lhs, rhs in inst.problem.ineq_constraints:
                assert lhs.eval(point) < rhs.eval(point) * (1 - 1e-9)

    def test_box_bounds_bracket_anchor(self):
        inst = random_ggp(3, idx=1)
        for a, lo, hi in zip(inst.anchor, inst.lo, inst.hi):
            assert lo < a < hi

    def test_deterministic_and_indexed(self):
        a = random_ggp(3, idx=2)
        b = random_ggp(3, idx=2)
        assert a.names == b.names and a.anchor == b.anchor
        c = random_ggp(3, idx=3)
        assert a.anchor != c.anchor or a.names != c.names


class TestFitDatasets:
    def test_shapes_and_model_agreement(self):
        names, X, f, model = seeded_fit_dataset(3, n_vars=2, n_terms=2,
                                                n_samples=15)
        assert X.shape == (15, 2)
        for s in range(15):
            point = {nm: X[s, j] for j, nm in enumerate(names)}
            assert f[s] == pytest.approx(model.eval(point), rel=1e-12)

    def test_noise_perturbs_values(self):
        _, _, clean, _ = seeded_fit_dataset(3, n_samples=10)
        _, _, noisy, _ = seeded_fit_dataset(3, n_samples=10, noise=0.1)
        assert not np.allclose(clean, noisy)

    def test_validation(self):
        with pytest.raises(InstanceError):
            seeded_fit_dataset(3, n_vars=0)
        with pytest.raises(InstanceError):
            seeded_fit_dataset(3, n_samples=0)

import json
import math
from pathlib import Path

import numpy as np
import pytest

import hyqmom as hq
from hyqmom.solver import _reconstruct_batch, build_initial_grid
from corpus import random_odd_moments

SPEC1 = hq.hyqmom_closure(1.0)


def uniform_grid(m, cells=8, tau=1.0, boundary="periodic", width=1.0):
    return hq.GridState(
        cells=np.tile(np.asarray(m, float), (cells, 1)),
        dx=np.full(cells, width / cells),
        tau=tau,
        boundary=boundary,
    )


class TestReconstructNodes:
    def test_gauss_nodes_n1(self):
        q = hq.reconstruct_nodes([1, 0, 1], SPEC1, "gauss")
        assert np.allclose(q.nodes, [-1, 1])
        assert np.allclose(q.weights, [0.5, 0.5])
        # reproduces every known moment of the augmented vector
        for k, mk in enumerate([1, 0, 1, 0]):
            assert q.power_sum(k) == pytest.approx(mk, abs=1e-14)

    def test_eigen_nodes_n1(self):
        q = hq.reconstruct_nodes([1, 0, 1], SPEC1, "eigen")
        assert np.allclose(q.nodes, [-np.sqrt(3), 0, np.sqrt(3)], atol=1e-14)
        assert np.allclose(q.weights, [1 / 6, 2 / 3, 1 / 6])

    def test_both_variants_reproduce_input_moments(self, rng):
        for n in (1, 2, 3):
            m = random_odd_moments(rng, n)[0]
            for variant in ("gauss", "eigen"):
                q = hq.reconstruct_nodes(m, SPEC1, variant)
                assert np.min(q.weights) > 0
                for k in range(2 * n + 1):
                    scale = np.sum(q.weights * np.abs(q.nodes) ** k) + abs(m[k])
                    assert abs(q.power_sum(k) - m[k]) < 1e-9 * scale

    def test_gauss_node_count(self, rng):
        for n in (1, 2, 3):
            m = random_odd_moments(rng, n)[0]
            assert len(hq.reconstruct_nodes(m, SPEC1, "gauss").nodes) == n + 1
            assert len(hq.reconstruct_nodes(m, SPEC1, "eigen").nodes) == 2 * n + 1

    def test_affine_covariance(self):
        rho, U, th = 2.0, 1.1, 2.6
        std = hq.reconstruct_nodes([1, 0, 1], SPEC1, "gauss")
        shifted = hq.reconstruct_nodes(
            hq.maxwellian_moments(rho, U, th, 2), SPEC1, "gauss"
        )
        assert np.allclose(shifted.nodes, U + np.sqrt(th) * std.nodes)

    def test_eigen_gamma_restriction(self):
        with pytest.raises(ValueError, match="gamma"):
            hq.reconstruct_nodes([1, 0, 1], hq.hyqmom_closure(-1.5), "eigen")

    def test_batch_matches_scalar(self, rng):
        for variant in ("gauss", "eigen"):
            cells = random_odd_moments(rng, 2, count=10)
            nodes, weights = _reconstruct_batch(cells, 1.0, variant)
            for j in range(10):
                q = hq.reconstruct_nodes(cells[j], SPEC1, variant)
                assert np.allclose(nodes[j], q.nodes, rtol=1e-9, atol=1e-12)
                assert np.allclose(weights[j], q.weights, rtol=1e-8, atol=1e-12)

    def test_loss_reported_with_cell_index(self):
        cells = np.array([[1.0, 0.0, 1.0], [1.0, 0.0, -1.0]])
        with pytest.raises(hq.RealizabilityLossError) as exc:
            _reconstruct_batch(cells, 1.0, "gauss")
        assert exc.value.cell == 1


class TestKineticFlux:
    def test_full_upwind_from_left(self):
        left = hq.Quadrature(nodes=np.array([0.5, 2.0]), weights=np.array([1.0, 0.5]))
        right = hq.Quadrature(nodes=np.array([1.0, 3.0]), weights=np.array([2.0, 2.0]))
        # all left nodes positive, all right nodes positive: only left side counts
        for k in range(4):
            expect = 1.0 * 0.5 ** (k + 1) + 0.5 * 2.0 ** (k + 1)
            assert hq.kinetic_flux(left, right, k) == pytest.approx(expect)

    def test_full_upwind_from_right(self):
        left = hq.Quadrature(nodes=np.array([-2.0, -0.5]), weights=np.array([1.0, 1.0]))
        right = hq.Quadrature(nodes=np.array([-1.0, -3.0]), weights=np.array([0.5, 2.0]))
        for k in range(3):
            expect = 0.5 * (-1.0) ** (k + 1) + 2.0 * (-3.0) ** (k + 1)
            assert hq.kinetic_flux(left, right, k) == pytest.approx(expect)

    def test_symmetric_state_zero_mass_flux(self):
        q = hq.reconstruct_nodes([1, 0, 1], SPEC1, "eigen")
        assert hq.kinetic_flux(q, q, 0) == pytest.approx(0.0, abs=1e-15)

    def test_single_node_advection(self):
        rho, u = 1.7, 0.9
        q = hq.Quadrature(nodes=np.array([u]), weights=np.array([rho]))
        anything = hq.Quadrature(nodes=np.array([-1.0, 2.0]), weights=np.array([0.3, 0.4]))
        # positive single node: flux_k = rho * u^(k+1) plus the right inflow part
        pure = hq.Quadrature(nodes=np.array([u]), weights=np.array([rho]))
        for k in range(4):
            assert hq.kinetic_flux(pure, hq.Quadrature(np.array([1.0]), np.array([0.1])), k) == pytest.approx(
                rho * u ** (k + 1)
            )
        assert hq.kinetic_flux(q, anything, 0) == pytest.approx(
            rho * u + 0.3 * (-1.0)
        )


class TestStep:
    def test_uniform_equilibrium_fixed_point(self):
        m = hq.maxwellian_moments(1.0, 0.3, 1.2, 4)
        grid = uniform_grid(m, cells=12, tau=0.2)
        for _ in range(5):
            grid = hq.step(grid, SPEC1, "gauss", cfl=0.9)
        assert np.max(np.abs(grid.cells - m)) < 1e-13 * np.max(np.abs(m))

    def test_semi_implicit_relaxation_recurrence(self):
        # homogeneous non-equilibrium: residuals of every component contract
        # by exactly 1/(1 + dt/tau) per step
        m = hq.recurrence_to_moments(([0.2, -0.1], [1.0, 1.3, 1.7]), 5)
        tau = 0.07
        grid = uniform_grid(m, cells=4, tau=tau)
        st = hq.EquilibriumState.from_moments(m)
        maxw = st.moments(4)
        current = np.array(m, dtype=float)
        for _ in range(30):
            new = hq.step(grid, SPEC1, "gauss", cfl=0.9)
            dt = new.time - grid.time
            predicted = maxw + (current - maxw) / (1 + dt / tau)
            assert np.max(np.abs(new.cells[0] - predicted)) < 1e-13 * max(
                1.0, np.max(np.abs(predicted))
            )
            grid = new
            current = grid.cells[0].copy()

    def test_conservation_per_step(self, rng):
        m_left = hq.maxwellian_moments(1.0, 0.2, 1.0, 4)
        m_right = hq.maxwellian_moments(0.4, -0.1, 0.7, 4)
        cells = np.tile(m_left, (30, 1))
        cells[15:] = m_right
        grid = hq.GridState(cells=cells, dx=np.full(30, 1 / 30), tau=0.5)
        for _ in range(20):
            new = hq.step(grid, SPEC1, "eigen", cfl=0.9)
            t0, t1 = hq.total_moments(grid), hq.total_moments(new)
            for k in range(3):
                assert abs(t1[k] - t0[k]) <= 1e-12 * abs(t0[k])
            grid = new

    def test_riemann_stays_realizable(self):
        cells = np.tile(hq.maxwellian_moments(1.0, 0.0, 1.0, 4), (200, 1))
        cells[100:] = hq.maxwellian_moments(0.125, 0.0, 0.8, 4)
        grid = hq.GridState(cells=cells, dx=np.full(200, 1 / 200), tau=1.0)
        for _ in range(40):
            grid = hq.step(grid, SPEC1, "gauss", cfl=0.9)
            ok = [bool(hq.is_strictly_realizable(c)) for c in grid.cells[::40]]
            assert all(ok)

    def test_infinite_tau_is_pure_transport(self):
        cells = np.tile(hq.maxwellian_moments(1.0, 0.5, 1.0, 4), (16, 1))
        cells[8:] = hq.maxwellian_moments(0.5, -0.2, 0.6, 4)
        g_inf = hq.GridState(cells=cells.copy(), dx=np.full(16, 1 / 16), tau=math.inf)
        g_big = hq.GridState(cells=cells.copy(), dx=np.full(16, 1 / 16), tau=1e30)
        for _ in range(10):
            g_inf = hq.step(g_inf, SPEC1, "gauss", cfl=0.8)
            g_big = hq.step(g_big, SPEC1, "gauss", cfl=0.8)
        assert np.max(np.abs(g_inf.cells - g_big.cells)) <= 1e-12 * np.max(
            np.abs(g_inf.cells)
        )

    def test_cfl_guard(self):
        grid = uniform_grid(hq.maxwellian_moments(1, 0.4, 1, 4), cells=8)
        with pytest.raises(RuntimeError, match="CFL"):
            hq.step(grid, SPEC1, "gauss", cfl=1.0, dt=10.0)

    def test_explicit_dt_respected(self):
        grid = uniform_grid(hq.maxwellian_moments(1, 0.4, 1, 4), cells=8)
        new = hq.step(grid, SPEC1, "gauss", dt=1e-4)
        assert new.time == pytest.approx(1e-4)

    def test_zero_gradient_boundary(self):
        cells = np.tile(hq.maxwellian_moments(1.0, 0.5, 1.0, 4), (16, 1))
        cells[8:] = hq.maxwellian_moments(0.5, 0.5, 0.6, 4)
        grid = hq.GridState(
            cells=cells, dx=np.full(16, 1 / 16), tau=1.0, boundary="zero-gradient"
        )
        for _ in range(10):
            grid = hq.step(grid, SPEC1, "gauss", cfl=0.9)
        assert bool(hq.is_strictly_realizable(grid.cells[0]))


class TestConfigValidation:
    def base(self):
        return {
            "n": 2,
            "gamma": 1.0,
            "flux_variant": "gauss",
            "cfl": 0.9,
            "tau": 1.0,
            "domain": [0.0, 1.0],
            "cells": 16,
            "t_final": 0.01,
            "snapshot_every": None,
            "boundary": "periodic",
            "initial": [{"rho": 1.0, "U": 0.0, "theta": 1.0}],
        }

    def test_valid_passes(self):
        cfg = hq.validate_config(self.base())
        assert cfg["n"] == 2 and cfg["initial"][0]["x_until"] == 1.0

    @pytest.mark.parametrize(
        "field,value",
        [
            ("n", 0),
            ("gamma", -5.0),
            ("flux_variant", "weno"),
            ("cfl", 1.5),
            ("tau", -1.0),
            ("domain", [1.0, 0.0]),
            ("cells", 1),
            ("t_final", -0.5),
            ("boundary", "reflecting"),
        ],
    )
    def test_bad_fields(self, field, value):
        cfg = self.base()
        cfg[field] = value
        with pytest.raises(hq.ConfigError) as exc:
            hq.validate_config(cfg)
        assert exc.value.field == field

    def test_missing_field(self):
        cfg = self.base()
        del cfg["cells"]
        with pytest.raises(hq.ConfigError, match="cells"):
            hq.validate_config(cfg)

    def test_bad_segment_reported_with_path(self):
        cfg = self.base()
        cfg["initial"] = [{"rho": -1.0, "U": 0.0, "theta": 1.0}]
        with pytest.raises(hq.ConfigError, match=r"initial\[0\].rho"):
            hq.validate_config(cfg)

    def test_perturbation_positivity_enforced(self):
        cfg = self.base()
        cfg["initial"] = [{"rho": 1.0, "U": 0.0, "theta": 1.0, "db": [0.0, -2.0]}]
        with pytest.raises(hq.ConfigError, match="positive"):
            build_initial_grid(hq.validate_config(cfg))

    def test_infinite_tau_accepted(self):
        cfg = self.base()
        cfg["tau"] = "inf"
        assert hq.validate_config(cfg)["tau"] == math.inf

    def test_initial_segments_realizable_by_construction(self):
        cfg = self.base()
        cfg["initial"] = [
            {"rho": 1.0, "U": 0.3, "theta": 1.0, "da": [0.5, -0.2], "db": [0.2, 0.4, -0.5], "x_until": 0.5},
            {"rho": 2.0, "U": -0.3, "theta": 0.5},
        ]
        grid = build_initial_grid(hq.validate_config(cfg))
        for j in (0, grid.num_cells - 1):
            assert bool(hq.is_strictly_realizable(grid.cells[j]))


class TestRun:
    def test_zero_final_time(self):
        cfg = TestConfigValidation().base()
        cfg["t_final"] = 0.0
        result = hq.run(cfg)
        assert len(result.snapshots) == 1
        assert result.manifest["steps"] == 0

    def test_snapshot_cadence_and_files(self, tmp_path):
        cfg = TestConfigValidation().base()
        cfg["t_final"] = 0.02
        cfg["snapshot_every"] = 0.005
        result = hq.run(cfg, output_dir=tmp_path)
        assert result.grid.time == pytest.approx(0.02)
        assert len(result.snapshots) >= 3
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        for entry in manifest["snapshots"]:
            assert (tmp_path / entry["file"]).exists()
        header = (tmp_path / "snapshot_0000.csv").read_text().splitlines()[0]
        assert header.split(",") == [
            "x", "M_0", "M_1", "M_2", "M_3", "M_4", "rho", "U", "theta", "realizable_flag",
        ]

    def test_snapshot_rows_parse_back(self, tmp_path):
        cfg = TestConfigValidation().base()
        cfg["t_final"] = 0.0
        hq.run(cfg, output_dir=tmp_path)
        lines = (tmp_path / "snapshot_0000.csv").read_text().splitlines()
        row = [float(tok) for tok in lines[1].split(",")]
        assert row[-1] == 1.0  # realizable flag
        assert row[1:6] == list(hq.maxwellian_moments(1.0, 0.0, 1.0, 4))

    def test_first_order_convergence(self):
        # smooth manufactured profile, pure transport; self-convergence of
        # the density between successive refinements halves the error
        def run_cells(cells):
            cfg = {
                "n": 1,
                "gamma": 1.0,
                "flux_variant": "gauss",
                "cfl": 0.5,
                "tau": "inf",
                "domain": [0.0, 1.0],
                "cells": cells,
                "t_final": 0.05,
                "snapshot_every": None,
                "boundary": "periodic",
                "initial": [
                    {
                        "rho": 1.0 + 0.1 * np.sin(2 * np.pi * (i + 0.5) / cells),
                        "U": 0.5,
                        "theta": 1.0,
                        "x_until": (i + 1) / cells,
                    }
                    for i in range(cells)
                ],
            }
            return hq.run(cfg).grid.cells[:, 0]

        solutions = {cells: run_cells(cells) for cells in (50, 100, 200, 400)}
        diffs = []
        for coarse, fine in ((50, 100), (100, 200), (200, 400)):
            restricted = solutions[fine].reshape(coarse, 2).mean(axis=1)
            diffs.append(np.mean(np.abs(restricted - solutions[coarse])))
        assert 1.4 < diffs[0] / diffs[1] < 2.9
        assert 1.4 < diffs[1] / diffs[2] < 2.9

    def test_near_boundary_cells_flagged(self):
        # squeeze b_2 to a sliver of the cell temperature (= b_1)
        cfg = TestConfigValidation().base()
        cfg["n"] = 2
        cfg["t_final"] = 0.0
        cfg["initial"] = [
            {"rho": 1.0, "U": 0.0, "theta": 1.0, "db": [0.0, 0.0, -2.0 + 1e-11]}
        ]
        result = hq.run(cfg)
        assert result.snapshots[0].flagged_cells == list(range(16))

    def test_bundled_riemann_config(self):
        path = Path(__file__).parents[1] / "demos" / "configs" / "riemann_n2.json"
        result = hq.run(path)
        assert result.manifest["realizability_failures"] == 0
        assert result.grid.time == pytest.approx(0.1)
        for snap in result.snapshots:
            ok = [bool(hq.is_strictly_realizable(c)) for c in snap.cells[::50]]
            assert all(ok)

    def test_runs_are_deterministic(self, tmp_path):
        cfg = TestConfigValidation().base()
        cfg["t_final"] = 0.02
        cfg["snapshot_every"] = 0.01
        cfg["initial"] = [
            {"rho": 1.0, "U": 0.4, "theta": 1.0, "x_until": 0.5},
            {"rho": 0.5, "U": -0.2, "theta": 0.7, "db": [0.0, 0.1]},
        ]
        hq.run(cfg, output_dir=tmp_path / "a")
        hq.run(cfg, output_dir=tmp_path / "b")
        for name in ("snapshot_0000.csv", "snapshot_0001.csv", "snapshot_0002.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

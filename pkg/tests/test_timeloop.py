import numpy as np
import pytest

from esdg import mesh as meshmod, refops, timeloop
from esdg import boundary as bc
from esdg.discretization import SemiDiscretization
from esdg.errors import StepSizeError
from esdg.physics import GasParams
from esdg.timeloop import IntegratorConfig


class TestScalarDecay:
    def test_adaptive_hits_exponential(self):
        rtol = 1e-8
        cfg = IntegratorConfig(t_final=1.0, abs_tol=1e-12, rel_tol=rtol,
                               dt_init=0.1)
        res = timeloop.integrate(lambda t, y: -y, np.array([1.0]), 0.0, cfg)
        assert res.t == pytest.approx(1.0, abs=1e-12)
        assert abs(res.y[0] - np.exp(-1.0)) <= 10 * rtol
        assert abs(res.y[0] - 0.36787944) <= 10 * rtol + 1e-8

    def test_fixed_step_order_five(self):
        errs = []
        dts = [0.2, 0.1, 0.05, 0.025]
        for dt in dts:
            cfg = IntegratorConfig(t_final=1.0, dt_fixed=dt)
            res = timeloop.integrate(lambda t, y: -y, np.array([1.0]), 0.0, cfg)
            errs.append(abs(res.y[0] - np.exp(-1.0)))
        rates = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
        assert min(rates) >= 4.8

    def test_fsal_reuse_six_evals_per_step(self):
        calls = {"n": 0}

        def f(t, y):
            calls["n"] += 1
            return -y

        cfg = IntegratorConfig(t_final=1.0, dt_fixed=0.1)
        res = timeloop.integrate(f, np.array([1.0]), 0.0, cfg)
        assert res.steps == 10
        # one startup evaluation, then six fresh per accepted step
        assert calls["n"] == 1 + 6 * res.steps
        assert res.evals == calls["n"]

    def test_rejected_steps_do_not_mutate_state(self):
        # force a rejection by starting with a huge dt
        seen = []

        def on_accept(t, y, dt, rej):
            seen.append((t, y.copy()))

        cfg = IntegratorConfig(t_final=1.0, abs_tol=1e-12, rel_tol=1e-10,
                               dt_init=1.0)
        res = timeloop.integrate(lambda t, y: -100 * y, np.array([1.0]), 0.0,
                                 cfg, on_accept=on_accept)
        assert res.rejections > 0
        ts = [t for t, _ in seen]
        assert all(t2 > t1 for t1, t2 in zip(ts, ts[1:]))
        assert abs(res.y[0] - np.exp(-100.0)) < 1e-8

    def test_dt_underflow_aborts(self):
        def f(t, y):
            return np.array([np.inf])

        cfg = IntegratorConfig(t_final=1.0, dt_init=0.1)
        with pytest.raises(StepSizeError):
            timeloop.integrate(f, np.array([1.0]), 0.0, cfg)


class TestErrorNorm:
    def test_weighted_rms(self):
        err = np.array([1e-6, -2e-6])
        y = np.array([1.0, 2.0])
        norm = timeloop.error_norm(err, y, 1e-6, 1e-6)
        w1, w2 = 1e-6 + 1e-6, 1e-6 + 2e-6
        expect = np.sqrt(((1e-6 / w1) ** 2 + (2e-6 / w2) ** 2) / 2)
        assert norm == pytest.approx(expect)

    def test_step_growth_clamped(self):
        assert timeloop._new_dt(1.0, 1e-12, 0.9, np.inf) == pytest.approx(5.0)
        assert timeloop._new_dt(1.0, 1e12, 0.9, np.inf) == pytest.approx(0.2)
        assert timeloop._new_dt(1.0, 1e-12, 0.9, 2.5) == pytest.approx(2.5)


def _cavity_disc(N=2, K1D=4, Re=1000.0, Ma=0.1, isothermal=False):
    gas = GasParams(Re=Re, Ma=Ma)
    ops = refops.build_operators(N)
    m = meshmod.bisected_quad_mesh(K1D, K1D, (-1, 1, -1, 1))
    m = meshmod.tag_boundaries(m, [
        ("lid", lambda x, y: abs(y - 1) < 1e-12),
        ("wall", lambda x, y: abs(y - 1) >= 1e-12)])
    if isothermal:
        specs = {"lid": bc.BoundarySpec(bc.ISOTHERMAL_NOSLIP, u_wall=(1, 0),
                                        T_wall=1.0),
                 "wall": bc.BoundarySpec(bc.ISOTHERMAL_NOSLIP, T_wall=1.0)}
    else:
        specs = {"lid": bc.BoundarySpec(bc.ADIABATIC_NOSLIP, u_wall=(1, 0)),
                 "wall": bc.BoundarySpec(bc.ADIABATIC_NOSLIP)}
    disc = SemiDiscretization(ops, m, gas, specs, viscous_penalty=False)
    p0 = 1.0 / (gas.Ma ** 2 * gas.gamma)
    coeffs = disc.project_initial_condition(
        lambda x, y: (np.ones_like(x), 0 * x, 0 * x, p0 * np.ones_like(x)))
    return disc, coeffs


class TestRunSimulation:
    def test_steady_equilibrium_state_unchanged(self):
        # resting gas with resting isothermal walls at the gas temperature
        # is a discrete steady state
        gas = GasParams(Re=1000.0, Ma=0.1)
        ops = refops.build_operators(2)
        m = meshmod.bisected_quad_mesh(3, 3, (-1, 1, -1, 1))
        m = meshmod.tag_boundaries(m, [("wall", lambda x, y: True)])
        specs = {"wall": bc.BoundarySpec(bc.ISOTHERMAL_NOSLIP, T_wall=1.0)}
        disc = SemiDiscretization(ops, m, gas, specs)
        p0 = 1.0 / (gas.Ma ** 2 * gas.gamma)
        coeffs = disc.project_initial_condition(
            lambda x, y: (np.ones_like(x), 0 * x, 0 * x, p0 * np.ones_like(x)))
        cfg = IntegratorConfig(t_final=1.0, dt_init=1e-3)
        out = timeloop.run_simulation(disc, coeffs, cfg, wall_tags=("wall",))
        assert out.t_final == pytest.approx(1.0, abs=1e-12)
        assert np.abs(out.final_state - coeffs).max() <= 1e-12 * np.abs(coeffs).max()

    def test_free_stream_periodic_constant(self):
        gas = GasParams(Re=100.0, Ma=0.5)
        ops = refops.build_operators(2)
        m = meshmod.bisected_quad_mesh(3, 3, (-1, 1, -1, 1))
        m = meshmod.make_periodic(m, axis=0)
        m = meshmod.make_periodic(m, axis=1)
        disc = SemiDiscretization(ops, m, gas, {})
        coeffs = disc.project_initial_condition(
            lambda x, y: (np.ones_like(x) * 1.2, 0.5, -0.3, np.ones_like(x)))
        cfg = IntegratorConfig(t_final=0.5)
        out = timeloop.run_simulation(disc, coeffs, cfg)
        assert np.abs(out.final_state - coeffs).max() <= 1e-11 * np.abs(coeffs).max()

    def test_cavity_diagnostics_and_identity_assertion(self):
        disc, coeffs = _cavity_disc()
        cfg = IntegratorConfig(t_final=0.02, diagnostics_stride=2)
        out = timeloop.run_simulation(disc, coeffs, cfg, wall_tags=("lid", "wall"),
                                      assert_identity_tol=1e-10)
        assert out.records
        for rec in out.records:
            assert np.isfinite([rec.r, rec.entropy, rec.mass, rec.e_wall]).all()
            assert abs(rec.r) <= 1e-10 * (1 + abs(rec.gv) + abs(rec.ktt))
        assert out.records[-1].t <= cfg.t_final + 1e-12

    def test_diagnostics_csv_schema_and_precision(self, tmp_path):
        disc, coeffs = _cavity_disc(N=1, K1D=2)
        cfg = IntegratorConfig(t_final=0.01)
        out = timeloop.run_simulation(disc, coeffs, cfg, wall_tags=("lid",))
        path = tmp_path / "diag.csv"
        timeloop.write_diagnostics_csv(out.records, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,r,boundary_term,entropy,mass,mom1,mom2,energy,e_wall,dt,rejections"
        first = lines[1].split(",")
        assert float(first[0]) == out.records[0].t
        # 17 significant digits round-trip
        assert f"{out.records[0].entropy:.17g}" == first[3]

    def test_wall_error_manufactured_unit_velocity(self):
        # u = (1, 0) along walls of total length 4 gives e_wall = 2
        gas = GasParams(Re=100.0, Ma=0.5)
        ops = refops.build_operators(2)
        m = meshmod.bisected_quad_mesh(3, 3, (-1, 1, -1, 1))
        m = meshmod.tag_boundaries(m, [
            ("lr", lambda x, y: abs(abs(x) - 1) < 1e-12),
            ("tb", lambda x, y: abs(abs(x) - 1) >= 1e-12)])
        specs = {"lr": bc.BoundarySpec(bc.ADIABATIC_NOSLIP),
                 "tb": bc.BoundarySpec(bc.ADIABATIC_NOSLIP)}
        disc = SemiDiscretization(ops, m, gas, specs)
        coeffs = disc.project_initial_condition(
            lambda x, y: (np.ones_like(x), 1.0, 0.0, np.ones_like(x)))
        assert disc.wall_error(coeffs, ("lr",)) == pytest.approx(2.0, rel=1e-12)
        assert disc.wall_error(coeffs, ("lr", "tb")) == pytest.approx(
            np.sqrt(8.0), rel=1e-12)
        with pytest.raises(Exception):
            disc.wall_error(coeffs, ("nosuch",))

    def test_zero_velocity_zero_wall_error(self):
        disc, coeffs = _cavity_disc(N=1, K1D=2)
        assert disc.wall_error(coeffs, ("lid", "wall")) == 0.0

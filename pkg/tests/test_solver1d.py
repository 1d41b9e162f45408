import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src')))

import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from kinetra.closures import SaturatingAccelerationLaw
from kinetra.config import parse_config
from kinetra.equilibrium import build_maxwellian_table
from kinetra.exceptions import CFLError, ConfigurationError, SolverAbort
from kinetra.kinetic_core import ModelParams, build_grid
from kinetra.solver1d import (Boundary, EpsilonKind, EpsilonModel, KineticField, KineticModel, Mesh1D,
                              bump_density, check_values, riemann_density, collision_step_bgk, collision_step_boltzmann,
                              compute_rho_x, eval_epsilon, maxwellian_field, output_schedule, run,
                              run_equilibrium_law, simulate, transport_step)


class TestEpsilon(unittest.TestCase):
    def test_variable_worked_values(self):
        """
        ε(ρ, ρ_x) = 1 / max{1/(1-min{ρ,ε0}²), 1+max{ρ_x,0}²}.

        Parámetros:
        - ε(0.7, 0) = 0.51 y ε(0.7, 2) = 0.2.
        - ρ = 1 se corta en ε0 = 0.99: ε = 1 - 0.9801.
        - ρ_x < 0 no cuenta.
        """
        model = EpsilonModel(EpsilonKind.VARIABLE)
        self.assertAlmostEqual(float(eval_epsilon(model, 0.7, 0.0)), 0.51)
        self.assertAlmostEqual(float(eval_epsilon(model, 0.7, 2.0)), 0.2)
        self.assertAlmostEqual(float(eval_epsilon(model, 1.0, 0.0)), 1.0 - 0.99 ** 2)
        self.assertAlmostEqual(float(eval_epsilon(model, 0.7, -5.0)), 0.51)

    def test_constant(self):
        np.testing.assert_array_equal(eval_epsilon(EpsilonModel(value=0.05), np.array([0.1, 0.9])), [0.05, 0.05])

    def test_validation(self):
        with self.assertRaises(ConfigurationError):
            EpsilonModel(value=0.0)
        with self.assertRaises(ConfigurationError):
            EpsilonModel(EpsilonKind.VARIABLE, eps0=1.0)


class TestMesh(unittest.TestCase):
    def test_geometry(self):
        mesh = Mesh1D(-1.0, 1.0, 200)
        self.assertAlmostEqual(mesh.dx, 0.01)
        self.assertAlmostEqual(mesh.centers[0], -0.995)
        self.assertIs(mesh.boundary, Boundary.PERIODIC)

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            Mesh1D(0.0, 1.0, 3)
        with self.assertRaises(ConfigurationError):
            Mesh1D(1.0, 1.0, 10)

    def test_initial_densities(self):
        x = np.array([-0.5, -0.1, 0.0, 0.3])
        np.testing.assert_allclose(riemann_density(x, 0.2, 0.9), [0.2, 0.2, 0.9, 0.9])
        np.testing.assert_allclose(riemann_density(x, 0.2, 0.9, x_jump=0.5), [0.2] * 4)
        self.assertAlmostEqual(float(bump_density(0.0, 0.2, 0.2)), 0.4)
        self.assertAlmostEqual(float(bump_density(0.5, 0.2, 0.2)), 0.2 + 0.2 * np.exp(-2.0))


class TestTransport(unittest.TestCase):
    def setUp(self):
        self.grid = build_grid(2, 1.0, 1.0)
        self.mesh = Mesh1D(-1.0, 1.0, 200)

    def test_constant_state_is_preserved(self):
        values = np.tile([0.3, 0.2], (200, 1))
        field = KineticField(self.mesh, self.grid, values)
        out = transport_step(field, 0.009)
        np.testing.assert_array_equal(out.values, values)

    def test_unit_speed_loop(self):
        """
        Con CFL = 1 y disipación por nodo el flujo de la rebanada v = 1 es upwind exacto:
        tras una vuelta al anillo el perfil regresa a su lugar. La rebanada v = 0 no se mueve.
        """
        values = np.zeros((200, 2))
        values[:, 1] = bump_density(self.mesh.centers, 0.0, 0.5)
        values[:, 0] = 0.1 * bump_density(self.mesh.centers, 0.1, 0.3)
        field = KineticField(self.mesh, self.grid, values)
        for _ in range(200):
            field = transport_step(field, self.mesh.dx, cfl=1.0, global_alpha=False)
        np.testing.assert_allclose(field.values, values, atol=1e-12)
        self.assertAlmostEqual(field.values.sum(), values.sum(), places=12)

    def test_global_alpha_differs_from_upwind(self):
        """
        Con α = max|v_k| la rebanada v = 0 se difunde como (dt/2dx)·(f_{j+1} - 2f_j + f_{j-1});
        con α = |v_k| queda fija. La rebanada v = 1 es la misma en ambos casos.
        """
        values = np.zeros((200, 2))
        values[:, 0] = bump_density(self.mesh.centers, 0.1, 0.3)
        values[:, 1] = bump_density(self.mesh.centers, 0.0, 0.5)
        field = KineticField(self.mesh, self.grid, values)
        dt = 0.009
        llf = transport_step(field, dt)
        upwind = transport_step(field, dt, global_alpha=False)
        slow = values[:, 0]
        laplacian = np.roll(slow, -1) - 2.0 * slow + np.roll(slow, 1)
        np.testing.assert_allclose(llf.values[:, 0], slow + 0.5 * dt / self.mesh.dx * laplacian, atol=1e-15)
        np.testing.assert_array_equal(upwind.values[:, 0], slow)
        np.testing.assert_allclose(llf.values[:, 1], upwind.values[:, 1], atol=1e-15)
        self.assertGreater(np.abs(llf.values[:, 0] - slow).max(), 1e-4)

    def test_cfl_violation(self):
        field = KineticField(self.mesh, self.grid, np.full((200, 2), 0.1))
        with self.assertRaises(CFLError) as ctx:
            transport_step(field, 0.011)
        self.assertAlmostEqual(ctx.exception.required_dt, 0.009)

    def test_density_gradient(self):
        """
        ρ = 0.2 + 0.1x en frontera libre: ρ_x = 0.1 en todas las celdas.
        """
        mesh = Mesh1D(-1.0, 1.0, 40, Boundary.FREE_OUTFLOW)
        rho = 0.2 + 0.1 * mesh.centers
        field = KineticField(mesh, self.grid, np.column_stack([rho, np.zeros(40)]))
        np.testing.assert_allclose(compute_rho_x(field), 0.1, atol=1e-12)


class TestCollisionSteps(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.two_table = build_maxwellian_table(ModelParams(build_grid(2, 1.0, 1.0)), n_rho=101)
        cls.five_table = build_maxwellian_table(ModelParams(build_grid(5, 0.25, 0.25)), n_rho=101)
        cls.mesh = Mesh1D(0.0, 1.0, 4)

    def uniform(self, state, table):
        return KineticField(self.mesh, table.grid, np.tile(state, (4, 1)))

    def test_boltzmann_relaxation(self):
        """
        Con dos velocidades Q = ρ(M - f), así que con β = ρ el error se divide por 1 + λρ.

        Parámetros:
        - ρ = 0.6 todo en v = 0, ε = dt = 0.01 (λ = 1): factor 1.6 por paso.
        """
        field = self.uniform([0.6, 0.0], self.two_table)
        eps = EpsilonModel(value=0.01)
        errors = []
        for _ in range(10):
            field = collision_step_boltzmann(field, 0.01, eps, self.two_table)
            errors.append(abs(field.values[0, 1] - 0.24))
        self.assertAlmostEqual(errors[0], 0.15, places=8)
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])))
        self.assertLess(errors[-1], 0.24 / 1.6 ** 10 + 1e-8)
        np.testing.assert_allclose(field.density, 0.6, atol=1e-14)

    def test_bgk_relaxation(self):
        """
        dt = ε multiplica la distancia a M por e^{-1}; dt ≫ ε lleva a M; dt = 0 no cambia nada.
        """
        field = self.uniform([0.6, 0.0], self.two_table)
        eps = EpsilonModel(value=0.01)
        out = collision_step_bgk(field, 0.01, eps, self.two_table)
        self.assertAlmostEqual(out.values[0, 1], 0.24 * (1.0 - np.exp(-1.0)), places=8)
        out = collision_step_bgk(field, 100.0, eps, self.two_table)
        np.testing.assert_allclose(out.values[0], [0.36, 0.24], atol=1e-9)
        out = collision_step_bgk(field, 0.0, eps, self.two_table)
        np.testing.assert_array_equal(out.values, field.values)

    def test_collisionless_limit(self):
        field = self.uniform([0.6, 0.0], self.two_table)
        out = collision_step_bgk(field, 0.01, EpsilonModel(value=1e12), self.two_table)
        np.testing.assert_allclose(out.values, field.values, atol=1e-13)

    def test_maxwellian_is_preserved(self):
        """
        Un estado maxweliano constante queda fijo 100 pasos (BGK exacto, Boltzmann hasta el residuo).
        """
        mesh = Mesh1D(-1.0, 1.0, 20)
        field0 = maxwellian_field(mesh, self.five_table, np.full(20, 0.6))
        times = [0.0, 100 * 0.09]
        bgk = simulate(field0, self.five_table, EpsilonModel(value=0.01), KineticModel.BGK, times,
                       keep_values=True)
        self.assertEqual(bgk.n_steps, 100)
        np.testing.assert_allclose(bgk.snapshots[-1].values, field0.values, atol=1e-12)
        boltz = simulate(field0, self.five_table, EpsilonModel(value=0.01), KineticModel.BOLTZMANN, times,
                         keep_values=True)
        np.testing.assert_allclose(boltz.snapshots[-1].values, field0.values, atol=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=20, max_size=20),
           st.floats(min_value=0.0, max_value=1.0),
           st.floats(min_value=1e-4, max_value=1.0))
    def test_collision_preserves_density(self, weights, scale, dt):
        """
        Ambos pasos de colisión conservan ρ por celda y no crean valores negativos.
        """
        values = np.asarray(weights).reshape(4, 5) + 1e-3
        values = values / values.sum(axis=-1, keepdims=True) * scale
        field = KineticField(self.mesh, self.five_table.grid, values)
        eps = EpsilonModel(value=0.01)
        for step in (collision_step_bgk, collision_step_boltzmann):
            out = step(field, dt, eps, self.five_table)
            np.testing.assert_allclose(out.density, field.density, atol=1e-13)
            self.assertTrue(np.all(out.values >= -1e-14))


class TestSimulation(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        params = ModelParams(build_grid(5, 0.25, 0.25), prob_law=SaturatingAccelerationLaw())
        cls.table = build_maxwellian_table(params, n_rho=101)

    def test_bump_run_conserves_mass(self):
        """
        Bump periódico con 50 celdas: masa conservada y seis instantáneas en 0, 0.2, ..., 1.
        """
        config = parse_config("scenario = bump\nn_cells = 50\nper_node = true\n")
        result = run(config, table=self.table)
        self.assertEqual(len(result.snapshots), 6)
        self.assertAlmostEqual(result.snapshots[-1].t, 1.0, places=12)
        self.assertLessEqual(result.relative_mass_drift, 1e-12)
        self.assertLessEqual(result.max_collision_drift, 1e-13)
        for snapshot in result.snapshots:
            self.assertTrue(np.all(snapshot.rho >= 0.0))
            self.assertTrue(np.all(snapshot.rho <= 1.0 + 1e-8))
            self.assertEqual(snapshot.values.shape, (50, 5))

    def test_output_times_are_hit(self):
        config = parse_config("scenario = bump\nn_cells = 50\nmodel = bgk\noutput_times = 0.013, 0.5\n")
        result = run(config, table=self.table)
        self.assertEqual([round(s.t, 12) for s in result.snapshots], [0.0, 0.013, 0.5])
        self.assertLessEqual(result.dt_max, 0.9 * 2.0 / 50 + 1e-15)

    def test_variable_epsilon(self):
        config = parse_config("scenario = stopgo\nn_cells = 50\nt_final = 0.2\n")
        result = run(config, table=self.table)
        for snapshot in result.snapshots:
            self.assertTrue(np.all(snapshot.eps > 0.0))
            self.assertTrue(np.all(snapshot.eps <= 1.0))

    def test_fixed_dt_must_respect_cfl(self):
        config = parse_config("scenario = bump\nn_cells = 50\ndt = 0.1\n")
        with self.assertRaises(CFLError):
            run(config, table=self.table)

    def test_negative_initial_data_aborts(self):
        mesh = Mesh1D(-1.0, 1.0, 10)
        values = np.full((10, 5), 0.05)
        values[3, 2] = -1e-3
        field = KineticField(mesh, self.table.grid, values)
        with self.assertRaises(SolverAbort) as ctx:
            simulate(field, self.table, EpsilonModel(), KineticModel.BGK, [0.0, 0.1])
        self.assertEqual((ctx.exception.cell, ctx.exception.node), (3, 2))

    def test_transport_overshoot_aborts_before_interpolation(self):
        """
        Flujo libre a ρ = 1 que entra en un atasco a ρ = 1: tras el transporte ρ > ρ_M.
        Se aborta con celda y paso, antes de interpolar maxwellianas, y se conserva t = 0.
        """
        mesh = Mesh1D(-1.0, 1.0, 10)
        values = np.zeros((10, 5))
        values[:4, 4] = 1.0
        values[4:, 0] = 1.0
        field = KineticField(mesh, self.table.grid, values)
        dt = 0.9 * mesh.dx
        with self.assertRaises(SolverAbort) as ctx:
            simulate(field, self.table, EpsilonModel(), KineticModel.BOLTZMANN, [0.0, dt])
        error = ctx.exception
        self.assertIn(error.cell, (3, 4))
        self.assertEqual((error.node, error.step), (-1, 1))
        self.assertIn("ρ_M", str(error))
        self.assertAlmostEqual(error.t, dt)
        self.assertEqual([s.t for s in error.partial.snapshots], [0.0])

    def test_check_values(self):
        values = np.full((4, 5), 0.1)
        check_values(values, 0)
        values[1, 1] = np.nan
        with self.assertRaises(SolverAbort):
            check_values(values, 7)
        with self.assertRaises(SolverAbort):
            check_values(np.full((4, 5), 0.3), 0)

    def test_transport_only(self):
        """
        Sin colisiones la masa periódica también se conserva.
        """
        mesh = Mesh1D(-1.0, 1.0, 50)
        field = maxwellian_field(mesh, self.table, bump_density(mesh.centers, 0.2, 0.2))
        result = simulate(field, None, EpsilonModel(), KineticModel.TRANSPORT, [0.0, 0.5])
        self.assertLessEqual(result.relative_mass_drift, 1e-13)

    def test_equilibrium_law(self):
        mesh = Mesh1D(-1.0, 1.0, 100)
        rho0 = bump_density(mesh.centers, 0.2, 0.2)
        result = run_equilibrium_law(rho0, mesh, self.table, [0.0, 0.5, 1.0])
        self.assertEqual(len(result.snapshots), 3)
        self.assertLessEqual(result.relative_mass_drift, 1e-12)
        self.assertLessEqual(result.snapshots[-1].rho.max(), rho0.max() + 1e-12)

    def test_output_schedule(self):
        """
        output_times reemplaza a t_final: la corrida termina en el último tiempo pedido.
        """
        self.assertEqual(output_schedule(1.0, n_outputs=2), [0.0, 0.5, 1.0])
        self.assertEqual(output_schedule(1.0, [0.7, 0.3]), [0.0, 0.3, 0.7])
        self.assertEqual(output_schedule(0.2, [0.7, 0.3]), [0.0, 0.3, 0.7])
        with self.assertRaises(ConfigurationError):
            output_schedule(1.0, [-0.5])


if __name__ == '__main__':
    unittest.main()

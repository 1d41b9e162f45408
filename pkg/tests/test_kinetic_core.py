import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src')))

import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from kinetra.exceptions import ConfigurationError, DomainError
from kinetra.kinetic_core import (KineticState, ModelParams, build_grid, build_interaction_tables,
                                  collision_operator, collision_rates, moments)


def random_state(weights, rho):
    weights = np.asarray(weights, dtype=float)
    return weights / weights.sum() * rho


class TestVelocityGrid(unittest.TestCase):
    def test_jumps_in_nodes(self):
        """
        Verifica la malla de 49 velocidades con Δa = 1/4 y Δb = 1/4·r.

        Parámetros:
        - h = 1/48, así que Δa son 12 nodos y Δb = 0.5 son 24 nodos.
        """
        grid = build_grid(49, 0.25, 0.5)
        self.assertEqual(grid.accel_steps, 12)
        self.assertEqual(grid.brake_steps, 24)
        self.assertAlmostEqual(grid.spacing, 1.0 / 48)
        self.assertAlmostEqual(grid.nodes[-1], 1.0)

    def test_two_speed_grid(self):
        grid = build_grid(2, 1.0, 1.0)
        np.testing.assert_array_equal(grid.nodes, [0.0, 1.0])
        self.assertEqual((grid.accel_steps, grid.brake_steps), (1, 1))

    def test_zero_braking_jump(self):
        """
        Δb = 0 está permitido: frenar deja la velocidad igual.
        """
        grid = build_grid(5, 0.25, 0.0)
        self.assertEqual(grid.brake_steps, 0)

    def test_non_divisible_jump_is_rejected(self):
        """
        Con n = 10 (h = 1/9) Δa = 1/4 no cae en la malla; el error nombra la clave.
        """
        with self.assertRaises(ConfigurationError) as ctx:
            build_grid(10, 0.25, 0.25)
        keys = {issue.key for issue in ctx.exception.issues}
        self.assertIn("delta_a", keys)
        self.assertIn("delta_b", keys)

    def test_round_jumps(self):
        """
        Con round_jumps=True Δa = 1/4 se redondea a 2 nodos de h = 1/9.
        """
        grid = build_grid(10, 0.25, 0.25, round_jumps=True)
        self.assertEqual(grid.accel_steps, 2)

    def test_invalid_sizes(self):
        with self.assertRaises(ConfigurationError):
            build_grid(1, 1.0, 1.0)
        with self.assertRaises(ConfigurationError):
            build_grid(5, 0.0, 0.25)
        with self.assertRaises(ConfigurationError):
            build_grid(5, 0.25, -0.25)


class TestCollisionOperator(unittest.TestCase):
    def setUp(self):
        self.two = ModelParams(build_grid(2, 1.0, 1.0))
        self.two_tables = build_interaction_tables(self.two.grid)
        self.five = ModelParams(build_grid(5, 0.25, 0.25))
        self.five_tables = build_interaction_tables(self.five.grid)

    def test_two_speed_closed_form(self):
        """
        Con dos velocidades Q(v=1) = P·ρ² - f_1·ρ y Q(v=0) = -Q(v=1).

        Parámetros:
        - f = (0.3, 0.2), ρ = 0.5, P = 0.5.
        """
        f = np.array([0.3, 0.2])
        q = collision_operator(KineticState(f), self.two, self.two_tables)
        expected = 0.5 * 0.25 - 0.2 * 0.5
        self.assertAlmostEqual(q[1], expected, places=15)
        self.assertAlmostEqual(q[0], -expected, places=15)

    def test_vacuum_is_zero(self):
        q = collision_operator(KineticState(np.zeros(5)), self.five, self.five_tables)
        np.testing.assert_array_equal(q, np.zeros(5))

    def test_single_node_states(self):
        """
        Toda la masa en un nodo: ganancia y pérdida se mueven solo hacia sus destinos.

        Parámetros:
        - f = 0.5 en v = 1/2 (nodo 2), P = 0.5, Δa = Δb = 1 nodo.
        """
        f = np.zeros(5)
        f[2] = 0.5
        q = collision_operator(f, self.five, self.five_tables)
        self.assertAlmostEqual(q.sum(), 0.0, places=15)
        self.assertAlmostEqual(q[3], 0.5 * 0.5 * 0.5)
        self.assertAlmostEqual(q[1], 0.5 * 0.5 * 0.5)
        self.assertAlmostEqual(q[2], -0.25)
        self.assertEqual(q[0], 0.0)
        self.assertEqual(q[4], 0.0)

    def test_embedding_of_two_speed_model(self):
        """
        Masa solo en los extremos de la malla de 5 nodos con saltos de 4 nodos
        reproduce el operador de dos velocidades y deja en cero los nodos internos.
        """
        params = ModelParams(build_grid(5, 1.0, 1.0))
        tables = build_interaction_tables(params.grid)
        f5 = np.array([0.25, 0.0, 0.0, 0.0, 0.35])
        q5 = collision_operator(f5, params, tables)
        q2 = collision_operator(np.array([0.25, 0.35]), self.two, self.two_tables)
        np.testing.assert_array_equal(q5[[0, 4]], q2)
        np.testing.assert_array_equal(q5[1:4], np.zeros(3))

    def test_quadratic_scaling(self):
        """
        Con P congelada Q es cuadrático: Q[cf] = c² Q[f].
        """
        f = np.array([0.1, 0.05, 0.2, 0.1, 0.05])
        q = collision_rates(f, self.five, self.five_tables, prob=0.3)
        q2 = collision_rates(2.0 * f, self.five, self.five_tables, prob=0.3)
        np.testing.assert_allclose(q2, 4.0 * q, atol=1e-15)

    def test_negative_weights_are_rejected(self):
        with self.assertRaises(DomainError):
            collision_operator(np.array([0.2, -0.1, 0.0, 0.0, 0.0]), self.five, self.five_tables)

    def test_overfull_state_is_rejected(self):
        with self.assertRaises(DomainError):
            KineticState(np.array([0.6, 0.6]))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=5, max_size=5),
           st.floats(min_value=0.0, max_value=1.0))
    def test_mass_conservation(self, weights, rho):
        """
        Σ_k Q_k = 0 para cualquier estado no negativo de masa ρ ≤ 1.
        """
        if sum(weights) == 0:
            weights = [1.0] * 5
        f = random_state(weights, rho)
        q = collision_operator(f, self.five, self.five_tables)
        self.assertLessEqual(abs(q.sum()), 1e-14)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=5, max_size=5),
           st.floats(min_value=0.01, max_value=1.0))
    def test_zero_weights_do_not_become_negative(self, weights, rho):
        """
        Donde f_k = 0 la pérdida es nula, así que Q_k >= 0.
        """
        if sum(weights) == 0:
            weights = [1.0] * 5
        f = random_state(weights, rho)
        q = collision_operator(f, self.five, self.five_tables)
        self.assertTrue(np.all(q[f == 0] >= 0.0))


class TestMoments(unittest.TestCase):
    def test_two_speed_moments(self):
        """
        f = (0.36, 0.24): ρ = 0.6, flujo 0.24, velocidad media 0.4 y energía 0.24.
        """
        grid = build_grid(2, 1.0, 1.0)
        m = moments(KineticState(np.array([0.36, 0.24])), grid)
        self.assertAlmostEqual(m.density, 0.6)
        self.assertAlmostEqual(m.flux, 0.24)
        self.assertAlmostEqual(m.mean_speed, 0.4)
        self.assertAlmostEqual(m.energy, 0.24)
        self.assertAlmostEqual(m.variance, 0.24 - 0.6 * 0.16)

    def test_vacuum_mean_speed(self):
        m = moments(KineticState(np.zeros(3)), build_grid(3, 0.5, 0.5))
        self.assertEqual(m.density, 0.0)
        self.assertEqual(m.mean_speed, 0.0)


if __name__ == '__main__':
    unittest.main()

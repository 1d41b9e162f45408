import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src')))

import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from kinetra.closures import ConstantFunction, LinearSpeed, PowerLaw
from kinetra.equilibrium import build_maxwellian_table
from kinetra.exceptions import ConfigurationError, DomainError
from kinetra.kinetic_core import ModelParams, build_grid
from kinetra.stability import (ArzClosure, Classification, ModelKind, check_proposition1, classify,
                               diffusion_profile, energy_condition, mu_arz, mu_bgk, mu_modified,
                               mu_modified_flux_form, negative_intervals, proposition1_threshold)


class TestTwoSpeedDiffusion(unittest.TestCase):
    """
    Modelo de dos velocidades con P = 1 - ρ: F = ρ(1-ρ), energía = F,
    varianza = ρ²(1-ρ) y μ_BGK = 2ρ(1-2ρ).
    """

    @classmethod
    def setUpClass(cls):
        cls.table = build_maxwellian_table(ModelParams(build_grid(2, 1.0, 1.0)), n_rho=101)
        cls.pressure = PowerLaw(1.5, 2.0)

    def test_mu_bgk_values(self):
        self.assertAlmostEqual(mu_bgk(self.table, 0.25), 0.25, places=7)
        self.assertAlmostEqual(mu_bgk(self.table, 0.75), -0.75, places=7)
        self.assertTrue(energy_condition(self.table, 0.25))
        self.assertFalse(energy_condition(self.table, 0.75))

    def test_bgk_profile_is_unstable(self):
        """
        μ_BGK < 0 en (1/2, 1], que toca ρ_M: clasificación unstable.
        """
        profile = diffusion_profile(ModelKind.BGK, self.table)
        self.assertIs(profile.classification, Classification.UNSTABLE)
        left, right = profile.negative_intervals[-1]
        self.assertAlmostEqual(left, 0.5, delta=0.011)
        self.assertEqual(right, 1.0)

    def test_proposition1(self):
        """
        A ρ = 0.75 valen F' < 0 y ∂_ρVar < 0, y μ_BGK es negativo.
        Las dos hipótesis valen a partir de ρ = 2/3, la primera muestra es 0.67.
        """
        check = check_proposition1(self.table, 0.75)
        self.assertTrue(check.hypotheses_hold)
        self.assertTrue(check.mu_negative)
        self.assertFalse(check_proposition1(self.table, 0.6).hypotheses_hold)
        self.assertAlmostEqual(proposition1_threshold(self.table), 0.66, places=9)

    def test_mu_modified_value(self):
        """
        μ_mod = μ_BGK - ρ² p' U'_eq con p = 3/2·ρ² y U'_eq = -1.

        Parámetros:
        - ρ = 0.75: -0.75 + 3·0.75³ = 0.515625.
        """
        self.assertAlmostEqual(mu_modified(self.table, self.pressure, 0.75), 0.515625, places=6)

    def test_pressure_stabilizes(self):
        """
        Con U'_eq ≤ 0 el término de presión es no negativo: μ_mod ≥ μ_BGK.
        Para dos velocidades 2ρ - 4ρ² + 3ρ³ > 0 en (0, 1], así que el perfil es estable.
        """
        rho = self.table.rho_samples
        self.assertTrue(np.all(mu_modified(self.table, self.pressure, rho) >= mu_bgk(self.table, rho) - 1e-12))
        profile = diffusion_profile(ModelKind.MODIFIED, self.table, pressure=self.pressure)
        self.assertIs(profile.classification, Classification.STABLE)
        self.assertEqual(profile.negative_intervals, ())

    def test_flux_form_agrees(self):
        rho = self.table.rho_samples[1:-1]
        np.testing.assert_allclose(mu_modified_flux_form(self.table, self.pressure, rho),
                                   mu_modified(self.table, self.pressure, rho), atol=1e-6)

    def test_constant_pressure_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            mu_modified(self.table, ConstantFunction(0.5), 0.5)


class TestArz(unittest.TestCase):
    def test_worked_values(self):
        """
        U = 1 - ρ con tres hesitaciones:
        - h = 2ρ a ρ = 0.5: μ = 0.25 y vale la condición subcaracterística.
        - h = ρ: μ ≡ 0 y la condición falla.
        - h = ρ² a ρ = 0.25: μ = -0.03125.
        """
        result = mu_arz(ArzClosure(LinearSpeed(), PowerLaw(2.0, 1.0)), 0.5)
        self.assertAlmostEqual(result.mu, 0.25)
        self.assertTrue(result.subcharacteristic)
        result = mu_arz(ArzClosure(LinearSpeed(), PowerLaw(1.0, 1.0)), 0.3)
        self.assertAlmostEqual(result.mu, 0.0)
        self.assertFalse(result.subcharacteristic)
        result = mu_arz(ArzClosure(LinearSpeed(), PowerLaw(1.0, 2.0)), 0.25)
        self.assertAlmostEqual(result.mu, -0.03125)
        self.assertFalse(result.subcharacteristic)

    def test_domain(self):
        closure = ArzClosure(LinearSpeed(), PowerLaw(2.0, 1.0))
        with self.assertRaises(DomainError):
            mu_arz(closure, 0.0)
        with self.assertRaises(DomainError):
            mu_arz(closure, 1.0)

    def test_hesitation_must_increase(self):
        with self.assertRaises(ConfigurationError):
            ArzClosure(LinearSpeed(), LinearSpeed())

    def test_quadratic_hesitation_profile(self):
        """
        Con h = ρ² resulta μ = ρ²(2ρ - 1): negativo en (0, 1/2). μ(0) = 0 y el intervalo
        llega al vacío, así que el perfil es unstable.
        """
        profile = diffusion_profile(ModelKind.ARZ, closure=ArzClosure(LinearSpeed(), PowerLaw(1.0, 2.0)))
        self.assertIs(profile.classification, Classification.UNSTABLE)
        self.assertEqual(len(profile.negative_intervals), 1)
        left, right = profile.negative_intervals[0]
        self.assertAlmostEqual(left, 0.0)
        self.assertAlmostEqual(right, 0.5)


class TestClassification(unittest.TestCase):
    def setUp(self):
        self.rho = np.array([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_worked_values(self):
        self.assertIs(classify(self.rho, [1, 1, 1, 1, 1]), Classification.STABLE)
        self.assertIs(classify(self.rho, [1, 1, -1, 1, 1]), Classification.WEAKLY_UNSTABLE)
        self.assertIs(classify(self.rho, [1, 1, -1, -1, -1]), Classification.UNSTABLE)
        self.assertIs(classify(self.rho, [-1, 1, 1, 1, 1]), Classification.UNSTABLE)

    def test_tiny_values_count_as_zero(self):
        self.assertIs(classify(self.rho, [1, -1e-13, 1, 1, 1]), Classification.STABLE)

    def test_interval_reaching_zero_endpoint(self):
        """
        μ = [1, -1, 0] en ρ = [0, 0.5, 1]: el intervalo negativo termina en ρ_M = 1
        aunque μ(ρ_M) no sea negativo, y la clasificación es unstable.
        """
        rho = [0.0, 0.5, 1.0]
        self.assertEqual(negative_intervals(rho, [1, -1, 0]), [(0.25, 1.0)])
        self.assertIs(classify(rho, [1, -1, 0]), Classification.UNSTABLE)
        self.assertIs(classify(rho, [0, -1, 1]), Classification.UNSTABLE)
        self.assertIs(classify(self.rho, [1, -1, 0, 1, 1]), Classification.WEAKLY_UNSTABLE)

    def test_interval_endpoints(self):
        """
        Los extremos se interpolan linealmente donde μ cambia de signo.
        """
        intervals = negative_intervals(self.rho, [1, -1, -1, 1, 1])
        self.assertEqual(len(intervals), 1)
        self.assertAlmostEqual(intervals[0][0], 0.125)
        self.assertAlmostEqual(intervals[0][1], 0.625)

    def test_too_few_samples(self):
        with self.assertRaises(DomainError):
            classify([0.0, 1.0], [1.0, 1.0])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(min_value=-1000, max_value=1000).map(lambda k: k / 1000.0),
                    min_size=3, max_size=40))
    def test_classification_matches_intervals(self, mu):
        """
        stable ⇔ sin intervalos; unstable ⇔ μ < 0 en un extremo, o μ = 0 en el extremo
        y μ < 0 en la muestra vecina.
        """
        rho = np.linspace(0.0, 1.0, len(mu))
        label = classify(rho, mu)
        intervals = negative_intervals(rho, mu)
        if not intervals:
            self.assertIs(label, Classification.STABLE)
            return
        touches = (mu[0] < 0 or mu[-1] < 0 or (mu[0] == 0 and mu[1] < 0)
                   or (mu[-1] == 0 and mu[-2] < 0))
        expected = Classification.UNSTABLE if touches else Classification.WEAKLY_UNSTABLE
        self.assertIs(label, expected)
        for a, b in intervals:
            self.assertLessEqual(a, b)


if __name__ == '__main__':
    unittest.main()

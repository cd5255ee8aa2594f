import math
from dataclasses import dataclass
from typing import List
from unittest import TestCase as UnitTestCase

import numpy as np
from numpy.testing import assert_allclose
from scipy.special import entr

from entropygames.core import (
    InputException,
    UnreachableTargetException,
    entropy_derivatives,
    fit_beta,
    gibbs,
)

TWO_LEVEL = [0.0, 1.0]


class TestThermo(UnitTestCase):
    def test_gibbs__two_level(self) -> None:
        report = gibbs(TWO_LEVEL, 1.0)
        self.assertAlmostEqual(1 + math.exp(-1), report.z, delta=1e-15)
        self.assertAlmostEqual(1.367879, report.z, delta=1e-6)
        self.assertAlmostEqual(0.268941, report.mean_energy, delta=1e-6)
        self.assertAlmostEqual(0.196612, report.energy_variance, delta=1e-6)
        self.assertAlmostEqual(0.582203, report.entropy, delta=1e-6)
        self.assertAlmostEqual(
            math.log(report.z) + report.mean_energy, report.entropy, delta=1e-15
        )
        self.assertEqual(1.0, report.tau)
        self.assertEqual(1.0, report.beta)
        self.assertAlmostEqual(1.0, sum(report.probs), delta=1e-15)

    def test_gibbs__infinite_temperature(self) -> None:
        report = gibbs([0.0, 1.0, 5.0, 7.5], 0.0)
        self.assertEqual([0.25] * 4, report.probs)
        self.assertAlmostEqual(4.0, report.z, delta=1e-14)
        self.assertEqual(math.inf, report.tau)
        self.assertAlmostEqual(math.log(4), report.entropy, delta=1e-15)

    def test_gibbs__extreme_beta(self) -> None:
        @dataclass
        class TestCase:
            message: str
            beta: float
            mean_energy: float
            entropy: float

        test_cases: List[TestCase] = [
            # Almost all weight on the ground state
            TestCase(message="cold", beta=50.0, mean_energy=0.0, entropy=0.0),
            TestCase(message="frozen", beta=1000.0, mean_energy=0.0, entropy=0.0),
            # Negative temperatures invert the population
            TestCase(message="inverted", beta=-1000.0, mean_energy=2.0, entropy=0.0),
        ]

        for case in test_cases:
            with self.subTest(msg=case.message):
                report = gibbs([0.0, 1.0, 2.0], case.beta)
                self.assertTrue(math.isfinite(report.log_z))
                self.assertAlmostEqual(case.mean_energy, report.mean_energy, delta=1e-18)
                self.assertAlmostEqual(case.entropy, report.entropy, delta=1e-18)
                self.assertFalse(any(math.isnan(p) for p in report.probs))

        # The partition function overflows but its logarithm does not
        report = gibbs([0.0, 1.0, 2.0], -1000.0)
        self.assertEqual(math.inf, report.z)
        self.assertAlmostEqual(2000.0, report.log_z, delta=1e-9)

    def test_gibbs__bad_input(self) -> None:
        with self.assertRaises(InputException):
            gibbs([], 1.0)
        with self.assertRaises(InputException):
            gibbs([0.0, math.inf], 1.0)
        with self.assertRaises(InputException):
            gibbs(TWO_LEVEL, math.nan)

    def test_gibbs__entropy_bounds(self) -> None:
        rng = np.random.default_rng(31)
        for _ in range(200):
            E = rng.uniform(-5, 5, int(rng.integers(1, 8)))
            report = gibbs(E, float(rng.uniform(-3, 3)))
            self.assertGreaterEqual(report.entropy, -1e-12)
            self.assertLessEqual(report.entropy, math.log(len(E)) + 1e-12)
            self.assertGreaterEqual(report.energy_variance, 0)

    def test_gibbs__entropy_matches_probabilities(self) -> None:
        # S computed from Z and <E> agrees with -sum p ln p of the populations
        rng = np.random.default_rng(37)
        for _ in range(1000):
            E = rng.uniform(-5, 5, int(rng.integers(1, 17)))
            report = gibbs(E, float(rng.uniform(-10, 10)))
            self.assertAlmostEqual(
                float(entr(report.probs).sum()), report.entropy, delta=1e-12
            )

    def test_gibbs__mean_energy_decreases_with_beta(self) -> None:
        rng = np.random.default_rng(41)
        betas = np.linspace(-5, 5, 101)
        for _ in range(50):
            E = rng.uniform(-1, 1, int(rng.integers(2, 9)))
            means = [gibbs(E, float(b)).mean_energy for b in betas]
            self.assertTrue(np.all(np.diff(means) < 0))

    def test_entropy_derivatives(self) -> None:
        d = entropy_derivatives(TWO_LEVEL, 1.0)
        self.assertAlmostEqual(-0.196612, d.ds_dbeta, delta=1e-6)
        p = math.exp(-1) / (1 + math.exp(-1))
        self.assertAlmostEqual(
            -p * (1 - p) + p * (1 - p) * (1 - 2 * p), d.d2s_dbeta2, delta=1e-12
        )
        self.assertTrue(d.energy_derivatives_defined)
        self.assertEqual(1.0, d.ds_de)
        self.assertAlmostEqual(-1 / (p * (1 - p)), d.d2s_de2, delta=1e-12)

    def test_entropy_derivatives__finite_differences(self) -> None:
        h = 1e-5
        cases = (
            (TWO_LEVEL, 1.0),
            ([0.0, 0.3, 2.0, 2.5], 0.7),
            ([1.0, -1.0, 4.0], -0.4),
        )
        for E, beta in cases:
            with self.subTest(msg=f"{E} at {beta}"):
                d = entropy_derivatives(E, beta)
                below, above = gibbs(E, beta - h), gibbs(E, beta + h)

                self.assertAlmostEqual(
                    (above.entropy - below.entropy) / (2 * h), d.ds_dbeta, delta=1e-8
                )
                self.assertAlmostEqual(
                    (
                        entropy_derivatives(E, beta + h).ds_dbeta
                        - entropy_derivatives(E, beta - h).ds_dbeta
                    )
                    / (2 * h),
                    d.d2s_dbeta2,
                    delta=1e-8,
                )
                # Chain rule through the mean energy
                self.assertAlmostEqual(
                    (above.entropy - below.entropy)
                    / (above.mean_energy - below.mean_energy),
                    d.ds_de,
                    delta=1e-6,
                )

    def test_entropy_derivatives__degenerate(self) -> None:
        d = entropy_derivatives([2.0, 2.0, 2.0], 1.5)
        self.assertFalse(d.energy_derivatives_defined)
        self.assertIsNone(d.ds_de)
        self.assertIsNone(d.d2s_de2)
        self.assertEqual(0.0, d.ds_dbeta)

    def test_fit_beta(self) -> None:
        # Halfway between two levels is infinite temperature
        self.assertEqual(0.0, fit_beta(TWO_LEVEL, 0.5))

        @dataclass
        class TestCase:
            message: str
            energies: List[float]
            beta: float

        test_cases: List[TestCase] = [
            TestCase(message="two level", energies=TWO_LEVEL, beta=1.0),
            TestCase(message="cold", energies=TWO_LEVEL, beta=20.0),
            TestCase(message="inverted", energies=TWO_LEVEL, beta=-3.0),
            TestCase(message="uneven", energies=[0.0, 0.3, 2.0, 2.5], beta=0.7),
            TestCase(message="shifted", energies=[100.0, 101.0, 105.0], beta=2.0),
        ]

        for case in test_cases:
            with self.subTest(msg=case.message):
                target = gibbs(case.energies, case.beta).mean_energy
                beta = fit_beta(case.energies, target)
                self.assertLess(abs(gibbs(case.energies, beta).mean_energy - target), 1e-12)
                self.assertAlmostEqual(case.beta, beta, delta=1e-6)

                # A starting guess only changes where the search begins
                guessed = fit_beta(case.energies, target, beta_guess=case.beta + 5)
                self.assertAlmostEqual(beta, guessed, delta=1e-6)

    def test_fit_beta__rejects(self) -> None:
        @dataclass
        class TestCase:
            message: str
            energies: List[float]
            target: float
            expected: type

        test_cases: List[TestCase] = [
            TestCase(
                message="ground state",
                energies=TWO_LEVEL,
                target=0.0,
                expected=UnreachableTargetException,
            ),
            TestCase(
                message="top level",
                energies=TWO_LEVEL,
                target=1.0,
                expected=UnreachableTargetException,
            ),
            TestCase(
                message="outside",
                energies=TWO_LEVEL,
                target=-0.5,
                expected=UnreachableTargetException,
            ),
            TestCase(
                message="degenerate",
                energies=[1.0, 1.0],
                target=1.0,
                expected=InputException,
            ),
        ]

        for case in test_cases:
            with self.subTest(msg=case.message):
                with self.assertRaises(case.expected):
                    fit_beta(case.energies, case.target)

        with self.assertRaises(InputException):
            fit_beta(TWO_LEVEL, 0.5, tol=0)

    def test_fit_beta__matches_probabilities(self) -> None:
        beta = fit_beta([0.0, 1.0, 2.0], 0.5)
        probs = gibbs([0.0, 1.0, 2.0], beta).probs
        assert_allclose(0.5, np.dot(probs, [0.0, 1.0, 2.0]), atol=1e-12)
        self.assertGreater(beta, 0)

import math
from dataclasses import dataclass
from itertools import product
from typing import Any, List
from unittest import TestCase as UnitTestCase

import numpy as np
from numpy.testing import assert_allclose

from entropygames.core import (
    DimensionMismatchException,
    Hamiltonian,
    InputException,
    InvalidMatrixException,
    LaxHamiltonian,
    as_density_operator,
    entropy_rate_series,
    hamiltonian_from_lambda,
    hawk_dove,
    integrate,
    integrate_von_neumann,
    lax_operators,
    mixture_entropy_gap,
    purity,
    quantize,
    rock_paper_scissors,
    von_neumann_entropy,
    von_neumann_rhs,
)


def _random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = G @ G.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def _four_sums(rho: np.ndarray, rho_dot: np.ndarray) -> float:
    # Index-by-index evaluation of the truncated series
    n = rho.shape[0]
    r, d = rho, rho_dot
    s1 = sum(d[i, i] for i in range(n))
    s2 = sum(r[i, j] * d[j, i] for i, j in product(range(n), repeat=2))
    s3 = sum(
        r[i, j] * r[j, k] * d[k, i] for i, j, k in product(range(n), repeat=3)
    )
    s4 = sum(
        r[i, j] * r[j, k] * r[k, l] * d[l, i]
        for i, j, k, l in product(range(n), repeat=4)
    )
    return float((11 / 6 * s1 - 6 * s2 + 9 / 2 * s3 - 4 / 3 * s4).real)


class TestQuantum(UnitTestCase):
    def test_as_density_operator(self) -> None:
        @dataclass
        class TestCase:
            message: str
            rho: Any

        test_cases: List[TestCase] = [
            TestCase(message="not square", rho=[[1, 0]]),
            TestCase(message="empty", rho=np.zeros((0, 0))),
            TestCase(message="not hermitian", rho=[[0.5, 0.1j], [0.1j, 0.5]]),
            TestCase(message="trace", rho=[[0.5, 0], [0, 0.6]]),
            TestCase(message="negative eigenvalue", rho=[[1.5, 0], [0, -0.5]]),
            TestCase(message="not finite", rho=[[np.nan, 0], [0, 1]]),
        ]

        for case in test_cases:
            with self.subTest(msg=case.message):
                with self.assertRaises(InvalidMatrixException):
                    as_density_operator(case.rho)

        rho = as_density_operator([[0.5, 0.5j], [-0.5j, 0.5]])
        self.assertTrue(np.iscomplexobj(rho))

    def test_quantize_and_purity(self) -> None:
        rho = quantize([0.25, 0.75])
        root = math.sqrt(0.25 * 0.75)
        assert_allclose([[0.25, root], [root, 0.75]], rho, atol=1e-15)
        self.assertAlmostEqual(1.0, purity(rho), delta=1e-14)
        self.assertAlmostEqual(0.0, von_neumann_entropy(rho), delta=1e-12)

        mixed = np.eye(4) / 4
        self.assertAlmostEqual(0.25, purity(mixed), delta=1e-15)
        self.assertAlmostEqual(math.log(4), von_neumann_entropy(mixed), delta=1e-12)

        rng = np.random.default_rng(3)
        for _ in range(50):
            rho = _random_density(rng, 3)
            self.assertGreaterEqual(purity(rho), 1 / 3 - 1e-12)
            self.assertLessEqual(purity(rho), 1 + 1e-12)
            self.assertGreaterEqual(von_neumann_entropy(rho), 0)
            self.assertLessEqual(von_neumann_entropy(rho), math.log(3) + 1e-12)

    def test_hamiltonian(self) -> None:
        ops = lax_operators([0.2, 0.3, 0.5], rock_paper_scissors().payoff)
        H = hamiltonian_from_lambda(ops.Lambda, hbar=2.0)
        assert_allclose(H.matrix.conj().T, H.matrix, atol=1e-15)
        assert_allclose(np.zeros(3), np.diag(H.matrix), atol=0)
        assert_allclose(2j * ops.Lambda, H.matrix, atol=0)
        self.assertEqual(2.0, H.hbar)

        with self.assertRaises(InvalidMatrixException):
            hamiltonian_from_lambda([[0, 1], [1, 0]])
        with self.assertRaises(InputException):
            hamiltonian_from_lambda(ops.Lambda, hbar=0)
        with self.assertRaises(InvalidMatrixException):
            Hamiltonian(matrix=np.array([[0, 1j], [1j, 0]]))
        with self.assertRaises(InputException):
            Hamiltonian(matrix=np.eye(2), hbar=-1)

    def test_von_neumann_rhs(self) -> None:
        # Hamiltonians commuting with rho leave it unchanged
        rho = np.diag([0.3, 0.7]).astype(complex)
        H = Hamiltonian(np.diag([1.0, 2.0]))
        assert_allclose(np.zeros((2, 2)), von_neumann_rhs(rho, H), atol=0)

        rng = np.random.default_rng(8)
        rho = _random_density(rng, 3)
        H = Hamiltonian(np.array([[1, 1j, 0], [-1j, 0, 2], [0, 2, -1]]), hbar=0.5)
        rate = von_neumann_rhs(rho, H)
        assert_allclose(rate.conj().T, rate, atol=1e-14)
        self.assertLess(abs(np.trace(rate)), 1e-14)

        with self.assertRaises(DimensionMismatchException):
            von_neumann_rhs(np.eye(2) / 2, H)

    def test_integrate_von_neumann__follows_replicator(self) -> None:
        for A, x0 in (
            (hawk_dove().matrix(), [0.9, 0.1]),
            (rock_paper_scissors().matrix(), [0.2, 0.3, 0.5]),
        ):
            classical = integrate(x0, A, dt=1e-3, t_end=5.0)
            density = integrate_von_neumann(
                quantize(x0), LaxHamiltonian(classical, A), dt=1e-3, t_end=5.0
            )
            root = np.sqrt(np.clip(classical.states, 0, None))
            expected = np.einsum("ti,tj->tij", root, root)
            self.assertLess(np.abs(density.states - expected).max(), 1e-6)

            # Unitary flow keeps the state pure
            assert_allclose(np.ones(len(density.times)), density.purities(), atol=1e-8)
            self.assertLess(np.abs(density.entropies()).max(), 1e-6)

    def test_integrate_von_neumann__constant_hamiltonian(self) -> None:
        # A constant Hamiltonian rotates rho; populations of
        # sigma_x eigenstates oscillate with period pi * hbar
        H = Hamiltonian(np.array([[0, 1], [1, 0]], dtype=complex))
        density = integrate_von_neumann(
            np.diag([1.0, 0.0]), lambda _: H, dt=1e-3, t_end=math.pi
        )
        self.assertAlmostEqual(math.pi, density.times[-1], delta=1e-15)
        assert_allclose(np.diag([1.0, 0.0]), density.states[-1], atol=1e-8)
        t = density.times
        assert_allclose(np.cos(t) ** 2, density.states[:, 0, 0].real, atol=1e-8)

        rows = density.to_array()
        self.assertEqual((len(t), 9), rows.shape)

    def test_lax_hamiltonian__interpolates(self) -> None:
        A = hawk_dove().matrix()
        classical = integrate([0.9, 0.1], A, dt=0.01, t_end=1.0)
        source = LaxHamiltonian(classical, A)
        assert_allclose(classical.states[3], source.frequencies(0.03), atol=1e-12)
        assert_allclose(classical.states[0], source.frequencies(-1.0), atol=0)
        assert_allclose(classical.states[-1], source.frequencies(2.0), atol=0)

        fine = integrate([0.9, 0.1], A, dt=0.005, t_end=1.0)
        assert_allclose(fine.states[7], source.frequencies(0.035), atol=1e-9)

        with self.assertRaises(InputException):
            LaxHamiltonian(classical, A, hbar=0)

    def test_mixture_entropy_gap(self) -> None:
        a = quantize([1, 0])
        b = quantize([0, 1])
        gap = mixture_entropy_gap([a, b], [0.5, 0.5])
        self.assertAlmostEqual(math.log(2), gap, delta=1e-12)
        self.assertAlmostEqual(0.0, mixture_entropy_gap([a, a], [0.3, 0.7]), delta=1e-12)

        rng = np.random.default_rng(21)
        for _ in range(100):
            states = [_random_density(rng, 3) for _ in range(3)]
            weights = rng.dirichlet(np.ones(3))
            self.assertGreaterEqual(mixture_entropy_gap(states, weights), -1e-12)

        with self.assertRaises(DimensionMismatchException):
            mixture_entropy_gap([a, b], [1.0])

    def test_entropy_rate_series__truncated(self) -> None:
        rng = np.random.default_rng(13)
        for _ in range(50):
            rho = _random_density(rng, 3)
            H = _random_density(rng, 3) * 3
            rho_dot = -1j * (H @ rho - rho @ H)
            report = entropy_rate_series(rho, rho_dot)
            self.assertAlmostEqual(
                _four_sums(rho, rho_dot), report.truncated, delta=1e-12
            )

    def test_entropy_rate_series__exact(self) -> None:
        # Along a straight line between mixed states the derivative of the
        # entropy is known from finite differences
        rng = np.random.default_rng(17)
        for _ in range(20):
            start = _random_density(rng, 3)
            end = _random_density(rng, 3)
            rho_dot = end - start
            s = 0.4
            h = 1e-5

            def entropy_at(u: float) -> float:
                return von_neumann_entropy((1 - u) * start + u * end)

            finite_difference = (entropy_at(s + h) - entropy_at(s - h)) / (2 * h)
            report = entropy_rate_series((1 - s) * start + s * end, rho_dot)
            self.assertTrue(report.exact_available)
            self.assertAlmostEqual(finite_difference, report.exact, delta=1e-6)
            zeta = report.exact - report.truncated
            self.assertAlmostEqual(zeta, report.zeta, delta=1e-15)

    def test_entropy_rate_series__unavailable(self) -> None:
        rho = np.diag([1.0, 0.0])

        # The zero eigenvalue starts to grow
        report = entropy_rate_series(rho, np.diag([-0.1, 0.1]))
        self.assertFalse(report.exact_available)
        self.assertIsNone(report.exact)
        self.assertIsNone(report.zeta)

        # First-order eigenvalue rates vanish for a pure rotation
        report = entropy_rate_series(rho, [[0, 0.1], [0.1, 0]])
        self.assertTrue(report.exact_available)
        self.assertAlmostEqual(0.0, report.exact, delta=1e-15)

    def test_entropy_rate_series__rejects(self) -> None:
        rho = np.eye(2) / 2
        with self.assertRaises(InvalidMatrixException):
            entropy_rate_series(rho, [[0, 1], [0, 0]])
        with self.assertRaises(InvalidMatrixException):
            entropy_rate_series(rho, np.eye(2))
        with self.assertRaises(DimensionMismatchException):
            entropy_rate_series(rho, np.zeros((3, 3)))

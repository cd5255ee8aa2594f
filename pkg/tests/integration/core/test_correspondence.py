from unittest import TestCase as UnitTestCase

import numpy as np

from entropygames.core import (
    LaxHamiltonian,
    integrate,
    integrate_matrix_flow,
    integrate_von_neumann,
    quantize,
)


class TestCorrespondence(UnitTestCase):
    """
    Tests that the vector, matrix and density-operator forms of the
    replicator dynamics agree on random games.
    """

    def test_matrix_flow_matches_vector_flow(self) -> None:
        rng = np.random.default_rng(100)
        for n in (2, 3, 4):
            with self.subTest(msg=f"{n} strategies"):
                A = rng.uniform(-2, 2, (n, n))
                x0 = rng.dirichlet(np.ones(n))
                matrices = integrate_matrix_flow(x0, A, dt=1e-3, t_end=5.0)
                vectors = integrate(x0, A, dt=1e-3, t_end=5.0)

                self.assertLess(
                    np.abs(matrices.diagonals() - vectors.states).max(), 1e-6
                )

                # The spectrum of X never moves
                eigenvalues = matrices.eigenvalues()
                self.assertLess(np.abs(eigenvalues - eigenvalues[0]).max(), 1e-6)

    def test_matrix_flow_is_isospectral(self) -> None:
        rng = np.random.default_rng(300)
        for i in range(10):
            with self.subTest(msg=f"game {i}"):
                A = rng.uniform(-5, 5, (3, 3))
                x0 = rng.dirichlet(np.ones(3))
                matrices = integrate_matrix_flow(x0, A, dt=1e-3, t_end=10.0)

                # X stays a rank-1 projector with unit trace
                expected = np.tile([0.0, 0.0, 1.0], (len(matrices.times), 1))
                self.assertLess(np.abs(matrices.eigenvalues() - expected).max(), 1e-6)
                traces = np.trace(matrices.states, axis1=1, axis2=2)
                self.assertLess(np.abs(traces - 1).max(), 1e-8)

    def test_density_flow_matches_vector_flow(self) -> None:
        rng = np.random.default_rng(200)
        for n, hbar in ((2, 1.0), (3, 0.5), (4, 2.0)):
            with self.subTest(msg=f"{n} strategies, hbar={hbar}"):
                A = rng.uniform(-2, 2, (n, n))
                x0 = rng.dirichlet(np.ones(n))
                classical = integrate(x0, A, dt=1e-3, t_end=5.0)
                density = integrate_von_neumann(
                    quantize(x0),
                    LaxHamiltonian(classical, A, hbar=hbar),
                    dt=1e-3,
                    t_end=5.0,
                )

                root = np.sqrt(np.clip(classical.states, 0, None))
                expected = np.einsum("ti,tj->tij", root, root)
                self.assertLess(np.abs(density.states - expected).max(), 1e-6)
                self.assertLess(np.abs(density.purities() - 1).max(), 1e-8)

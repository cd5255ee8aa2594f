from dataclasses import dataclass
from typing import Any, Final, List, Optional, Type
from unittest import TestCase as UnitTestCase

import numpy as np
from numpy.testing import assert_array_equal

from entropygames.core import (
    DimensionMismatchException,
    EntropyGamesException,
    InputException,
    InvalidMatrixException,
    InvalidSimplexPointException,
    InvariantViolationException,
    SimplexDriftException,
    StepRejectedException,
    UnreachableTargetException,
    as_frequency_vector,
    as_joint_distribution,
    as_payoff_matrix,
)


class TestValidation(UnitTestCase):
    def test_exception_hierarchy(self) -> None:
        # Input errors and invariant failures must be distinguishable since
        # they map to different exit statuses
        self.assertTrue(issubclass(InputException, EntropyGamesException))
        self.assertTrue(issubclass(InvariantViolationException, EntropyGamesException))
        self.assertTrue(issubclass(UnreachableTargetException, InputException))
        self.assertTrue(issubclass(SimplexDriftException, InvariantViolationException))
        self.assertTrue(issubclass(StepRejectedException, InvariantViolationException))
        self.assertFalse(issubclass(StepRejectedException, InputException))

    def test_exception_messages(self) -> None:
        e = SimplexDriftException(time=1.5, drift=2e-6, dt=0.1)
        self.assertIn("smaller", str(e))
        self.assertEqual(1.5, e.time)

        e = DimensionMismatchException("x", 3, 2)
        self.assertEqual(("x", 3, 2), (e.argument, e.expected, e.actual))

        e = UnreachableTargetException(1.0, 0.0, 1.0)
        self.assertEqual(1.0, e.target)

    def test_as_frequency_vector(self) -> None:
        @dataclass
        class TestCase:
            message: str
            x: Any
            n: Optional[int]
            expected: Final[Optional[List[float]]] = None
            expected_exception: Final[Optional[Type[Exception]]] = None

        test_cases: List[TestCase] = [
            # A valid point should be returned as a float array
            TestCase(
                message="valid point",
                x=[0.25, 0.75],
                n=2,
                expected=[0.25, 0.75],
            ),
            # Vertices of the simplex are valid
            TestCase(
                message="vertex",
                x=[0, 0, 1],
                n=None,
                expected=[0.0, 0.0, 1.0],
            ),
            # The number of strategies must match when given
            TestCase(
                message="wrong length",
                x=[0.5, 0.5],
                n=3,
                expected_exception=DimensionMismatchException,
            ),
            # Negative entries are rejected
            TestCase(
                message="negative entry",
                x=[1.5, -0.5],
                n=2,
                expected_exception=InvalidSimplexPointException,
            ),
            # Entries must sum to 1 within 1e-12
            TestCase(
                message="bad sum",
                x=[0.5, 0.5 + 1e-9],
                n=2,
                expected_exception=InvalidSimplexPointException,
            ),
            # Non-finite entries are rejected
            TestCase(
                message="nan entry",
                x=[float("nan"), 1.0],
                n=2,
                expected_exception=InvalidSimplexPointException,
            ),
            # Matrices are not vectors
            TestCase(
                message="2-d input",
                x=[[1.0]],
                n=None,
                expected_exception=InvalidSimplexPointException,
            ),
        ]

        for case in test_cases:
            with self.subTest(msg=case.message):
                if case.expected_exception is not None:
                    with self.assertRaises(case.expected_exception):
                        as_frequency_vector(case.x, n=case.n)
                else:
                    assert_array_equal(case.expected, as_frequency_vector(case.x, n=case.n))

    def test_as_payoff_matrix(self) -> None:
        @dataclass
        class TestCase:
            message: str
            A: Any
            expected_exception: Final[Optional[Type[Exception]]] = None

        test_cases: List[TestCase] = [
            # A square finite matrix is valid
            TestCase(message="square", A=[[3, 0], [5, 1]]),
            # A single strategy is allowed
            TestCase(message="1x1", A=[[2.0]]),
            # Non-square matrices are rejected
            TestCase(
                message="not square",
                A=[[1, 2, 3], [4, 5, 6]],
                expected_exception=InvalidMatrixException,
            ),
            # Empty matrices are rejected
            TestCase(
                message="empty",
                A=np.zeros((0, 0)),
                expected_exception=InvalidMatrixException,
            ),
            # Infinite payoffs are rejected
            TestCase(
                message="infinite entry",
                A=[[float("inf"), 0], [0, 1]],
                expected_exception=InvalidMatrixException,
            ),
        ]

        for case in test_cases:
            with self.subTest(msg=case.message):
                if case.expected_exception is not None:
                    with self.assertRaises(case.expected_exception):
                        as_payoff_matrix(case.A)
                else:
                    A = as_payoff_matrix(case.A)
                    self.assertEqual(np.float64, A.dtype)

    def test_as_joint_distribution(self) -> None:
        assert_array_equal(
            [[0.1, 0.2], [0.3, 0.4]],
            as_joint_distribution([[0.1, 0.2], [0.3, 0.4]]),
        )
        with self.assertRaises(InvalidMatrixException):
            as_joint_distribution([[0.5, 0.6], [0.0, -0.1]])
        with self.assertRaises(InvalidMatrixException):
            as_joint_distribution([[0.5, 0.6]])
        with self.assertRaises(InvalidMatrixException):
            as_joint_distribution([0.5, 0.5])

from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

# Tolerance on the sum of a frequency vector or joint distribution
SIMPLEX_TOL: float = 1e-12


class EntropyGamesException(Exception):
    """
    Base exception for all others in this package.
    """

    pass


class InputException(EntropyGamesException):
    """
    Exception raised when a caller-supplied value does not satisfy the
    preconditions of an operation.
    """

    pass


class InvariantViolationException(EntropyGamesException):
    """
    Exception raised when a numerical invariant is broken while computing,
    for example when an integrator drifts off the simplex.
    """

    pass


class DimensionMismatchException(InputException):
    """
    Exception raised when the shape of an argument does not match the
    shape required by the other arguments.

    Attributes:
        argument: The name of the argument with the wrong shape.
        expected: The expected number of strategies or the expected shape.
        actual: The number of strategies or shape that was received.
    """

    def __init__(self, argument: str, expected: object, actual: object) -> None:
        """
        Args:
            argument: The name of the argument with the wrong shape.
            expected: The expected number of strategies or the expected
                shape.
            actual: The number of strategies or shape that was received.
        """
        super().__init__(
            f"Argument {argument} has dimension {actual}; expected {expected}"
        )
        self.argument = argument
        self.expected = expected
        self.actual = actual


class InvalidSimplexPointException(InputException):
    """
    Exception raised when a vector is not a point on the probability
    simplex.
    """

    def __init__(self, argument: str, reason: str) -> None:
        """
        Args:
            argument: The name of the offending argument.
            reason: Why the vector is not on the simplex.
        """
        super().__init__(f"Argument {argument} is not a simplex point: {reason}")
        self.argument = argument


class InvalidMatrixException(InputException):
    """
    Exception raised when a matrix violates a structural requirement
    (square, finite, hermitian, positive semi-definite, stochastic, ...).
    """

    def __init__(self, argument: str, reason: str) -> None:
        """
        Args:
            argument: The name of the offending argument.
            reason: The requirement that was violated.
        """
        super().__init__(f"Argument {argument} is invalid: {reason}")
        self.argument = argument


class UnreachableTargetException(InputException):
    """
    Exception raised when a target mean energy lies outside the open
    interval spanned by a spectrum.
    """

    def __init__(self, target: float, lower: float, upper: float) -> None:
        """
        Args:
            target: The requested mean energy.
            lower: The smallest energy level.
            upper: The largest energy level.
        """
        super().__init__(
            f"Mean energy {target} cannot be reached by any temperature; "
            f"expected a value strictly between {lower} and {upper}"
        )
        self.target = target
        self.lower = lower
        self.upper = upper


class UnstableStepException(InputException):
    """
    Exception raised when an explicit time step exceeds its stability bound.
    """

    def __init__(self, dt: float, bound: float) -> None:
        """
        Args:
            dt: The requested time step.
            bound: The largest allowed time step (exclusive).
        """
        super().__init__(f"Time step {dt} is unstable; it must be below {bound}")
        self.dt = dt
        self.bound = bound


class SimplexDriftException(InvariantViolationException):
    """
    Exception raised when an integrated frequency vector leaves the simplex.
    """

    def __init__(self, time: float, drift: float, dt: float) -> None:
        """
        Args:
            time: The simulation time at which the drift was detected.
            drift: The absolute deviation of the component sum from 1.
            dt: The step size that was used.
        """
        super().__init__(
            f"Simplex drift {drift:.3e} at t={time:.6g} exceeds tolerance; "
            f"retry with a step size smaller than dt={dt:g}"
        )
        self.time = time
        self.drift = drift
        self.dt = dt


class MatrixFlowDriftException(InvariantViolationException):
    """
    Exception raised when an integrated matrix loses one of the invariants
    of its flow (trace, symmetry, idempotency, hermiticity, purity, ...).
    """

    def __init__(self, time: float, quantity: str, drift: float, dt: float) -> None:
        """
        Args:
            time: The simulation time at which the drift was detected.
            quantity: The invariant that drifted.
            drift: The size of the deviation.
            dt: The step size that was used.
        """
        super().__init__(
            f"{quantity} drifted by {drift:.3e} at t={time:.6g}; "
            f"retry with a step size smaller than dt={dt:g}"
        )
        self.time = time
        self.quantity = quantity
        self.drift = drift
        self.dt = dt


class InternalConsistencyException(InvariantViolationException):
    """
    Exception raised when two independent computations of the same quantity
    disagree. This signals a bug and is never expected on valid input.
    """

    def __init__(self, quantity: str, residual: float) -> None:
        """
        Args:
            quantity: The quantity that was computed two ways.
            residual: The largest entrywise disagreement.
        """
        super().__init__(
            f"Internal consistency check on {quantity} failed "
            f"with residual {residual:.3e}"
        )
        self.quantity = quantity
        self.residual = residual


class StepRejectedException(InvariantViolationException):
    """
    Exception raised when an exchange step moves the mean energy of an
    ensemble outside the open interval it can reach at positive temperature,
    from its lowest energy level to the average of its levels.
    """

    def __init__(
        self,
        node_id: str,
        mean_energy: float,
        lower: float,
        upper: float,
        dt: float,
    ) -> None:
        """
        Args:
            node_id: The ensemble whose mean energy escaped.
            mean_energy: The mean energy after the step.
            lower: The lower end of the admissible interval.
            upper: The upper end of the admissible interval.
            dt: The step size that was used.
        """
        super().__init__(
            f"Step rejected: ensemble {node_id} would reach mean energy "
            f"{mean_energy:.6g} outside ({lower:g}, {upper:g}); "
            f"retry with a step size smaller than dt={dt:g}"
        )
        self.node_id = node_id
        self.mean_energy = mean_energy
        self.lower = lower
        self.upper = upper
        self.dt = dt


def as_payoff_matrix(A: ArrayLike, argument: str = "A") -> np.ndarray:
    """
    Converts the input to a square, finite payoff matrix.

    Args:
        A: Anything numpy can turn into an n×n array of reals.
        argument: Name used in error messages.

    Raises:
        InvalidMatrixException: If the matrix is not square, is empty, or
            contains non-finite entries.

    Returns:
        A float64 copy of the input.
    """
    matrix = np.array(A, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidMatrixException(argument, f"expected square, got {matrix.shape}")
    if matrix.shape[0] < 1:
        raise InvalidMatrixException(argument, "at least one strategy is required")
    if not np.all(np.isfinite(matrix)):
        raise InvalidMatrixException(argument, "entries must be finite")
    return matrix


def as_frequency_vector(
    x: ArrayLike,
    n: Optional[int] = None,
    argument: str = "x",
) -> np.ndarray:
    """
    Converts the input to a point on the probability simplex.

    Args:
        x: Anything numpy can turn into a 1-d array of reals.
        n: If not None, the required number of strategies.
        argument: Name used in error messages.

    Raises:
        DimensionMismatchException: If n is given and does not match.
        InvalidSimplexPointException: If any entry is outside [0, 1] or the
            entries do not sum to 1.

    Returns:
        A float64 copy of the input.
    """
    vector = np.array(x, dtype=float)
    if vector.ndim != 1:
        raise InvalidSimplexPointException(argument, f"expected 1-d, got {vector.shape}")
    if n is not None and vector.shape[0] != n:
        raise DimensionMismatchException(argument, n, vector.shape[0])
    if not np.all(np.isfinite(vector)):
        raise InvalidSimplexPointException(argument, "entries must be finite")
    if np.any(vector < 0) or np.any(vector > 1):
        raise InvalidSimplexPointException(argument, "entries must be in [0, 1]")
    if abs(vector.sum() - 1) > SIMPLEX_TOL:
        raise InvalidSimplexPointException(
            argument, f"entries sum to {vector.sum():.17g}"
        )
    return vector


def as_joint_distribution(J: ArrayLike, argument: str = "J") -> np.ndarray:
    """
    Converts the input to an m×n joint probability table.

    Raises:
        InvalidMatrixException: If the table is not 2-d, has negative
            entries, or does not sum to 1.
    """
    table = np.array(J, dtype=float)
    if table.ndim != 2 or table.size == 0:
        raise InvalidMatrixException(argument, f"expected 2-d, got {table.shape}")
    if not np.all(np.isfinite(table)) or np.any(table < 0):
        raise InvalidMatrixException(argument, "entries must be finite and >= 0")
    if abs(table.sum() - 1) > SIMPLEX_TOL:
        raise InvalidMatrixException(argument, f"entries sum to {table.sum():.17g}")
    return table

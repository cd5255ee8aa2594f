from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import eigvalsh
from scipy.special import entr
from tqdm import tqdm

from entropygames.log import log

from .integrate import rk4_step, sample_times
from .replicator import _replicator_rhs
from .validation import (
    InternalConsistencyException,
    InvalidMatrixException,
    MatrixFlowDriftException,
    as_frequency_vector,
    as_payoff_matrix,
)

# Disagreement between [Lambda, X] and G + G^T that signals a bug
CROSS_CHECK_TOL: float = 1e-8

# Invariant drift that aborts a matrix integration
DRIFT_ABORT: float = 1e-4

# Invariant drift above which a matrix trajectory is reported as degraded
DRIFT_WARN: float = 1e-6

# Eigenvalues down to this are treated as rounding noise around 0
NEGATIVE_EIGENVALUE_TOL: float = 1e-10

EntropyMode = Literal["eigen", "diagonal"]


@dataclass
class LaxOperators:
    """
    The operators of the matrix form of the replicator dynamics at one
    population state.
    """

    G_sym: np.ndarray
    """
    G + G^T, the right-hand side of the matrix replicator equation.
    """

    Q: np.ndarray
    """
    Diagonal matrix with q_ii = 1/2 sum_k a_ik x_k.
    """

    Lambda: np.ndarray
    """
    [Q, X]; antisymmetric.
    """

    Theta: np.ndarray
    """
    [Lambda, X]; symmetric and traceless.
    """


@dataclass
class MatrixTrajectory:
    """
    Relative frequencies matrices sampled along an integration.
    """

    times: np.ndarray
    """
    Strictly increasing sample times, shape (T,).
    """

    states: np.ndarray
    """
    The matrix X at each sample time, shape (T, n, n).
    """

    def eigenvalues(self) -> np.ndarray:
        """
        Ascending eigenvalues of X at each sample time, shape (T, n).
        """
        return np.linalg.eigvalsh(self.states)

    def diagonals(self) -> np.ndarray:
        """
        diag(X) at each sample time, shape (T, n).
        """
        return np.diagonal(self.states, axis1=1, axis2=2).copy()

    def to_array(self) -> np.ndarray:
        """
        Columns t, x_11, x_12, ..., x_nn (row-major) as one array.
        """
        flat = self.states.reshape(self.states.shape[0], -1)
        return np.column_stack([self.times, flat])


def _frequency_matrix(x: np.ndarray) -> np.ndarray:
    root = np.sqrt(np.clip(x, 0, None))
    return np.outer(root, root)


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _lambda(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    # Lambda_ij = 1/2 [f_i x_ij - x_ji f_j], with x read off diag(X)
    f = A @ np.diag(X)
    return 0.5 * (f[:, None] * X - X * f[None, :])


def build_frequency_matrix(x: ArrayLike) -> np.ndarray:
    """
    Builds the relative frequencies matrix with entries x_ij = (x_i x_j)^1/2.
    The result is the rank-1 projector onto the vector of square roots, so
    it is symmetric, idempotent and has trace 1.
    """
    return _frequency_matrix(as_frequency_vector(x))


def lax_operators(x: ArrayLike, A: ArrayLike) -> LaxOperators:
    """
    Builds Q, Lambda = [Q, X], Theta = [Lambda, X] and G + G^T at the input
    population state, and cross-checks that Theta equals G + G^T.

    Raises:
        DimensionMismatchException: If x does not match A.
        InternalConsistencyException: If Theta and G + G^T disagree by more
            than 1e-8.
    """
    A = as_payoff_matrix(A)
    x = as_frequency_vector(x, n=A.shape[0])
    X = _frequency_matrix(x)
    f = A @ x
    mean = float(x @ f)

    Q = np.diag(f / 2)
    Lambda = _lambda(A, X)
    Theta = _commutator(Lambda, X)
    G_sym = 0.5 * f[:, None] * X + 0.5 * f[None, :] * X.T - mean * X

    residual = float(np.abs(Theta - G_sym).max())
    if residual > CROSS_CHECK_TOL:
        raise InternalConsistencyException("[Lambda, X] vs G + G^T", residual)

    return LaxOperators(G_sym=G_sym, Q=Q, Lambda=Lambda, Theta=Theta)


def diagonal_equivalence_residual(x: ArrayLike, A: ArrayLike) -> float:
    """
    max_i |diag([Lambda, X])_i - dx_i/dt|, the disagreement between the
    matrix and vector forms of the replicator dynamics at one state.
    """
    A = as_payoff_matrix(A)
    x = as_frequency_vector(x, n=A.shape[0])
    X = _frequency_matrix(x)
    Theta = _commutator(_lambda(A, X), X)
    return float(np.abs(np.diag(Theta) - _replicator_rhs(x, A)).max())


def _check_matrix_invariants(X: np.ndarray, t: float, dt: float) -> float:
    """
    Returns the worst of the trace, symmetry and idempotency drifts of X,
    raising if it exceeds the abort threshold.
    """
    drifts = {
        "trace": abs(np.trace(X) - 1),
        "symmetry": float(np.abs(X - X.T).max()),
        "idempotency": float(np.abs(X @ X - X).max()),
    }
    for quantity, drift in drifts.items():
        if not drift <= DRIFT_ABORT:
            raise MatrixFlowDriftException(
                time=t, quantity=f"X {quantity}", drift=drift, dt=dt
            )
    return max(drifts.values())


def integrate_matrix_flow(
    x0: ArrayLike,
    A: ArrayLike,
    dt: float = 1e-3,
    t_end: float = 10.0,
    pbar: Optional[tqdm] = None,
) -> MatrixTrajectory:
    """
    Integrates the Lax form dX/dt = [Lambda, X] with fixed-step fourth-order
    Runge-Kutta. Lambda is rebuilt at every stage from the current matrix,
    with population frequencies read off its diagonal.

    Args:
        x0: Initial frequencies; X(0) is their relative frequencies matrix.
        A: The payoff matrix.
        dt: Step size.
        t_end: End time.
        pbar: If not None, advanced by one for each step taken.

    Raises:
        MatrixFlowDriftException: If the trace, symmetry or idempotency of X
            drifts by more than 1e-4.

    Returns:
        The sampled matrices, including X(0).
    """
    A = as_payoff_matrix(A)
    X = build_frequency_matrix(as_frequency_vector(x0, n=A.shape[0], argument="x0"))
    times = sample_times(dt, t_end)

    states = np.empty((times.shape[0],) + X.shape)
    states[0] = X

    def rhs(_: float, Y: np.ndarray) -> np.ndarray:
        return _commutator(_lambda(A, Y), Y)

    worst = 0.0
    for i in range(1, times.shape[0]):
        X = rk4_step(rhs, times[i - 1], X, times[i] - times[i - 1])
        worst = max(worst, _check_matrix_invariants(X, times[i], dt))
        states[i] = X
        if pbar is not None:
            pbar.update(1)

    if worst > DRIFT_WARN:
        log.warning(f"Matrix flow invariants drifted by up to {worst:.3e}")

    return MatrixTrajectory(times=times, states=states)


def matrix_entropy(X: ArrayLike, mode: EntropyMode = "eigen") -> float:
    """
    Entropy -Tr{X ln X} of a relative frequencies matrix, in nats.

    Args:
        X: The matrix.
        mode: "eigen" evaluates the trace through the eigenvalues of X.
            Since X is a rank-1 projector this is always 0. "diagonal" keeps
            only the diagonal of X, which yields the Shannon entropy of the
            population frequencies.

    Raises:
        InvalidMatrixException: If X is not symmetric, if mode is unknown,
            or if X has an eigenvalue below -1e-10.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidMatrixException("X", f"expected square, got {X.shape}")
    if mode == "diagonal":
        return float(entr(np.clip(np.diag(X), 0, None)).sum())
    if mode != "eigen":
        raise InvalidMatrixException("mode", f"unknown entropy mode {mode!r}")
    if not np.allclose(X, X.T, rtol=0, atol=1e-10):
        raise InvalidMatrixException("X", "matrix is not symmetric")

    eigenvalues = eigvalsh(X)
    if eigenvalues.min() < -NEGATIVE_EIGENVALUE_TOL:
        raise InvalidMatrixException(
            "X", f"negative eigenvalue {eigenvalues.min():.3e}"
        )
    return float(entr(np.clip(eigenvalues, 0, None)).sum())

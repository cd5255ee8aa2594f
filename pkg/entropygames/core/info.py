import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import entr, rel_entr

from .models import InfoReport, MarkovChainReport
from .validation import (
    DimensionMismatchException,
    InputException,
    InvalidMatrixException,
    SIMPLEX_TOL,
    as_frequency_vector,
    as_joint_distribution,
)

# Slack allowed on every information inequality
INEQUALITY_TOL: float = 1e-10

_LN2: float = math.log(2)


@dataclass
class ConditionalEntropies:
    """
    Uncertainty about player A after observing B, and after observing both
    B and C, in bits.
    """

    h_a_given_b: float
    """
    H(A|B).
    """

    h_a_given_bc: float
    """
    H(A|B,C).
    """


def _bits(p: np.ndarray) -> float:
    """
    Entropy in bits of any array of probabilities, with 0 log 0 = 0.
    """
    return float(entr(p).sum() / _LN2)


def _mutual_information(J: np.ndarray) -> float:
    return _bits(J.sum(axis=1)) + _bits(J.sum(axis=0)) - _bits(J)


def _as_kernel(kernel: ArrayLike, rows: int) -> np.ndarray:
    K = np.array(kernel, dtype=float)
    if K.ndim != 2:
        raise InvalidMatrixException("kernel", f"expected 2-d, got {K.shape}")
    if K.shape[0] != rows:
        raise DimensionMismatchException("kernel", rows, K.shape[0])
    if not np.all(np.isfinite(K)) or np.any(K < 0):
        raise InvalidMatrixException("kernel", "entries must be finite and >= 0")
    if np.abs(K.sum(axis=1) - 1).max() > SIMPLEX_TOL:
        raise InvalidMatrixException("kernel", "rows must sum to 1")
    return K


def marginals(J: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns the marginal strategy distributions of players A (row sums) and
    B (column sums).
    """
    J = as_joint_distribution(J)
    return J.sum(axis=1), J.sum(axis=0)


def info_report(J: ArrayLike) -> InfoReport:
    """
    Computes the marginal, joint, conditional and mutual entropies of a
    joint strategy distribution, in bits.
    """
    J = as_joint_distribution(J)
    h_a = _bits(J.sum(axis=1))
    h_b = _bits(J.sum(axis=0))
    h_ab = _bits(J)
    return InfoReport(
        h_a=h_a,
        h_b=h_b,
        h_ab=h_ab,
        h_a_given_b=h_ab - h_b,
        h_b_given_a=h_ab - h_a,
        i_ab=h_a + h_b - h_ab,
    )


def relative_entropy(x: ArrayLike, y: ArrayLike) -> float:
    """
    H(x||y) = sum_i x_i log2 x_i - sum_i x_i log2 y_i, in bits.

    Returns:
        A non-negative value, 0 when x equals y, and math.inf when x puts
        weight on a strategy that y never plays.

    Raises:
        DimensionMismatchException: If x and y have different lengths.
    """
    x = as_frequency_vector(x, argument="x")
    y = as_frequency_vector(y, n=x.shape[0], argument="y")
    total = float(rel_entr(x, y).sum())
    if math.isinf(total):
        return math.inf
    return max(total / _LN2, 0.0)


def sanov_confusion_bound(x: ArrayLike, y: ArrayLike, N: int) -> float:
    """
    Upper bound 2^(-N H(x||y)) on the probability of confusing distribution
    x for y after N independent observations.

    Raises:
        InputException: If N is negative.
    """
    if N < 0:
        raise InputException(f"Number of observations must be >= 0, got {N}")
    divergence = relative_entropy(x, y)
    if N == 0:
        return 1.0
    if math.isinf(divergence):
        return 0.0
    return float(2.0 ** (-N * divergence))


def markov_triple(J_AB: ArrayLike, kernel: ArrayLike) -> np.ndarray:
    """
    Joint distribution of a Markov chain A -> B -> C, where C depends on A
    only through B.

    Args:
        J_AB: m×n joint distribution of A and B.
        kernel: n×k row-stochastic matrix of P(C = c | B = b).

    Returns:
        m×n×k array with entry [a, b, c] = P(a, b) P(c | b).
    """
    J_AB = as_joint_distribution(J_AB, argument="J_AB")
    K = _as_kernel(kernel, J_AB.shape[1])
    return J_AB[:, :, None] * K[None, :, :]


def conditional_entropies(J_ABC: ArrayLike) -> ConditionalEntropies:
    """
    H(A|B) and H(A|B,C) of a three-player joint distribution, in bits.
    Conditioning on more players can only reduce the uncertainty about A.

    Raises:
        InvalidMatrixException: If the array is not a 3-d probability table.
    """
    J = np.array(J_ABC, dtype=float)
    if J.ndim != 3 or J.size == 0:
        raise InvalidMatrixException("J_ABC", f"expected 3-d, got {J.shape}")
    if np.any(J < 0) or abs(J.sum() - 1) > SIMPLEX_TOL:
        raise InvalidMatrixException("J_ABC", "entries must be >= 0 and sum to 1")
    J_AB = J.sum(axis=2)
    J_BC = J.sum(axis=0)
    return ConditionalEntropies(
        h_a_given_b=_bits(J_AB) - _bits(J_AB.sum(axis=0)),
        h_a_given_bc=_bits(J) - _bits(J_BC),
    )


def markov_data_processing_check(
    J_AB: ArrayLike,
    kernel: ArrayLike,
) -> MarkovChainReport:
    """
    Passes player B's strategy through a noisy channel to produce C, and
    checks the data-processing inequalities H(A) >= I(A:B) >= I(A:C) and
    I(C:B) >= I(C:A).

    Args:
        J_AB: m×n joint distribution of A and B.
        kernel: n×k row-stochastic matrix of P(C = c | B = b).

    Raises:
        InvalidMatrixException: If the kernel has negative entries or rows
            that do not sum to 1.
        DimensionMismatchException: If the kernel does not have one row per
            strategy of B.
    """
    J_AB = as_joint_distribution(J_AB, argument="J_AB")
    K = _as_kernel(kernel, J_AB.shape[1])

    J_AC = J_AB @ K
    J_BC = J_AB.sum(axis=0)[:, None] * K

    h_a = _bits(J_AB.sum(axis=1))
    i_ab = _mutual_information(J_AB)
    i_ac = _mutual_information(J_AC)
    i_bc = _mutual_information(J_BC)
    return MarkovChainReport(
        i_ab=i_ab,
        i_ac=i_ac,
        i_bc=i_bc,
        holds=i_ab >= i_ac - INEQUALITY_TOL and h_a >= i_ab - INEQUALITY_TOL,
        shared_holds=i_bc >= i_ac - INEQUALITY_TOL,
    )

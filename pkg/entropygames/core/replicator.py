import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import entr
from tqdm import tqdm

from entropygames.log import log

from .integrate import rk4_step, sample_times
from .validation import SimplexDriftException, as_frequency_vector, as_payoff_matrix

# Drift of sum(x) from 1 that aborts an integration
DRIFT_ABORT: float = 1e-6

# Drift of sum(x) from 1 above which a trajectory is reported as degraded
DRIFT_WARN: float = 1e-8


@dataclass
class FitnessReport:
    """
    Fitness of each pure strategy in a population.
    """

    fitness: np.ndarray
    """
    f_i = sum_j a_ij x_j.
    """

    mean_fitness: float
    """
    <f> = sum_kl a_kl x_k x_l.
    """

    excess: np.ndarray
    """
    U_i = f_i - <f>.
    """


@dataclass
class Trajectory:
    """
    Frequencies and Shannon entropy sampled along an integration.
    """

    times: np.ndarray
    """
    Strictly increasing sample times, shape (T,).
    """

    states: np.ndarray
    """
    Frequency vector at each sample time, shape (T, n).
    """

    entropies: np.ndarray
    """
    Shannon entropy in nats at each sample time, shape (T,).
    """

    def to_array(self) -> np.ndarray:
        """
        Columns t, x_1, ..., x_n, H as one (T, n + 2) array.
        """
        return np.column_stack([self.times, self.states, self.entropies])


def nats_to_bits(value: float) -> float:
    return value / math.log(2)


def bits_to_nats(value: float) -> float:
    return value * math.log(2)


def _fitness(x: np.ndarray, A: np.ndarray) -> FitnessReport:
    f = A @ x
    mean = float(x @ f)
    return FitnessReport(fitness=f, mean_fitness=mean, excess=f - mean)


def _replicator_rhs(x: np.ndarray, A: np.ndarray) -> np.ndarray:
    f = A @ x
    return x * (f - x @ f)


def fitness(x: ArrayLike, A: ArrayLike) -> FitnessReport:
    """
    Computes the fitness of each strategy, the mean fitness of the
    population and the excess fitness of each strategy.

    Raises:
        DimensionMismatchException: If x does not match A.
    """
    A = as_payoff_matrix(A)
    x = as_frequency_vector(x, n=A.shape[0])
    return _fitness(x, A)


def replicator_rhs(x: ArrayLike, A: ArrayLike) -> np.ndarray:
    """
    Right-hand side of the replicator dynamics,
    dx_i/dt = [sum_j a_ij x_j - sum_kl a_kl x_k x_l] x_i.

    Raises:
        DimensionMismatchException: If x does not match A.
    """
    A = as_payoff_matrix(A)
    x = as_frequency_vector(x, n=A.shape[0])
    return _replicator_rhs(x, A)


def shannon_entropy(x: ArrayLike) -> float:
    """
    Shannon entropy -sum_i x_i ln x_i in nats, with 0 ln 0 = 0.
    """
    x = as_frequency_vector(x)
    return float(entr(x).sum())


def shannon_entropy_rate(x: ArrayLike, A: ArrayLike) -> float:
    """
    Rate of change of the Shannon entropy along the replicator dynamics,
    dH/dt = Tr{U (H~ - X)}, with U = diag(U_i), H~ = diag(-x_i ln x_i) and X
    the relative frequencies matrix. Only the diagonal of X reaches the
    trace because U is diagonal.

    Returns:
        The rate in nats per unit time.
    """
    A = as_payoff_matrix(A)
    x = as_frequency_vector(x, n=A.shape[0])
    U = np.diag(_fitness(x, A).excess)
    H_tilde = np.diag(entr(x))
    X = np.sqrt(np.outer(x, x))
    return float(np.trace(U @ (H_tilde - X)))


def integrate(
    x0: ArrayLike,
    A: ArrayLike,
    dt: float = 1e-3,
    t_end: float = 10.0,
    pbar: Optional[tqdm] = None,
) -> Trajectory:
    """
    Integrates the replicator dynamics with fixed-step fourth-order
    Runge-Kutta, sampling after every step. The state is never renormalized;
    the distance of sum(x) from 1 is checked instead.

    Args:
        x0: Initial frequencies.
        A: The payoff matrix.
        dt: Step size.
        t_end: End time.
        pbar: If not None, advanced by one for each step taken.

    Raises:
        InputException: If dt or t_end is out of range, or x0 is invalid.
        SimplexDriftException: If sum(x) drifts from 1 by more than 1e-6.

    Returns:
        The sampled trajectory, including the initial state.
    """
    A = as_payoff_matrix(A)
    x = as_frequency_vector(x0, n=A.shape[0], argument="x0")
    times = sample_times(dt, t_end)

    states = np.empty((times.shape[0], x.shape[0]))
    states[0] = x

    def rhs(_: float, y: np.ndarray) -> np.ndarray:
        return _replicator_rhs(y, A)

    log.debug(f"Integrating replicator dynamics over {len(times) - 1} steps")
    for i in range(1, times.shape[0]):
        h = times[i] - times[i - 1]
        x = rk4_step(rhs, times[i - 1], x, h)
        drift = abs(x.sum() - 1)
        if not drift <= DRIFT_ABORT:
            raise SimplexDriftException(time=times[i], drift=drift, dt=dt)
        states[i] = x
        if pbar is not None:
            pbar.update(1)

    final_drift = abs(states[-1].sum() - 1)
    if final_drift >= DRIFT_WARN:
        log.warning(
            f"Final simplex drift {final_drift:.3e} exceeds {DRIFT_WARN:g}; "
            "consider a smaller step size"
        )

    return Trajectory(
        times=times,
        states=states,
        entropies=entr(np.clip(states, 0, None)).sum(axis=1),
    )

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import eigh, eigvalsh
from scipy.special import entr
from tqdm import tqdm

from entropygames.log import log

from .integrate import rk4_step, sample_times
from .lax import _frequency_matrix, _lambda
from .models import EntropyRateReport
from .replicator import Trajectory, _replicator_rhs
from .validation import (
    DimensionMismatchException,
    InputException,
    InvalidMatrixException,
    MatrixFlowDriftException,
    as_frequency_vector,
    as_payoff_matrix,
)

# Tolerance for hermiticity and unit trace of a density operator
STATE_TOL: float = 1e-12

# Eigenvalues down to this are treated as rounding noise around 0
NEGATIVE_EIGENVALUE_TOL: float = 1e-10

# Invariant drift that aborts a von Neumann integration
DRIFT_ABORT: float = 1e-4

# Invariant drift above which a density trajectory is reported as degraded
DRIFT_WARN: float = 1e-6

# Eigenvalues at or below this are singular for the logarithm in the exact
# entropy rate
SINGULAR_EIGENVALUE: float = 1e-14

# Coefficients of the four truncated entropy-rate sums
_SERIES_COEFFICIENTS = (11 / 6, -6.0, 9 / 2, -4 / 3)


def _hermitian_residual(M: np.ndarray) -> float:
    return float(np.abs(M - M.conj().T).max())


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """
    A Hermitian operator generating a von Neumann flow.
    """

    matrix: np.ndarray
    """
    The n×n Hermitian matrix, in units of energy.
    """

    hbar: float = 1.0
    """
    The reduced Planck constant.
    """

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidMatrixException(
                "hamiltonian", f"expected square, got {matrix.shape}"
            )
        if _hermitian_residual(matrix) > STATE_TOL:
            raise InvalidMatrixException("hamiltonian", "matrix is not Hermitian")
        if not self.hbar > 0:
            raise InputException(f"hbar must be positive, got {self.hbar}")
        object.__setattr__(self, "matrix", matrix)


# Supplies the Hamiltonian to use at a given time
HamiltonianSource = Callable[[float], Hamiltonian]


@dataclass
class DensityTrajectory:
    """
    Density operators sampled along a von Neumann integration.
    """

    times: np.ndarray
    """
    Strictly increasing sample times, shape (T,).
    """

    states: np.ndarray
    """
    The density operator at each sample time, shape (T, n, n), complex.
    """

    def eigenvalues(self) -> np.ndarray:
        """
        Ascending eigenvalues at each sample time, shape (T, n).
        """
        return np.linalg.eigvalsh(self.states)

    def entropies(self) -> np.ndarray:
        """
        Von Neumann entropy in nats at each sample time.
        """
        return entr(np.clip(self.eigenvalues(), 0, None)).sum(axis=1)

    def purities(self) -> np.ndarray:
        """
        Tr rho^2 at each sample time.
        """
        return np.einsum("tij,tji->t", self.states, self.states).real

    def to_array(self) -> np.ndarray:
        """
        Columns t, re_11, im_11, re_12, im_12, ... as one real array.
        """
        flat = self.states.reshape(self.states.shape[0], -1)
        interleaved = np.empty((flat.shape[0], 2 * flat.shape[1]))
        interleaved[:, 0::2] = flat.real
        interleaved[:, 1::2] = flat.imag
        return np.column_stack([self.times, interleaved])


def as_density_operator(rho: ArrayLike, argument: str = "rho") -> np.ndarray:
    """
    Converts the input to a density operator: Hermitian, unit trace and
    positive semi-definite.

    Raises:
        InvalidMatrixException: If any of those properties fails.
    """
    matrix = np.array(rho, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.size == 0:
        raise InvalidMatrixException(argument, f"expected square, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvalidMatrixException(argument, "entries must be finite")
    if _hermitian_residual(matrix) > STATE_TOL:
        raise InvalidMatrixException(argument, "matrix is not Hermitian")
    if abs(np.trace(matrix) - 1) > STATE_TOL:
        raise InvalidMatrixException(
            argument, f"trace is {np.trace(matrix).real:.17g}, expected 1"
        )
    smallest = eigvalsh(matrix)[0]
    if smallest < -NEGATIVE_EIGENVALUE_TOL:
        raise InvalidMatrixException(argument, f"negative eigenvalue {smallest:.3e}")
    return matrix


def quantize(x: ArrayLike) -> np.ndarray:
    """
    Maps population frequencies to the pure density operator with
    rho_ii = x_i and rho_ij = (x_i x_j)^1/2.
    """
    return _frequency_matrix(as_frequency_vector(x)).astype(complex)


def purity(rho: ArrayLike) -> float:
    """
    Tr rho^2; 1 for pure states and 1/n for the maximally mixed state.
    """
    rho = as_density_operator(rho)
    return float(np.trace(rho @ rho).real)


def hamiltonian_from_lambda(Lambda: ArrayLike, hbar: float = 1.0) -> Hamiltonian:
    """
    Inverts Lambda -> -(i/hbar) H, giving H = i hbar Lambda. An
    antisymmetric real Lambda gives a Hermitian H with zero diagonal.

    Raises:
        InvalidMatrixException: If Lambda is not antisymmetric within 1e-10.
        InputException: If hbar is not positive.
    """
    Lambda = np.asarray(Lambda, dtype=float)
    if Lambda.ndim != 2 or Lambda.shape[0] != Lambda.shape[1]:
        raise InvalidMatrixException("Lambda", f"expected square, got {Lambda.shape}")
    if np.abs(Lambda + Lambda.T).max() > 1e-10:
        raise InvalidMatrixException("Lambda", "matrix is not antisymmetric")
    if not hbar > 0:
        raise InputException(f"hbar must be positive, got {hbar}")
    return Hamiltonian(matrix=1j * hbar * Lambda, hbar=hbar)


def _von_neumann_rhs(rho: np.ndarray, H: Hamiltonian) -> np.ndarray:
    return (-1j / H.hbar) * (H.matrix @ rho - rho @ H.matrix)


def von_neumann_rhs(rho: ArrayLike, H: Hamiltonian) -> np.ndarray:
    """
    Right-hand side of the von Neumann equation,
    drho/dt = (-i/hbar) [H, rho].

    Raises:
        DimensionMismatchException: If rho and H have different sizes.
    """
    rho = as_density_operator(rho)
    if rho.shape != H.matrix.shape:
        raise DimensionMismatchException("rho", H.matrix.shape, rho.shape)
    return _von_neumann_rhs(rho, H)


class LaxHamiltonian:
    """
    Hamiltonian source H(t) = i hbar Lambda(x(t)) along a replicator
    trajectory. Between samples, x(t) is found by cubic Hermite
    interpolation using the replicator dynamics for the slopes, which keeps
    the RK4 half-step evaluations fourth-order accurate.
    """

    def __init__(
        self,
        trajectory: Trajectory,
        A: ArrayLike,
        hbar: float = 1.0,
    ) -> None:
        """
        Args:
            trajectory: The classical trajectory to follow.
            A: The payoff matrix that generated the trajectory.
            hbar: The reduced Planck constant.
        """
        self._A = as_payoff_matrix(A)
        self._times = trajectory.times
        self._states = trajectory.states
        self._slopes = np.array([_replicator_rhs(x, self._A) for x in self._states])
        self._hbar = hbar
        if not hbar > 0:
            raise InputException(f"hbar must be positive, got {hbar}")

    def frequencies(self, t: float) -> np.ndarray:
        """
        The population frequencies at time t.
        """
        times = self._times
        if t <= times[0]:
            return self._states[0]
        if t >= times[-1]:
            return self._states[-1]
        k = int(np.searchsorted(times, t, side="right")) - 1
        h = times[k + 1] - times[k]
        s = (t - times[k]) / h
        if s == 0:
            return self._states[k]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return (
            h00 * self._states[k]
            + h10 * h * self._slopes[k]
            + h01 * self._states[k + 1]
            + h11 * h * self._slopes[k + 1]
        )

    def __call__(self, t: float) -> Hamiltonian:
        X = _frequency_matrix(self.frequencies(t))
        return Hamiltonian(matrix=1j * self._hbar * _lambda(self._A, X), hbar=self._hbar)


def _check_density_invariants(
    rho: np.ndarray,
    initial_purity: float,
    t: float,
    dt: float,
) -> float:
    drifts = {
        "hermiticity": _hermitian_residual(rho),
        "trace": abs(np.trace(rho) - 1),
        "positivity": max(0.0, -float(np.linalg.eigvalsh(rho)[0])),
        "purity": abs(float(np.trace(rho @ rho).real) - initial_purity),
    }
    for quantity, drift in drifts.items():
        if not drift <= DRIFT_ABORT:
            raise MatrixFlowDriftException(
                time=t, quantity=f"rho {quantity}", drift=drift, dt=dt
            )
    return max(drifts.values())


def integrate_von_neumann(
    rho0: ArrayLike,
    hamiltonian_source: HamiltonianSource,
    dt: float = 1e-3,
    t_end: float = 5.0,
    pbar: Optional[tqdm] = None,
) -> DensityTrajectory:
    """
    Integrates the von Neumann equation with fixed-step fourth-order
    Runge-Kutta. The Hamiltonian is requested from the source at each stage
    time (t, t + dt/2, t + dt); the source must not change during the call.

    Args:
        rho0: The initial density operator.
        hamiltonian_source: Returns the Hamiltonian at a given time.
        dt: Step size.
        t_end: End time.
        pbar: If not None, advanced by one for each step taken.

    Raises:
        MatrixFlowDriftException: If hermiticity, trace, positivity or purity
            drifts by more than 1e-4.

    Returns:
        The sampled density operators, including rho0.
    """
    rho = as_density_operator(rho0, argument="rho0")
    times = sample_times(dt, t_end)
    initial_purity = float(np.trace(rho @ rho).real)

    states = np.empty((times.shape[0],) + rho.shape, dtype=complex)
    states[0] = rho

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        H = hamiltonian_source(t)
        if H.matrix.shape != state.shape:
            raise DimensionMismatchException("hamiltonian", state.shape, H.matrix.shape)
        return _von_neumann_rhs(state, H)

    worst = 0.0
    for i in range(1, times.shape[0]):
        rho = rk4_step(rhs, times[i - 1], rho, times[i] - times[i - 1])
        worst = max(worst, _check_density_invariants(rho, initial_purity, times[i], dt))
        states[i] = rho
        if pbar is not None:
            pbar.update(1)

    if worst > DRIFT_WARN:
        log.warning(f"Density operator invariants drifted by up to {worst:.3e}")

    return DensityTrajectory(times=times, states=states)


def von_neumann_entropy(rho: ArrayLike) -> float:
    """
    S = -Tr{rho ln rho} = -sum_i lambda_i ln lambda_i in nats, with
    eigenvalues in [-1e-10, 0] treated as 0.

    Raises:
        InvalidMatrixException: If rho is not a density operator.
    """
    rho = as_density_operator(rho)
    return float(entr(np.clip(eigvalsh(rho), 0, None)).sum())


def mixture_entropy_gap(states: Sequence[ArrayLike], weights: ArrayLike) -> float:
    """
    S(sum_i p_i rho_i) - sum_i p_i S(rho_i). Concavity of the von Neumann
    entropy makes this non-negative.

    Raises:
        DimensionMismatchException: If the number of weights differs from
            the number of states.
    """
    rhos = [as_density_operator(s, argument=f"states[{i}]") for i, s in enumerate(states)]
    p = as_frequency_vector(weights, n=len(rhos), argument="weights")
    mixture = sum(w * r for w, r in zip(p, rhos))
    average = sum(w * von_neumann_entropy(r) for w, r in zip(p, rhos))
    return von_neumann_entropy(mixture) - float(average)


def entropy_rate_series(rho: ArrayLike, rho_dot: ArrayLike) -> EntropyRateReport:
    """
    Evaluates the rate of change of the von Neumann entropy two ways.

    The truncated value is the four-sum series

        11/6 sum_i r'_ii - 6 sum_ij r_ij r'_ji + 9/2 sum_ijk r_ij r_jk r'_ki
        - 4/3 sum_ijkl r_ij r_jk r_kl r'_li

    with the coefficients exactly as printed. The exact value uses
    first-order perturbation of the eigenvalues, lambda'_m = <m|r'|m>, so
    that dS/dt = -sum_m lambda'_m (ln lambda_m + 1). zeta is their
    difference.

    Args:
        rho: The density operator.
        rho_dot: Its time derivative; Hermitian with zero trace.

    Raises:
        InvalidMatrixException: If rho is not a density operator or rho_dot
            is not Hermitian and traceless within 1e-10.
    """
    rho = as_density_operator(rho)
    rho_dot = np.asarray(rho_dot, dtype=complex)
    if rho_dot.shape != rho.shape:
        raise DimensionMismatchException("rho_dot", rho.shape, rho_dot.shape)
    if _hermitian_residual(rho_dot) > 1e-10:
        raise InvalidMatrixException("rho_dot", "matrix is not Hermitian")
    if abs(np.trace(rho_dot)) > 1e-10:
        raise InvalidMatrixException("rho_dot", "trace is not 0")

    # Tr(rho^k rho_dot) for k = 0..3 equals each printed sum
    powers = [np.eye(rho.shape[0], dtype=complex)]
    for _ in range(3):
        powers.append(powers[-1] @ rho)
    truncated = float(
        sum(
            c * np.trace(p @ rho_dot).real
            for c, p in zip(_SERIES_COEFFICIENTS, powers)
        )
    )

    eigenvalues, vectors = eigh(rho)
    rates = np.einsum("im,ij,jm->m", vectors.conj(), rho_dot, vectors).real
    regular = eigenvalues > SINGULAR_EIGENVALUE
    if np.any(~regular & (np.abs(rates) > 1e-12)):
        log.debug("Exact entropy rate unavailable: vanishing eigenvalue is moving")
        return EntropyRateReport(
            truncated=truncated, exact=None, zeta=None, exact_available=False
        )

    exact = float(
        -np.sum(rates[regular] * (np.log(eigenvalues[regular]) + 1))
    )
    return EntropyRateReport(
        truncated=truncated,
        exact=exact,
        zeta=exact - truncated,
        exact_available=True,
    )

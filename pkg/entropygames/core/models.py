import math
from dataclasses import dataclass, field
from typing import Any, List, Optional, Tuple, Union

import numpy as np
from dataclasses_json import CatchAll, Undefined, config, dataclass_json

from .validation import (
    DimensionMismatchException,
    InvalidMatrixException,
    as_joint_distribution,
    as_payoff_matrix,
)


def _encode_float(value: Optional[float]) -> Union[None, float, str]:
    """
    Encodes non-finite floats as the strings "inf", "-inf" and "nan" so
    that reports remain valid JSON.
    """
    if value is None:
        return None
    if math.isfinite(value):
        return float(value)
    return str(float(value))


def _decode_float(value: Union[None, float, str]) -> Optional[float]:
    if value is None:
        return None
    return float(value)


def _float_field(field_name: Optional[str] = None, **kwargs: Any) -> Any:
    """
    Field for a float that may legitimately be infinite.
    """
    return field(
        metadata=config(
            field_name=field_name,
            encoder=_encode_float,
            decoder=_decode_float,
        ),
        **kwargs,
    )


def _decode_edges(edges: List[List[Any]]) -> List[Tuple[str, str]]:
    return [(str(a), str(b)) for a, b in edges]


@dataclass_json(undefined=Undefined.INCLUDE)
@dataclass
class _DataModel:
    """
    Base class for all input models.
    """

    other_fields: CatchAll
    """
    Fields in the input that are not used by this package.
    """


@dataclass_json(undefined=Undefined.INCLUDE)
@dataclass
class Game(_DataModel):
    """
    A symmetric two-player game in normal form.
    """

    n: int
    """
    The number of pure strategies.
    """

    payoff: List[List[float]]
    """
    Row-major payoff matrix; payoff[i][j] is the payoff to a player using
    strategy i against an opponent using strategy j.
    """

    labels: Optional[List[str]] = None
    """
    Optional names of the pure strategies.
    """

    def matrix(self) -> np.ndarray:
        """
        Returns the payoff matrix as an n×n array.

        Raises:
            InvalidMatrixException: If the payoff is not a finite square
                matrix.
            DimensionMismatchException: If the payoff or the labels do not
                have n entries.
        """
        A: np.ndarray = as_payoff_matrix(self.payoff, argument="payoff")
        if A.shape[0] != self.n:
            raise DimensionMismatchException("payoff", self.n, A.shape[0])
        if self.labels is not None and len(self.labels) != self.n:
            raise DimensionMismatchException("labels", self.n, len(self.labels))
        return A


@dataclass_json(undefined=Undefined.INCLUDE)
@dataclass
class JointDistributionInput(_DataModel):
    """
    A joint distribution over the strategies of two players, with an
    optional Markov kernel from the second player to a third.
    """

    rows: int
    """
    The number of strategies of player A.
    """

    cols: int
    """
    The number of strategies of player B.
    """

    probs: List[List[float]]
    """
    probs[i][j] is the probability that A plays i while B plays j.
    """

    kernel: Optional[List[List[float]]] = None
    """
    Row-stochastic matrix; kernel[j][k] is the probability that C plays k
    given that B plays j.
    """

    def table(self) -> np.ndarray:
        """
        Returns the joint distribution as a rows×cols array.

        Raises:
            InvalidMatrixException: If the table is not a valid joint
                distribution or does not have the declared shape.
        """
        J: np.ndarray = as_joint_distribution(self.probs, argument="probs")
        if J.shape != (self.rows, self.cols):
            raise InvalidMatrixException(
                "probs", f"expected shape {(self.rows, self.cols)}, got {J.shape}"
            )
        return J


@dataclass_json(undefined=Undefined.INCLUDE)
@dataclass
class CanonicalEnsemble(_DataModel):
    """
    A set of energy levels held at an inverse temperature.
    """

    energies: List[float]
    """
    The energy levels E_i.
    """

    beta: float
    """
    The inverse temperature; the temperature is 1/beta.
    """


@dataclass_json(undefined=Undefined.INCLUDE)
@dataclass
class ScenarioNode(_DataModel):
    """
    A single ensemble in an equilibration scenario.
    """

    id: str = field(metadata=config(decoder=str))
    """
    Unique name of the ensemble.
    """

    energies: List[float]
    """
    The energy levels of the ensemble.
    """

    beta: float
    """
    The initial inverse temperature of the ensemble.
    """


@dataclass_json(undefined=Undefined.INCLUDE)
@dataclass
class Scenario(_DataModel):
    """
    A network of ensembles that exchange energy with their neighbours.
    """

    nodes: List[ScenarioNode]
    """
    The ensembles in the network.
    """

    edges: List[Tuple[str, str]] = field(metadata=config(decoder=_decode_edges))
    """
    Undirected neighbour pairs, by node id.
    """

    kappa: float
    """
    Energy exchanged per unit time per unit temperature difference.
    """

    merge_tol: float
    """
    Neighbours whose temperatures differ by less than this are merged into
    one block.
    """

    dt: Optional[float] = None
    """
    Time step; overrides the command-line value when present.
    """

    t_end: Optional[float] = None
    """
    Simulated duration; overrides the command-line value when present.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class SymmetricEquilibrium:
    """
    A symmetric Nash equilibrium, either a simplex grid point or refined
    from the grid points around it.
    """

    probs: List[float]
    """
    The mixed strategy played by both players.
    """

    nash: bool
    """
    Whether the strategy passed the Nash test. Always True for reported
    equilibria.
    """

    ess: bool
    """
    Whether the strategy is also evolutionarily stable.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class EquilibriaReport:
    """
    Result of searching a game for symmetric equilibria.
    """

    n: int
    """
    The number of pure strategies.
    """

    labels: Optional[List[str]]
    """
    Names of the pure strategies, if given in the input.
    """

    grid_resolution: int
    """
    The number of grid cells along each simplex edge.
    """

    tol: float
    """
    Tolerance used for payoff ties.
    """

    equilibria: List[SymmetricEquilibrium]
    """
    Equilibria sorted lexicographically by their probabilities.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class InfoReport:
    """
    Entropies of a joint distribution over the strategies of two players.
    """

    h_a: float = field(metadata=config(field_name="H_A"))
    """
    Entropy of player A's marginal.
    """

    h_b: float = field(metadata=config(field_name="H_B"))
    """
    Entropy of player B's marginal.
    """

    h_ab: float = field(metadata=config(field_name="H_AB"))
    """
    Joint entropy.
    """

    h_a_given_b: float = field(metadata=config(field_name="H_A_given_B"))
    """
    Conditional entropy of A given B.
    """

    h_b_given_a: float = field(metadata=config(field_name="H_B_given_A"))
    """
    Conditional entropy of B given A.
    """

    i_ab: float = field(metadata=config(field_name="I_AB"))
    """
    Mutual information between A and B.
    """

    unit: str = "bits"
    """
    Unit of every entropy in this report.
    """

    data_processing: Optional["MarkovChainReport"] = None
    """
    Data-processing checks along A -> B -> C, when a kernel to a third
    player was given.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class MarkovChainReport:
    """
    Mutual informations along a Markov chain A -> B -> C.
    """

    i_ab: float = field(metadata=config(field_name="I_AB"))
    """
    Mutual information between A and B, in bits.
    """

    i_ac: float = field(metadata=config(field_name="I_AC"))
    """
    Mutual information between A and C, in bits.
    """

    i_bc: float = field(metadata=config(field_name="I_BC"))
    """
    Mutual information between B and C, in bits.
    """

    holds: bool
    """
    Whether H(A) >= I(A:B) >= I(A:C) holds within tolerance.
    """

    shared_holds: bool
    """
    Whether I(C:B) >= I(C:A) holds within tolerance.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class EnsembleReport:
    """
    Thermodynamic quantities of a canonical ensemble.
    """

    z: float = _float_field(field_name="Z")
    """
    The partition function. May be infinite if it overflows; log_z is
    always finite.
    """

    log_z: float
    """
    Natural logarithm of the partition function.
    """

    probs: List[float]
    """
    Occupation probability of each energy level.
    """

    mean_energy: float = field(metadata=config(field_name="mean_E"))
    """
    Average energy.
    """

    energy_variance: float = field(metadata=config(field_name="var_E"))
    """
    Variance of the energy.
    """

    entropy: float = field(metadata=config(field_name="S"))
    """
    Entropy in nats.
    """

    tau: float = _float_field()
    """
    The temperature 1/beta; infinite when beta is 0.
    """

    beta: float = 0.0
    """
    The inverse temperature the report was computed at.
    """

    derivatives: Optional["EntropyDerivatives"] = None
    """
    Derivatives of the entropy, when requested.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class EntropyDerivatives:
    """
    Derivatives of the canonical entropy with respect to the mean energy
    and to the inverse temperature, with the spectrum held fixed.
    """

    ds_dbeta: float = field(metadata=config(field_name="dS_dbeta"))
    """
    -beta times the energy variance.
    """

    d2s_dbeta2: float = field(metadata=config(field_name="d2S_dbeta2"))
    """
    d<E>/dbeta + beta d2<E>/dbeta2.
    """

    energy_derivatives_defined: bool
    """
    False if the derivatives with respect to the mean energy are undefined
    because the energy variance vanishes.
    """

    ds_de: Optional[float] = field(
        default=None, metadata=config(field_name="dS_dE")
    )
    """
    1/tau. None when the spectrum is degenerate.
    """

    d2s_de2: Optional[float] = field(
        default=None, metadata=config(field_name="d2S_dE2")
    )
    """
    -(1/tau^2) dtau/d<E>. None when the spectrum is degenerate.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class EntropyRateReport:
    """
    Two evaluations of the rate of change of the von Neumann entropy.
    """

    truncated: float
    """
    The four-sum series truncation of -Tr(drho/dt ln rho), in nats per time.
    """

    exact: Optional[float]
    """
    The rate from first-order perturbation of the eigenvalues. None when a
    vanishing eigenvalue has a non-zero rate (logarithm singularity).
    """

    zeta: Optional[float]
    """
    exact - truncated. None when exact is unavailable.
    """

    exact_available: bool
    """
    False when the exact rate hits the logarithm singularity of a vanishing
    eigenvalue.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class LaxReport:
    """
    Checks run by the lax command.
    """

    samples: int
    """
    The number of seeded random simplex points in the sweep.
    """

    seed: int
    """
    The seed used to draw the sweep points.
    """

    max_diagonal_residual: float
    """
    Largest |diag([Lambda, X]) - replicator rhs| over the sweep.
    """

    max_double_commutator_residual: float
    """
    Largest |[[Q, X], X] - [Lambda, X]| over the sweep.
    """

    max_trajectory_residual: float
    """
    Largest difference between diag(X(t)) and the vector trajectory.
    """

    max_spectrum_deviation: float
    """
    Largest distance of the spectrum of X(t) from its initial spectrum.
    """

    passed: bool
    """
    Whether every residual is within its tolerance.
    """


@dataclass_json(undefined=Undefined.EXCLUDE)
@dataclass
class QuantumReport:
    """
    Checks run by the quantum command.
    """

    hbar: float
    """
    The reduced Planck constant used to build the Hamiltonian.
    """

    max_correspondence_residual: float
    """
    Largest entrywise |rho(t) - quantize(x(t))| over shared sample times.
    """

    max_purity_drift: float
    """
    Largest |Tr rho(t)^2 - Tr rho(0)^2|.
    """

    max_entropy: float
    """
    Largest von Neumann entropy along the trajectory, in nats.
    """

    passed: bool
    """
    Whether the correspondence residual is within tolerance.
    """

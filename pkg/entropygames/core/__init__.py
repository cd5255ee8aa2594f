from .game import (  # noqa
    DEFAULT_TOL,
    default_probe_resolution,
    enumerate_symmetric_equilibria,
    expected_payoff,
    hawk_dove,
    is_ess,
    is_nash,
    prisoners_dilemma,
    rock_paper_scissors,
    simplex_grid,
    stag_hunt,
)
from .info import (  # noqa
    ConditionalEntropies,
    conditional_entropies,
    info_report,
    marginals,
    markov_data_processing_check,
    markov_triple,
    relative_entropy,
    sanov_confusion_bound,
)
from .integrate import rk4_step, sample_times  # noqa
from .lax import (  # noqa
    EntropyMode,
    LaxOperators,
    MatrixTrajectory,
    build_frequency_matrix,
    diagonal_equivalence_residual,
    integrate_matrix_flow,
    lax_operators,
    matrix_entropy,
)
from .models import (  # noqa
    CanonicalEnsemble,
    EnsembleReport,
    EntropyDerivatives,
    EntropyRateReport,
    EquilibriaReport,
    Game,
    InfoReport,
    JointDistributionInput,
    LaxReport,
    MarkovChainReport,
    QuantumReport,
    Scenario,
    ScenarioNode,
    SymmetricEquilibrium,
)
from .quantum import (  # noqa
    DensityTrajectory,
    Hamiltonian,
    HamiltonianSource,
    LaxHamiltonian,
    as_density_operator,
    entropy_rate_series,
    hamiltonian_from_lambda,
    integrate_von_neumann,
    mixture_entropy_gap,
    purity,
    quantize,
    von_neumann_entropy,
    von_neumann_rhs,
)
from .replicator import (  # noqa
    FitnessReport,
    Trajectory,
    bits_to_nats,
    fitness,
    integrate,
    nats_to_bits,
    replicator_rhs,
    shannon_entropy,
    shannon_entropy_rate,
)
from .thermo import entropy_derivatives, fit_beta, gibbs  # noqa
from .validation import (  # noqa
    SIMPLEX_TOL,
    DimensionMismatchException,
    EntropyGamesException,
    InputException,
    InternalConsistencyException,
    InvalidMatrixException,
    InvalidSimplexPointException,
    InvariantViolationException,
    MatrixFlowDriftException,
    SimplexDriftException,
    StepRejectedException,
    UnreachableTargetException,
    UnstableStepException,
    as_frequency_vector,
    as_joint_distribution,
    as_payoff_matrix,
)

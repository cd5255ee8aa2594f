import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from networkx.utils import UnionFind
from tqdm import tqdm

from entropygames.core import (
    CanonicalEnsemble,
    InputException,
    Scenario,
    StepRejectedException,
    UnstableStepException,
    fit_beta,
    gibbs,
    sample_times,
)
from entropygames.log import log

from .retry import RefinementLogging, retry_rejected_steps

# Accuracy of the mean energy when refitting the inverse temperature of a
# node after an exchange
FIT_TOL: float = 1e-12

# dt * kappa * max degree must stay below this
STABILITY_LIMIT: float = 0.5


@dataclass
class EnsembleNode:
    """
    One canonical ensemble in a network.
    """

    id: str
    """
    Unique name of the ensemble.
    """

    ensemble: CanonicalEnsemble
    """
    The energy levels of the ensemble and its current inverse temperature.
    """

    block_id: str
    """
    Label of the merged block the ensemble belongs to; the smallest id in
    the block.
    """

    mean_energy: float
    """
    The average energy of the ensemble. This is the quantity exchanged with
    neighbours; beta is refit to it after every step.
    """

    @property
    def energies(self) -> np.ndarray:
        return np.asarray(self.ensemble.energies, dtype=float)

    @property
    def beta(self) -> float:
        return self.ensemble.beta

    @property
    def temperature(self) -> float:
        return 1 / self.ensemble.beta

    def entropy(self) -> float:
        """
        Entropy of the ensemble in nats.
        """
        return gibbs(self.energies, self.beta).entropy


def make_node(
    node_id: str,
    energies: Sequence[float],
    beta: float,
    block_id: Optional[str] = None,
) -> EnsembleNode:
    """
    Creates a node at inverse temperature beta, with the mean energy of its
    canonical distribution.

    Raises:
        InputException: If the spectrum is empty, not finite or degenerate,
            or if beta is not a finite positive number.
    """
    E = np.asarray(energies, dtype=float).reshape(-1)
    if E.size == 0 or not np.all(np.isfinite(E)):
        raise InputException(f"Ensemble {node_id} needs finite energy levels")
    if E.min() == E.max():
        raise InputException(f"Ensemble {node_id} has a degenerate spectrum")
    if not (math.isfinite(beta) and beta > 0):
        raise InputException(
            f"Ensemble {node_id} needs a finite positive inverse temperature, got {beta}"
        )
    return EnsembleNode(
        id=node_id,
        ensemble=CanonicalEnsemble(energies=E.tolist(), beta=beta, other_fields={}),
        block_id=node_id if block_id is None else block_id,
        mean_energy=gibbs(E, beta).mean_energy,
    )


@dataclass
class EnsembleNetwork:
    """
    Canonical ensembles that exchange energy with their neighbours.
    """

    nodes: List[EnsembleNode]
    """
    The ensembles, in a fixed order that is kept by every step.
    """

    edges: List[Tuple[str, str]]
    """
    Undirected neighbour pairs, by node id.
    """

    coupling: float
    """
    kappa, the energy exchanged per unit time per unit temperature
    difference.
    """

    merge_tol: float
    """
    Neighbours whose temperatures differ by less than this join the same
    block.
    """

    graph: nx.Graph = field(init=False, repr=False, compare=False)
    """
    The neighbour graph. Built from nodes and edges.
    """

    def __post_init__(self) -> None:
        ids = [n.id for n in self.nodes]
        if not ids:
            raise InputException("A network needs at least one ensemble")
        if len(set(ids)) != len(ids):
            raise InputException("Ensemble ids must be unique")
        if not (math.isfinite(self.coupling) and self.coupling > 0):
            raise InputException(f"Coupling must be positive, got {self.coupling}")
        if not (math.isfinite(self.merge_tol) and self.merge_tol > 0):
            raise InputException(
                f"Merge tolerance must be positive, got {self.merge_tol}"
            )

        graph = nx.Graph()
        graph.add_nodes_from(ids)
        for a, b in self.edges:
            if a not in graph or b not in graph:
                raise InputException(f"Edge ({a}, {b}) references an unknown ensemble")
            if a == b:
                raise InputException(f"Edge ({a}, {b}) is a self-loop")
            graph.add_edge(a, b)
        self.graph = graph

    def with_nodes(self, nodes: List[EnsembleNode]) -> "EnsembleNetwork":
        """
        Returns a copy of this network holding different node states.
        """
        return EnsembleNetwork(
            nodes=nodes,
            edges=self.edges,
            coupling=self.coupling,
            merge_tol=self.merge_tol,
        )

    @property
    def node_ids(self) -> List[str]:
        return [n.id for n in self.nodes]

    def max_degree(self) -> int:
        return max((d for _, d in self.graph.degree), default=0)

    def stability_bound(self) -> float:
        """
        The largest step size that exchange_step accepts (exclusive).
        """
        degree = self.max_degree()
        return math.inf if degree == 0 else STABILITY_LIMIT / (self.coupling * degree)

    def block_count(self) -> int:
        return len({n.block_id for n in self.nodes})

    def temperatures(self) -> np.ndarray:
        return np.array([n.temperature for n in self.nodes])

    def total_energy(self) -> float:
        return math.fsum(n.mean_energy for n in self.nodes)

    def total_entropy(self) -> float:
        return math.fsum(n.entropy() for n in self.nodes)


def network_from_scenario(scenario: Scenario) -> EnsembleNetwork:
    """
    Builds a network from its JSON description. Every ensemble starts in its
    own block.

    Raises:
        InputException: If the scenario is not a valid network.
    """
    return EnsembleNetwork(
        nodes=[make_node(n.id, n.energies, n.beta) for n in scenario.nodes],
        edges=list(scenario.edges),
        coupling=scenario.kappa,
        merge_tol=scenario.merge_tol,
    )


def _refit(node: EnsembleNode, mean_energy: float, dt: float) -> EnsembleNode:
    E = node.energies
    lower, upper = float(E.min()), float(E.max())
    if not lower < mean_energy < upper:
        raise StepRejectedException(node.id, mean_energy, lower, upper, dt)

    # Positive temperatures only reach mean energies below the uniform one
    uniform = float(E.mean())
    if not mean_energy < uniform:
        raise StepRejectedException(node.id, mean_energy, lower, uniform, dt)

    beta = fit_beta(E, mean_energy, tol=FIT_TOL, beta_guess=node.beta)
    return replace(
        node,
        ensemble=replace(node.ensemble, beta=beta),
        mean_energy=mean_energy,
    )


def exchange_step(net: EnsembleNetwork, dt: float) -> EnsembleNetwork:
    """
    Advances the network by one explicit Euler step of the linear exchange
    law. Across each edge (j, k), ensemble k gains kappa (tau_j - tau_k) dt
    of mean energy and j loses the same amount, so the total is conserved.
    Each ensemble whose mean energy changed then has its inverse
    temperature refit; an ensemble with no net flux is left untouched.

    A step is rejected when a mean energy leaves (min E, max E), where no
    temperature matches it. Refits are also restricted to positive
    temperatures, so a step is rejected as well when a mean energy reaches
    the average of the ensemble's levels, the infinite-temperature value,
    even though that is still inside (min E, max E). Ensembles heated
    toward that limit may therefore need a smaller dt than the stability
    bound alone requires.

    Args:
        net: The network before the step.
        dt: Step size.

    Raises:
        InputException: If dt is not positive.
        UnstableStepException: If dt * kappa * max degree >= 0.5.
        StepRejectedException: If the mean energy of an ensemble would leave
            (min E, mean of E), the range reachable at positive temperature.

    Returns:
        The network after the step. The input is not modified.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise InputException(f"Step size must be positive, got {dt}")
    bound = net.stability_bound()
    if not dt < bound:
        raise UnstableStepException(dt, bound)

    temperature: Dict[str, float] = {n.id: n.temperature for n in net.nodes}
    gained: Dict[str, float] = dict.fromkeys(temperature, 0.0)
    for j, k in net.graph.edges:
        flow = net.coupling * (temperature[j] - temperature[k]) * dt
        gained[k] += flow
        gained[j] -= flow

    nodes = [
        n if gained[n.id] == 0.0 else _refit(n, n.mean_energy + gained[n.id], dt)
        for n in net.nodes
    ]
    return net.with_nodes(nodes)


def exchange_step_with_refinement(
    net: EnsembleNetwork,
    dt: float,
    max_refinements: int = 0,
) -> EnsembleNetwork:
    """
    Runs exchange_step, and if the step is rejected, retries it as 2^k
    substeps of size dt / 2^k for k = 1, ..., max_refinements.

    Raises:
        StepRejectedException: If the step is still rejected after the last
            refinement.
    """
    result = net
    for attempt in retry_rejected_steps(
        max_refinements=max_refinements,
        refinement_logging=RefinementLogging(logger=log, action="exchange step"),
    ):
        with attempt:
            substeps = 2 ** (attempt.retry_state.attempt_number - 1)
            result = net
            for _ in range(substeps):
                result = exchange_step(result, dt / substeps)
    return result


def merge_blocks(net: EnsembleNetwork) -> EnsembleNetwork:
    """
    Joins the blocks at the two ends of every edge whose temperatures differ
    by less than merge_tol, taking the transitive closure. Blocks are never
    split. Each block is labelled by the smallest id it contains.
    """
    blocks = UnionFind(net.node_ids)
    first_in_block: Dict[str, str] = {}
    for n in net.nodes:
        blocks.union(first_in_block.setdefault(n.block_id, n.id), n.id)

    temperature = {n.id: n.temperature for n in net.nodes}
    for j, k in net.graph.edges:
        if abs(temperature[j] - temperature[k]) < net.merge_tol:
            blocks.union(j, k)

    label = {}
    for members in blocks.to_sets():
        smallest = min(members)
        label.update(dict.fromkeys(members, smallest))

    return net.with_nodes([replace(n, block_id=label[n.id]) for n in net.nodes])


@dataclass
class EquilibrationHistory:
    """
    Samples of a network taken while it equilibrates.
    """

    node_ids: List[str]
    """
    Ids of the ensembles, in the order of the temperature columns.
    """

    times: List[float] = field(default_factory=list)
    """
    Sample times, increasing.
    """

    block_counts: List[int] = field(default_factory=list)
    """
    Number of merged blocks at each sample.
    """

    temperatures: List[List[float]] = field(default_factory=list)
    """
    Temperature of each ensemble at each sample.
    """

    total_energy: List[float] = field(default_factory=list)
    """
    Sum of the mean energies at each sample.
    """

    total_entropy: List[float] = field(default_factory=list)
    """
    Sum of the ensemble entropies at each sample, in nats.
    """

    def record(self, t: float, net: EnsembleNetwork) -> None:
        self.times.append(float(t))
        self.block_counts.append(net.block_count())
        self.temperatures.append(net.temperatures().tolist())
        self.total_energy.append(net.total_energy())
        self.total_entropy.append(net.total_entropy())

    def csv_header(self) -> str:
        return ",".join(
            ["t", "block_count", "total_energy"] + [f"tau_{i}" for i in self.node_ids]
        )

    def to_array(self) -> np.ndarray:
        """
        Columns t, block_count, total_energy, tau_<id>, ... as one array.
        """
        return np.column_stack(
            [
                np.asarray(self.times, dtype=float),
                np.asarray(self.block_counts, dtype=float),
                np.asarray(self.total_energy, dtype=float),
                np.asarray(self.temperatures, dtype=float).reshape(
                    len(self.times), len(self.node_ids)
                ),
            ]
        )


def run(
    net: EnsembleNetwork,
    dt: float,
    t_end: float,
    sample_every: int = 1,
    max_refinements: int = 0,
    pbar: Optional[tqdm] = None,
) -> EquilibrationHistory:
    """
    Lets the network equilibrate by alternating merge_blocks and
    exchange_step from t = 0 to t_end. The exchange law, coupling and merge
    criterion are a model of relaxation toward a common temperature, not a
    derived result.

    Args:
        net: The initial network.
        dt: Step size. The last step is shortened to land on t_end.
        t_end: End time.
        sample_every: Record every this many steps. t = 0 and t_end are
            always recorded.
        max_refinements: How many times a rejected step is retried with
            halved substeps before giving up.
        pbar: If not None, advanced by one for each step taken.

    Raises:
        InputException: If dt, t_end or sample_every is out of range.
        UnstableStepException: If dt violates the stability bound.
        StepRejectedException: If a step is rejected after all refinements.

    Returns:
        The sampled history.
    """
    if sample_every < 1:
        raise InputException(f"sample_every must be >= 1, got {sample_every}")
    times = sample_times(dt, t_end)

    history = EquilibrationHistory(node_ids=net.node_ids)
    net = merge_blocks(net)
    history.record(times[0], net)
    blocks = net.block_count()

    log.info(
        f"Equilibrating {len(net.nodes)} ensembles over {times.shape[0] - 1} steps"
    )
    last = times.shape[0] - 1
    for i in range(1, times.shape[0]):
        net = exchange_step_with_refinement(
            net, times[i] - times[i - 1], max_refinements
        )
        net = merge_blocks(net)
        if net.block_count() != blocks:
            blocks = net.block_count()
            log.debug(f"{blocks} blocks remain at t={times[i]:g}")
        if i % sample_every == 0 or i == last:
            history.record(times[i], net)
        if pbar is not None:
            pbar.update(1)

    spread = float(np.ptp(net.temperatures()))
    log.info(f"Finished with {blocks} blocks and temperature spread {spread:.3e}")
    return history

from itertools import combinations
from typing import List, Optional

import numpy as np
from networkx.utils import UnionFind
from numpy.typing import ArrayLike

from entropygames.log import log

from .models import Game, SymmetricEquilibrium
from .validation import (
    DimensionMismatchException,
    InputException,
    as_frequency_vector,
    as_payoff_matrix,
)

# Default tolerance for payoff ties
DEFAULT_TOL: float = 1e-9


def _check_strategy_count(A: np.ndarray, argument: str, length: int) -> None:
    if length != A.shape[0]:
        raise DimensionMismatchException(argument, A.shape[0], length)


def default_probe_resolution(n: int) -> int:
    """
    Grid resolution used for ESS probes and equilibrium search when none is
    given. Coarser for larger games since the grid grows as resolution^(n-1).
    """
    if n <= 2:
        return 100
    if n == 3:
        return 50
    return 20


def simplex_grid(n: int, resolution: int) -> np.ndarray:
    """
    Enumerates every point of the n-strategy simplex whose coordinates are
    multiples of 1/resolution.

    Args:
        n: The number of strategies.
        resolution: The number of cells along each edge of the simplex.

    Returns:
        Array of shape (num_points, n), sorted lexicographically.
    """
    if n < 1:
        raise InputException(f"Grid needs at least one strategy, got {n}")
    if resolution < 1:
        raise InputException(f"Grid resolution must be positive, got {resolution}")

    # Stars and bars: choosing n-1 bar positions among resolution+n-1 slots
    # gives each composition of resolution into n non-negative parts once
    slots = resolution + n - 1
    counts: List[List[int]] = []
    for bars in combinations(range(slots), n - 1):
        edges = (-1,) + bars + (slots,)
        counts.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    grid = np.array(counts, dtype=float).reshape(-1, n) / resolution
    order = np.lexsort(grid.T[::-1])
    return grid[order]


def expected_payoff(p: ArrayLike, q: ArrayLike, A: ArrayLike) -> float:
    """
    Payoff to a player using mixed strategy p against an opponent using q,
    E(p, q) = sum_ij p_i a_ij q_j.

    Raises:
        DimensionMismatchException: If p or q does not have one entry per
            strategy of A.
        InvalidSimplexPointException: If p or q is not on the simplex.
    """
    A = as_payoff_matrix(A)
    n = A.shape[0]
    p = as_frequency_vector(p, n=n, argument="p")
    q = as_frequency_vector(q, n=n, argument="q")
    return float(p @ A @ q)


def _max_pure_deviation(p: np.ndarray, A: np.ndarray) -> float:
    """
    max_i E(e_i, p) - E(p, p). Linearity of E(., p) makes this the largest
    gain available to any mixed deviation.
    """
    reply = A @ p
    return float(reply.max() - p @ reply)


def is_nash(p: ArrayLike, A: ArrayLike, tol: float = DEFAULT_TOL) -> bool:
    """
    Checks whether (p, p) is a symmetric Nash equilibrium, i.e. whether
    E(e_i, p) <= E(p, p) + tol for every pure strategy e_i.

    Raises:
        DimensionMismatchException: If p does not match A.
        InputException: If tol is negative.
    """
    if tol < 0:
        raise InputException(f"Tolerance must be non-negative, got {tol}")
    A = as_payoff_matrix(A)
    p = as_frequency_vector(p, n=A.shape[0], argument="p")
    return _max_pure_deviation(p, A) <= tol


def _is_ess(p: np.ndarray, A: np.ndarray, probes: np.ndarray, tol: float) -> bool:
    # Drop the probe that coincides with p
    probes = probes[np.abs(probes - p).max(axis=1) > 1e-12]
    if probes.size == 0:
        return True

    e_pp = float(p @ A @ p)
    e_rp = probes @ (A @ p)
    e_pr = probes @ (A.T @ p)
    e_rr = np.einsum("ri,ij,rj->r", probes, A, probes)

    strict = e_pp > e_rp + tol
    tie = np.abs(e_pp - e_rp) <= tol
    stable_against_mutant = e_pr > e_rr + tol
    return bool(np.all(strict | (tie & stable_against_mutant)))


def is_ess(
    p: ArrayLike,
    A: ArrayLike,
    tol: float = DEFAULT_TOL,
    probe_resolution: Optional[int] = None,
) -> bool:
    """
    Checks whether p is an evolutionarily stable strategy against every
    alternative strategy r on a simplex grid: either E(p, p) > E(r, p), or
    the two tie and E(p, r) > E(r, r).

    Args:
        p: The candidate strategy.
        A: The payoff matrix.
        tol: Tolerance for payoff ties.
        probe_resolution: Resolution of the grid of alternative strategies.
            Defaults to default_probe_resolution(n).

    Raises:
        DimensionMismatchException: If p does not match A.
        InputException: If probe_resolution is less than 2 or tol is
            negative.
    """
    if tol < 0:
        raise InputException(f"Tolerance must be non-negative, got {tol}")
    A = as_payoff_matrix(A)
    n = A.shape[0]
    p = as_frequency_vector(p, n=n, argument="p")
    if probe_resolution is None:
        probe_resolution = default_probe_resolution(n)
    if probe_resolution < 2:
        raise InputException(
            f"Probe resolution must be at least 2, got {probe_resolution}"
        )
    return _is_ess(p, A, simplex_grid(n, probe_resolution), tol)


def _grid_slack(A: np.ndarray, grid_resolution: int) -> float:
    """
    Upper bound on the regret of the grid point nearest to an equilibrium.
    Moving p by d changes max_i E(e_i, p) - E(p, p) by at most
    2 max|a_ij| |d|_1, and rounding onto the grid moves p by about
    n / (2 grid_resolution) in the 1-norm.
    """
    return A.shape[0] * float(np.abs(A).max()) / grid_resolution


def _refine(
    cluster: np.ndarray, A: np.ndarray, tol: float
) -> Optional[np.ndarray]:
    """
    Solves E(e_i, p) = v for the strategies used anywhere in a cluster of
    near-equilibria, dropping strategies that come out negative until the
    solution lies on the simplex.

    Returns:
        The equilibrium, or None if no support yields one.
    """
    support = np.flatnonzero(cluster.max(axis=0) > 0)
    while support.size > 0:
        k = support.size
        # Unknowns (p_S, v): A_SS p_S - v = 0 and sum(p_S) = 1
        system = np.zeros((k + 1, k + 1))
        system[:k, :k] = A[np.ix_(support, support)]
        system[:k, k] = -1
        system[k, :k] = 1
        rhs = np.zeros(k + 1)
        rhs[k] = 1
        solution = np.linalg.lstsq(system, rhs, rcond=None)[0]
        if not np.all(np.isfinite(solution)):
            return None
        shares = solution[:k]
        negative = shares < -1e-12
        if np.any(negative):
            support = support[~negative]
            continue

        p = np.zeros(A.shape[0])
        p[support] = np.clip(shares, 0, None)
        p /= p.sum()
        scale = max(1.0, float(np.abs(A).max()))
        if _max_pure_deviation(p, A) <= max(tol, 1e-12 * scale):
            return p
        return None
    return None


def enumerate_symmetric_equilibria(
    A: ArrayLike,
    grid_resolution: Optional[int] = None,
    tol: float = DEFAULT_TOL,
) -> List[SymmetricEquilibrium]:
    """
    Searches the simplex grid for symmetric Nash equilibria and checks each
    one for evolutionary stability.

    Grid points that pass the Nash test within tol are reported as they are.
    An equilibrium between grid points shows up as a cluster of adjacent
    points whose regret is within the distance the grid can resolve; each
    such cluster is refined to the equilibrium it surrounds by solving the
    indifference conditions on the strategies the cluster uses. Clusters
    that touch an exact grid equilibrium are not refined, and an equilibrium
    closer than 1/grid_resolution (max-norm) to one already reported is
    dropped, so distinct equilibria closer together than the grid spacing
    may be reported once.

    Args:
        A: The payoff matrix.
        grid_resolution: The number of grid cells along each simplex edge.
            Also used as the ESS probe resolution. Defaults to
            default_probe_resolution(n).
        tol: Tolerance for payoff ties.

    Returns:
        Equilibria sorted lexicographically by their probabilities.
    """
    A = as_payoff_matrix(A)
    n = A.shape[0]
    if grid_resolution is None:
        grid_resolution = default_probe_resolution(n)
    if grid_resolution < 2:
        raise InputException(
            f"Grid resolution must be at least 2, got {grid_resolution}"
        )
    if tol < 0:
        raise InputException(f"Tolerance must be non-negative, got {tol}")

    grid = simplex_grid(n, grid_resolution)

    # Vectorized Nash test over all grid points at once
    replies = grid @ A.T
    own = np.einsum("ri,ri->r", grid, replies)
    regret = replies.max(axis=1) - own
    exact = regret <= tol
    near = np.flatnonzero(regret <= tol + _grid_slack(A, grid_resolution))

    # Near-equilibria that are grid neighbours belong to the same cluster
    separation = 1.0 / grid_resolution
    points = grid[near]
    distance = np.abs(points[:, None, :] - points[None, :, :]).max(axis=2)
    clusters = UnionFind(near.tolist())
    for i, j in zip(*np.nonzero(np.triu(distance <= separation + 1e-12, k=1))):
        clusters.union(int(near[i]), int(near[j]))

    found: List[np.ndarray] = list(grid[exact])
    for members in clusters.to_sets():
        members = sorted(members)
        if np.any(exact[members]):
            continue
        refined = _refine(grid[members], A, tol)
        if refined is None:
            log.debug(
                f"Cluster of {len(members)} near-equilibria around "
                f"{grid[members[0]]} did not refine to an equilibrium"
            )
            continue
        found.append(refined)

    kept: List[np.ndarray] = []
    for point in found:
        if all(np.abs(point - k).max() >= separation - 1e-12 for k in kept):
            kept.append(point)
    kept.sort(key=tuple)

    return [
        SymmetricEquilibrium(
            probs=point.tolist(),
            nash=True,
            ess=_is_ess(point, A, grid, tol),
        )
        for point in kept
    ]


def prisoners_dilemma() -> Game:
    """
    Prisoner's dilemma with strategies (cooperate, defect).
    """
    return Game(
        n=2,
        payoff=[[3.0, 0.0], [5.0, 1.0]],
        labels=["cooperate", "defect"],
    )


def hawk_dove(v: float = 2.0, c: float = 4.0) -> Game:
    """
    Hawk-dove game with resource value v and cost of fighting c. When c > v
    the interior equilibrium plays hawk with probability v/c.
    """
    return Game(
        n=2,
        payoff=[[(v - c) / 2, v], [0.0, v / 2]],
        labels=["hawk", "dove"],
    )


def stag_hunt() -> Game:
    """
    Stag hunt with strategies (stag, hare).
    """
    return Game(
        n=2,
        payoff=[[4.0, 1.0], [3.0, 3.0]],
        labels=["stag", "hare"],
    )


def rock_paper_scissors() -> Game:
    """
    Zero-sum rock-paper-scissors.
    """
    return Game(
        n=3,
        payoff=[[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]],
        labels=["rock", "paper", "scissors"],
    )

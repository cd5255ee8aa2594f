import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import brentq

from .models import EnsembleReport, EntropyDerivatives
from .validation import InputException, UnreachableTargetException

# Energy variance below which the spectrum is treated as degenerate
DEGENERATE_VARIANCE: float = 1e-14

# Bracket for the inverse temperature stops growing past this magnitude
_MAX_BRACKET: float = 1e8


@dataclass
class _Moments:
    log_z: float
    probs: np.ndarray
    mean: float
    variance: float
    third: float


def _as_energies(E: ArrayLike) -> np.ndarray:
    energies = np.array(E, dtype=float).reshape(-1)
    if energies.size == 0:
        raise InputException("At least one energy level is required")
    if not np.all(np.isfinite(energies)):
        raise InputException("Energy levels must be finite")
    return energies


def _moments(E: np.ndarray, beta: float) -> _Moments:
    # Shift the exponents by their maximum so that the largest weight is 1
    exponents = -beta * E
    shift = exponents.max()
    weights = np.exp(exponents - shift)
    total = weights.sum()
    probs = weights / total
    mean = float(probs @ E)
    centered = E - mean
    return _Moments(
        log_z=float(shift + math.log(total)),
        probs=probs,
        mean=mean,
        variance=float(probs @ centered**2),
        third=float(probs @ centered**3),
    )


def gibbs(E: ArrayLike, beta: float) -> EnsembleReport:
    """
    Canonical ensemble at inverse temperature beta: occupation
    probabilities e^(-beta E_i)/Z, the partition function, the mean and
    variance of the energy, and the entropy S = ln Z + beta <E>.

    Negative beta is allowed and describes a population inversion.

    Raises:
        InputException: If there are no energy levels or any level or beta
            is not finite.
    """
    energies = _as_energies(E)
    if not math.isfinite(beta):
        raise InputException(f"Inverse temperature must be finite, got {beta}")
    m = _moments(energies, beta)
    return EnsembleReport(
        z=math.exp(m.log_z) if m.log_z < 709 else math.inf,
        log_z=m.log_z,
        probs=m.probs.tolist(),
        mean_energy=m.mean,
        energy_variance=m.variance,
        entropy=m.log_z + beta * m.mean,
        tau=1 / beta if beta != 0 else math.inf,
        beta=beta,
    )


def entropy_derivatives(E: ArrayLike, beta: float) -> EntropyDerivatives:
    """
    Derivatives of the canonical entropy with the spectrum held fixed:

        dS/d<E> = 1/tau = beta
        d2S/d<E>2 = -(1/tau^2) dtau/d<E> = -1/<dE^2>
        dS/dbeta = -beta <dE^2>
        d2S/dbeta2 = d<E>/dbeta + beta d2<E>/dbeta2 = -<dE^2> + beta mu_3

    where mu_3 is the third central moment of the energy.

    The derivatives with respect to <E> are None when the energy variance
    vanishes, since then no change of temperature moves the mean energy.
    """
    energies = _as_energies(E)
    if not math.isfinite(beta):
        raise InputException(f"Inverse temperature must be finite, got {beta}")
    m = _moments(energies, beta)
    defined = m.variance > DEGENERATE_VARIANCE
    return EntropyDerivatives(
        ds_dbeta=-beta * m.variance,
        d2s_dbeta2=-m.variance + beta * m.third,
        energy_derivatives_defined=defined,
        ds_de=beta if defined else None,
        d2s_de2=-1 / m.variance if defined else None,
    )


def fit_beta(
    E: ArrayLike,
    target_mean_E: float,
    tol: float = 1e-12,
    beta_guess: Optional[float] = None,
) -> float:
    """
    Finds the inverse temperature at which the canonical mean energy equals
    the target. The mean energy is strictly decreasing in beta, so the root
    is bracketed by widening [guess - w, guess + w] (doubling w) and then
    refined by Brent's bracketed method.

    Args:
        E: The energy levels.
        target_mean_E: The desired mean energy.
        tol: Required accuracy of the mean energy at the result.
        beta_guess: Where to centre the first bracket. Defaults to 0.

    Raises:
        InputException: If the spectrum is degenerate or tol is not positive.
        UnreachableTargetException: If the target is not strictly between
            the smallest and largest energy level.

    Returns:
        beta with |<E>(beta) - target| < tol.
    """
    energies = _as_energies(E)
    if not tol > 0:
        raise InputException(f"Tolerance must be positive, got {tol}")
    lower, upper = float(energies.min()), float(energies.max())
    if lower == upper:
        raise InputException("Cannot fit a temperature to a degenerate spectrum")
    if not lower < target_mean_E < upper:
        raise UnreachableTargetException(target_mean_E, lower, upper)

    def excess(beta: float) -> float:
        return _moments(energies, beta).mean - target_mean_E

    centre = 0.0 if beta_guess is None or not math.isfinite(beta_guess) else beta_guess
    if abs(excess(centre)) < tol:
        return centre

    width = 1.0
    lo, hi = centre - width, centre + width
    while excess(lo) < 0 or excess(hi) > 0:
        width *= 2
        if width > _MAX_BRACKET:
            raise UnreachableTargetException(target_mean_E, lower, upper)
        lo, hi = centre - width, centre + width

    beta = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(excess(beta)) >= tol:
        # Brent stops on the width of the bracket; tighten with bisection
        # steps if the mean energy is still off
        for _ in range(200):
            if excess(beta) > 0:
                lo = beta
            else:
                hi = beta
            beta = 0.5 * (lo + hi)
            if abs(excess(beta)) < tol or hi - lo <= np.spacing(abs(beta)):
                break
    return float(beta)

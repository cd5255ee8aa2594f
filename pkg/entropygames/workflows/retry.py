import logging
from dataclasses import dataclass
from typing import Optional

from tenacity import RetryCallState, Retrying, retry_if_exception_type, stop_after_attempt

from entropygames.core import InputException, StepRejectedException


@dataclass
class RefinementLogging:
    """
    Controls logging when a step is rejected and retried.
    """

    logger: logging.Logger
    """
    The logger to use.
    """

    action: str
    """
    A short description of the step being attempted.
    """


class _log_refinement:
    """
    Tenacity before-sleep hook that reports a rejected step and the number
    of substeps the next attempt will use.
    """

    def __init__(self, refinement_logging: RefinementLogging) -> None:
        self._refinement_logging = refinement_logging

    def __call__(self, retry_state: RetryCallState) -> None:
        l = self._refinement_logging
        exception = retry_state.outcome.exception() if retry_state.outcome else None
        l.logger.info(
            f"{l.action} was rejected ({exception}); retrying with "
            f"{2 ** retry_state.attempt_number} substeps"
        )


def retry_rejected_steps(
    max_refinements: int = 0,
    refinement_logging: Optional[RefinementLogging] = None,
) -> Retrying:
    """
    Retry controller for steps that may be rejected by an invariant check.
    Attempt k (starting from 1) is expected to split the step into 2^(k-1)
    substeps; the caller reads the attempt number from the retry state.

        for attempt in retry_rejected_steps(max_refinements=3):
            with attempt:
                substeps = 2 ** (attempt.retry_state.attempt_number - 1)
                ...

    Args:
        max_refinements: How many retries to make after the first attempt.
            0 disables retrying.
        refinement_logging: If not None, log statements will be generated
            using this configuration each time a step is retried.

    Raises:
        InputException: If max_refinements is negative.
    """
    if max_refinements < 0:
        raise InputException(
            f"max_refinements must be >= 0, got {max_refinements}"
        )
    return Retrying(
        stop=stop_after_attempt(max_refinements + 1),
        # Only rejected steps are retried; any other failure (an unstable
        # step size, a bug) surfaces immediately
        retry=retry_if_exception_type(StepRejectedException),
        before_sleep=None
        if refinement_logging is None
        else _log_refinement(refinement_logging),
        # Raise the original exception instead of wrapping it in a
        # tenacity exception
        reraise=True,
    )

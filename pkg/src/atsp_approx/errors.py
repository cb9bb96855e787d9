"""Exception types shared across the package."""

from __future__ import annotations


class InvariantViolation(AssertionError):
    """A proven bound or structural invariant failed at runtime.

    ``stage`` names the step that detected it so a failure points at the
    responsible routine.
    """

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.message = message


class SolveError(ValueError):
    """The input cannot be solved (e.g. no tour exists)."""


def check(condition: bool, stage: str, message: str) -> None:
    if not condition:
        raise InvariantViolation(stage, message)

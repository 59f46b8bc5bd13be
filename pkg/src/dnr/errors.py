"""Exception types. Every error carries a machine-readable ``code``."""

from __future__ import annotations


class DnrError(Exception):
    code = "dnr_error"
    exit_code = 1

    def __init__(self, message: str, code: str | None = None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details


class CaseParseError(DnrError):
    code = "parse_error"
    exit_code = 2


class CaseValidationError(DnrError):
    code = "validation_error"
    exit_code = 2


class TooManySwitchesError(DnrError):
    code = "too_many_switches"
    exit_code = 2


class NumericalError(DnrError):
    code = "numerical_error"
    exit_code = 3


class NonConvergenceError(NumericalError):
    code = "non_convergence"

    def __init__(self, iterations: int, mismatch: float):
        super().__init__(
            f"Newton iteration did not converge after {iterations} iterations "
            f"(max mismatch {mismatch:.3e} p.u.)",
            iterations=iterations,
            mismatch=mismatch,
        )
        self.iterations = iterations
        self.mismatch = mismatch


class NoSlackError(NumericalError):
    code = "no_slack_in_island"


class NoFeasibleConfigurationError(NumericalError):
    code = "no_feasible_configuration"

    def __init__(self, timestep: int):
        super().__init__(f"no feasible reachable configuration at timestep {timestep}", timestep=timestep)
        self.timestep = timestep

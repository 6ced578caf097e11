"""Exception hierarchy for espmkit.

Errors are split into two families so callers (and the CLI) can map them
onto exit codes: `UsageError` for malformed inputs/configuration files and
`DomainError` for physically or numerically infeasible computations.
"""


class EspmkitError(Exception):
    """Base class for all package errors."""


class UsageError(EspmkitError):
    """Bad user input: unreadable files, malformed config, bad arguments."""


class ParameterValidationError(UsageError):
    """One or more parameter-file invariants are violated.

    Carries the full list of violations so a user can fix the file in one
    pass instead of replaying the loader error by error.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        joined = "\n  - ".join(self.violations)
        super().__init__(
            f"{len(self.violations)} parameter validation failure(s):\n  - {joined}"
        )


class DataFormatError(UsageError):
    """Malformed data file (drive cycle, OCP table, side-current profile)."""


class DomainError(EspmkitError):
    """Physically meaningless request or state (e.g. stoichiometry outside [0,1])."""


class GainValidationError(DomainError):
    """Observer gain set fails one or more design conditions."""

    def __init__(self, failures):
        self.failures = list(failures)
        joined = "\n  - ".join(self.failures)
        super().__init__(
            f"{len(self.failures)} gain condition failure(s):\n  - {joined}"
        )


class IntegrationError(DomainError):
    """Numerical failure inside a time stepper (NaN/Inf state, no convergence)."""


class PoreClogError(DomainError):
    """Anode porosity driven to zero or below by SEI growth."""

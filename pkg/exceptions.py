"""
Exception hierarchy for the supermatch toolkit
"""
from typing import Optional


class SupermatchError(Exception):
    """Base class for every error raised by the toolkit"""


class InstanceParseError(SupermatchError, ValueError):
    """Malformed instance, matching or model text"""

    def __init__(self, reason: str, line: Optional[int] = None):
        self.reason = reason
        self.line = line
        if line is None:
            super().__init__(reason)
        else:
            super().__init__(f"line {line}: {reason}")


class ContractError(SupermatchError, ValueError):
    """An operation was called outside its precondition"""


class ExposureError(ContractError):
    """Rotation is not exposed on the given matching"""


class EnumerationLimitError(SupermatchError):
    """Lattice enumeration exceeded the configured cap"""


class SatSmValidationError(SupermatchError, ValueError):
    """SAT-SM instance violates a list condition or Rule 1"""

    def __init__(self, report):
        self.report = report
        super().__init__(report.summary())

    def __reduce__(self):
        return self.__class__, (self.report,)


class StructuralAuditError(SupermatchError):
    """Generated CNF does not have the expected clause structure"""


class ResourceLimitError(SupermatchError):
    """Solver conflict cap or external solver timeout reached"""


class SolverError(SupermatchError):
    """Solver returned a model that fails re-verification"""


class ConstructionError(SupermatchError):
    """Reduction could not build a consistent poset or instance"""


class MappingError(SupermatchError):
    """Solution mapping between SAT-SM and matchings failed"""


class GenerationError(SupermatchError, ValueError):
    """Random SAT-SM generation could not produce a valid instance"""


class UsageError(SupermatchError, ValueError):
    """Unknown subcommand, bad flag or bad flag value"""

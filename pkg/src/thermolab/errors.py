"""Exception hierarchy.

Every error carries a module-qualified ``code`` (``"shift.NoConvergence"``)
that the command line driver reports in its machine-readable error payload.
"""

from __future__ import annotations


class ThermolabError(Exception):
    module = "thermolab"
    name: str | None = None

    def __init__(self, message: str = "", **details):
        super().__init__(message or type(self).__name__)
        self.details = details

    @property
    def code(self) -> str:
        return f"{self.module}.{self.name or type(self).__name__}"

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "details": self.details}


class PreconditionViolation(ThermolabError):
    pass


class ConfigError(ThermolabError):
    module = "cli"


# maps
class MapError(ThermolabError):
    module = "maps"


class EvalAtSingularity(MapError):
    pass


class OutOfDomain(MapError):
    pass


class BadParameters(MapError):
    pass


# hyperbolic
class HyperbolicError(ThermolabError):
    module = "hyperbolic"


class OrbitHitsCriticalSet(HyperbolicError):
    pass


class BranchInversionFailure(HyperbolicError):
    pass


# inducing
class InducingError(ThermolabError):
    module = "inducing"


class NoBranchesFound(InducingError):
    pass


class BaseBallEscapes(InducingError):
    pass


class PotentialUndefined(InducingError):
    pass


class OrbitLeavesScheme(InducingError):
    pass


# shift
class ShiftError(ThermolabError):
    module = "shift"


class EnumerationTooLarge(ShiftError):
    pass


class NoConvergence(ShiftError):
    pass


class BadGamma(ShiftError):
    pass


# thermo
class ThermoError(ThermolabError):
    module = "thermo"


class EmptySample(ThermoError):
    pass


class NonIntegrableTau(ThermoError):
    pass


class GeometryViolated(ThermoError):
    pass


class NonPositiveIntegral(ThermoError):
    pass


class ThermoBadParameters(ThermoError):
    """Invalid arguments to the finiteness-gap formulas."""

    name = "BadParameters"

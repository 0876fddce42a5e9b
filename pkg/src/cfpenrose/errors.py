"""Exception hierarchy shared by all modules."""


class CfPenroseError(Exception):
    """Base class for every error raised by the package."""


class DomainError(CfPenroseError, ValueError):
    pass


class NonPositiveRadius(DomainError):
    pass


class UnresolvedSpec(DomainError):
    pass


class OverlappingComponents(DomainError):
    pass


class EvaluationAtSingularity(CfPenroseError, ValueError):
    pass


class NonConvergentFlux(CfPenroseError, ArithmeticError):
    pass


class NonConvergentIntegral(CfPenroseError, ArithmeticError):
    pass


class SolverError(CfPenroseError, RuntimeError):
    pass


class IllConditioned(SolverError):
    pass


class ResidualTooLarge(SolverError):
    pass


class NotRegularZAS(CfPenroseError, ValueError):
    pass


class HypothesisViolated(CfPenroseError, ValueError):
    """A theorem's hypothesis failed; ``hypothesis`` names which one."""

    def __init__(self, hypothesis, detail=""):
        self.hypothesis = hypothesis
        self.detail = detail
        msg = hypothesis if not detail else f"{hypothesis}: {detail}"
        super().__init__(msg)


class LevelSetDegeneracy(CfPenroseError, ArithmeticError):
    pass


class ConfigInvalid(CfPenroseError, ValueError):
    """Bad scenario/config; ``pointer`` is a JSON pointer to the field."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")

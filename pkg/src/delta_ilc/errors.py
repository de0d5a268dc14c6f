"""Exception hierarchy shared by all modules."""


class DeltaError(Exception):
    """Base class for every error raised by this package."""


class UnreachablePose(DeltaError):
    pass


class SingularConfiguration(DeltaError):
    pass


class NoIntersection(DeltaError):
    pass


class SingularJacobian(SingularConfiguration):
    pass


class EmptyWorkspace(DeltaError):
    pass


class SingularMass(DeltaError):
    pass


class RankDeficiency(DeltaError):
    pass


class IndefiniteMass(DeltaError):
    pass


class DegenerateShaper(DeltaError):
    pass


class ImpulseAliasing(DeltaError):
    pass


class EmptyWeighting(DeltaError):
    pass


class DegenerateBasis(DeltaError):
    pass


class BarrierViolation(DeltaError):
    """Raised when the auxiliary error reaches the barrier bound.

    Carries the offending sample so the iteration can be diagnosed.
    """

    def __init__(self, message, eta=None, v_c=None, sample=None):
        super().__init__(message)
        self.eta = eta
        self.v_c = v_c
        self.sample = sample


class GridMismatch(DeltaError):
    pass


class NumericalDivergence(DeltaError):
    pass


class ConfigError(DeltaError):
    pass

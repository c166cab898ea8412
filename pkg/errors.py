"""
Exception hierarchy for sdcert
All library errors derive from SdcertError so callers can catch one type
"""


class SdcertError(Exception):
    """Base class for every sdcert error"""
    pass


class InvalidMatrix(SdcertError):
    """Matrix has non-finite entries or is not square"""
    pass


class InvalidInput(SdcertError):
    """Arguments have mismatched dimensions or are out of range"""
    pass


class NotPSD(SdcertError):
    """Matrix was expected to be positive semidefinite"""
    pass


class NumericalError(SdcertError):
    """A computed quantity drifted outside its admissible range"""
    pass


class InstanceParseError(SdcertError):
    """Instance, certificate or framework file could not be parsed"""
    pass


class WeightOutOfRange(InstanceParseError):
    """Edge weight outside [-1, 1]"""
    pass


class InvalidContraction(SdcertError):
    """Contraction set contains an odd edge"""
    pass


class TooLarge(SdcertError):
    """Exhaustive search requested beyond its size limit"""
    pass


class MetricInfeasible(SdcertError):
    """Degenerate weights force an odd cycle of +-1 entries"""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class MaxIterations(SdcertError):
    """Interior-point solver stalled before reaching the requested accuracy"""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InfeasibleInstance(SdcertError):
    """Instance has no PSD completion; carries the certificate chain"""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class InvalidCombine(SdcertError):
    """Clique-sum pieces disagree on the shared clique"""
    pass


class DegenerateTightCycle(SdcertError):
    """Tight cycle carries a weight of +-1"""
    pass


class InvalidSpec(SdcertError):
    """Construction parameters outside the documented range"""
    pass


class ConfigError(SdcertError):
    """Configuration value rejected"""
    pass

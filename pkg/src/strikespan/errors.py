"""Exception types raised across the package."""


class StrikespanError(Exception):
    """Base class for all package errors."""


class BadParams(StrikespanError, ValueError):
    pass


class UnknownPayoff(StrikespanError, KeyError):
    pass


class NotConvex(StrikespanError, ValueError):
    pass


class ArbitrageViolation(StrikespanError, ValueError):
    """Call quotes that admit a static arbitrage."""


class TailConditionFailed(StrikespanError, ValueError):
    """The payoff/curve pair is outside the admissible pricing class."""


class QuadratureNoConvergence(StrikespanError, RuntimeError):
    pass


class SecondDerivativeUnavailable(StrikespanError, ValueError):
    pass


class DensityUnavailable(StrikespanError, ValueError):
    pass


class BadWindow(StrikespanError, ValueError):
    pass


class BadGrid(StrikespanError, ValueError):
    pass

from typing import Optional


class MaclabError(Exception):
    """Base class for toolkit errors"""


class ConfigError(MaclabError, ValueError):
    """Invalid experiment configuration"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class GraphConstructionError(MaclabError, ValueError):
    """Topology parameters cannot produce a valid communication graph"""


class EnvironmentDataError(MaclabError, ValueError):
    """Loss tensor or ratings input is malformed"""


class NumericError(MaclabError, ArithmeticError):
    """Solver did not converge or produced an invalid distribution"""


class ProtocolError(MaclabError, RuntimeError):
    """Message bus contract violated"""


class AggregateError(MaclabError, ValueError):
    """Trace files cannot be reduced together"""


class PlotError(MaclabError, ValueError):
    """Plot request cannot be drawn"""

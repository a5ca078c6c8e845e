"""
Exception hierarchy shared by every component of the package.
"""
from typing import Optional


class FlowTopOptError(Exception):
    """Base class for all errors raised by flow_topopt"""


class MeshError(FlowTopOptError):
    """Invalid mesh topology or geometry"""


class ResolutionError(MeshError):
    """Benchmark boundary segments do not land on grid lines"""


class FieldError(FlowTopOptError):
    """A discrete field does not match the mesh it is used with"""


class AssemblyError(FlowTopOptError):
    """Element integration failed"""


class GaugeError(FlowTopOptError):
    """Boundary data leave the pressure or the velocity undetermined"""


class SolverError(FlowTopOptError):
    """Linear solve broke down"""

    def __init__(self, message: str, dof: Optional[int] = None):
        super().__init__(message if dof is None else f"{message} (dof {dof})")
        self.dof = dof


class ConvergenceError(SolverError):
    """Iterative solve did not meet the residual contract"""


class ConfigError(FlowTopOptError):
    """Invalid run configuration; the message names the offending key"""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class OptimizationError(FlowTopOptError):
    """Optimization aborted; the partial convergence history is preserved"""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = history

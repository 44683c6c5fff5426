"""Exception types shared across the solver."""


class EsdgError(Exception):
    """Base class for solver errors."""


class InvalidDegreeError(EsdgError, ValueError):
    """Polynomial degree outside the supported range."""


class OperatorConstructionError(EsdgError):
    """Reference operator assembly failed (e.g. singular mass matrix)."""


class MeshError(EsdgError):
    """Invalid mesh input or degenerate geometry."""


class InadmissibleStateError(EsdgError):
    """Thermodynamic state with nonpositive density or internal energy."""


class BoundarySpecError(EsdgError):
    """Missing or inconsistent boundary condition specification."""


class ConfigError(EsdgError):
    """Malformed run configuration."""


class StepSizeError(EsdgError):
    """Adaptive time step fell below the minimum allowed."""

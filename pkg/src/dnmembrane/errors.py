"""Exception hierarchy.

Numerical failures (``NumericalError`` subclasses) are distinguished from
input/configuration problems so the command line can map them to separate
exit codes.
"""


class DnMembraneError(Exception):
    """Base class for all package errors."""


class MeshError(DnMembraneError, ValueError):
    """Invalid mesh parameters or a query outside the mesh boundary."""


class DomainError(DnMembraneError, ValueError):
    """A point lies outside the domain of a field or map."""


class MapConstructionError(DnMembraneError, ValueError):
    """A plane map violates orientation or injectivity constraints."""


class LaminateResolutionError(DnMembraneError, ValueError):
    """The mesh does not resolve the requested laminate frequency."""


class ConfigError(DnMembraneError, ValueError):
    """Malformed or schema-invalid experiment configuration."""


class NumericalError(DnMembraneError, RuntimeError):
    """Base class for failures of a numerical procedure."""


class NonEllipticError(NumericalError):
    """A tensor sample is not positive definite (or not finite)."""


class SolverError(NumericalError):
    """Linear solver breakdown or residual above tolerance."""


class InverseMapError(NumericalError):
    """Newton inversion of a plane map did not converge."""

"""Exception hierarchy shared by all contrastlab modules."""


class ContrastlabError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(ContrastlabError):
    """Invalid geometric input (bad radii, self-intersecting polygon, ...)."""


class MeshFormatError(ContrastlabError):
    """Mesh text that does not conform to the ``contrastlab-mesh v1`` format."""


class CompatibilityError(ContrastlabError):
    """Integral compatibility condition violated by the problem data.

    Carries the offending residuals so callers can cite the failing integral.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class SingularMatrixError(ContrastlabError):
    """Structurally or numerically singular matrix.

    ``pivot_index`` is the failing pivot when the factorization reports one,
    else -1.
    """

    def __init__(self, message, pivot_index=-1):
        super().__init__(message)
        self.pivot_index = pivot_index


class SingularSystemError(ContrastlabError):
    """A pure-Neumann system was solved without the zero-mean constraint."""


class ConvergenceError(ContrastlabError):
    """Iterative solver failed to reach tolerance; keeps residual history."""

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class InternalConsistencyError(ContrastlabError):
    """A quantity that must hold by construction failed (flux-transfer bug)."""


class DegeneracyError(ContrastlabError):
    """A denominator that the theory guarantees nonzero came out ~0."""


class UnsupportedGeometryError(ContrastlabError):
    """Operation requires a geometry it was not built for."""


class ResolutionError(ContrastlabError):
    """Mesh too coarse for the requested boundary-layer study."""

    def __init__(self, message, required_h=None):
        super().__init__(message)
        self.required_h = required_h


class OracleRefusalError(ContrastlabError):
    """Radial oracle grids disagree beyond tolerance; no value returned."""

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class ConfigError(ContrastlabError):
    """Malformed or incomplete campaign configuration."""


class IntegrityError(ContrastlabError):
    """Campaign artifact directory is missing or corrupt."""


class SchemaError(ContrastlabError):
    """Stored CSV/manifest does not match the expected schema."""


class SolverError(ContrastlabError):
    """Direct or constrained solve failed (residual too large, singular)."""

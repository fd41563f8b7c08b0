"""Exception hierarchy shared by all modules."""


class LSZError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(LSZError):
    """Invalid user input (mapped to CLI exit code 1)."""


class MultiplicityMismatch(ValidationError):
    """Multiplicities do not sum to N."""


class DuplicateEigenvalue(ValidationError):
    """Two eigenvalues of the same external matrix coincide."""


class NonPositiveInput(ValidationError):
    """A quantity required to be positive is not."""


class NonConvergence(LSZError):
    """An iterative method failed to converge (CLI exit code 2)."""


class BranchCollision(NonConvergence):
    """Two solution points collided along the homotopy path."""


class PoleEvaluation(LSZError):
    """A rational function was evaluated at one of its poles."""


class DegenerateRamification(LSZError):
    """Two ramification points (nearly) coincide."""


class BranchEscape(LSZError):
    """Newton for the local involution left the admissible disk."""


class FiberDegeneracy(LSZError):
    """The point itself cannot be identified unambiguously in its fiber."""


class PointTooCloseToBranchPoint(LSZError):
    """An evaluation point lies too close to a ramification point."""


class ResidueNotZero(LSZError):
    """A differential expected to be residue-free has a residue."""


class IllConditioned(LSZError):
    """Two equivalent representations disagree beyond tolerance."""


class DepthExceeded(LSZError):
    """Recursion budget exhausted."""


class CoincidingIndices(LSZError):
    """A recursion denominator vanishes because two eigenvalues coincide."""


class BudgetExceeded(LSZError):
    """Enumeration would exceed the configured work budget."""


class BranchCut(ValidationError):
    """A square-root discriminant is not positive."""


class RoundingGuard(LSZError):
    """A value expected to be an integer is not close to one.

    Parameters
    ----------
    message : str
        Description of the failure.
    raw : sequence, optional
        The raw floating point values that failed the guard.
    """

    def __init__(self, message, raw=None):
        super().__init__(message)
        self.raw = raw


class BranchChoice(LSZError):
    """A square-root branch could not be matched."""

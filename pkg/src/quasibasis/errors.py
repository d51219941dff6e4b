"""Exception types shared across the package."""


class QuasibasisError(Exception):
    """Base class for all errors raised by this package."""


class InvalidRegion(QuasibasisError):
    """Region construction or usage violates the region contract."""


class SingularLattice(QuasibasisError):
    """Lattice basis is singular or numerically unusable."""


class BoundaryHit(QuasibasisError):
    """A query point is too close to a region boundary to classify."""


class TranslationFailed(QuasibasisError):
    """No generic translation found; carries the per-attempt log."""

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


class IndependenceHeuristicFailed(QuasibasisError):
    """An integer relation with small coefficients was found."""

    def __init__(self, message, relation=None, values=None):
        super().__init__(message)
        self.relation = relation
        self.values = values


class WindowTooSmall(QuasibasisError):
    """Enumeration window contains no points or has zero volume."""


class BlockCardinalityViolation(QuasibasisError):
    """A block of the dual enumeration does not contain exactly k points."""

    def __init__(self, message, n, found=None):
        super().__init__(message)
        self.n = n
        self.found = found


class EnumerationTooShort(QuasibasisError):
    """Enumeration does not cover enough blocks for the requested window."""


class DuplicateFrequency(QuasibasisError):
    """Frequency list passed to a Gram builder contains duplicates."""


class EigensolverNotConverged(QuasibasisError):
    """Iterative extremal-eigenvalue computation failed to converge."""


class QuadratureNotConverged(QuasibasisError):
    """Refined quadrature did not reach the requested tolerance."""


class ConditionFailure(QuasibasisError):
    """Base for failed enumeration conditions; carries the full report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConditionAFailed(ConditionFailure):
    """Separation condition failed (non-positive gap)."""


class ConditionBFailed(ConditionFailure):
    """Deviation bound condition failed (sup |delta| above bound)."""


class ConditionCNotObserved(ConditionFailure):
    """Mean-deviation condition not observed on the probed window grid."""


class ScenarioError(QuasibasisError):
    """Scenario document is malformed or violates the schema."""

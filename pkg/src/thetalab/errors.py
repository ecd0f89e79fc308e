"""Exception types shared across the package."""


class ThetaLabError(Exception):
    """Base class for all errors raised by thetalab."""


class GenusMismatchError(ThetaLabError, ValueError):
    """Operands live on Jacobians of different genus."""


class DenominatorError(ThetaLabError, ValueError):
    """Characteristic denominators cannot be combined or are unsupported."""


class EnumerationGuardError(ThetaLabError, ValueError):
    """An enumeration would exceed the configured size guard."""


class MatrixValidationError(ThetaLabError, ValueError):
    """A candidate period matrix is not in the Siegel upper-half space."""


class RadiusOverflowError(ThetaLabError, ValueError):
    """The lattice radius needed for the requested tolerance exceeds the cap."""


class BranchPointError(ThetaLabError, ValueError):
    """Branch-point data is malformed (collisions, wrong count, not real-sorted)."""


class QuadratureError(ThetaLabError, ValueError):
    """Period quadrature failed to converge within the node cap."""


class AdmissibleSetError(ThetaLabError, ValueError):
    """No admissible summation characteristics exist for an identity request."""


class WitnessError(ThetaLabError, ValueError):
    """A candidate detection witness fails its structural or numeric checks."""

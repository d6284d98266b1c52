"""Error types raised by the mathematical checks.

Every failure carries a reproducible witness (a monomial, a matrix row, a
degree) so reports can point at the exact violation.
"""


class CrystalError(Exception):
    """Base class; ``witness`` holds the offending object, if any."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# linear algebra
class ContainmentViolation(CrystalError):
    """Image rows do not lie in the kernel span: d after d is not zero."""


# series arithmetic
class VarSpecMismatch(CrystalError):
    pass


class SubstitutionOutsideIdeal(CrystalError):
    """A capped variable was mapped to a series with a unit constant term."""


class NotDivisible(CrystalError):
    """Coefficientwise division failed; witness is the offending monomial."""


class NotInvertible(CrystalError):
    pass


# simplicial site
class IdentityViolation(CrystalError):
    pass


class KernelMismatch(CrystalError):
    pass


class RegularityFailure(CrystalError):
    pass


class IncompatibleFaces(CrystalError):
    pass


class PrecisionExhausted(CrystalError):
    pass


# smooth lifting
class WitnessNotInvertible(CrystalError):
    pass


class NewtonStall(CrystalError):
    pass


class NotCongruent(CrystalError):
    pass


# de Rham / descent
class CapsTooSmall(CrystalError):
    pass


class TorsionWitness(CrystalError):
    pass


class BaseChangeMismatch(CrystalError):
    pass


class NotACover(CrystalError):
    pass


class MismatchWitness(CrystalError):
    pass


# crystalline comparison
class ComparisonFailure(CrystalError):
    pass


class CatalogMismatch(CrystalError):
    pass


class SignConventionViolation(CrystalError):
    pass

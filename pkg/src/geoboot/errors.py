"""Exception hierarchy shared by every module."""


class GeobootError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(GeobootError, ValueError):
    """Invalid, mismatched or out-of-range parameters."""


class NoSplitError(ParameterError):
    """The requested prime does not split the cyclotomic polynomial."""


class IntegrityError(GeobootError):
    """Precomputed tables are inconsistent with each other."""


class CalibrationRequiredError(GeobootError):
    """A generator set was used for membership before being calibrated."""


class DegeneratePlaintextError(ParameterError):
    """Plaintext modulus has no prime factors (p = 1)."""


class RankError(GeobootError, ValueError):
    """Lattice basis rows are linearly dependent."""


class SearchExhaustedError(GeobootError):
    """No suitable splitting prime was found within the search limit."""

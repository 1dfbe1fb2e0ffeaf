"""Geometric bootstrapping experiments over toy BFV ciphertexts."""

from .errors import (
    CalibrationRequiredError,
    DegeneratePlaintextError,
    GeobootError,
    IntegrityError,
    NoSplitError,
    ParameterError,
    RankError,
    SearchExhaustedError,
)
from .params import PRESETS, Params, preset

__version__ = "0.1.0"

__all__ = [
    "Params",
    "PRESETS",
    "preset",
    "GeobootError",
    "ParameterError",
    "NoSplitError",
    "IntegrityError",
    "CalibrationRequiredError",
    "DegeneratePlaintextError",
    "RankError",
    "SearchExhaustedError",
]

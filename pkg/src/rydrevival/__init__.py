"""Revival, fractional revival and superrevival dynamics of Rydberg wave packets."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigError,
    NumericalError,
    ResolutionError,
    RevivalError,
)
from .spectrum import (  # noqa: E402
    HydrogenSpectrum,
    QuantumDefectSpectrum,
    StarkSpectrum,
    TabulatedSpectrum,
    TimeScaleSet,
    commensurability,
    energy,
    time_scales,
    tune_field,
)
from .packet import PhaseModel, autocorrelation, build_packet, phase_at  # noqa: E402
from .analysis import classify_spectrum, detect_structure, predict_revivals  # noqa: E402

__all__ = [
    "ConfigError", "NumericalError", "ResolutionError", "RevivalError",
    "HydrogenSpectrum", "QuantumDefectSpectrum", "StarkSpectrum", "TabulatedSpectrum",
    "TimeScaleSet", "commensurability", "energy", "time_scales", "tune_field",
    "PhaseModel", "autocorrelation", "build_packet", "phase_at",
    "classify_spectrum", "detect_structure", "predict_revivals",
]

"""helisurf: CPW-resonator / superfluid-helium surface-noise toolkit.

Models a superconducting coplanar-waveguide resonator loaded with
superfluid helium, synthesizes vibration-driven reflection and geophone
time traces, and recovers band-limited RMS surface displacement through a
Welch noise-spectroscopy pipeline.
"""

from .errors import (CalibrationError, ConfigError, HelisurfError,
                     InitializationError, InsufficientDataError,
                     InvalidBandError, InvalidComparisonError,
                     InvalidGeometryError, InvalidScenarioError,
                     OutOfDomainError, UserInputError)
from .fitting import (FitResult, calibrate_geophone, displacement_from_geophone,
                      fit_kinetic, fit_resonance, levenberg_marquardt)
from .helium import (CondensationScenario, HeliumConstants, HeliumState,
                     Region, ShiftModel, channel_depth, condensation_state,
                     condensation_trajectory, film_thickness, frequency_shift)
from .resonator import (KineticModel, ResonanceParams, ResonatorGeometry,
                        effective_permittivity, ellipk_agm,
                        fundamental_frequency, max_slope_probe,
                        resonance_vs_temperature, s11, s11_db, s11_db_slope)
from .spectral import (AnalysisReport, Harmonic, PtComparison, Spectrum,
                       analyze_db_trace, band_rms, calibrate_frequency_noise,
                       compare_pt_on_off, detect_harmonics, rms_displacement,
                       welch_asd)
from .synthesis import (FluctuationScenario, GeophoneModel, TimeTrace,
                        displacement_to_s11_trace, synth_displacement,
                        synth_geophone, trace_derivative)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "CalibrationError", "CondensationScenario",
    "ConfigError", "FitResult", "FluctuationScenario", "GeophoneModel",
    "Harmonic", "HeliumConstants", "HeliumState", "HelisurfError",
    "InitializationError", "InsufficientDataError", "InvalidBandError",
    "InvalidComparisonError", "InvalidGeometryError", "InvalidScenarioError",
    "KineticModel", "OutOfDomainError", "PtComparison", "Region",
    "ResonanceParams", "ResonatorGeometry", "ShiftModel", "Spectrum",
    "TimeTrace", "UserInputError", "analyze_db_trace", "band_rms",
    "calibrate_frequency_noise", "calibrate_geophone", "channel_depth",
    "compare_pt_on_off", "condensation_state", "condensation_trajectory",
    "detect_harmonics", "displacement_from_geophone",
    "displacement_to_s11_trace", "effective_permittivity", "ellipk_agm",
    "film_thickness", "fit_kinetic", "fit_resonance", "frequency_shift",
    "fundamental_frequency", "levenberg_marquardt", "max_slope_probe",
    "resonance_vs_temperature", "rms_displacement", "s11", "s11_db",
    "s11_db_slope", "synth_displacement", "synth_geophone",
    "trace_derivative", "welch_asd",
]

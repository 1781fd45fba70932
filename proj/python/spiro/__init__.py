"""Acoustic spirometry from whistle recordings."""

from ._core import (
    SpiroError,
    TrialStore,
    analyze,
    compute_report,
    design_bandpass,
    fev1_fvc_ratio,
    fit_calibration,
    frequency_trace,
    integrate_volume,
    read_wav,
    run_cli,
    select_best_trial,
    stft,
    synthesize,
    write_wav,
)

__all__ = [
    "SpiroError",
    "TrialStore",
    "analyze",
    "compute_report",
    "design_bandpass",
    "fev1_fvc_ratio",
    "fit_calibration",
    "frequency_trace",
    "integrate_volume",
    "read_wav",
    "run_cli",
    "select_best_trial",
    "stft",
    "synthesize",
    "write_wav",
]

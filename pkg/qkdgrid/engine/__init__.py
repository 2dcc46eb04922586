"""
Decoy-state QKD key-rate engine
"""

from qkdgrid.engine.channel import (
    binary_entropy,
    bit_error_prob,
    detection_rate,
    photon_number_prob,
    transmittance,
)
from qkdgrid.engine.finite_key import (
    evaluate_key_rate,
    finite_key_adjusted_counts,
    key_generation_speed,
    phase_error_bound,
    secret_key_length,
    single_photon_error_bound,
    single_photon_events_bound,
    vacuum_events_bound,
)
from qkdgrid.engine.statistics import expected_statistics, sample_statistics

__all__ = [
    "binary_entropy",
    "bit_error_prob",
    "detection_rate",
    "evaluate_key_rate",
    "expected_statistics",
    "finite_key_adjusted_counts",
    "key_generation_speed",
    "phase_error_bound",
    "photon_number_prob",
    "sample_statistics",
    "secret_key_length",
    "single_photon_error_bound",
    "single_photon_events_bound",
    "transmittance",
    "vacuum_events_bound",
]

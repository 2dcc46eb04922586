"""
Fiber channel and source model.

All functions are pure and operate on the frozen parameter models, so they can
be called from any thread.
"""

import math

from qkdgrid.core.exceptions import ParameterValidationError
from qkdgrid.models.qkd import ChannelModel, ProtocolParams

# Standard telecom fiber loss.
ATTENUATION_DB_PER_KM = 0.2


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2 (1-x), with h(0) = h(1) = 0"""
    if not 0.0 <= x <= 1.0:
        raise ParameterValidationError(f"binary entropy undefined for {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def transmittance(length_km: float) -> float:
    """Power transmission of `length_km` of fiber"""
    if length_km < 0:
        raise ParameterValidationError(f"fiber length must be >= 0, got {length_km}")
    return 10.0 ** (-ATTENUATION_DB_PER_KM * length_km / 10.0)


def detection_rate(k: float, ch: ChannelModel) -> float:
    """Expected detection rate for intensity k, after-pulses excluded"""
    if k < 0:
        raise ParameterValidationError(f"intensity must be >= 0, got {k}")
    eta = transmittance(ch.length_km) * ch.eta_bob
    return 1.0 - (1.0 - 2.0 * ch.p_dc) * math.exp(-eta * k)


def bit_error_prob(k: float, ch: ChannelModel) -> float:
    """Per-pulse probability of a bit error for intensity k"""
    if k < 0:
        raise ParameterValidationError(f"intensity must be >= 0, got {k}")
    eta = transmittance(ch.length_km)
    if ch.misalignment_includes_eta_bob:
        eta *= ch.eta_bob
    r_k = detection_rate(k, ch)
    return ch.p_dc + ch.e_mis * (1.0 - math.exp(-eta * k)) + ch.p_ap * r_k / 2.0


def photon_number_prob(n: int, p: ProtocolParams) -> float:
    """Probability chi_n that the source emits an n-photon state"""
    if n < 0:
        raise ParameterValidationError(f"photon number must be >= 0, got {n}")
    total = 0.0
    for k, p_k in zip(p.intensities, p.probabilities):
        total += math.exp(-k) * k**n * p_k
    return total / math.factorial(n)


def detection_prob(k: float, ch: ChannelModel) -> float:
    """Total per-pulse detection probability, after-pulses included"""
    return min(1.0, detection_rate(k, ch) * (1.0 + ch.p_ap))

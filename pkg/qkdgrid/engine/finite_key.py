"""
Finite-key secret key length for the three-intensity decoy-state protocol
"""

import math
from typing import Literal, Optional, Tuple

import structlog

from qkdgrid.core.exceptions import (
    DecoyOrderingError,
    DegenerateDecoyError,
    InsufficientStatisticsError,
    ParameterValidationError,
)
from qkdgrid.core.metrics import KEYRATE_DURATION
from qkdgrid.engine.channel import binary_entropy, photon_number_prob
from qkdgrid.engine.statistics import expected_statistics, sample_statistics
from qkdgrid.models.qkd import (
    Basis,
    ChannelModel,
    CountKind,
    KeyRateResult,
    ObservedStatistics,
    ProtocolParams,
)

logger = structlog.get_logger(__name__)

# Number of Hoeffding-type terms covered by the secrecy parameter.
SECURITY_TERMS = 21

PHASE_ERROR_CAP = 0.5

Bounds = Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]


def _deviation(total: int, eps_s: float) -> float:
    return math.sqrt(total / 2.0 * math.log(SECURITY_TERMS / eps_s))


def finite_key_adjusted_counts(
    stats: ObservedStatistics,
    p: ProtocolParams,
    basis: Basis,
    kind: CountKind,
    fluctuations: bool = True,
) -> Bounds:
    """Per-intensity (lower, upper) bounds on the asymptotic counts.

    The deviation term is sqrt(total/2 * ln(21/eps_s)) where total is the sum
    of the selected counts over the three intensities. With
    ``fluctuations=False`` it is dropped and lower == upper == e^k * count / p_k.
    """
    counts = stats.counts(basis, kind)
    if any(p_k <= 0 for p_k in p.probabilities):
        raise ParameterValidationError(
            "finite-key bounds need every intensity probability to be positive"
        )
    dev = _deviation(sum(counts), p.eps_s) if fluctuations else 0.0

    bounds = []
    for k, p_k, count in zip(p.intensities, p.probabilities, counts):
        scale = math.exp(k) / p_k
        lower = max(0.0, scale * (count - dev))
        upper = scale * (count + dev)
        bounds.append((lower, upper))
    return tuple(bounds)  # type: ignore[return-value]


def vacuum_events_bound(
    stats: ObservedStatistics, p: ProtocolParams, basis: Basis
) -> float:
    """Lower bound on the vacuum events in the given basis"""
    if p.k2 == p.k3:
        raise DegenerateDecoyError("k2 and k3 must differ")
    (_, _), (_, n_k2_up), (n_k3_low, _) = finite_key_adjusted_counts(
        stats, p, basis, CountKind.DETECTIONS
    )
    chi_0 = photon_number_prob(0, p)
    xi_0 = chi_0 * (p.k2 * n_k3_low - p.k3 * n_k2_up) / (p.k2 - p.k3)
    return max(0.0, xi_0)


def single_photon_events_bound(
    stats: ObservedStatistics, p: ProtocolParams, basis: Basis, xi_0: float
) -> float:
    """Lower bound on the single-photon events in the given basis"""
    k1, k2, k3 = p.intensities
    denominator = k1 * (k2 - k3) - k2**2 + k3**2
    if denominator <= 0:
        raise DecoyOrderingError(
            f"k1*(k2-k3) - k2^2 + k3^2 must be positive, got {denominator}"
        )
    (_, n_k1_up), (n_k2_low, _), (_, n_k3_up) = finite_key_adjusted_counts(
        stats, p, basis, CountKind.DETECTIONS
    )
    chi_0 = photon_number_prob(0, p)
    chi_1 = photon_number_prob(1, p)

    numerator = n_k2_low - n_k3_up - (k2**2 - k3**2) / k1**2 * (n_k1_up - xi_0 / chi_0)
    xi_1 = chi_1 * k1 * numerator / denominator
    return min(max(0.0, xi_1), float(sum(stats.detections(basis))))


def single_photon_error_bound(stats: ObservedStatistics, p: ProtocolParams) -> float:
    """Upper bound on the bit errors of single-photon events in Z"""
    if p.k2 == p.k3:
        raise DegenerateDecoyError("k2 and k3 must differ")
    _, (_, m_k2_up), (m_k3_low, _) = finite_key_adjusted_counts(
        stats, p, Basis.Z, CountKind.ERRORS
    )
    chi_1 = photon_number_prob(1, p)
    return max(0.0, chi_1 * (m_k2_up - m_k3_low) / (p.k2 - p.k3))


def _statistical_fluctuation(a: float, b: float, c: float, d: float) -> float:
    """Sampling penalty of estimating the X phase error from Z"""
    if b <= 0.0 or b >= 1.0:
        return 0.0
    spread = (c + d) * (1.0 - b) * b / (c * d * math.log(2))
    log_term = math.log2((c + d) / (c * d * (1.0 - b) * b) * SECURITY_TERMS**2 / a**2)
    return math.sqrt(max(0.0, spread * log_term))


def _raw_phase_error(
    stats: ObservedStatistics, p: ProtocolParams, xi_z1: float, xi_x1: float
) -> Tuple[float, float]:
    """(delta_Z1, unclamped phase error rate)"""
    if xi_z1 <= 0 or xi_x1 <= 0:
        raise InsufficientStatisticsError(
            f"single-photon bounds must be positive (xi_z1={xi_z1}, xi_x1={xi_x1})"
        )
    delta_z1 = single_photon_error_bound(stats, p)
    ratio = delta_z1 / xi_z1
    return delta_z1, ratio + _statistical_fluctuation(p.eps_s, ratio, xi_z1, xi_x1)


def phase_error_bound(
    stats: ObservedStatistics, p: ProtocolParams, xi_z1: float, xi_x1: float
) -> float:
    """Upper bound on the single-photon phase error rate in X, in [0, 0.5]"""
    _, phi = _raw_phase_error(stats, p, xi_z1, xi_x1)
    return min(max(phi, 0.0), PHASE_ERROR_CAP)


def _empty_result(
    stats: ObservedStatistics, reason: str, insufficient: bool = True, **values: float
) -> KeyRateResult:
    return KeyRateResult(
        ell=0,
        n_pulses=stats.n_pulses,
        speed=0.0,
        n_x=stats.raw_key_bits,
        insufficient_statistics=insufficient,
        diagnostics={"reason": reason},
        **values,  # type: ignore[arg-type]
    )


def secret_key_length(
    stats: ObservedStatistics,
    p: ProtocolParams,
    pulse_rate: Optional[float] = None,
) -> KeyRateResult:
    """Extractable secret key length of one block.

    ``speed`` is filled in when ``pulse_rate`` is given. Blocks whose
    single-photon bounds vanish return ell = 0 with
    ``insufficient_statistics`` set instead of raising.
    """
    n_x = stats.raw_key_bits
    if n_x == 0:
        return _empty_result(stats, "no raw key bits")

    xi_x0 = vacuum_events_bound(stats, p, Basis.X)
    xi_x1 = single_photon_events_bound(stats, p, Basis.X, xi_x0)
    xi_z0 = vacuum_events_bound(stats, p, Basis.Z)
    xi_z1 = single_photon_events_bound(stats, p, Basis.Z, xi_z0)
    bounds = dict(xi_x0=xi_x0, xi_x1=xi_x1, xi_z0=xi_z0, xi_z1=xi_z1)

    try:
        delta_z1, phi_raw = _raw_phase_error(stats, p, xi_z1, xi_x1)
    except InsufficientStatisticsError as e:
        logger.debug("Insufficient statistics for key extraction", error=str(e))
        return _empty_result(stats, str(e), **bounds)

    phi = min(max(phi_raw, 0.0), PHASE_ERROR_CAP)
    if p.ec_leakage == "qber":
        leak_rate = min(sum(stats.m_x) / n_x, PHASE_ERROR_CAP)
    else:
        leak_rate = phi
    lambda_ec = n_x * p.eta_ec * binary_entropy(leak_rate)
    values = dict(
        bounds,
        delta_z1=delta_z1,
        phi_x=phi,
        phase_error_raw=phi_raw,
        lambda_ec=lambda_ec,
    )

    if phi_raw >= PHASE_ERROR_CAP:
        return _empty_result(
            stats, "phase error rate reached 0.5", insufficient=False, **values
        )

    overhead = 6 * math.log2(SECURITY_TERMS / p.eps_s) + math.log2(2 / p.eps_c)
    ell_real = xi_x0 + xi_x1 - xi_x1 * binary_entropy(phi) - lambda_ec - overhead
    ell = min(max(0, math.floor(ell_real)), n_x)

    speed = 0.0
    if pulse_rate is not None and stats.n_pulses > 0:
        speed = ell * pulse_rate / stats.n_pulses

    return KeyRateResult(
        ell=ell,
        n_pulses=stats.n_pulses,
        speed=speed,
        n_x=n_x,
        diagnostics={} if ell > 0 else {"reason": "overhead exceeds extractable bits"},
        **values,  # type: ignore[arg-type]
    )


def evaluate_key_rate(
    p: ProtocolParams,
    ch: ChannelModel,
    statistics: Literal["expected", "sampled"] = "expected",
    seed: int = 0,
) -> KeyRateResult:
    """Key block evaluation from channel model to secret key length"""
    with KEYRATE_DURATION.time():
        if statistics == "sampled":
            stats = sample_statistics(p, ch, seed)
        else:
            stats = expected_statistics(p, ch)
        return secret_key_length(stats, p, ch.pulse_rate)


def key_generation_speed(p: ProtocolParams, ch: ChannelModel) -> float:
    """Secret key bits per second under the expected statistics"""
    result = evaluate_key_rate(p, ch)
    if result.ell == 0:
        logger.info(
            "Channel yields no secret key",
            length_km=ch.length_km,
            e_mis=ch.e_mis,
            reason=result.diagnostics.get("reason"),
        )
    return result.speed

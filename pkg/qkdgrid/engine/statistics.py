"""
Detection statistics of one decoy-state key block
"""

import math
from typing import List, Tuple

import numpy as np

from qkdgrid.core.exceptions import UnreachableTargetError
from qkdgrid.engine.channel import bit_error_prob, detection_prob
from qkdgrid.models.qkd import Basis, ChannelModel, ObservedStatistics, ProtocolParams


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _per_intensity_probs(
    p: ProtocolParams, ch: ChannelModel
) -> Tuple[List[float], List[float]]:
    """(R_k, b_k) for each intensity"""
    detect = [detection_prob(k, ch) for k in p.intensities]
    errors = [min(bit_error_prob(k, ch), r) for k, r in zip(p.intensities, detect)]
    return detect, errors


def _x_detection_rate(p: ProtocolParams, detect: List[float]) -> float:
    q_x = p.basis_probability(Basis.X)
    return sum(p_k * q_x * r_k for p_k, r_k in zip(p.probabilities, detect))


def _rounded_x_total(p: ProtocolParams, detect: List[float], n_pulses: int) -> int:
    q_x = p.basis_probability(Basis.X)
    return sum(
        _round_half_up(n_pulses * p_k * q_x * r_k)
        for p_k, r_k in zip(p.probabilities, detect)
    )


def _pulses_for_target(p: ProtocolParams, detect: List[float]) -> int:
    """Smallest N whose rounded expected X-basis detections reach n_X"""
    rate = _x_detection_rate(p, detect)
    if rate <= 0:
        raise UnreachableTargetError("no intensity can produce an X-basis detection")
    low = math.ceil(p.n_x / rate)
    if low * rate < p.n_x:
        low += 1
    if _rounded_x_total(p, detect, low) >= p.n_x:
        return low

    # Rounding loses under 1.5 counts and the rounded total is monotone in N
    high = low + math.ceil(2 / rate)
    while high - low > 1:
        mid = (low + high) // 2
        if _rounded_x_total(p, detect, mid) >= p.n_x:
            high = mid
        else:
            low = mid
    return high


def expected_statistics(p: ProtocolParams, ch: ChannelModel) -> ObservedStatistics:
    """Deterministic expected counts for a block reaching the raw key target"""
    detect, errors = _per_intensity_probs(p, ch)
    n_pulses = _pulses_for_target(p, detect)

    counts = {}
    for basis in Basis:
        q_b = p.basis_probability(basis)
        n = []
        m = []
        for p_k, r_k, b_k in zip(p.probabilities, detect, errors):
            n_k = _round_half_up(n_pulses * p_k * q_b * r_k)
            m_k = _round_half_up(n_pulses * p_k * q_b * b_k)
            n.append(n_k)
            m.append(min(m_k, n_k))
        counts[basis] = (tuple(n), tuple(m))

    return ObservedStatistics(
        n_x=counts[Basis.X][0],
        n_z=counts[Basis.Z][0],
        m_x=counts[Basis.X][1],
        m_z=counts[Basis.Z][1],
        n_pulses=n_pulses,
    )


def sample_statistics(
    p: ProtocolParams, ch: ChannelModel, seed: int
) -> ObservedStatistics:
    """Binomially sampled counts for a block of the same size as the expected one"""
    detect, errors = _per_intensity_probs(p, ch)
    n_pulses = _pulses_for_target(p, detect)
    rng = np.random.default_rng(seed)

    counts = {}
    for basis in Basis:
        q_b = p.basis_probability(basis)
        n = []
        m = []
        for p_k, r_k, b_k in zip(p.probabilities, detect, errors):
            n_k = int(rng.binomial(n_pulses, min(1.0, p_k * q_b * r_k)))
            error_fraction = b_k / r_k if r_k > 0 else 0.0
            m_k = int(rng.binomial(n_k, min(1.0, error_fraction)))
            n.append(n_k)
            m.append(m_k)
        counts[basis] = (tuple(n), tuple(m))

    return ObservedStatistics(
        n_x=counts[Basis.X][0],
        n_z=counts[Basis.Z][0],
        m_x=counts[Basis.X][1],
        m_z=counts[Basis.Z][1],
        n_pulses=n_pulses,
    )

"""
Straight-line finite-key evaluation used as an independent reference.

Only the standard library is used and no qkdgrid code is imported.
"""

import math

K = (0.4, 0.1, 0.007)
P = (1 / 3, 1 / 3, 1 / 3)
P_X = 0.8
N_X = 10_000_000
P_DC = 6e-7
P_AP = 0.04
ETA_EC = 1.16
EPS_S = 1e-11
EPS_C = 1e-11


def h(x):
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def secret_key_length(length_km=5.0, e_mis=5e-4, eta_bob=0.1):
    """Returns (ell, N) for the default protocol on one fiber link"""
    eta_tr = 10 ** (-0.02 * length_km)
    r = [1 - (1 - 2 * P_DC) * math.exp(-eta_tr * eta_bob * k) for k in K]
    det = [min(1.0, x * (1 + P_AP)) for x in r]
    err = [
        min(P_DC + e_mis * (1 - math.exp(-eta_tr * k)) + P_AP * x / 2, d)
        for k, x, d in zip(K, r, det)
    ]

    q_x, q_z = P_X**2, (1 - P_X) ** 2
    rate = sum(p * q_x * d for p, d in zip(P, det))
    n = math.ceil(N_X / rate)
    if n * rate < N_X:
        n += 1
    # the rounded X-basis counts must reach the target too
    while sum(math.floor(n * p * q_x * d + 0.5) for p, d in zip(P, det)) < N_X:
        n += 1

    n_x = [math.floor(n * p * q_x * d + 0.5) for p, d in zip(P, det)]
    n_z = [math.floor(n * p * q_z * d + 0.5) for p, d in zip(P, det)]
    m_z = [
        min(math.floor(n * p * q_z * b + 0.5), c) for p, b, c in zip(P, err, n_z)
    ]

    log_term = math.log(21 / EPS_S)
    chi0 = sum(math.exp(-k) * p for k, p in zip(K, P))
    chi1 = sum(math.exp(-k) * k * p for k, p in zip(K, P))
    k1, k2, k3 = K

    def bounds(counts):
        dev = math.sqrt(sum(counts) / 2 * log_term)
        lo = [max(0.0, math.exp(k) / p * (c - dev)) for k, p, c in zip(K, P, counts)]
        hi = [math.exp(k) / p * (c + dev) for k, p, c in zip(K, P, counts)]
        return lo, hi

    def vacuum_and_single(counts):
        lo, hi = bounds(counts)
        xi0 = max(0.0, chi0 * (k2 * lo[2] - k3 * hi[1]) / (k2 - k3))
        num = lo[1] - hi[2] - (k2**2 - k3**2) / k1**2 * (hi[0] - xi0 / chi0)
        xi1 = chi1 * k1 * num / (k1 * (k2 - k3) - k2**2 + k3**2)
        return xi0, min(max(0.0, xi1), float(sum(counts)))

    x0, x1 = vacuum_and_single(n_x)
    _, z1 = vacuum_and_single(n_z)
    lo, hi = bounds(m_z)
    d_z1 = max(0.0, chi1 * (hi[1] - lo[2]) / (k2 - k3))

    b = d_z1 / z1
    c, d = z1, x1
    f = math.sqrt(
        (c + d)
        * (1 - b)
        * b
        / (c * d * math.log(2))
        * math.log2((c + d) / (c * d * (1 - b) * b) * 441 / EPS_S**2)
    )
    phi = min(b + f, 0.5)

    total_x = sum(n_x)
    ell = (
        x0
        + x1
        - x1 * h(phi)
        - total_x * ETA_EC * h(phi)
        - 6 * math.log2(21 / EPS_S)
        - math.log2(2 / EPS_C)
    )
    return min(max(0, math.floor(ell)), total_x), n

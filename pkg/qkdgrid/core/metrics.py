"""
Prometheus metrics for qkdgrid
"""

from prometheus_client import Counter, Histogram

KEY_BITS_DEPOSITED = Counter(
    "qkdgrid_key_bits_deposited_total", "Key bits deposited by QKD blocks", ["pool"]
)
PACKETS = Counter(
    "qkdgrid_packets_total", "Control packets by outcome", ["channel", "outcome"]
)
KPS_TRANSFERS = Counter("qkdgrid_kps_transfers_total", "Key pool sharing transfers")
EXHAUSTION_INTERVALS = Counter(
    "qkdgrid_exhaustion_intervals_total", "Key exhaustion intervals", ["pool"]
)
KEYRATE_DURATION = Histogram(
    "qkdgrid_keyrate_duration_seconds", "Finite-key evaluation duration"
)
SIMULATION_DURATION = Histogram(
    "qkdgrid_simulation_duration_seconds", "Wall-clock duration of simulation runs"
)

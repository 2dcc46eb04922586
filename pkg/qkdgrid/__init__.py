"""
qkdgrid: QKD-secured microgrid communication simulator
"""

__version__ = "0.1.0"

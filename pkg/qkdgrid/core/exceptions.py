"""
Exception hierarchy for qkdgrid
"""


class QkdGridError(Exception):
    """Base class for all qkdgrid errors"""


class ParameterValidationError(QkdGridError, ValueError):
    """Raised when a protocol, channel or scenario parameter is invalid"""


class DegenerateDecoyError(ParameterValidationError):
    """Raised when the two weakest intensities coincide (k2 == k3)"""


class DecoyOrderingError(ParameterValidationError):
    """Raised when k1*(k2-k3) - k2^2 + k3^2 is not positive"""


class UnreachableTargetError(QkdGridError):
    """Raised when no intensity can produce a detection"""


class InsufficientStatisticsError(QkdGridError):
    """Raised when the single-photon bounds are not positive"""


class KeyShortageError(QkdGridError):
    """Raised when a key pool cannot supply the requested number of bits"""

    def __init__(self, pool_id: int, requested: int, available: int):
        self.pool_id = pool_id
        self.requested = requested
        self.available = available
        super().__init__(
            f"pool {pool_id}: requested {requested} bits, {available} available"
        )


class CipherError(QkdGridError):
    """Base class for encryption failures"""


class KeyLengthError(CipherError, ValueError):
    """Raised when key and payload lengths do not match"""


class AuthenticationError(CipherError):
    """Raised when a ciphertext fails authentication"""


class MalformedFrameError(QkdGridError, ValueError):
    """Raised when a datagram is not a valid frame"""


class UnknownEndpointError(QkdGridError, KeyError):
    """Raised when a datagram is addressed to an unregistered endpoint"""


class ScenarioError(QkdGridError, ValueError):
    """Raised for inconsistent scenario definitions"""

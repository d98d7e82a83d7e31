"""
Common validation functions used across the bound, model and training code.

This module contains shared validation logic so that every public operation
rejects bad arguments with the same kind of message.
"""

import math

__all__ = [
    "validate_delta",
    "validate_positive",
    "validate_nonnegative",
    "validate_sample_size",
]


def validate_delta(delta: float, name: str = "delta") -> float:
    """
    Check a confidence parameter lies in the open interval (0, 1).

    Args:
        delta: Confidence parameter
        name: Argument name used in the error message

    Returns:
        The validated value as float

    Raises:
        ValueError: If delta is not in (0, 1)
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"{name} must be in (0, 1), got {delta}")
    return float(delta)


def validate_positive(value: float, name: str) -> float:
    """Raise ValueError unless value is a finite real > 0."""
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return float(value)


def validate_nonnegative(value: float, name: str) -> float:
    """Raise ValueError unless value is a finite real >= 0."""
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be non-negative and finite, got {value}")
    return float(value)


def validate_sample_size(m: int, name: str = "m", minimum: int = 1) -> int:
    """Raise ValueError unless m is an integer >= minimum."""
    if int(m) != m or m < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {m}")
    return int(m)

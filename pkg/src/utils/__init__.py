"""
Shared utility functions for validation and report serialisation.
"""

from src.utils.reporting import (
    check_report_schema,
    config_hash,
    content_hash,
    to_json_text,
    write_json_report,
    write_trajectory_log,
)
from src.utils.validation import (
    validate_delta,
    validate_nonnegative,
    validate_positive,
    validate_sample_size,
)

__all__ = [
    "check_report_schema",
    "content_hash",
    "config_hash",
    "to_json_text",
    "write_json_report",
    "write_trajectory_log",
    "validate_delta",
    "validate_nonnegative",
    "validate_positive",
    "validate_sample_size",
]

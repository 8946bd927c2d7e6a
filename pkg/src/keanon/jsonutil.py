"""Helpers for JSON-serialisable report payloads."""

import numpy as np


def json_ready(obj):
    """Recursively convert numpy scalars and arrays to plain Python types."""
    if isinstance(obj, dict):
        return {k: json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    return obj

"""Stable number formatting for JSON and CSV output."""
from __future__ import annotations

import json

import numpy as np

SIG_DIGITS = 12


def fmt(x: float) -> str:
    """Fixed 12-significant-digit decimal string."""
    return f"{float(x):.{SIG_DIGITS}g}"


def round_sig(obj):
    """Recursively round floats to 12 significant digits (numpy scalars included)."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {str(k): round_sig(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text ending in a single LF."""
    return json.dumps(round_sig(obj), indent=2, ensure_ascii=False) + "\n"

"""Leg morphology layout and bounds.

A morphology is eight floats: (width, height) for the left upper, left lower,
right upper and right lower leg segments, in world meters.
"""

import numpy as np

MORPHOLOGY_LENGTH = 8
MORPHOLOGY_SPREAD = 0.75

SEGMENT_NAMES = ("left_upper", "left_lower", "right_upper", "right_lower")

_SCALE = 30.0
UPPER_LEG = (8.0 / _SCALE, 34.0 / _SCALE)
LOWER_LEG = (6.4 / _SCALE, 34.0 / _SCALE)

BASELINE_MORPHOLOGY = np.array([*UPPER_LEG, *LOWER_LEG, *UPPER_LEG, *LOWER_LEG], dtype=np.float64)
MORPHOLOGY_MIN = (1.0 - MORPHOLOGY_SPREAD) * BASELINE_MORPHOLOGY
MORPHOLOGY_MAX = (1.0 + MORPHOLOGY_SPREAD) * BASELINE_MORPHOLOGY

WIDTH_INDICES = (0, 2, 4, 6)
HEIGHT_INDICES = (1, 3, 5, 7)


def morphology_in_bounds(morphology: np.ndarray, atol: float = 1e-12) -> bool:
    values = np.asarray(morphology, dtype=np.float64)
    return bool(
        values.shape == (MORPHOLOGY_LENGTH,)
        and np.all(values >= MORPHOLOGY_MIN - atol)
        and np.all(values <= MORPHOLOGY_MAX + atol)
    )

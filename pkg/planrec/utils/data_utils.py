from typing import Iterable

import numpy as np


def convert_numpy_types(obj):
    """Convert numpy types to Python native types for JSON serialization"""
    if isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, dict):
        return {key: convert_numpy_types(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_numpy_types(item) for item in obj]
    else:
        return obj


def normalize_weights(weights: Iterable[float]) -> np.ndarray:
    """Scale non-negative weights to sum to 1; an all-zero vector becomes uniform."""
    vector = np.asarray(list(weights), dtype=float)
    if vector.size == 0:
        return vector
    total = vector.sum()
    if total <= 0.0:
        return np.full(vector.size, 1.0 / vector.size)
    return vector / total

"""Counter-based random streams.

Every stream is a Philox generator keyed by a tuple of integers such as
(seed, trial, block), so draws do not depend on execution order.
"""
import numpy as np


def _key(*parts):
    flat = []
    for p in parts:
        if isinstance(p, (tuple, list)):
            flat.extend(int(x) for x in p)
        else:
            flat.append(int(p))
    if any(x < 0 for x in flat):
        raise ValueError(f"stream keys must be non-negative, got {flat}")
    return flat


def stream(*parts) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_key(*parts))))


def complex_gaussian(rng: np.random.Generator, shape, var: float = 1.0):
    """Circular complex Gaussian with E|z|^2 = var."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

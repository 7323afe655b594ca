"""Input validation helpers shared by the public entry points."""

import numpy as np


def check_power_of_two(n, name="length"):
    n = int(n)
    if n < 1 or n & (n - 1):
        raise ValueError(f"{name} must be a power of two, got {n}")
    return n


def log2_int(n):
    return check_power_of_two(n).bit_length() - 1


def check_bits(bits, name="bits", ndim=None):
    """Return ``bits`` as a uint8 array, raising if any entry is not 0/1."""
    arr = np.asarray(bits)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    if arr.dtype == np.uint8:
        bad = arr.size and arr.max() > 1
    else:
        bad = arr.size and not ((arr == 0) | (arr == 1)).all()
    if bad:
        raise ValueError(f"{name} must contain only 0 and 1")
    if ndim is not None and arr.ndim not in np.atleast_1d(ndim):
        raise ValueError(f"{name} must have ndim in {ndim}, got {arr.ndim}")
    return arr.astype(np.uint8, copy=False)


def check_finite(values, name="values"):
    arr = np.asarray(values, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)

"""Derived random streams.

Every randomized stage draws from a generator keyed by (master seed, stage
tag, indices...). Streams never depend on execution order, so adding a stage
or running arms in parallel leaves all other results untouched.
"""
import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part) & 0xFFFFFFFFFFFFFFFF


def derive_seed(master: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([_key(master)] + [_key(k) for k in keys])


def derive_rng(master: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))

"""Deterministic seed derivation and random generator construction.

Every random quantity in this package is a pure function of a 64-bit seed.
Per-replication seeds are derived from a base seed with `mix_seed`, which
chains the public splitmix64 finalizer, so independent streams never share
state and the derivation is reproducible bit-for-bit across processes and
platforms.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# splitmix64 constants (Steele, Lea & Flood; public domain reference values)
_GOLDEN = 0x9E3779B97F4B7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> int:
    """One splitmix64 step: advance `state` by the golden gamma and finalize.

    Operates modulo 2**64. This is the exact published algorithm:

        z = (state + 0x9E3779B97F4B7C15) mod 2**64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
        return z ^ (z >> 31)
    """
    z = (state + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def mix_seed(base_seed: int, *indices: int) -> int:
    """Derive a child seed from `base_seed` and an index path.

    The derivation is `z = splitmix64(z ^ splitmix64(index))` applied left to
    right over `indices`, starting from `z = base_seed mod 2**64`. Distinct
    index paths give (with overwhelming probability) distinct seeds; equal
    paths always give equal seeds.
    """
    z = base_seed & _MASK64
    for ix in indices:
        z = splitmix64(z ^ splitmix64(ix & _MASK64))
    return z


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by a 64-bit seed.

    Philox is counter-based, so streams keyed by distinct seeds never
    overlap and sampling is a pure function of (seed, draw order).
    """
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))

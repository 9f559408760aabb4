"""Shared brute-force oracles, independent of the production code paths."""

import math

import numpy as np
import pytest

from mslln.coefficients import envelope


def naive_path(innov, spec, n, half_width):
    """O(n L) double-loop moving average used as the convolution oracle.

    Index arithmetic is spelled out per output k; the inner reduction is a
    plain dot product over the window, independent of the FFT path.
    """
    innov = np.asarray(innov, dtype=float)
    if innov.ndim == 1:
        innov = innov[:, None]
    d, m = spec.shape
    direction = spec.direction_matrix
    L = half_width
    weights = np.array([envelope(spec, j) for j in range(-L, L + 1)])
    out = np.zeros((n, d))
    for k in range(1, n + 1):
        acc = np.zeros(m)
        for j in range(-L, L + 1):
            # innovation index l = k - j lives at array row l - (1 - L)
            acc += weights[j + L] * innov[k - j - 1 + L]
        out[k - 1] = direction @ acc
    return out


def naive_path_dot(innov, spec, n, half_width):
    """Faster oracle variant: explicit per-k window slice, dot reduction."""
    innov = np.asarray(innov, dtype=float)
    if innov.ndim == 1:
        innov = innov[:, None]
    L = half_width
    direction = spec.direction_matrix
    weights = np.array([envelope(spec, j) for j in range(-L, L + 1)])[::-1]
    out = np.zeros((n, direction.shape[0]))
    for k in range(1, n + 1):
        window = innov[k - 1 : k + 2 * L]  # rows for l = k - L .. k + L
        out[k - 1] = direction @ (weights @ window)
    return out


def fsum_inner(spec, spec_bar, h, half_width):
    """Compensated-summation oracle for the envelope inner product."""
    return math.fsum(
        envelope(spec, l) * envelope(spec_bar, l + h)
        for l in range(-half_width, half_width + 1)
    )


@pytest.fixture(scope="session")
def rng_factory():
    from mslln.seeding import make_rng, mix_seed

    def factory(*path):
        return make_rng(mix_seed(0xC0FFEE, *path))

    return factory

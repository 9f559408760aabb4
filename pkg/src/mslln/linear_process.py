"""Finite paths of (two-sided) moving averages by truncated convolution.

A path of length n built with half-width L consumes innovations indexed
1-L .. n+L, so a stream of length n + 2L exactly covers it:

    x_k = sum_{|j| <= L} envelope(j) * M @ Xi_{k-j},   k = 1..n,

with causal kernels contributing only j >= 0.  The convolution is exact on
the truncated support; the only approximation relative to the infinite sum
is the certified truncation (see ``coefficients.truncation_error``).
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .coefficients import CAUSAL, envelope_array
from .innovations import sample_pair_sequence


@dataclass(frozen=True)
class PathConfig:
    """Paired path request: both paths share one innovation stream."""

    coef: object
    coef_bar: object
    stream: object
    n: int
    half_width: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.half_width < 0:
            raise ValueError(f"half_width must be >= 0, got {self.half_width}")
        need = self.n + 2 * self.half_width
        if self.stream.length < need:
            raise ValueError(
                f"stream too short: need {need} innovations (n + 2L), "
                f"have {self.stream.length}"
            )
        d, m = self.coef.shape
        d_bar, m_bar = self.coef_bar.shape
        if d != d_bar:
            raise ValueError(f"kernel row counts differ: {d} vs {d_bar}")
        if m != self.stream.dim or m_bar != self.stream.dim:
            raise ValueError(
                f"kernel columns ({m}, {m_bar}) must equal stream dim {self.stream.dim}"
            )


def kernel_weights(spec, half_width):
    """Envelope values on offsets -L..L (causal support already zeroed)."""
    return envelope_array(spec, np.arange(-half_width, half_width + 1))


def convolve_scalar(values, weights, n):
    """Valid-mode convolution returning outputs k = 1..n.

    ``values`` holds innovations for indices 1-L .. n+L (length n + 2L) and
    ``weights`` the kernel on offsets -L..L, so output k is
    ``sum_j weights[L+j] * values[L+k-1-j]``.
    """
    values = np.asarray(values, dtype=float)
    half = (len(weights) - 1) // 2
    if len(values) != n + 2 * half:
        raise ValueError(
            f"values length {len(values)} does not match n + 2L = {n + 2 * half}"
        )
    if half == 0:
        return values * weights[0]
    return fftconvolve(values, weights, mode="valid")


def path_from_innovations(innov, spec, n, half_width):
    """Evaluate the truncated moving average of one innovation block.

    ``innov`` has shape (n + 2L, m); the result has shape (n, d) where
    (d, m) is the kernel shape.
    """
    innov = np.asarray(innov, dtype=float)
    if innov.ndim == 1:
        innov = innov[:, None]
    weights = kernel_weights(spec, half_width)
    cols = [convolve_scalar(innov[:, j], weights, n) for j in range(innov.shape[1])]
    conv = np.column_stack(cols)
    return conv @ spec.direction_matrix.T


def generate_pair_paths(config):
    """Generate the paired paths (x_1..x_n, xbar_1..xbar_n).

    The innovation pairing is index-aligned across both paths; identical
    coupling with equal kernels yields the identical array.
    """
    xi, xi_bar = sample_pair_sequence(config.stream)
    need = config.n + 2 * config.half_width
    x = path_from_innovations(xi[:need], config.coef, config.n, config.half_width)
    if xi_bar is xi and config.coef_bar == config.coef:
        return x, x
    x_bar = path_from_innovations(
        xi_bar[:need], config.coef_bar, config.n, config.half_width
    )
    return x, x_bar


def generate_lagged_pair(coef, stream, n, h, half_width):
    """A causal path and its exact h-step shift built from one stream.

    Returns ``(x_1..x_n, x_{1+h}..x_{n+h})``; both slices come from a single
    extended path, so the second output is the shift of the first.
    """
    if coef.sidedness != CAUSAL:
        raise ValueError("lagged pairs require a causal kernel")
    if h < 0:
        raise ValueError(f"lag must be >= 0, got {h}")
    n_ext = n + h
    need = n_ext + 2 * half_width
    if stream.length < need:
        raise ValueError(
            f"stream too short: need {need} innovations (n + h + 2L), "
            f"have {stream.length}"
        )
    xi, _ = sample_pair_sequence(stream)
    ext = path_from_innovations(xi[:need], coef, n_ext, half_width)
    return ext[:n], ext[h : h + n]

"""Outer-product series, dyadic partial-sum ledgers and the window split.

The centered series of interest is sum_{k<=n} (D_k - D) with
D_k = x_k xbar_k^T.  Ledgers record the running sum on the dyadic grid
n_r = 2^r together with the per-block maxima of the max-abs-entry norm,
max over n_r <= n < n_{r+1} of ||S_n||.

``decompose`` materializes, for scalar series, the exact seven-piece
partition of the double sum over innovation indices (l, m) around each k:
the diagonal l = m, the off-diagonal pairs inside the window
[k - T, k + T] with T = n^nu, the pairs entirely above / below the window,
the two mixed zones, and the cross zone.  The pieces sum back to
sum (d_k - d) identically, which is the tested reconstruction contract.
"""

import math
from dataclasses import dataclass

import numpy as np

from .innovations import moment, square_tail_integral
from .linear_process import convolve_scalar, kernel_weights


@dataclass(frozen=True)
class OuterSeries:
    entries: np.ndarray  # (n, d, d)
    source: object = None


def outer_series(x, x_bar):
    """Entrywise outer products D_k = x_k xbar_k^T, shape (n, d, d)."""
    x = np.asarray(x, dtype=float)
    x_bar = np.asarray(x_bar, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x_bar.ndim == 1:
        x_bar = x_bar[:, None]
    if x.shape != x_bar.shape:
        raise ValueError(f"length/shape mismatch: {x.shape} vs {x_bar.shape}")
    return OuterSeries(entries=np.einsum("ki,kj->kij", x, x_bar))


@dataclass(frozen=True)
class AnalyticMean:
    matrix: np.ndarray  # (d, d)
    remainder_bound: float


def analytic_mean(coef, coef_bar, cross_matrix, half_width):
    """Truncated mean D = sum_l C_l E[Xi Xibar^T] Cbar_l^T with tail bound.

    With envelope kernels the sum factorizes into the lag-0 envelope inner
    product times M @ cross @ Mbar^T; the remainder bound scales the inner
    product's certified tail by the largest entry of that matrix factor.
    """
    from .coefficients import coefficient_inner

    inner = coefficient_inner(coef, coef_bar, 0, half_width)
    base = coef.direction_matrix @ np.asarray(cross_matrix, dtype=float) @ coef_bar.direction_matrix.T
    bound = inner.tail_bound * float(np.max(np.abs(base))) if base.size else 0.0
    return AnalyticMean(matrix=inner.value * base, remainder_bound=bound)


@dataclass(frozen=True)
class PartialSumLedger:
    """Centered partial sums on the dyadic grid.

    ``sums[r]`` is S at n_r = 2^r for r = 0..levels; ``block_max[r]`` is
    max_{n_r <= n < n_{r+1}} ||S_n|| (max-abs-entry norm) for r = 0..levels-1.
    """

    levels: int
    checkpoints: np.ndarray  # (levels + 1,)
    sums: np.ndarray  # (levels + 1, d, d)
    block_max: np.ndarray  # (levels,)


def scan_ledger(terms, levels):
    """Single-pass ledger over centered terms of shape (n, d, d)."""
    terms = np.asarray(terms, dtype=float)
    n = terms.shape[0]
    if n < 2**levels:
        raise ValueError(f"need n >= 2^levels = {2**levels}, got {n}")
    cum = np.cumsum(terms, axis=0)
    norms = np.max(np.abs(cum), axis=(1, 2))
    checkpoints = 2 ** np.arange(levels + 1)
    sums = cum[checkpoints - 1]
    block_max = np.empty(levels)
    for r in range(levels):
        block_max[r] = norms[checkpoints[r] - 1 : checkpoints[r + 1] - 1].max()
    return PartialSumLedger(
        levels=levels, checkpoints=checkpoints, sums=sums, block_max=block_max
    )


def centered_ledger(series, mean, levels):
    """Ledger of sum_{k<=n} (D_k - D) at the dyadic checkpoints."""
    entries = series.entries if isinstance(series, OuterSeries) else np.asarray(series)
    return scan_ledger(entries - mean.matrix, levels)


PIECES = (
    "diagonal",
    "in_window_off_diag",
    "far_above",
    "far_below",
    "mixed_above",
    "mixed_below",
    "cross",
)


@dataclass(frozen=True)
class Decomposition:
    """Seven scalar series over k = 1..n partitioning d_k - d exactly.

    ``centering`` records how the analytic mean was apportioned: the
    off-diagonal pieces have exact zero mean (the pair (xi_l, xibar_m) is
    independent with zero means for l != m), so the full truncated mean is
    assigned to the diagonal piece.
    """

    n: int
    nu: float
    window: float
    half_width: int
    pieces: dict
    centering: dict

    def total(self):
        out = np.zeros(self.n)
        for name in PIECES:
            out += self.pieces[name]
        return out


def decompose(xi, xi_bar, coef, coef_bar, n, nu, half_width, cross_mean):
    """Window decomposition of the scalar outer-product series.

    Parameters
    ----------
    xi, xi_bar : arrays of length >= n + 2 * half_width
        The paired scalar innovation sequences (index-aligned).
    coef, coef_bar : CoefficientSpec
        Scalar kernels (shape (1, 1)).
    n : int
        Series length; the window radius is T = n**nu.
    cross_mean : float
        E[xi_1 xibar_1], used to center the diagonal piece.
    """
    if coef.shape != (1, 1) or coef_bar.shape != (1, 1):
        raise ValueError("decompose is defined for scalar kernels (d = m = 1)")
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    xi = np.asarray(xi, dtype=float).reshape(-1)
    xi_bar = np.asarray(xi_bar, dtype=float).reshape(-1)
    need = n + 2 * half_width
    if xi.size < need or xi_bar.size < need:
        raise ValueError(f"need {need} innovations, got {xi.size}, {xi_bar.size}")
    xi = xi[:need]
    xi_bar = xi_bar[:need]

    window = float(n) ** nu
    offsets = np.arange(-half_width, half_width + 1)
    g = kernel_weights(coef, half_width) * coef.direction_matrix[0, 0]
    g_bar = kernel_weights(coef_bar, half_width) * coef_bar.direction_matrix[0, 0]

    # zones on the offset j = k - l: window |j| <= T, above j < -T, below j > T
    above = offsets < -window
    below = offsets > window

    def zone_paths(values, weights):
        full = convolve_scalar(values, weights, n)
        w_above = weights * above
        w_below = weights * below
        a = convolve_scalar(values, w_above, n) if w_above.any() else np.zeros(n)
        b = convolve_scalar(values, w_below, n) if w_below.any() else np.zeros(n)
        return full - a - b, a, b

    x_w, x_a, x_b = zone_paths(xi, g)
    xb_w, xb_a, xb_b = zone_paths(xi_bar, g_bar)

    prod = xi * xi_bar
    gg = g * g_bar
    diag_full = convolve_scalar(prod, gg, n)
    diag_w, diag_a, diag_b = zone_paths(prod, gg)

    mean_trunc = cross_mean * float(np.sum(gg))
    pieces = {
        "diagonal": diag_full - mean_trunc,
        "in_window_off_diag": x_w * xb_w - diag_w,
        "far_above": x_a * xb_a - diag_a,
        "far_below": x_b * xb_b - diag_b,
        "mixed_above": x_w * xb_a + x_a * xb_w,
        "mixed_below": x_w * xb_b + x_b * xb_w,
        "cross": x_a * xb_b + x_b * xb_a,
    }
    return Decomposition(
        n=n,
        nu=nu,
        window=window,
        half_width=half_width,
        pieces=pieces,
        centering={"diagonal": mean_trunc, "in_window_off_diag": 0.0},
    )


@dataclass(frozen=True)
class TruncatedSplit:
    """Zero-mean split of nonnegative products v into bounded + remainder.

    bounded_i = min(v_i, level) - theta with theta = int_0^level P(v > s) ds,
    remainder_i = (v_i - mean) - bounded_i, so bounded + remainder recovers
    the centered values exactly and |bounded| <= level + theta.
    """

    bounded: np.ndarray
    remainder: np.ndarray
    level: float
    theta: float
    theta_abserr: float
    mean: float


def truncated_split(values, level, spec):
    """Split centered squared innovations at truncation level ``level``.

    ``spec`` is the marginal law of xi under identical coupling, so
    v = xi^2 and both theta and the mean are computable (closed form for
    power laws, quadrature otherwise with its error estimate reported).
    """
    if not level > 0:
        raise ValueError(f"truncation level must be positive, got {level}")
    v = np.asarray(values, dtype=float)
    if v.size and v.min() < 0:
        raise ValueError("truncated_split expects nonnegative products")
    theta, err = square_tail_integral(spec, level)
    mean = moment(spec, 2)
    bounded = np.minimum(v, level) - theta
    remainder = (v - mean) - bounded
    return TruncatedSplit(
        bounded=bounded,
        remainder=remainder,
        level=float(level),
        theta=theta,
        theta_abserr=err,
        mean=mean,
    )

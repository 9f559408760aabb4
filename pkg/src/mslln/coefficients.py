"""Polynomially decaying coefficient kernels and their inner products.

A kernel is a scalar envelope times a fixed direction matrix of unit
operator norm:

    C_0 = s * M,    C_l = s * |l|^(-sigma) * M   (l != 0),

with ``sigma`` in (1/2, 1].  The envelope therefore satisfies
``sup_l |l|^sigma * |envelope(l)| = |s|`` exactly, which is the certified
decay contract.  ``causal`` kernels vanish for l < 0.
"""

import math
from dataclasses import dataclass, field

import numpy as np

TWO_SIDED = "two_sided"
CAUSAL = "causal"
SIDEDNESS = (TWO_SIDED, CAUSAL)

#: Hard cap for automatically chosen half-widths (2**24 envelope entries
#: per side is ~128 MiB of float64 scratch in the convolution).
DEFAULT_HALF_WIDTH_CAP = 2**24


class CapExceededError(ValueError):
    """Raised when the requested truncation tolerance needs a half-width
    beyond the configured cap."""

    def __init__(self, message, cap):
        super().__init__(message)
        self.cap = cap


@dataclass(frozen=True)
class CoefficientSpec:
    """Envelope kernel description.

    ``direction`` must have unit operator norm; use :meth:`with_direction`
    to build a spec from an arbitrary matrix (its norm is folded into the
    scale, leaving the kernel unchanged).  ``half_width`` is the default
    truncation half-width used when generating paths; operations that take
    an explicit half-width ignore it.
    """

    sigma: float
    sidedness: str = TWO_SIDED
    scale: float = 1.0
    direction: tuple = ((1.0,),)
    half_width: int | None = None

    def __post_init__(self):
        if not (0.5 < self.sigma <= 1.0):
            raise ValueError(f"sigma must lie in (1/2, 1], got {self.sigma}")
        if self.sidedness not in SIDEDNESS:
            raise ValueError(f"sidedness must be one of {SIDEDNESS}")
        if not (math.isfinite(self.scale) and self.scale != 0):
            raise ValueError(f"scale must be finite and nonzero, got {self.scale}")
        m = np.asarray(self.direction, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("direction must be a nonempty 2-d matrix")
        nrm = np.linalg.norm(m, 2)
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(
                f"direction must have unit operator norm (got {nrm}); "
                "use CoefficientSpec.with_direction to normalize"
            )
        if self.half_width is not None and self.half_width < 0:
            raise ValueError(f"half_width must be nonnegative, got {self.half_width}")

    @classmethod
    def with_direction(cls, sigma, sidedness, scale, matrix, half_width=None):
        """Build a spec from an arbitrary direction matrix.

        The matrix operator norm is folded into the scale, so the kernel
        ``envelope(l) * direction`` is exactly ``scale * |l|^-sigma * matrix``.
        """
        m = np.asarray(matrix, dtype=float)
        nrm = np.linalg.norm(m, 2)
        if nrm == 0:
            raise ValueError("direction matrix must be nonzero")
        return cls(
            sigma=sigma,
            sidedness=sidedness,
            scale=scale * nrm,
            direction=tuple(tuple(row) for row in m / nrm),
            half_width=half_width,
        )

    @property
    def shape(self):
        """(rows d, columns m) of the kernel matrices."""
        return len(self.direction), len(self.direction[0])

    @property
    def direction_matrix(self):
        return np.asarray(self.direction, dtype=float)


def envelope(spec, l):
    """Scalar envelope value at integer offset l (0 outside causal support)."""
    if spec.sidedness == CAUSAL and l < 0:
        return 0.0
    if l == 0:
        return spec.scale
    return spec.scale * abs(l) ** (-spec.sigma)


def envelope_array(spec, offsets):
    """Vectorized envelope over an integer offset array."""
    ls = np.asarray(offsets)
    out = np.empty(ls.shape, dtype=float)
    nz = ls != 0
    out[~nz] = spec.scale
    out[nz] = spec.scale * np.abs(ls[nz]).astype(float) ** (-spec.sigma)
    if spec.sidedness == CAUSAL:
        out[ls < 0] = 0.0
    return out


def _sides(spec):
    return 2.0 if spec.sidedness == TWO_SIDED else 1.0


def truncation_error(spec, half_width):
    """Upper bound on sum_{|l| > half_width} envelope(l)^2.

    Integral comparison: the tail of ``|l|^(-2 sigma)`` beyond L is at most
    ``L^(1 - 2 sigma) / (2 sigma - 1)`` per side, and the envelope is
    exactly ``|s| |l|^(-sigma)``, so the bound dominates the true tail sum.
    """
    if half_width < 1:
        raise ValueError(f"half_width must be >= 1, got {half_width}")
    s2 = spec.scale**2
    return s2 * _sides(spec) * half_width ** (1.0 - 2.0 * spec.sigma) / (2.0 * spec.sigma - 1.0)


def choose_half_width(spec, tol, cap=DEFAULT_HALF_WIDTH_CAP):
    """Smallest power-of-two half-width whose truncation error is <= tol**2."""
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    target = tol * tol
    half_width = 1
    while truncation_error(spec, half_width) > target:
        half_width *= 2
        if half_width > cap:
            raise CapExceededError(
                f"half-width cap exceeded: tolerance {tol} needs more than "
                f"{cap} coefficients per side (sigma={spec.sigma})",
                cap=cap,
            )
    return half_width


def _square_sum_bound(spec):
    # envelope(0)^2 + per-side bound on sum_{l>=1} l^(-2 sigma)
    s2 = spec.scale**2
    per_side = 2.0 * spec.sigma / (2.0 * spec.sigma - 1.0)
    return s2 * (1.0 + _sides(spec) * per_side)


@dataclass(frozen=True)
class InnerProduct:
    value: float
    tail_bound: float


def coefficient_inner(spec, spec_bar, h, half_width):
    """Truncated lag-h envelope inner product sum_l env(l) * env_bar(l + h).

    The sum runs over l in [-half_width, half_width] (restricted to each
    kernel's own support); the companion ``tail_bound`` dominates the
    discarded mass by Cauchy-Schwarz across the two envelope tails.
    """
    if half_width < abs(h):
        raise ValueError(f"half_width {half_width} must be >= |h| = {abs(h)}")
    ls = np.arange(-half_width, half_width + 1)
    value = float(np.dot(envelope_array(spec, ls), envelope_array(spec_bar, ls + h)))
    shifted = half_width - abs(h)
    if shifted >= 1:
        bar_tail = truncation_error(spec_bar, shifted)
    else:
        bar_tail = _square_sum_bound(spec_bar)
    tail = math.sqrt(truncation_error(spec, half_width) * bar_tail) if half_width >= 1 else math.sqrt(
        _square_sum_bound(spec) * bar_tail
    )
    return InnerProduct(value=value, tail_bound=tail)

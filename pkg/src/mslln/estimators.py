"""Growth-exponent arithmetic, empirical rate fits and the two applications.

The critical partial-sum growth exponent for the centered outer-product
series is

    e* = max(2 - sigma - sigma_bar, 1/alpha, 1/2),

the reciprocal of the critical strong-law exponent p* = 1/e*: normalized
partial sums n^(-1/p) S_n vanish almost surely for every p < p* and fail to
for p > p*.  The regime label records which mechanism is binding; the
long-memory and heavy-tail constraints act separately (the worse one wins),
and the label switches on the surface alpha = 1/(2 - sigma - sigma_bar).
"""

import math
from dataclasses import dataclass

import numpy as np

from .partial_sums import scan_ledger

LRD_DOMINANT = "lrd_dominant"
HT_DOMINANT = "ht_dominant"
CLT = "clt"
BIFURCATION = "bifurcation"

_BIFURCATION_TOL = 1e-9
#: Grid points this close to the bifurcation surface are flagged in reports
#: because logarithmic corrections can bias finite-sample slopes there.
NEAR_BIFURCATION_MARGIN = 0.05


@dataclass(frozen=True)
class TheoreticalRate:
    exponent: float  # e* in [1/2, 1)
    regime: str
    p_star: float
    near_bifurcation: bool


def theoretical_exponent(sigma, sigma_bar, alpha):
    """Critical growth exponent and regime for (sigma, sigma_bar, alpha).

    ``alpha`` is the product tail exponent; pass ``math.inf`` for
    light-tailed products (the heavy-tail constraint then degenerates and
    the 1/2 floor plays its role).
    """
    for name, s in (("sigma", sigma), ("sigma_bar", sigma_bar)):
        if not (0.5 < s <= 1.0):
            raise ValueError(f"{name} must lie in (1/2, 1], got {s}")
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    lrd = 2.0 - sigma - sigma_bar
    ht = 0.0 if math.isinf(alpha) else 1.0 / alpha
    exponent = max(lrd, ht, 0.5)
    tied = (not math.isinf(alpha)) and abs(ht - lrd) <= _BIFURCATION_TOL
    if tied and alpha < 2.0 - _BIFURCATION_TOL:
        regime = BIFURCATION
    elif exponent <= 0.5 + 1e-12:
        regime = CLT
    elif lrd > ht:
        regime = LRD_DOMINANT
    else:
        regime = HT_DOMINANT
    near = (not math.isinf(alpha)) and alpha < 2.0 and abs(ht - lrd) < NEAR_BIFURCATION_MARGIN
    return TheoreticalRate(
        exponent=exponent, regime=regime, p_star=1.0 / exponent, near_bifurcation=near
    )


def fit_loglog_slope(levels, log_values):
    """Ordinary least squares slope of log-values against dyadic level.

    Returns (slope, stderr); stderr is the usual OLS residual-based
    standard error (nan with fewer than 3 points).
    """
    r = np.asarray(levels, dtype=float)
    y = np.asarray(log_values, dtype=float)
    if r.size != y.size or r.size < 2:
        raise ValueError("need at least two (level, value) pairs")
    r_c = r - r.mean()
    sxx = float(np.dot(r_c, r_c))
    if sxx == 0:
        raise ValueError("levels are all equal")
    slope = float(np.dot(r_c, y)) / sxx
    if r.size < 3:
        return slope, math.nan
    resid = y - (y.mean() + slope * r_c)
    s2 = float(np.dot(resid, resid)) / (r.size - 2)
    return slope, math.sqrt(s2 / sxx)


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    stderr: float
    r_lo: int
    r_hi: int
    aggregation: str = "median"


def default_fit_range(levels):
    """Default dyadic fit window [max(8, R-8), R-1]: drops small-n transients.

    For short grids (R < 12) the lower end is clamped so the window still
    spans four levels.
    """
    lo = max(8, levels - 8)
    return max(0, min(lo, levels - 4)), levels - 1


def empirical_exponent(ledgers, r_lo=None, r_hi=None, min_replications=32):
    """Fitted growth exponent of the median block maxima across replications.

    The slope of log2(median over replications of M_r) against r is the
    empirical counterpart of the almost-sure growth exponent; medians are
    used because the block maxima can have infinite variance.
    """
    if len(ledgers) < min_replications:
        raise ValueError(f"need at least {min_replications} replications, got {len(ledgers)}")
    levels = ledgers[0].levels
    if any(led.levels != levels for led in ledgers):
        raise ValueError("all ledgers must share the same number of levels")
    if r_lo is None or r_hi is None:
        lo, hi = default_fit_range(levels)
        r_lo = lo if r_lo is None else r_lo
        r_hi = hi if r_hi is None else r_hi
    if not (0 <= r_lo < r_hi <= levels - 1):
        raise ValueError(f"fit range [{r_lo}, {r_hi}] out of bounds for {levels} levels")
    if r_hi - r_lo + 1 < 4:
        raise ValueError("fit range must span at least 4 dyadic levels")
    maxima = np.stack([led.block_max for led in ledgers])  # (reps, levels)
    medians = np.median(maxima[:, r_lo : r_hi + 1], axis=0)
    if np.any(medians == 0):
        raise ValueError("degenerate ledger: zero median block maximum in fit range")
    slope, stderr = fit_loglog_slope(np.arange(r_lo, r_hi + 1), np.log2(medians))
    return RateEstimate(slope=slope, stderr=stderr, r_lo=int(r_lo), r_hi=int(r_hi))


@dataclass(frozen=True)
class AutocovPair:
    """Sample autocovariance of one lag with running dyadic deviations."""

    lag: int
    gamma_hat: float
    gamma_pop: float
    levels: int
    checkpoints: np.ndarray
    gamma_hat_at: np.ndarray
    deviations: np.ndarray


def autocov_pair(path, n, h, gamma_pop):
    """gamma_hat_h over the prefix of length n plus checkpoint deviations.

    ``path`` must extend to length n + h; ``gamma_pop`` is the (truncated)
    population autocovariance the deviations are measured against, so the
    comparison is bias-free with respect to kernel truncation.
    """
    if h < 0:
        raise ValueError(f"lag must be >= 0, got {h}")
    x = np.asarray(path, dtype=float).reshape(-1)
    if x.size < n + h:
        raise ValueError(f"path length {x.size} < n + h = {n + h}")
    prods = x[:n] * x[h : h + n]
    cum = np.cumsum(prods)
    levels = int(math.floor(math.log2(n)))
    checkpoints = 2 ** np.arange(levels + 1)
    gamma_hat_at = cum[checkpoints - 1] / checkpoints
    return AutocovPair(
        lag=int(h),
        gamma_hat=float(cum[-1] / n),
        gamma_pop=float(gamma_pop),
        levels=levels,
        checkpoints=checkpoints,
        gamma_hat_at=gamma_hat_at,
        deviations=gamma_hat_at - gamma_pop,
    )


def normalized_deviation(n, p, gamma_hat, gamma_pop, p_max=None):
    """Scaled deviations n^(1 - 1/p) (gamma_hat - gamma_pop).

    Returns ``(values, admissible)``.  When ``p_max`` (the critical
    exponent min(1/(2 - 2 sigma), alpha, 2)) is supplied and p >= p_max the
    values are still computed but labeled inadmissible (admissible=False);
    without ``p_max`` the label is None.
    """
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    n = np.asarray(n, dtype=float)
    values = n ** (1.0 - 1.0 / p) * (np.asarray(gamma_hat, dtype=float) - gamma_pop)
    admissible = None if p_max is None else bool(p < p_max)
    return values, admissible


def appell2_sums(x, mu2, levels):
    """Dyadic ledger of the centered quadratic sums sum_{k<=n} (x_k^2 - mu2).

    x_k^2 - mu2 is the rank-2 Appell polynomial of the marginal law when
    mu2 = E[x_1^2], and coincides with the outer-product series of the path
    with itself at lag 0; the equality is asserted in tests, not assumed.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    terms = (x * x - mu2)[:, None, None]
    return scan_ledger(terms, levels)


def median_of_means(values, n_blocks=32):
    """Median of block means with a robust pseudo-standard-error.

    Splits ``values`` into ``n_blocks`` contiguous equal blocks (dropping
    any remainder), takes the median of the block means, and reports
    1.4826 * MAD(block means) / sqrt(n_blocks) as a pseudo-standard-error
    (exact calibration only under near-normal block means; documented as a
    heuristic scale for heavy-tailed aggregation).
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if n_blocks < 2 or v.size < n_blocks:
        raise ValueError("need at least n_blocks values")
    block = v.size // n_blocks
    means = v[: block * n_blocks].reshape(n_blocks, block).mean(axis=1)
    med = float(np.median(means))
    mad = float(np.median(np.abs(means - med)))
    return med, 1.4826 * mad / math.sqrt(n_blocks)


def heavy_tail_witness(values, levels):
    """Max-to-sum ratios of squared values on the dyadic grid.

    For a finite-variance sequence the ratio max v_k^2 / sum v_k^2 over a
    prefix tends to zero; infinite-variance prefixes keep it of order one
    (up to logarithms).  Used as the finite-second-moment stability check
    in tail-segregation reports.
    """
    v = np.asarray(values, dtype=float).reshape(-1) ** 2
    if v.size < 2**levels:
        raise ValueError(f"need at least 2^levels = {2**levels} values")
    running_max = np.maximum.accumulate(v)
    running_sum = np.cumsum(v)
    checkpoints = 2 ** np.arange(levels + 1) - 1
    return running_max[checkpoints] / running_sum[checkpoints]

"""Stochastic approximation on jointly generated linear-model streams.

The regressors and observations form one (d+1)-row moving average of a
single innovation stream: row block 1..d is z_k, row d+1 is y_{k+1}.  The
recursion

    h_{k+1} = h_k + mu_k (b_k - A_k h_k),   mu_k = k^(-chi),
    A_k = z_k z_k^T,  b_k = y_{k+1} z_k,

estimates h* = A^{-1} b with A = E[z z^T], b = E[y z].  The guaranteed
almost-sure decay exponent is gamma0 = min(chi - 1/alpha, chi + 2 sigma - 2)
where alpha is the tail exponent of |Xi|^2; light-tailed runs use the 1/2
sentinel in place of 1/alpha and are sanity baselines only.
"""

import math
from dataclasses import dataclass

import numpy as np

from .estimators import fit_loglog_slope
from .innovations import IDENTICAL, InnovationStream, sample_pair_sequence
from .linear_process import path_from_innovations

#: Iterates beyond this norm abort the run (divergence guard).
DIVERGENCE_NORM = 1e12

_CONDITION_CAP = 1e8


@dataclass(frozen=True)
class SATarget:
    a_matrix: np.ndarray  # (d, d)
    b: np.ndarray  # (d,)
    h_star: np.ndarray  # (d,)


def sa_target(joint_coef, cross_matrix, half_width):
    """Analytic A, b and h* = A^{-1} b from the joint (d+1)-row kernel.

    A is the top-left d x d block and b the last column's top d entries of
    the joint second-moment matrix; condition numbers above 1e8 raise an
    ill-posed-target error.
    """
    from .partial_sums import analytic_mean

    rows, _ = joint_coef.shape
    if rows < 2:
        raise ValueError("joint kernel needs at least 2 rows (d >= 1 plus the y row)")
    d = rows - 1
    mean = analytic_mean(joint_coef, joint_coef, cross_matrix, half_width).matrix
    a_matrix = mean[:d, :d]
    b = mean[:d, d]
    eigvals = np.linalg.eigvalsh((a_matrix + a_matrix.T) / 2.0)
    if eigvals.min() <= 0:
        raise ValueError("ill-posed target: E[z z^T] is not positive definite")
    cond = eigvals.max() / eigvals.min()
    if cond > _CONDITION_CAP:
        raise ValueError(f"ill-posed target: condition number {cond:.3g} exceeds 1e8")
    return SATarget(a_matrix=a_matrix, b=b, h_star=np.linalg.solve(a_matrix, b))


@dataclass(frozen=True)
class SARate:
    gamma0: float
    guaranteed: bool  # False means "no rate guaranteed" (gamma0 <= 0)


def sa_theoretical_rate(chi, sigma, alpha):
    """Guaranteed decay exponent gamma0 = min(chi - 1/alpha, chi + 2 sigma - 2)."""
    if not (0.5 < chi <= 1.0):
        raise ValueError(f"chi must lie in (1/2, 1], got {chi}")
    if not (0.5 < sigma <= 1.0):
        raise ValueError(f"sigma must lie in (1/2, 1], got {sigma}")
    if math.isinf(alpha):
        inv_alpha = 0.5  # light-tail sentinel baseline
    elif 1.0 < alpha <= 2.0:
        inv_alpha = 1.0 / alpha
    else:
        raise ValueError(f"alpha must lie in (1, 2] or be inf, got {alpha}")
    gamma0 = min(chi - inv_alpha, chi + 2.0 * sigma - 2.0)
    return SARate(gamma0=gamma0, guaranteed=gamma0 > 0)


@dataclass(frozen=True)
class SAConfig:
    """One stochastic-approximation run on a jointly generated stream."""

    chi: float
    joint_coef: object  # CoefficientSpec with d+1 rows
    spec: object  # innovation marginal; the joint stream couples it with itself
    levels: int
    seed: int
    half_width: int
    h0: tuple = None  # defaults to the zero vector

    def __post_init__(self):
        if not (0.5 < self.chi <= 1.0):
            raise ValueError(f"chi must lie in (1/2, 1], got {self.chi}")
        rows, _ = self.joint_coef.shape
        if rows < 2:
            raise ValueError("joint kernel needs at least 2 rows")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.half_width < 0:
            raise ValueError(f"half_width must be >= 0, got {self.half_width}")
        if self.h0 is not None and len(self.h0) != rows - 1:
            raise ValueError(f"h0 must have length d = {rows - 1}")

    @property
    def dim(self):
        return self.joint_coef.shape[0] - 1


@dataclass(frozen=True)
class SATrace:
    """Errors |h - h*| recorded at the dyadic checkpoints.

    ``errors[r]`` is the Euclidean error of the iterate produced after
    n_r = 2^r updates.  Runs whose iterate norm exceeds the divergence
    guard are flagged aborted, with nan errors past the abort step.
    """

    checkpoints: np.ndarray
    errors: np.ndarray
    h_final: np.ndarray
    h_star: np.ndarray
    aborted: bool
    abort_step: int | None


def sa_iterate(config, target=None):
    """Run the recursion and record checkpoint errors against h*.

    ``target`` may be passed to reuse a precomputed :func:`sa_target`
    (it is validated against the config's kernel dimensions).
    """
    from .innovations import cross_moment_matrix

    d = config.dim
    m = config.joint_coef.shape[1]
    if target is None:
        cross = cross_moment_matrix(config.spec, config.spec, IDENTICAL, m)
        target = sa_target(config.joint_coef, cross, config.half_width)
    if target.h_star.shape != (d,):
        raise ValueError("target dimension does not match the joint kernel")

    n = 2**config.levels
    stream = InnovationStream(
        spec=config.spec,
        spec_bar=config.spec,
        coupling=IDENTICAL,
        seed=config.seed,
        length=n + 2 * config.half_width,
        dim=m,
    )
    xi, _ = sample_pair_sequence(stream)
    path = path_from_innovations(xi, config.joint_coef, n, config.half_width)
    z = path[:, :d]
    y = path[:, d]

    h_star = target.h_star
    h = np.zeros(d) if config.h0 is None else np.asarray(config.h0, dtype=float).copy()
    checkpoints = 2 ** np.arange(config.levels + 1)
    errors = np.full(config.levels + 1, np.nan)
    aborted = False
    abort_step = None

    if d == 1:
        zs = z[:, 0].tolist()
        ys = y.tolist()
        hs = float(h[0])
        hstar = float(h_star[0])
        next_cp = 0
        for k in range(1, n + 1):
            zk = zs[k - 1]
            hs += k**-config.chi * zk * (ys[k - 1] - zk * hs)
            if abs(hs) > DIVERGENCE_NORM:
                aborted = True
                abort_step = k
                break
            if k == checkpoints[next_cp]:
                errors[next_cp] = abs(hs - hstar)
                next_cp += 1
        h = np.array([hs])
    else:
        next_cp = 0
        for k in range(1, n + 1):
            zk = z[k - 1]
            h += k**-config.chi * (y[k - 1] - zk @ h) * zk
            if np.linalg.norm(h) > DIVERGENCE_NORM:
                aborted = True
                abort_step = k
                break
            if k == checkpoints[next_cp]:
                errors[next_cp] = float(np.linalg.norm(h - h_star))
                next_cp += 1

    return SATrace(
        checkpoints=checkpoints,
        errors=errors,
        h_final=h,
        h_star=np.asarray(h_star, dtype=float),
        aborted=aborted,
        abort_step=abort_step,
    )


def sa_decay_exponent(traces, top_levels=5):
    """Fitted decay exponent of the median checkpoint error.

    Fits log2(median over traces of |h - h*| at n_r) against r on the top
    ``top_levels`` checkpoints and returns (gamma_hat, stderr); gamma_hat
    is minus the slope.
    """
    if not traces:
        raise ValueError("need at least one trace")
    levels = traces[0].errors.size - 1
    errs = np.stack([t.errors for t in traces])
    if np.isnan(errs).any():
        raise ValueError("aborted traces present; filter them before fitting")
    r_lo = levels - top_levels + 1
    if r_lo < 0:
        raise ValueError(f"not enough levels for top_levels={top_levels}")
    med = np.median(errs[:, r_lo:], axis=0)
    if np.any(med == 0):
        raise ValueError("degenerate error trace: zero median error")
    slope, stderr = fit_loglog_slope(np.arange(r_lo, levels + 1), np.log2(med))
    return -slope, stderr

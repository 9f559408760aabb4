"""Monte Carlo laboratory for strong-law convergence rates of heavy-tailed,
long-memory linear processes and their outer-product series."""

__version__ = "0.1.0"

from .coefficients import (
    CAUSAL,
    TWO_SIDED,
    CapExceededError,
    CoefficientSpec,
    choose_half_width,
    coefficient_inner,
    envelope,
    truncation_error,
)
from .estimators import (
    AutocovPair,
    RateEstimate,
    TheoreticalRate,
    appell2_sums,
    autocov_pair,
    empirical_exponent,
    heavy_tail_witness,
    median_of_means,
    normalized_deviation,
    theoretical_exponent,
)
from .innovations import (
    IDENTICAL,
    INDEPENDENT,
    LIGHT_TAIL,
    FoldedTSymmetric,
    Gaussian,
    InnovationStream,
    PowerLawSymmetric,
    ProductTail,
    cross_moment,
    cross_moment_matrix,
    hill_tail_index,
    moment,
    product_tail_alpha,
    sample_pair_sequence,
)
from .linear_process import (
    PathConfig,
    generate_lagged_pair,
    generate_pair_paths,
    path_from_innovations,
)
from .partial_sums import (
    AnalyticMean,
    Decomposition,
    OuterSeries,
    PartialSumLedger,
    analytic_mean,
    centered_ledger,
    decompose,
    outer_series,
    scan_ledger,
    truncated_split,
)
from .seeding import make_rng, mix_seed, splitmix64
from .stochastic_approx import (
    SAConfig,
    SARate,
    SATarget,
    SATrace,
    sa_decay_exponent,
    sa_iterate,
    sa_target,
    sa_theoretical_rate,
)

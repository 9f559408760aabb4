import math

import numpy as np
import pytest
from scipy import integrate, stats

from mslln.innovations import (
    IDENTICAL,
    INDEPENDENT,
    LIGHT_TAIL,
    FoldedTSymmetric,
    Gaussian,
    InnovationStream,
    PowerLawSymmetric,
    cross_moment,
    cross_moment_matrix,
    hill_tail_index,
    moment,
    product_tail_alpha,
    sample_pair_sequence,
    square_survival,
    square_tail_integral,
)
from mslln.seeding import make_rng, mix_seed


def stream(spec, spec_bar, coupling, seed, length, dim=1):
    return InnovationStream(spec, spec_bar, coupling, seed=seed, length=length, dim=dim)


# ---------------------------------------------------------------- validation

@pytest.mark.parametrize(
    "ctor",
    [
        lambda: PowerLawSymmetric(0.0, 5.0),
        lambda: PowerLawSymmetric(-1.0, 5.0),
        lambda: PowerLawSymmetric(1.0, 3.0),
        lambda: FoldedTSymmetric(2.5),
        lambda: Gaussian(0.0),
    ],
)
def test_invalid_specs_rejected(ctor):
    with pytest.raises(ValueError):
        ctor()


def test_identical_coupling_requires_equal_specs():
    with pytest.raises(ValueError):
        stream(PowerLawSymmetric(1, 5), PowerLawSymmetric(1, 4), IDENTICAL, 0, 10)
    with pytest.raises(ValueError):
        stream(Gaussian(1.0), Gaussian(1.0), "sideways", 0, 10)


# ------------------------------------------------------------------ sampling

def test_identical_coupling_pairs_equal():
    st = stream(Gaussian(1.0), Gaussian(1.0), IDENTICAL, seed=11, length=1000)
    xi, xi_bar = sample_pair_sequence(st)
    assert np.array_equal(xi, xi_bar)


def test_determinism_bitwise():
    spec = PowerLawSymmetric(1.0, 5.0)
    a = sample_pair_sequence(stream(spec, spec, IDENTICAL, 99, 4096, dim=2))[0]
    b = sample_pair_sequence(stream(spec, spec, IDENTICAL, 99, 4096, dim=2))[0]
    c = sample_pair_sequence(stream(spec, spec, IDENTICAL, 98, 4096, dim=2))[0]
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_independent_coupling_pairs_differ_but_reproduce():
    spec = PowerLawSymmetric(1.0, 5.0)
    other = PowerLawSymmetric(1.0, 7.0)
    xi, xi_bar = sample_pair_sequence(stream(spec, other, INDEPENDENT, 3, 2000))
    assert not np.array_equal(xi, xi_bar)
    xi2, xi_bar2 = sample_pair_sequence(stream(spec, other, INDEPENDENT, 3, 2000))
    assert np.array_equal(xi_bar, xi_bar2)


def test_power_law_empirical_mean_and_second_moment():
    spec = PowerLawSymmetric(1.0, 5.0)
    xi, _ = sample_pair_sequence(stream(spec, spec, IDENTICAL, 101, 10**6))
    x = xi[:, 0]
    assert abs(x.mean()) <= 4.0 * x.std() / 1e3
    assert abs(np.mean(x**2) - 2.0) / 2.0 < 0.05


@pytest.mark.parametrize("spec", [PowerLawSymmetric(1.0, 5.0), FoldedTSymmetric(5.0)])
def test_sign_symmetry_ks(spec):
    xi, _ = sample_pair_sequence(stream(spec, spec, IDENTICAL, 8, 10**5))
    x = xi[:, 0]
    ks = stats.ks_2samp(x, -x).statistic
    assert ks < 1.628 * math.sqrt(2.0 / 10**5)  # 1% critical value


@pytest.mark.parametrize("spec", [PowerLawSymmetric(1.0, 5.0), FoldedTSymmetric(5.0)])
def test_moment_consistency_five_ses(spec):
    xi, _ = sample_pair_sequence(stream(spec, spec, IDENTICAL, 7, 10**6))
    x = np.abs(xi[:, 0])
    for r in (1.0, 2.0, min(2.5, spec.beta - 1.5)):
        vals = x**r
        se = vals.std() / math.sqrt(vals.size)
        assert abs(vals.mean() - moment(spec, r)) <= 5.0 * se


# ------------------------------------------------------------------- moments

def test_power_law_moment_examples():
    assert moment(PowerLawSymmetric(1, 5), 2) == pytest.approx(2.0, abs=1e-12)
    assert moment(PowerLawSymmetric(2, 4), 1) == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(ValueError, match="moment does not exist"):
        moment(PowerLawSymmetric(1, 5), 4)
    with pytest.raises(ValueError, match="moment does not exist"):
        moment(FoldedTSymmetric(5), 4.5)


def test_folded_t_moment_matches_closed_form():
    # independent oracle: E|T_nu|^r = nu^(r/2) G((r+1)/2) G((nu-r)/2) / (sqrt(pi) G(nu/2))
    for beta, r in [(5.0, 2.0), (5.0, 1.0), (4.2, 2.5), (6.0, 3.3)]:
        nu = beta - 1.0
        closed = (
            nu ** (r / 2.0)
            * math.gamma((r + 1.0) / 2.0)
            * math.gamma((nu - r) / 2.0)
            / (math.sqrt(math.pi) * math.gamma(nu / 2.0))
        )
        assert moment(FoldedTSymmetric(beta), r) == pytest.approx(closed, rel=1e-8)


def test_gaussian_moment_matches_quadrature():
    spec = Gaussian(2.5)
    for r in (1.0, 2.0, 3.7):
        oracle, _ = integrate.quad(
            lambda x: x**r * stats.norm.pdf(x, scale=math.sqrt(2.5)) * 2.0, 0, np.inf
        )
        assert moment(spec, r) == pytest.approx(oracle, rel=1e-8)
    assert moment(spec, 2) == pytest.approx(2.5, rel=1e-12)


def test_cross_moment():
    spec = PowerLawSymmetric(1.0, 5.0)
    assert cross_moment(spec, spec, IDENTICAL) == pytest.approx(2.0)
    assert cross_moment(spec, PowerLawSymmetric(1, 7), INDEPENDENT) == 0.0
    m = cross_moment_matrix(spec, spec, IDENTICAL, 3)
    assert np.allclose(m, 2.0 * np.eye(3))


# --------------------------------------------------------------- product tail

def test_product_tail_identical_power_law_with_empirical_witness():
    spec = PowerLawSymmetric(1.0, 5.0)
    pt = product_tail_alpha(spec, spec, IDENTICAL)
    assert pt.alpha == pytest.approx(2.0)
    assert not pt.conservative
    # brute-force check: t^2 * P(xi^2 > t) is flat near 1 for t in {10, 100}
    xi, xi_bar = sample_pair_sequence(stream(spec, spec, IDENTICAL, 55, 10**6))
    prod = np.abs(xi[:, 0] * xi_bar[:, 0])
    for t in (10.0, 100.0):
        assert 0.5 < t**pt.alpha * np.mean(prod > t) < 2.0


def test_product_tail_light():
    pt = product_tail_alpha(Gaussian(1.0), Gaussian(1.0), IDENTICAL)
    assert pt.alpha == LIGHT_TAIL


def test_product_tail_independent_conservative_with_slope_oracle():
    s1, s2 = PowerLawSymmetric(1.0, 4.6), PowerLawSymmetric(1.0, 7.0)
    pt = product_tail_alpha(s1, s2, INDEPENDENT)
    assert pt.alpha == pytest.approx(3.6)
    assert pt.conservative
    # empirical survival slope of |xi xibar| over the top quantiles
    xi, xi_bar = sample_pair_sequence(stream(s1, s2, INDEPENDENT, 31, 10**7))
    prod = np.abs(xi[:, 0] * xi_bar[:, 0])
    t_grid = np.quantile(prod, [1 - 1e-3, 1 - 1e-4, 1 - 1e-5])
    surv = np.array([(prod > t).mean() for t in t_grid])
    slope = -np.polyfit(np.log(t_grid), np.log(surv), 1)[0]
    assert abs(slope - 3.6) / 3.6 < 0.15


def test_tail_condition_witness_large_sample():
    # sup_t t^2 P(xi^2 > t) finite and of order one across three decades
    spec = PowerLawSymmetric(1.0, 5.0)
    xi, _ = sample_pair_sequence(stream(spec, spec, IDENTICAL, 9, 10**7))
    sq = xi[:, 0] ** 2
    for t in (10.0, 10**1.5, 100.0, 10**2.5, 1000.0):
        assert 0.5 <= t**2 * np.mean(sq > t) <= 2.0


# ---------------------------------------------------------------------- hill

def test_hill_on_identical_product_matches_tail_oracle():
    spec = PowerLawSymmetric(1.0, 5.0)
    xi, xi_bar = sample_pair_sequence(stream(spec, spec, IDENTICAL, 41, 10**6))
    est = hill_tail_index(np.abs(xi[:, 0] * xi_bar[:, 0]), 10**4)
    assert abs(est - 2.0) / 2.0 < 0.15


def test_hill_on_synthetic_pareto():
    rng = make_rng(mix_seed(37))
    u = rng.random(10**6)
    pareto = (1.0 - u) ** (-1.0 / 1.5)  # inverse-CDF oracle, alpha = 1.5
    est = hill_tail_index(pareto, 10**4)
    assert abs(est - 1.5) / 1.5 < 0.10


def test_hill_degenerate_and_validation():
    with pytest.raises(ValueError):
        hill_tail_index(np.ones(1000), 100)
    with pytest.raises(ValueError):
        hill_tail_index(np.arange(1, 1000, dtype=float), 30)  # k < 50
    with pytest.raises(ValueError):
        hill_tail_index(np.arange(1, 60, dtype=float), 59)  # k >= n


# ------------------------------------------------------- square-law helpers

def test_square_tail_integral_power_law_closed_form():
    spec = PowerLawSymmetric(1.0, 5.0)
    theta, err = square_tail_integral(spec, 4.0)
    assert err == 0.0
    assert theta == pytest.approx(1.75, abs=1e-12)  # 1 + int_1^4 s^-2 ds
    # quadrature cross-check of the closed form
    quad, _ = integrate.quad(lambda s: float(square_survival(spec, s)), 0.0, 4.0)
    assert theta == pytest.approx(quad, rel=1e-9)
    # below x_min^2 the integrand is 1
    assert square_tail_integral(spec, 0.5)[0] == pytest.approx(0.5, abs=1e-14)


def test_square_tail_integral_gaussian_quadrature():
    spec = Gaussian(1.0)
    theta, err = square_tail_integral(spec, 10.0)
    # E[min(xi^2, 10)] ~ E[xi^2] = 1 up to the chi-square tail beyond 10
    assert 0.9 < theta < 1.0
    assert err < 1e-6

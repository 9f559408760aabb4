import math

import numpy as np
import pytest
from scipy import integrate

from mslln.coefficients import CAUSAL, CoefficientSpec
from mslln.innovations import (
    IDENTICAL,
    INDEPENDENT,
    Gaussian,
    InnovationStream,
    PowerLawSymmetric,
    cross_moment,
    cross_moment_matrix,
    sample_pair_sequence,
    square_survival,
)
from mslln.linear_process import PathConfig, generate_pair_paths, path_from_innovations
from mslln.partial_sums import (
    AnalyticMean,
    analytic_mean,
    centered_ledger,
    decompose,
    outer_series,
    scan_ledger,
    truncated_split,
)
from mslln.seeding import make_rng, mix_seed


# ------------------------------------------------------------- outer series

def test_outer_scalar_square():
    x = np.array([1.0, -2.0, 3.0])
    series = outer_series(x, x)
    assert np.array_equal(series.entries[:, 0, 0], x**2)


def test_outer_rank_one():
    x = np.array([[1.0, 0.0]])
    x_bar = np.array([[0.0, 1.0]])
    series = outer_series(x, x_bar)
    assert np.array_equal(series.entries[0], [[0.0, 1.0], [0.0, 0.0]])


def test_outer_transpose_identity():
    rng = make_rng(mix_seed(60))
    x = rng.standard_normal((7, 3))
    x_bar = rng.standard_normal((7, 3))
    a = outer_series(x, x_bar).entries
    b = outer_series(x_bar, x).entries
    assert np.allclose(a, np.transpose(b, (0, 2, 1)), rtol=0, atol=0)


def test_outer_length_mismatch():
    with pytest.raises(ValueError):
        outer_series(np.zeros(3), np.zeros(4))


# ------------------------------------------------------------ analytic mean

def test_analytic_mean_delta_kernel_power_law():
    spec = CoefficientSpec(sigma=0.75)
    pl = PowerLawSymmetric(1.0, 5.0)
    cross = cross_moment_matrix(pl, pl, IDENTICAL, 1)
    mean = analytic_mean(spec, spec, cross, 0)
    assert mean.matrix[0, 0] == pytest.approx(2.0, abs=1e-12)


def test_analytic_mean_sigma_one_gaussian():
    spec = CoefficientSpec(sigma=1.0)
    cross = cross_moment_matrix(Gaussian(1.0), Gaussian(1.0), IDENTICAL, 1)
    mean = analytic_mean(spec, spec, cross, 2**20)
    assert mean.matrix[0, 0] == pytest.approx(1 + math.pi**2 / 3, abs=3e-6)
    assert mean.remainder_bound > 0


def test_analytic_mean_independent_zero():
    spec = CoefficientSpec(sigma=0.8)
    pl, pl7 = PowerLawSymmetric(1.0, 5.0), PowerLawSymmetric(1.0, 7.0)
    cross = cross_moment_matrix(pl, pl7, INDEPENDENT, 1)
    assert analytic_mean(spec, spec, cross, 64).matrix[0, 0] == 0.0


def test_mean_correctness_monte_carlo_matrix_case():
    # MC average of D_k within 4 standard errors of the analytic mean
    g = Gaussian(1.0)
    coef = CoefficientSpec.with_direction(0.75, "two_sided", 1.0, [[1.0, 0.2], [0.1, 0.9]])
    half, n, reps = 2**12, 2**14, 256
    cross = cross_moment_matrix(g, g, IDENTICAL, 2)
    target = analytic_mean(coef, coef, cross, half).matrix
    means = np.zeros((reps, 2, 2))
    for rep in range(reps):
        st = InnovationStream(g, g, IDENTICAL, seed=mix_seed(53, 0, rep), length=n + 2 * half, dim=2)
        x, x_bar = generate_pair_paths(PathConfig(coef, coef, st, n, half))
        means[rep] = outer_series(x, x_bar).entries.mean(axis=0)
    se = means.std(axis=0) / math.sqrt(reps)
    assert np.all(np.abs(means.mean(axis=0) - target) <= 4 * se)


# ------------------------------------------------------------------- ledger

def test_ledger_constant_series_is_zero():
    entries = np.full((16, 1, 1), 3.25)
    led = centered_ledger(entries, AnalyticMean(np.array([[3.25]]), 0.0), 4)
    assert np.all(led.sums == 0) and np.all(led.block_max == 0)


def test_ledger_hand_case():
    terms = np.array([1.0, -1.0, 2.0, -2.0])[:, None, None]
    led = scan_ledger(terms, 2)
    assert np.array_equal(led.checkpoints, [1, 2, 4])
    assert np.array_equal(led.sums[:, 0, 0], [1.0, 0.0, 0.0])
    assert np.array_equal(led.block_max, [1.0, 2.0])  # block r covers n_r <= n < n_{r+1}


def test_ledger_additivity_under_concatenation():
    rng = make_rng(mix_seed(61))
    a = rng.standard_normal((64, 1, 1))
    b = rng.standard_normal((64, 1, 1))
    whole = scan_ledger(np.concatenate([a, b]), 7)
    first = scan_ledger(a, 6)
    assert np.array_equal(whole.sums[:7], first.sums)
    assert np.array_equal(whole.block_max[:6], first.block_max)


def test_ledger_norm_bound():
    rng = make_rng(mix_seed(62))
    led = scan_ledger(rng.standard_normal((2**10, 2, 2)), 10)
    for r in range(led.levels):
        s_next = np.max(np.abs(led.sums[r + 1]))
        s_here = np.max(np.abs(led.sums[r]))
        assert s_next <= led.block_max[r] + s_here + 1e-12


def test_ledger_requires_enough_terms():
    with pytest.raises(ValueError):
        scan_ledger(np.zeros((7, 1, 1)), 3)


def test_centered_ledger_matches_scan():
    rng = make_rng(mix_seed(63))
    x = rng.standard_normal((32, 1))
    series = outer_series(x, x)
    mean = AnalyticMean(np.array([[1.0]]), 0.0)
    led = centered_ledger(series, mean, 5)
    ref = scan_ledger(series.entries - 1.0, 5)
    assert np.array_equal(led.sums, ref.sums)
    assert np.array_equal(led.block_max, ref.block_max)


# ------------------------------------------------------------ decomposition

def reconstruction_error(dec, xi, xi_bar, coef, coef_bar, n, half):
    x = path_from_innovations(xi[: n + 2 * half], coef, n, half)[:, 0]
    x_bar = path_from_innovations(xi_bar[: n + 2 * half], coef_bar, n, half)[:, 0]
    direct = np.cumsum(x * x_bar - dec.centering["diagonal"])
    recon = np.cumsum(dec.total())
    scale = np.maximum.reduce([np.abs(direct), np.cumsum(np.abs(x * x_bar)), np.full(n, 1e-30)])
    return np.max(np.abs(recon - direct) / scale)


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.0])
def test_decompose_reconstruction(nu):
    n, half = 2**10, 2**10
    coef = CoefficientSpec(sigma=0.7)
    coef_bar = CoefficientSpec(sigma=0.85)
    pl = PowerLawSymmetric(1.0, 4.6)
    for rep in range(6):
        st = InnovationStream(pl, pl, IDENTICAL, seed=mix_seed(70, rep), length=n + 2 * half, dim=1)
        xi, xi_bar = sample_pair_sequence(st)
        cm = cross_moment(pl, pl, IDENTICAL)
        dec = decompose(xi[:, 0], xi_bar[:, 0], coef, coef_bar, n, nu, half, cm)
        assert reconstruction_error(dec, xi[:, 0], xi_bar[:, 0], coef, coef_bar, n, half) < 1e-10


def test_decompose_independent_coupling_reconstruction():
    n, half = 2**9, 2**9
    coef = CoefficientSpec(sigma=0.6)
    pl, pl7 = PowerLawSymmetric(1.0, 4.6), PowerLawSymmetric(1.0, 7.0)
    st = InnovationStream(pl, pl7, INDEPENDENT, seed=mix_seed(71), length=n + 2 * half, dim=1)
    xi, xi_bar = sample_pair_sequence(st)
    dec = decompose(xi[:, 0], xi_bar[:, 0], coef, coef, n, 0.5, half, 0.0)
    assert reconstruction_error(dec, xi[:, 0], xi_bar[:, 0], coef, coef, n, half) < 1e-10


def test_decompose_delta_kernel_all_off_diagonal_zero():
    n = 256
    coef = CoefficientSpec(sigma=0.75)
    pl = PowerLawSymmetric(1.0, 5.0)
    st = InnovationStream(pl, pl, IDENTICAL, seed=mix_seed(72), length=n, dim=1)
    xi, xi_bar = sample_pair_sequence(st)
    cm = cross_moment(pl, pl, IDENTICAL)
    dec = decompose(xi[:, 0], xi_bar[:, 0], coef, coef, n, 1.0, 0, cm)
    for name, piece in dec.pieces.items():
        if name == "diagonal":
            assert np.allclose(piece, xi[:n, 0] * xi_bar[:n, 0] - cm, rtol=0, atol=0)
        else:
            assert np.all(piece == 0)


def test_decompose_window_swallows_support():
    # T >= L: far and cross pieces vanish identically
    n, half = 2**8, 2**4
    coef = CoefficientSpec(sigma=0.8)
    g = Gaussian(1.0)
    st = InnovationStream(g, g, IDENTICAL, seed=mix_seed(73), length=n + 2 * half, dim=1)
    xi, xi_bar = sample_pair_sequence(st)
    dec = decompose(xi[:, 0], xi_bar[:, 0], coef, coef, n, 1.0, half, 1.0)
    assert dec.window >= half
    for name in ("far_above", "far_below", "mixed_above", "mixed_below", "cross"):
        assert np.all(dec.pieces[name] == 0)


def test_decompose_rejects_matrix_kernels():
    coef = CoefficientSpec.with_direction(0.8, "two_sided", 1.0, [[1.0], [1.0]])
    with pytest.raises(ValueError, match="scalar"):
        decompose(np.zeros(10), np.zeros(10), coef, coef, 4, 1.0, 0, 0.0)


def test_decompose_centering_metadata():
    n, half = 128, 16
    coef = CoefficientSpec(sigma=0.9)
    g = Gaussian(2.0)
    st = InnovationStream(g, g, IDENTICAL, seed=mix_seed(74), length=n + 2 * half, dim=1)
    xi, xi_bar = sample_pair_sequence(st)
    dec = decompose(xi[:, 0], xi_bar[:, 0], coef, coef, n, 1.0, half, 2.0)
    from mslln.coefficients import coefficient_inner

    expected = 2.0 * coefficient_inner(coef, coef, 0, half).value
    assert dec.centering["diagonal"] == pytest.approx(expected, rel=1e-12)
    assert dec.centering["in_window_off_diag"] == 0.0


# ---------------------------------------------------------- truncated split

def test_truncated_split_power_law_theta():
    spec = PowerLawSymmetric(1.0, 5.0)
    v = np.array([0.5, 10.0, 3.0])
    ts = truncated_split(v, 4.0, spec)
    assert ts.theta == pytest.approx(1.75, abs=1e-12)
    assert np.array_equal(ts.bounded + ts.remainder, v - ts.mean)
    assert np.all(np.abs(ts.bounded) <= ts.level + ts.theta + 1e-12)


def test_truncated_split_inactive_truncation():
    spec = PowerLawSymmetric(1.0, 5.0)
    st = InnovationStream(spec, spec, IDENTICAL, seed=mix_seed(75), length=4096, dim=1)
    xi, _ = sample_pair_sequence(st)
    v = xi[:, 0] ** 2
    level = float(v.max()) + 1.0
    ts = truncated_split(v, level, spec)
    # truncation inactive: remainder collapses to the constant mean - theta
    assert np.allclose(ts.remainder, ts.theta - ts.mean, rtol=0, atol=1e-12)
    assert np.allclose(ts.bounded, v - ts.theta, rtol=0, atol=0)
    # theta(u) -> mean as u -> inf
    assert 0 < ts.mean - ts.theta < 0.05


def test_truncated_split_second_moment_schedule():
    # truncation at u_r = n_r^(1/p) keeps E[bounded^2] of order n_r^kappa,
    # kappa = (2 - alpha)/p; oracle = direct second-moment estimation vs the
    # quadrature value, both below the analytic constant envelope
    spec = PowerLawSymmetric(1.0, 4.6)
    alpha, p = 1.8, 1.5
    kappa = (2 - alpha) / p
    st = InnovationStream(spec, spec, IDENTICAL, seed=mix_seed(5, 1), length=2**20, dim=1)
    xi, _ = sample_pair_sequence(st)
    v = xi[:, 0] ** 2
    const = 2.0 / (2.0 - alpha)
    for r in range(10, 19):
        u = (2.0**r) ** (1.0 / p)
        ts = truncated_split(v, u, spec)
        emp = float(np.mean(ts.bounded**2))
        analytic = (
            2.0 * integrate.quad(lambda s: s * float(square_survival(spec, s)), 0.0, u)[0]
            - ts.theta**2
        )
        assert emp <= const * (2.0**r) ** kappa * 1.3
        assert analytic <= const * (2.0**r) ** kappa
        assert 0.5 * analytic <= emp <= 1.6 * analytic


def test_truncated_split_validation():
    spec = PowerLawSymmetric(1.0, 5.0)
    with pytest.raises(ValueError):
        truncated_split(np.array([1.0]), 0.0, spec)
    with pytest.raises(ValueError):
        truncated_split(np.array([-1.0]), 1.0, spec)

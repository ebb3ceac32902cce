import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from bayesord import kernels
from bayesord.errors import DomainError, SingularityError

from oracles import al_cdf_closed, al_cdf_quadrature, truncated_normal_mean_quadrature

quantiles = st.floats(0.01, 0.99)
finite_x = st.floats(-30.0, 30.0)


# normal cdf -----------------------------------------------------------------

def test_normal_cdf_anchors():
    assert kernels.normal_cdf(0.0) == 0.5
    assert abs(kernels.normal_cdf(40.0) - 1.0) <= 1e-15
    ref, _ = integrate.quad(lambda t: np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi), -np.inf, 1.959964)
    assert kernels.normal_cdf(1.959964) == pytest.approx(ref, abs=1e-10)
    assert kernels.normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_normal_cdf_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        kernels.normal_cdf(bad)


@given(finite_x)
def test_normal_cdf_symmetry(x):
    assert kernels.normal_cdf(x) + kernels.normal_cdf(-x) == pytest.approx(1.0, abs=1e-15)


# asymmetric Laplace ---------------------------------------------------------

def test_al_cdf_examples():
    assert kernels.al_cdf(0.0, 0.37) == 0.37
    assert kernels.al_cdf(-2.0 * np.log(2.0), 0.5) == pytest.approx(0.25, abs=1e-15)
    assert kernels.al_cdf(1.0, 0.25) == pytest.approx(al_cdf_quadrature(1.0, 0.25), abs=1e-10)
    # closed form 1 - 0.75 exp(-0.25) = 0.415899...; the quoted 0.41597 is good to 1e-4
    assert kernels.al_cdf(1.0, 0.25) == pytest.approx(1 - 0.75 * np.exp(-0.25), abs=1e-15)
    assert kernels.al_cdf(1.0, 0.25) == pytest.approx(0.41597, abs=1e-4)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_al_cdf_domain(p):
    with pytest.raises(DomainError):
        kernels.al_cdf(0.3, p)


@given(finite_x, quantiles)
def test_al_cdf_matches_closed_form(x, p):
    assert kernels.al_cdf(x, p) == pytest.approx(al_cdf_closed(x, p), abs=1e-14)


@given(finite_x, finite_x, quantiles)
def test_al_cdf_monotone_and_bounded(x1, x2, p):
    lo, hi = sorted((x1, x2))
    a, b = kernels.al_cdf(lo, p), kernels.al_cdf(hi, p)
    assert 0.0 <= a <= b <= 1.0


@given(st.floats(1e-6, 1 - 1e-6), quantiles)
def test_al_quantile_inverts_cdf(u, p):
    assert kernels.al_cdf(kernels.al_quantile(u, p), p) == pytest.approx(u, abs=1e-12)


def test_al_cdf_infinite_arguments():
    assert kernels.al_cdf(np.inf, 0.3) == 1.0
    assert kernels.al_cdf(-np.inf, 0.3) == 0.0


# truncated normal -----------------------------------------------------------

def test_truncated_normal_untruncated_and_half():
    rng = kernels.make_rng(1)
    x = kernels.sample_truncated_normal(np.zeros(1_000_000), 1.0, -np.inf, np.inf, rng)
    assert abs(x.mean()) <= 0.005
    t = kernels.sample_truncated_normal(np.zeros(1_000_000), 1.0, 0.0, np.inf, rng)
    assert abs(t.mean() - np.sqrt(2 / np.pi)) <= 0.005
    assert np.all(t > 0.0)


def test_truncated_normal_interior_matches_quadrature():
    rng = kernels.make_rng(2)
    x = kernels.sample_truncated_normal(np.full(1_000_000, 0.5), 1.0, 0.0, 1.0, rng)
    assert abs(x.mean() - truncated_normal_mean_quadrature(0.5, 1.0, 0.0, 1.0)) <= 0.005


@pytest.mark.parametrize("lo,hi", [(40.0, 41.0), (40.0, np.inf), (-np.inf, -45.0), (-60.0, -59.5)])
def test_truncated_normal_far_tails(lo, hi):
    rng = kernels.make_rng(3)
    x = kernels.sample_truncated_normal(np.zeros(10_000), 1.0, lo, hi, rng)
    assert np.all((x > lo) & (x < hi))
    # far-tail mass concentrates at the bound nearest the mean
    near = lo if lo > 0 else hi
    assert abs(np.median(x) - near) < 0.1


def test_truncated_normal_errors():
    rng = kernels.make_rng(0)
    with pytest.raises(DomainError):
        kernels.sample_truncated_normal(0.0, 1.0, 1.0, 1.0, rng)
    with pytest.raises(DomainError):
        kernels.sample_truncated_normal(0.0, 1.0, 2.0, 1.0, rng)
    with pytest.raises(DomainError):
        kernels.sample_truncated_normal(0.0, 0.0, 0.0, 1.0, rng)


@settings(max_examples=50)
@given(st.floats(-50, 50), st.floats(0.01, 100), st.floats(-60, 60), st.floats(1e-3, 20))
def test_truncated_normal_in_interval(mean, var, lo, width):
    rng = kernels.make_rng(0)
    x = kernels.sample_truncated_normal(np.full(20, mean), var, lo, lo + width, rng)
    assert np.all((x > lo) & (x < lo + width))


def test_truncated_normal_scalar_roundtrip():
    rng = kernels.make_rng(0)
    assert isinstance(kernels.sample_truncated_normal(0.0, 1.0, 0.0, 1.0, rng), float)


# GIG(1/2) --------------------------------------------------------------------

@pytest.mark.parametrize("a,b,mean", [(1.0, 1.0, 2.0), (4.0, 1.0, 3.0),
                                      (1.0, 2.0, np.sqrt(0.5) * (1 + 1 / np.sqrt(2)))])
def test_gig_mean_examples(a, b, mean):
    rng = kernels.make_rng(4)
    w = kernels.sample_gig_half(np.full(1_000_000, a), b, rng)
    assert abs(w.mean() / mean - 1.0) <= 0.01
    assert kernels.gig_half_mean(a, b) == pytest.approx(mean, rel=1e-14)


def test_gig_matches_reference_distribution():
    # KS against scipy's generalized inverse Gaussian in its own parameterisation
    rng = kernels.make_rng(5)
    for a, b in [(0.1, 3.0), (1.0, 0.5), (10.0, 10.0)]:
        w = kernels.sample_gig_half(np.full(200_000, a), b, rng)
        ref = stats.geninvgauss(0.5, np.sqrt(a * b), scale=np.sqrt(a / b))
        assert stats.kstest(w, ref.cdf).pvalue > 1e-3


def test_gig_zero_a_is_gamma():
    rng = kernels.make_rng(6)
    w = kernels.sample_gig_half(np.zeros(200_000), 2.0, rng)
    assert stats.kstest(w, stats.gamma(0.5, scale=1.0).cdf).pvalue > 1e-3
    assert kernels.gig_half_mean(0.0, 2.0) == pytest.approx(0.5)


def test_gig_errors():
    rng = kernels.make_rng(0)
    with pytest.raises(DomainError):
        kernels.sample_gig_half(1.0, 0.0, rng)
    with pytest.raises(DomainError):
        kernels.sample_gig_half(-1.0, 1.0, rng)


@given(st.floats(0.0, 1e4), st.floats(1e-4, 1e4))
@settings(max_examples=50)
def test_gig_positive(a, b):
    rng = kernels.make_rng(0)
    assert np.all(kernels.sample_gig_half(np.full(50, a), b, rng) > 0.0)


# SPD algebra -----------------------------------------------------------------

def test_spd_solve_examples():
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(kernels.chol_solve_spd(np.eye(3), v), v)
    np.testing.assert_allclose(kernels.chol_solve_spd(2 * np.eye(3), [2.0, 4.0, 6.0]), [1, 2, 3])


def test_singularity_names_source():
    with pytest.raises(SingularityError, match="draw_beta_probit"):
        kernels.cholesky_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), "draw_beta_probit")
    with pytest.raises(SingularityError):
        kernels.sample_mvn(np.zeros(2), np.zeros((2, 2)), kernels.make_rng(0))


@given(st.integers(1, 6), st.integers(0, 10_000))
@settings(max_examples=30)
def test_spd_solve_residual(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((k, k))
    m = a @ a.T + k * np.eye(k)
    rhs = rng.standard_normal(k)
    np.testing.assert_allclose(m @ kernels.chol_solve_spd(m, rhs), rhs, atol=1e-10)


def test_mvn_moments():
    rng = kernels.make_rng(7)
    x = kernels.sample_mvn(np.zeros(2), np.eye(2), rng, size=1_000_000)
    np.testing.assert_allclose(np.cov(x.T), np.eye(2), atol=0.01)
    y = kernels.sample_mvn(np.array([5.0, -3.0]), np.eye(2), rng, size=1_000_000)
    np.testing.assert_allclose(y.mean(axis=0), [5.0, -3.0], atol=0.01)


def test_mvn_logpdf_matches_scipy():
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    x = np.array([[0.1, -0.2], [1.0, 2.0]])
    ref = stats.multivariate_normal([0.5, 0.0], cov).logpdf(x)
    np.testing.assert_allclose(kernels.mvn_logpdf(x, [0.5, 0.0], cov), ref, rtol=1e-12)


def test_streams_independent_and_reproducible():
    a1, b1 = kernels.spawn_streams(11, 2)
    a2, _ = kernels.spawn_streams(11, 2)
    assert a1.random() == a2.random()
    assert a1.random() != b1.random()

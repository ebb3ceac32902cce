import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ndtr

from bayesord import (PROBIT, CovariateShift, DrawsStore, ModelKind, OrdinalDataset,
                      average_covariate_effect, effect_significance_filter)
from bayesord.effects import credible_interval
from bayesord.errors import ValidationError

from oracles import ace_loop, al_cdf_closed


def setup(M=15, n=12, seed=0, kind=PROBIT):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.standard_normal(n), (rng.random(n) < 0.5).astype(float),
                         rng.uniform(2, 11, n)])
    y = np.arange(n) % 4 + 1
    data = OrdinalDataset(y, X, ("Intercept", "x1", "flag", "Income/10000"))
    draws = DrawsStore(rng.normal(0, 0.5, (M, 4)), rng.normal(0, 0.3, (M, 2)), 0, kind,
                       data.covariate_names)
    return data, draws


@pytest.mark.parametrize("p", [None, 0.3])
def test_binary_flip_matches_loop_oracle(p):
    kind = PROBIT if p is None else ModelKind.quantile(p)
    data, draws = setup(kind=kind)
    cdf = ndtr if p is None else (lambda x: al_cdf_closed(x, p))
    ace = average_covariate_effect(draws, data, CovariateShift.binary(2))
    ref = ace_loop(draws.beta_draws, draws.delta_draws, np.asarray(data.X), 2, 0.0, 1.0, cdf)
    np.testing.assert_allclose(ace.mean, ref, atol=1e-12)
    assert ace.M == 15 and ace.n == 12


def test_increment_shift_matches_direct_average():
    data, draws = setup()
    ace = average_covariate_effect(draws, data, CovariateShift(3, increment=5.0))
    total = np.zeros(4)
    for beta, delta in zip(draws.beta_draws, draws.delta_draws):
        g = np.r_[-np.inf, 0.0, np.cumsum(np.exp(delta)), np.inf]
        for x in np.asarray(data.X):
            eta_a, eta_b = x @ beta, x @ beta + 5.0 * beta[3]
            total += np.diff(ndtr(g - eta_b)) - np.diff(ndtr(g - eta_a))
    np.testing.assert_allclose(ace.mean, total / (15 * 12), atol=1e-12)


def test_null_shift_is_zero_and_chunking_is_irrelevant():
    data, draws = setup(M=40)
    zero = average_covariate_effect(draws, data, CovariateShift(1, 0.7, 0.7))
    np.testing.assert_allclose(zero.mean, 0.0, atol=1e-15)
    a = average_covariate_effect(draws, data, CovariateShift.binary(2), chunk=1)
    b = average_covariate_effect(draws, data, CovariateShift.binary(2), chunk=64)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), st.floats(-3, 3), st.floats(-3, 3))
def test_effects_sum_to_zero(seed, va, vb):
    data, draws = setup(M=5, seed=seed)
    ace = average_covariate_effect(draws, data, CovariateShift(1, va, vb), keep_draws=True)
    assert abs(ace.mean.sum()) <= 1e-12
    np.testing.assert_allclose(ace.per_draw.sum(axis=1), 0.0, atol=1e-12)


def test_shift_validation():
    with pytest.raises(ValidationError):
        CovariateShift(0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        CovariateShift(1)
    with pytest.raises(ValidationError):
        CovariateShift(1, 0.0, 1.0, increment=1.0)
    data, draws = setup()
    with pytest.raises(ValidationError):
        average_covariate_effect(draws, data, CovariateShift.binary(9))


def test_family_shift_warns():
    X = np.column_stack([np.ones(8), [1, 0, 0, 0, 1, 0, 0, 0], [0, 1, 0, 0, 0, 1, 0, 0]])
    data = OrdinalDataset(np.array([1, 2, 3, 1, 2, 3, 1, 2]), X, ("Intercept", "A", "B"),
                          families={"Fam": ("A", "B")})
    draws = DrawsStore(np.zeros((3, 3)), np.zeros((3, 1)), 0, PROBIT, data.covariate_names)
    with pytest.warns(UserWarning, match="Fam"):
        average_covariate_effect(draws, data, CovariateShift.binary(1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        average_covariate_effect(draws, data, CovariateShift(1, 0.0, 0.0))


def test_significance_filter():
    rng = np.random.default_rng(3)
    pos = DrawsStore(np.abs(rng.normal(1, 0.1, (500, 2))), np.zeros((500, 0)), 0, PROBIT)
    assert effect_significance_filter(pos, 1)
    sym = np.r_[rng.normal(0, 1, 500)]
    sym_store = DrawsStore(np.column_stack([np.ones(1000), np.r_[sym, -sym]]), np.zeros((1000, 0)),
                           0, PROBIT)
    assert not effect_significance_filter(sym_store, 1)
    ev = DrawsStore(np.column_stack([np.ones(100_000), rng.normal(0.43, 0.02, 100_000)]),
                    np.zeros((100_000, 0)), 0, PROBIT)
    assert effect_significance_filter(ev, CovariateShift.binary(1))
    lo, hi = credible_interval(ev.beta_draws[:, 1])
    assert lo == pytest.approx(0.43 - 1.96 * 0.02, abs=0.002)
    assert hi == pytest.approx(0.43 + 1.96 * 0.02, abs=0.002)

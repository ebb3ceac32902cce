import numpy as np
import pytest

from bayesord import (PROBIT, EvidenceResult, ModelKind, OrdinalDataset, PriorSpec, SamplerConfig,
                      log_bayes_factor, log_marginal_likelihood, run_probit_chain,
                      run_quantile_chain, simulate_dataset)
from bayesord.errors import ValidationError

from oracles import quadrature_posterior


def two_category(kind, seed):
    return simulate_dataset([0.3], [0.0], 15, kind, seed=seed)


@pytest.mark.parametrize("kind,seed", [(PROBIT, 1), (ModelKind.quantile(0.5), 2),
                                       (ModelKind.quantile(0.25), 4)],
                         ids=["probit", "quantile_p0.5", "quantile_p0.25"])
def test_two_category_matches_quadrature(kind, seed):
    data = two_category(kind, seed)
    assert set(data.y) == {1, 2}
    _, _, logz = quadrature_posterior(data.y, 2, kind.p)
    pri = PriorSpec.default(1, 2)
    cfg = SamplerConfig(iterations=10_000, burn_in=1_000, seed=3, p=kind.p)
    run = run_probit_chain if kind.p is None else run_quantile_chain
    res = log_marginal_likelihood(data, pri, cfg, kind, draws=run(data, pri, cfg))
    assert res.log_marginal_likelihood == pytest.approx(logz, abs=0.05)


@pytest.fixture(scope="module")
def three_category():
    data = simulate_dataset([0.3], [0.0, 0.8], 30, PROBIT, seed=0)
    pri = PriorSpec.default(1, 3)
    cfg = SamplerConfig(iterations=8_000, burn_in=1_000, seed=2, refresh="burn_in")
    return data, pri, cfg, run_probit_chain(data, pri, cfg)


def test_identity_holds_exactly(three_category):
    data, pri, cfg, draws = three_category
    res = log_marginal_likelihood(data, pri, cfg, PROBIT, draws=draws, reduced_draws=1_000)
    lhs = res.log_likelihood + res.log_prior - res.log_posterior_ordinate
    assert abs(res.log_marginal_likelihood - lhs) <= 1e-12
    assert res.log_posterior_ordinate == pytest.approx(res.log_beta_ordinate + res.log_delta_ordinate,
                                                       abs=1e-12)
    assert res.fingerprint == data.fingerprint()


def test_reduced_run_seed_barely_matters(three_category):
    data, pri, cfg, draws = three_category
    vals = [log_marginal_likelihood(data, pri, cfg, PROBIT, draws=draws, reduced_draws=2_000,
                                    seed=s).log_marginal_likelihood for s in (10, 11, 12)]
    assert max(vals) - min(vals) <= 0.1


def test_ordinate_subsampling_close_to_full(three_category):
    data, pri, cfg, draws = three_category
    full = log_marginal_likelihood(data, pri, cfg, PROBIT, draws=draws, reduced_draws=2_000, seed=1)
    sub = log_marginal_likelihood(data, pri, cfg, PROBIT, draws=draws, reduced_draws=2_000, seed=1,
                                  ordinate_draws=2_000)
    assert abs(full.log_marginal_likelihood - sub.log_marginal_likelihood) <= 0.1


def test_empty_data_has_zero_evidence():
    data = OrdinalDataset(np.zeros(0), np.zeros((0, 1)), J=3)
    cfg = SamplerConfig(iterations=10, burn_in=1)
    assert log_marginal_likelihood(data, PriorSpec.default(1, 3), cfg, PROBIT).log_marginal_likelihood == 0.0


def test_draws_must_match_model(three_category):
    data, pri, cfg, draws = three_category
    with pytest.raises(ValidationError):
        log_marginal_likelihood(data, pri, cfg, ModelKind.quantile(0.5), draws=draws)


def test_bayes_factor_examples():
    one = EvidenceResult.reported(-12_415.0, "abc")
    zero = EvidenceResult.reported(-12_425.0, "abc")
    assert log_bayes_factor(one, zero) == 10.0
    assert log_bayes_factor(one, one) == 0.0
    with pytest.raises(ValidationError, match="same dataset"):
        log_bayes_factor(one, EvidenceResult.reported(-1.0, "xyz"))


def test_result_roundtrip(three_category):
    data, pri, cfg, draws = three_category
    res = log_marginal_likelihood(data, pri, cfg, PROBIT, draws=draws, reduced_draws=500)
    back = EvidenceResult.from_dict(res.to_dict())
    assert back.log_marginal_likelihood == res.log_marginal_likelihood
    np.testing.assert_array_equal(back.delta_star, res.delta_star)

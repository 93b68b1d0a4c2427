from fractions import Fraction

import numpy as np
import pytest

import src.config as config
from src.galois import field_of_order
from src.models import Campaign, Construction, DegreeDistribution, OuterEnsembleSpec, RaptorInstance
from src.services import montecarlo as mc
from src.services import outercodes as oc

HALF = Fraction(1, 2)
OMEGA_SMALL = DegreeDistribution(((1, Fraction(1, 4)), (2, Fraction(1, 4)), (3, HALF)))


@pytest.fixture
def repetition():
    gf2 = field_of_order(2)
    code = oc.code_from_generator(gf2, [[1, 1]])
    con = Construction("gfq", gf2, DegreeDistribution(((1, HALF), (2, HALF))), 2)
    return RaptorInstance(code, con)


@pytest.fixture
def small_blocks(monkeypatch):
    # 小块让多个窗口参与调度
    monkeypatch.setattr(config, "TRIAL_BLOCK", 16)


def test_clopper_pearson_reference_value():
    low, high = mc.clopper_pearson(5, 100)
    assert low == pytest.approx(0.0164, abs=5e-4)
    assert high == pytest.approx(0.1128, abs=5e-4)


def test_clopper_pearson_edges():
    low, high = mc.clopper_pearson(0, 10)
    assert low == 0.0
    assert high == pytest.approx(1 - 0.025 ** 0.1, abs=1e-9)
    low, high = mc.clopper_pearson(10, 10)
    assert high == 1.0
    assert low == pytest.approx(0.025 ** 0.1, abs=1e-9)


@pytest.mark.parametrize("failures,trials,level", [(3, 0, 0.95), (-1, 5, 0.95), (6, 5, 0.95), (1, 5, 1.0)])
def test_clopper_pearson_rejects_bad_input(failures, trials, level):
    with pytest.raises(ValueError):
        mc.clopper_pearson(failures, trials, level)


def test_bootstrap_of_constant_rates():
    rng = np.random.default_rng(0)
    assert mc.bootstrap_mean_ci([0.2] * 5, 200, 0.95, rng) == pytest.approx((0.2, 0.2))


def test_bootstrap_contains_mean():
    rng = np.random.default_rng(0)
    rates = [0.0, 0.1, 0.4, 0.2]
    low, high = mc.bootstrap_mean_ci(rates, 1000, 0.95, rng)
    assert low <= np.mean(rates) <= high
    with pytest.raises(ValueError):
        mc.bootstrap_mean_ci([], 10, 0.95, rng)


def test_trial_streams_are_reproducible():
    a = mc.trial_rng(7, 2, 15).integers(0, 1 << 30, size=4)
    b = mc.trial_rng(7, 2, 15).integers(0, 1 << 30, size=4)
    c = mc.trial_rng(7, 3, 15).integers(0, 1 << 30, size=4)
    assert (a == b).all()
    assert not (a == c).all()


def test_run_single_respects_max_trials(repetition):
    campaign = Campaign(deltas=(0, 2), master_seed=3, max_trials=300, instance=repetition)
    results = mc.run_single(campaign, threads=1)
    assert [r.trials for r in results] == [300, 300]
    for r in results:
        assert r.ci_low <= r.p_hat <= r.ci_high


def test_run_single_stops_at_target(repetition):
    campaign = Campaign(deltas=(1,), master_seed=3, target_failures=5, max_trials=10000, instance=repetition)
    (r,) = mc.run_single(campaign, threads=1)
    assert r.failures == 5
    assert r.trials < 10000


def test_run_single_matches_exact_value(repetition):
    campaign = Campaign(deltas=(2,), master_seed=11, max_trials=4000, instance=repetition)
    (r,) = mc.run_single(campaign, threads=1)
    low, high = mc.clopper_pearson(r.failures, r.trials, 0.999)
    assert low <= 0.125 <= high


def test_results_do_not_depend_on_worker_count(repetition, small_blocks):
    campaign = Campaign(deltas=(0, 1), master_seed=5, target_failures=20, max_trials=500, instance=repetition)
    assert mc.run_single(campaign, threads=1) == mc.run_single(campaign, threads=3)


def test_inactivation_decoder_gives_same_counts():
    code = oc.hamming_generator(3)
    instance = RaptorInstance(code, Construction("gfq", code.field, OMEGA_SMALL, 7))
    ge = Campaign(deltas=(0, 2), master_seed=1, max_trials=200, instance=instance)
    inact = Campaign(deltas=(0, 2), master_seed=1, max_trials=200, instance=instance, decoder="inactivation")
    assert mc.run_single(ge, threads=1) == mc.run_single(inact, threads=1)


def test_explicit_ensemble_reproduces_single_run(repetition):
    spec = OuterEnsembleSpec("explicit", repetition.outer.field, 2, 1, code=repetition.outer)
    ensemble = Campaign(deltas=(0, 1, 2), master_seed=9, max_trials=250, ensemble=spec,
                        construction=repetition.construction, n_codes=1, trials_per_code=250)
    single = Campaign(deltas=(0, 1, 2), master_seed=9, max_trials=250, instance=repetition)
    assert mc.run_ensemble(ensemble, threads=1) == mc.run_single(single, threads=1)


def test_ensemble_is_deterministic(small_blocks):
    gf2 = field_of_order(2)
    spec = OuterEnsembleSpec("uniform-pc", gf2, 7, 4)
    con = Construction("gfq", gf2, OMEGA_SMALL, 7)
    campaign = Campaign(deltas=(0, 3), master_seed=2, max_trials=200, ensemble=spec, construction=con,
                        n_codes=4, trials_per_code=50)
    first = mc.run_ensemble(campaign, threads=1)
    assert first == mc.run_ensemble(campaign, threads=2)
    for r in first:
        assert r.trials == 200
        assert 0 <= r.codes_above_k <= 4
        assert r.ci_low <= r.p_hat <= r.ci_high


def test_campaign_needs_a_stop_rule(repetition):
    with pytest.raises(ValueError):
        Campaign(deltas=(0,), instance=repetition)


def test_run_single_needs_instance():
    gf2 = field_of_order(2)
    spec = OuterEnsembleSpec("uniform-pc", gf2, 7, 4)
    con = Construction("gfq", gf2, OMEGA_SMALL, 7)
    campaign = Campaign(deltas=(0,), max_trials=10, ensemble=spec, construction=con)
    with pytest.raises(ValueError):
        mc.run_single(campaign)


def test_ensemble_counts_failures_at_code_dimension():
    gf2 = field_of_order(2)
    code = oc.code_from_generator(gf2, [[1, 0, 1], [0, 1, 1]])
    con = Construction("gfq", gf2, OMEGA_SMALL, 3)
    # 名义维数 k=1，但实际码维数 k_C=2
    spec = OuterEnsembleSpec("explicit", gf2, 3, 1, code=code)
    ensemble = Campaign(deltas=(0, 2), master_seed=4, max_trials=100, ensemble=spec, construction=con,
                        n_codes=1, trials_per_code=100)
    single = Campaign(deltas=(0, 2), master_seed=4, max_trials=100, instance=RaptorInstance(code, con))
    results = mc.run_ensemble(ensemble, threads=1)
    reference = mc.run_single(single, threads=1)
    assert results[0].failures == 100  # m = 1 < k_C 时必然失败
    for r, ref in zip(results, reference):
        assert r.codes_above_k == 1
        assert r.failures_at_kc == ref.failures


def test_ensemble_tallies_agree_when_dimensions_match(small_blocks):
    gf2 = field_of_order(2)
    spec = OuterEnsembleSpec("uniform-pc", gf2, 7, 4)
    con = Construction("gfq", gf2, OMEGA_SMALL, 7)
    campaign = Campaign(deltas=(0, 2), master_seed=8, max_trials=400, ensemble=spec, construction=con,
                        n_codes=20, trials_per_code=20)
    for r in mc.run_ensemble(campaign, threads=1):
        assert 0 <= r.failures_at_kc <= r.trials
        if r.codes_above_k == 0:
            assert r.failures_at_kc == r.failures

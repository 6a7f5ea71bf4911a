import datetime as dt
import json
import math

import numpy as np
import pandas as pd
import pytest

from acquisition_impact.attribution import Assignment, AttributionInstance, solve_exact
from acquisition_impact.domain import ContentLaunch
from acquisition_impact.errors import InsufficientDataError
from acquisition_impact.estimator import estimate_launch_impact, fit_pooled_baseline
from acquisition_impact.simulator import (
    AttributionScenario,
    ExperimentScenario,
    daily_counts,
    mega_launch_scenario,
    null_scenario,
    seasonal_scenario,
    shock_scenario,
    simulate,
    simulate_attribution,
    simulate_experiment,
)
from acquisition_impact.validation import (
    compare_tunings,
    experiment_consistency,
    fit_seasonal_template,
    multiple_assignment_diagnostic,
    residual_regularity,
    spike_capture,
    validation_report,
)


def truth_parts(counts: pd.DataFrame, scale: float = 1.0) -> list[pd.Series]:
    return [counts[c] * scale for c in counts.columns if c.startswith("incremental:")]


def estimated(sim, launch, **hp):
    model, _ = fit_pooled_baseline(sim.dataset, [launch], hyperparams=hp or None)
    return estimate_launch_impact(sim.dataset, launch, model)


# --------------------------------------------------------------------------
# residual regularity
# --------------------------------------------------------------------------


def test_template_reproduces_pure_weekly_pattern():
    idx = pd.date_range("2024-01-01", periods=140, freq="D")
    pattern = np.array([0.9, 0.85, 0.9, 0.95, 1.05, 1.2, 1.15])
    y = pd.Series(500 * pattern[idx.dayofweek] / pattern.mean(), index=idx)
    template = fit_seasonal_template(y)
    # full-window interior is exact; truncated windows at the ends are not
    np.testing.assert_allclose(template[14:-14], y[14:-14], rtol=1e-9)
    np.testing.assert_allclose(template, y, rtol=1e-3)


def test_removing_truth_makes_residual_more_regular():
    counts = daily_counts(seasonal_scenario(seed=0))
    rep = residual_regularity(counts["n_signups"], truth_parts(counts))
    assert rep.regularity_score < rep.baseline_score
    assert rep.improvement > 0


def test_zero_estimates_leave_score_unchanged():
    counts = daily_counts(seasonal_scenario(seed=1))
    zero = [s * 0 for s in truth_parts(counts)]
    rep = residual_regularity(counts["n_signups"], zero)
    assert rep.regularity_score == rep.baseline_score
    assert residual_regularity(counts["n_signups"]).regularity_score == rep.baseline_score


def test_short_series_is_rejected():
    idx = pd.date_range("2024-01-01", periods=55, freq="D")
    with pytest.raises(InsufficientDataError):
        residual_regularity(pd.Series(100.0, index=idx))


def test_scrambled_impacts_do_not_beat_truth():
    # same mass as the truth, on the wrong days
    wins = 0
    for seed in range(100):
        counts = daily_counts(seasonal_scenario(seed=seed))
        parts = truth_parts(counts)
        total = sum(parts)
        rng = np.random.default_rng(seed)
        noise = pd.Series(rng.permutation(total.to_numpy()), index=total.index)
        truth_score = residual_regularity(counts["n_signups"], parts).regularity_score
        noise_score = residual_regularity(counts["n_signups"], [noise]).regularity_score
        wins += noise_score >= truth_score
    assert wins >= 95


def test_truth_dominates_wrong_magnitudes():
    scores = {1.0: [], 0.5: [], 2.0: []}
    for seed in range(100):
        counts = daily_counts(seasonal_scenario(seed=seed))
        for k in scores:
            scores[k].append(residual_regularity(counts["n_signups"], truth_parts(counts, k)).regularity_score)
    mean = {k: np.mean(v) for k, v in scores.items()}
    assert mean[1.0] <= mean[0.5] and mean[1.0] <= mean[2.0]


def test_compare_tunings_orders_best_first():
    counts = daily_counts(seasonal_scenario(seed=3))
    table = compare_tunings(counts["n_signups"], {
        "double": truth_parts(counts, 2.0), "truth": truth_parts(counts), "none": [],
    })
    assert table["candidate"].iloc[0] == "truth"
    assert table["regularity_score"].is_monotonic_increasing


# --------------------------------------------------------------------------
# multiple assignment
# --------------------------------------------------------------------------


def _instance(pairs, quotas, day=None, group=None):
    return AttributionInstance(tuple(pairs), {p: 0.5 for p in pairs}, quotas, day, group)


def test_disjoint_assignment_rate_zero():
    inst = _instance([("a", "x"), ("b", "y")], {"x": 1, "y": 1})
    rep = multiple_assignment_diagnostic([Assignment.from_pairs(inst, inst.candidates)])
    assert rep.rate == 0.0 and rep.n_subscribers == 2


def test_everyone_twice_rate_one():
    pairs = [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")]
    inst = _instance(pairs, {"x": 2, "y": 2}, dt.date(2024, 1, 5), "eu")
    rep = multiple_assignment_diagnostic([Assignment.from_pairs(inst, pairs)])
    assert rep.rate == 1.0
    assert list(rep.by_content["multi_rate"]) == [1.0, 1.0]
    assert rep.by_date.iloc[0]["date"] == "2024-01-05"
    assert rep.by_group.iloc[0]["group"] == "eu"


def test_breakdown_sorted_descending():
    a = _instance([("a", "x"), ("a", "y"), ("b", "z")], {"x": 1, "y": 1, "z": 1})
    rep = multiple_assignment_diagnostic([Assignment.from_pairs(a, a.candidates)])
    assert list(rep.by_content["content_id"]) == ["x", "y", "z"]
    assert rep.rate == pytest.approx(0.5)


def test_inflating_a_quota_raises_multiple_assignment():
    # with every subscriber incremental the quotas already use everyone once,
    # so any extra quota has to land on someone already credited
    for seed in range(3):
        sim = simulate_attribution(AttributionScenario(
            n_subscribers=120, n_contents=15, n_days=1, rng_seed=seed, incremental_share=1.0,
        ))
        inst = sim.instances[0]
        by_content = inst.by_content()
        j = max(by_content, key=lambda c: (inst.quota(c), c))
        quotas = dict(inst.quotas)
        quotas[j] = min(2 * inst.quota(j), len(by_content[j]))
        inflated = AttributionInstance(inst.candidates, inst.affinity, quotas)
        before = multiple_assignment_diagnostic([solve_exact(inst)])
        after = multiple_assignment_diagnostic([solve_exact(inflated)])
        assert after.rate > before.rate
        rate_of = lambda rep: rep.by_content.set_index("content_id").loc[j, "multi_rate"]
        assert rate_of(after) >= rate_of(before)


# --------------------------------------------------------------------------
# spike capture
# --------------------------------------------------------------------------


def test_mega_launch_spike_is_captured():
    sim = simulate(mega_launch_scenario(seed=0))
    launch = sim.launches[0]
    rep = spike_capture(sim.truth.daily["n_signups"], estimated(sim, launch), launch)
    assert not rep.undefined
    assert 0.9 <= rep.capture <= 1.1


def test_phantom_launch_on_flat_series_is_undefined():
    sim = simulate(null_scenario(seed=0))
    launch = sim.launches[0]
    rep = spike_capture(sim.truth.daily["n_signups"], sim.truth.incremental(launch.content_id), launch)
    assert rep.undefined and math.isnan(rep.capture)


def test_external_shock_is_not_attributed():
    sim = simulate(shock_scenario(seed=0))
    launch = sim.launches[0]
    series = estimated(sim, launch)
    rep = spike_capture(sim.truth.daily["n_signups"], series, launch)
    assert not rep.undefined
    assert rep.capture <= 0.15
    assert series.total_incremental < 0.15 * rep.excess


@pytest.mark.parametrize("seed", [0, 1])
def test_truth_capture_on_noiseless_series(seed):
    counts = daily_counts(seasonal_scenario(seed=seed, noise="none"))
    for launch in seasonal_scenario(seed).launch_objects():
        rep = spike_capture(counts["n_signups"], counts[f"incremental:{launch.content_id}"], launch)
        assert 0.95 <= rep.capture <= 1.05


def test_launch_outside_series():
    idx = pd.date_range("2024-01-01", periods=60, freq="D")
    with pytest.raises(ValueError):
        spike_capture(pd.Series(1.0, index=idx), pd.Series(0.0, index=idx),
                      ContentLaunch("x", dt.date(2025, 1, 1)))


# --------------------------------------------------------------------------
# experiment consistency
# --------------------------------------------------------------------------


def test_exact_experiment_has_zero_discrepancy():
    rep = experiment_consistency(280.0, 80.0, 0.02, 10_000)
    assert rep.discrepancy == 0.0 and rep.relative_discrepancy == 0.0
    assert not rep.small_arms


def test_experiment_argument_checks():
    with pytest.raises(ValueError):
        experiment_consistency(1.0, 0.0, 0.02, 0)
    assert experiment_consistency(10.0, 0.0, 0.02, 500).small_arms


def test_control_arm_reflects_organic_incrementals_only():
    sim = simulate_experiment(ExperimentScenario(rng_seed=1))
    est = {}
    for arm in ("treatment", "control"):
        data = sim.dataset.restrict_group(arm)
        model, _ = fit_pooled_baseline(data, [sim.launch], hyperparams={"features": []})
        est[arm] = estimate_launch_impact(data, sim.launch, model).total_incremental
    assert abs(est["control"] - 80) <= 30
    rep = experiment_consistency(est["treatment"], est["control"], 0.02, 10_000)
    assert abs(rep.relative_discrepancy) < 0.15


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------


def test_report_is_json_ready_and_pure():
    sim = simulate(null_scenario(seed=0))
    launch = sim.launches[0]
    series = estimated(sim, launch, features=[])
    inst = _instance([("a", "x"), ("a", "y")], {"x": 1, "y": 1})
    args = (sim.truth.daily["n_signups"], [series], [launch], [Assignment.from_pairs(inst, inst.candidates)])
    rep = validation_report(*args, experiment=experiment_consistency(1, 0, 0.02, 50), config={"k": 1})
    again = validation_report(*args, experiment=experiment_consistency(1, 0, 0.02, 50), config={"k": 1})
    text = json.dumps(rep, allow_nan=False)
    assert json.loads(text) == json.loads(json.dumps(again, allow_nan=False))
    assert rep["spike_capture"][0]["undefined_spike"]
    assert rep["multiple_assignment"]["rate"] == 1.0
    assert "underpowered" in rep["experiment"]["note"]
    assert rep["config_fingerprint"] != validation_report(*args, config={"k": 2})["config_fingerprint"]

import hashlib
import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acquisition_impact.domain import POST_LAUNCH, launch_frame, load_dataset
from acquisition_impact.simulator import (
    TOY_LAUNCH_DAY,
    AttributionScenario,
    BaselineParams,
    ExperimentScenario,
    GroundTruth,
    LaunchSpec,
    ScenarioConfig,
    Shock,
    daily_counts,
    mega_launch_scenario,
    null_scenario,
    seasonal_scenario,
    simulate,
    simulate_attribution,
    simulate_experiment,
    toy_scenario,
)


def digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.iterdir())}


@pytest.fixture(scope="module")
def toy():
    return simulate(toy_scenario(seed=3))


def test_toy_launch_day_has_about_500_consumers(toy):
    launch = toy.launches[0]
    frame = launch_frame(toy.dataset, launch)
    day0 = frame[(frame["kind"] == POST_LAUNCH) & (frame["signup_date"] == pd.Timestamp(launch.launch_date))]
    assert len(day0) == 1000
    # 375 certain plus Binomial(625, 0.2): mean 500, sd 10
    assert abs(int(day0["consumed"].sum()) - 500) <= 40


def test_toy_truth_schedule(toy):
    truth = toy.truth.incremental("album_A")
    assert truth.iloc[TOY_LAUNCH_DAY] == 375
    assert truth.iloc[:TOY_LAUNCH_DAY].sum() == 0
    assert (toy.truth.daily["n_signups"].iloc[:TOY_LAUNCH_DAY] == 1000).all()


def test_null_rates_match_baseline():
    sim = simulate(null_scenario(seed=1))
    launch = sim.launches[0]
    frame = launch_frame(sim.dataset, launch)
    rates = frame.groupby("signup_date")["consumed"].agg(["mean", "size"])
    se = np.sqrt(0.2 * 0.8 / rates["size"])
    assert (np.abs(rates["mean"] - 0.2) <= 4 * se).all()
    assert abs(frame["consumed"].mean() - 0.2) < 0.01


def test_no_launches_means_no_consumption():
    sim = simulate(ScenarioConfig(days=30, base_signups_per_day=200, rng_seed=0))
    assert len(sim.dataset.consumption) == 0
    counts = sim.truth.daily["n_signups"]
    assert abs(counts.mean() - 200) < 4 * np.sqrt(200 / 30)


def test_same_seed_gives_identical_files(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    small = replace(seasonal_scenario(seed=9), base_signups_per_day=100)
    simulate(small).write(a)
    simulate(small).write(b)
    assert digest(a) == digest(b)
    c = tmp_path / "c"
    c.mkdir()
    simulate(small.with_seed(10)).write(c)
    assert digest(a) != digest(c)


def test_written_files_round_trip(tmp_path, toy):
    paths = toy.write(tmp_path)
    back = load_dataset(paths["signups"], paths["consumption"], paths["promotion"])
    assert back == toy.dataset
    truth = GroundTruth.from_json(json.loads(paths["ground_truth"].read_text()))
    pd.testing.assert_frame_equal(truth.daily, toy.truth.daily, check_freq=False)
    assert truth.incremental_ids == toy.truth.incremental_ids


def test_every_incremental_subscriber_consumes():
    sim = simulate(seasonal_scenario(seed=2))
    for launch in sim.launches:
        frame = launch_frame(sim.dataset, launch)
        ids = [i for per_day in sim.truth.incremental_ids[launch.content_id].values() for i in per_day]
        assert len(ids) == sim.truth.incremental(launch.content_id).sum()
        assert frame.loc[ids, "consumed"].all()


def test_incremental_ids_join_on_their_day():
    sim = simulate(seasonal_scenario(seed=4))
    signup = sim.dataset.signups["signup_date"]
    for per_day in sim.truth.incremental_ids.values():
        for day, ids in per_day.items():
            assert (signup.loc[ids] == pd.Timestamp(day)).all()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.booleans())
def test_counting_identity(seed, fixed):
    base = toy_scenario(seed) if fixed else seasonal_scenario(seed)
    counts = daily_counts(base)
    inc = counts[[c for c in counts.columns if c.startswith("incremental:")]].sum(axis=1)
    assert (counts["n_signups"] == counts["catalog"] + inc).all()
    assert (counts >= 0).all().all()


def test_daily_counts_match_simulation():
    cfg = seasonal_scenario(seed=6)
    sim = simulate(cfg)
    pd.testing.assert_series_equal(
        sim.dataset.daily_signups().astype("int64"), sim.truth.daily["n_signups"],
        check_names=False, check_freq=False, check_index_type=False,
    )


def test_baseline_probabilities_recorded(toy):
    p = toy.truth.baseline_probability
    assert np.allclose(p["p"], 0.2)
    mega = simulate(mega_launch_scenario(seed=0)).truth.baseline_probability
    assert mega["p"].between(0, 1).all() and mega["p"].std() > 0


def test_config_json_round_trip():
    for cfg in (toy_scenario(2), seasonal_scenario(3), mega_launch_scenario(4)):
        text = json.dumps(cfg.to_json())
        assert ScenarioConfig.from_json(json.loads(text)) == cfg


@pytest.mark.parametrize(
    "change",
    [
        {"days": 0},
        {"dow_multipliers": (1.0,) * 6},
        {"dow_multipliers": (1.0,) * 6 + (0.0,)},
        {"external_shocks": (Shock(1, 2, 0.0),)},
        {"annual_amplitude": 1.0},
        {"signup_noise": "gaussian"},
    ],
)
def test_config_validation(change):
    with pytest.raises(ValueError):
        replace(toy_scenario(), **change)


def test_launch_validation():
    with pytest.raises(ValueError):
        LaunchSpec("x", 3, incremental_schedule=(1, -1))
    with pytest.raises(ValueError):
        ScenarioConfig.from_json({"days": 5, "base_signups_per_day": 10, "colour": "red"})
    with pytest.raises(ValueError):
        replace(toy_scenario(), launches=(LaunchSpec("x", 3), LaunchSpec("x", 4)))


def test_fixed_total_cannot_go_negative():
    cfg = replace(toy_scenario(), launches=(LaunchSpec("x", 5, (2000,), BaselineParams()),))
    with pytest.raises(ValueError, match="day 5"):
        daily_counts(cfg)


def test_incremental_activity_shift_skews_covariates():
    cfg = replace(seasonal_scenario(seed=1), incremental_activity_shift=1.0)
    sim = simulate(cfg)
    inc = {i for per in sim.truth.incremental_ids.values() for ids in per.values() for i in ids}
    s = sim.dataset.signups
    is_inc = s.index.isin(inc)
    assert np.log(s.loc[is_inc, "activity"]).mean() - np.log(s.loc[~is_inc, "activity"]).mean() == pytest.approx(1.0, abs=0.1)


# --------------------------------------------------------------------------
# attribution-scale instances
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def big_attribution():
    return simulate_attribution()


def test_default_multi_consumption_share(big_attribution):
    sizes = big_attribution.contents_per_subscriber
    assert len(sizes) == 10_000
    assert 0.55 <= big_attribution.multi_fraction <= 0.65
    assert len({j for inst in big_attribution.instances for j in inst.quotas}) >= 1000


def test_attribution_instances_feasible_and_seeded(big_attribution):
    for inst, truth in zip(big_attribution.instances, big_attribution.truth):
        inst.check_feasible()
        assert sum(inst.quotas.values()) == len(truth)
    again = simulate_attribution(AttributionScenario(n_subscribers=500, rng_seed=1))
    twice = simulate_attribution(AttributionScenario(n_subscribers=500, rng_seed=1))
    assert again.instances == twice.instances and again.truth == twice.truth


def test_attribution_affinity_is_complement_of_baseline(big_attribution):
    inst = big_attribution.instances[0]
    for pair, a in inst.affinity.items():
        assert a == pytest.approx(1 - big_attribution.baseline[pair])


def test_attribution_scenario_round_trip():
    cfg = AttributionScenario(n_subscribers=50, rng_seed=3)
    assert AttributionScenario.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg
    with pytest.raises(ValueError):
        AttributionScenario(n_contents=5)


# --------------------------------------------------------------------------
# randomised campaign
# --------------------------------------------------------------------------


def test_campaign_schedule_sums_to_lift_times_size():
    sc = ExperimentScenario()
    assert sum(sc.campaign_schedule()) == 200
    assert sum(ExperimentScenario(lift=0.0137).campaign_schedule()) == 137


def test_experiment_arms_differ_by_campaign():
    sim = simulate_experiment(ExperimentScenario(rng_seed=8))
    t = sim.truth["treatment"].incremental("campaign_title").sum()
    c = sim.truth["control"].incremental("campaign_title").sum()
    assert c == 80 and t - c == 200
    assert set(sim.dataset.groups) == {"treatment", "control"}

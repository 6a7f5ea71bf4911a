"""Synthetic subscription event logs with known ground truth.

Three generators live here:

* :func:`simulate` produces a full event log (signups, consumption,
  promotion) for a scenario of daily signups with seasonality, external
  shocks and content launches that bring scheduled incremental subscribers.
* :func:`simulate_attribution` produces per-day attribution instances for
  a large catalogue, the setting used to study the assignment trade-off.
* :func:`simulate_experiment` runs two arms of a randomised acquisition
  campaign as separate groups of one dataset.

Non-incremental consumption of a launch is Bernoulli with a logistic
probability in ``log1p(age)``, ``log1p(activity)`` and promotion intensity.
Incremental subscribers always consume the content they joined for, inside
the label window and above the completion threshold.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .attribution.instance import AttributionInstance
from .domain import ContentLaunch, Dataset, write_dataset, write_launches


def logit(p: float) -> float:
    return math.log(p / (1 - p))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _from_dict(cls, obj: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(obj) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} field(s): {sorted(unknown)}")
    return cls(**obj)


@dataclass(frozen=True)
class BaselineParams:
    """Logistic coefficients of the non-incremental consumption probability."""

    intercept: float = logit(0.2)
    age: float = 0.0
    activity: float = 0.0
    promotion: float = 0.0

    def probability(self, age_days, activity, promo):
        z = (self.intercept + self.age * np.log1p(age_days)
             + self.activity * np.log1p(activity) + self.promotion * promo)
        return _sigmoid(z)


@dataclass(frozen=True)
class LaunchSpec:
    content_id: str
    launch_day: int
    incremental_schedule: tuple[int, ...] = ()
    baseline: BaselineParams = BaselineParams()
    pre_window_days: int = 28
    pre_gap_days: int = 3
    post_window_days: int = 28
    completion_threshold: float = 0.7
    label_window_days: int = 7

    def __post_init__(self) -> None:
        object.__setattr__(self, "incremental_schedule", tuple(int(v) for v in self.incremental_schedule))
        if any(v < 0 for v in self.incremental_schedule):
            raise ValueError(f"{self.content_id}: incremental schedule must be non-negative")
        if isinstance(self.baseline, dict):
            object.__setattr__(self, "baseline", _from_dict(BaselineParams, self.baseline))

    def to_launch(self, start_date: dt.date) -> ContentLaunch:
        return ContentLaunch(
            self.content_id,
            start_date + dt.timedelta(days=self.launch_day),
            self.pre_window_days,
            self.pre_gap_days,
            self.post_window_days,
            self.completion_threshold,
            self.label_window_days,
        )

    def incrementals_on(self, day: int) -> int:
        k = day - self.launch_day
        if 0 <= k < len(self.incremental_schedule):
            return self.incremental_schedule[k]
        return 0


@dataclass(frozen=True)
class Shock:
    """Multiplies expected signups on days ``start..end`` (inclusive)."""

    start: int
    end: int
    multiplier: float


@dataclass(frozen=True)
class ScenarioConfig:
    days: int
    base_signups_per_day: float
    launches: tuple[LaunchSpec, ...] = ()
    dow_multipliers: tuple[float, ...] = (1.0,) * 7
    annual_amplitude: float = 0.0
    external_shocks: tuple[Shock, ...] = ()
    rng_seed: int = 0
    start_date: dt.date = dt.date(2024, 1, 1)
    signup_noise: str = "poisson"
    # when true, the drawn daily count is the total and incrementals are carved out of it
    fixed_total: bool = False
    group: str = ""
    id_prefix: str = "s"
    activity_lognormal: tuple[float, float] = (1.0, 0.75)
    promotion_beta: tuple[float, float] | None = (2.0, 5.0)
    incremental_activity_shift: float = 0.0
    sampling_rate: float = 0.1
    analysis: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        conv = {
            "launches": lambda v: tuple(x if isinstance(x, LaunchSpec) else _from_dict(LaunchSpec, x) for x in v),
            "external_shocks": lambda v: tuple(x if isinstance(x, Shock) else _from_dict(Shock, x) for x in v),
            "dow_multipliers": lambda v: tuple(float(x) for x in v),
            "activity_lognormal": lambda v: tuple(float(x) for x in v),
            "promotion_beta": lambda v: None if v is None else tuple(float(x) for x in v),
            "start_date": lambda v: v if isinstance(v, dt.date) else dt.date.fromisoformat(v),
        }
        for name, fn in conv.items():
            object.__setattr__(self, name, fn(getattr(self, name)))
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if len(self.dow_multipliers) != 7 or min(self.dow_multipliers) <= 0:
            raise ValueError("dow_multipliers needs 7 positive values")
        if any(s.multiplier <= 0 for s in self.external_shocks):
            raise ValueError("shock multipliers must be positive")
        if abs(self.annual_amplitude) >= 1:
            raise ValueError("annual_amplitude must lie in (-1, 1)")
        if self.signup_noise not in ("poisson", "none"):
            raise ValueError("signup_noise must be 'poisson' or 'none'")
        if len({l.content_id for l in self.launches}) != len(self.launches):
            raise ValueError("launch content ids must be unique")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        from dataclasses import replace

        return replace(self, rng_seed=int(seed))

    def launch_objects(self) -> list[ContentLaunch]:
        return [l.to_launch(self.start_date) for l in self.launches]

    def to_json(self) -> dict:
        out = asdict(self)
        out["start_date"] = self.start_date.isoformat()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        return _from_dict(cls, dict(obj))

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def expected_signups(self) -> np.ndarray:
        """Seasonal mean of daily signups (before noise and shocks excluded)."""
        days = np.arange(self.days)
        dates = pd.date_range(self.start_date, periods=self.days, freq="D")
        dow = np.asarray(self.dow_multipliers)[dates.dayofweek]
        annual = 1.0 + self.annual_amplitude * np.sin(2 * np.pi * dates.dayofyear / 365.25)
        mean = self.base_signups_per_day * dow * annual
        for s in self.external_shocks:
            mean = np.where((days >= s.start) & (days <= s.end), mean * s.multiplier, mean)
        return mean


@dataclass
class GroundTruth:
    """Known answers of a simulated scenario.

    ``daily`` has one row per day with ``n_signups``, ``catalog`` and one
    ``incremental:<content>`` column per launch.
    """

    daily: pd.DataFrame
    incremental_ids: dict[str, dict[dt.date, list[str]]]
    baseline_probability: pd.DataFrame

    def incremental(self, content_id: str) -> pd.Series:
        return self.daily[f"incremental:{content_id}"]

    def total_incremental(self) -> pd.Series:
        cols = [c for c in self.daily.columns if c.startswith("incremental:")]
        return self.daily[cols].sum(axis=1) if cols else self.daily["n_signups"] * 0

    def to_json(self) -> dict:
        d = self.daily
        return {
            "daily": [
                {"date": ts.date().isoformat(), **{k: int(v) for k, v in row.items()}}
                for ts, row in d.iterrows()
            ],
            "incremental_ids": {
                c: {day.isoformat(): ids for day, ids in sorted(per_day.items())}
                for c, per_day in self.incremental_ids.items()
            },
            "baseline_probability": {
                "subscriber_id": self.baseline_probability["subscriber_id"].tolist(),
                "content_id": self.baseline_probability["content_id"].tolist(),
                "p": self.baseline_probability["p"].tolist(),
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GroundTruth":
        daily = pd.DataFrame(obj["daily"])
        daily.index = pd.DatetimeIndex(pd.to_datetime(daily.pop("date")), name="date")
        ids = {
            c: {dt.date.fromisoformat(k): v for k, v in per_day.items()}
            for c, per_day in obj["incremental_ids"].items()
        }
        return cls(daily, ids, pd.DataFrame(obj["baseline_probability"]))


@dataclass
class Simulation:
    config: ScenarioConfig
    dataset: Dataset
    truth: GroundTruth
    launches: list[ContentLaunch]

    def write(self, out_dir) -> dict[str, Path]:
        """Write the dataset CSVs, ``launches.json`` and ``ground_truth.json``."""
        out = Path(out_dir)
        paths = write_dataset(self.dataset, out)
        paths["launches"] = write_launches(self.launches, out / "launches.json")
        paths["ground_truth"] = out / "ground_truth.json"
        paths["ground_truth"].write_text(json.dumps(self.truth.to_json()) + "\n", encoding="utf-8")
        return paths


def daily_counts(config: ScenarioConfig, rng: np.random.Generator | None = None) -> pd.DataFrame:
    """Daily signup counts split into catalog and per-launch incrementals.

    Consumes the RNG exactly as :func:`simulate` does, so both agree for a
    given seed.
    """
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    mean = config.expected_signups()
    drawn = rng.poisson(mean) if config.signup_noise == "poisson" else np.rint(mean).astype(int)
    inc = {
        l.content_id: np.array([l.incrementals_on(d) for d in range(config.days)], dtype=int)
        for l in config.launches
    }
    inc_total = sum(inc.values()) if inc else np.zeros(config.days, dtype=int)
    if config.fixed_total:
        catalog = drawn - inc_total
        if (catalog < 0).any():
            day = int(np.flatnonzero(catalog < 0)[0])
            raise ValueError(f"day {day}: incrementals exceed the fixed daily total")
        total = drawn
    else:
        catalog = drawn
        total = drawn + inc_total
    idx = pd.date_range(config.start_date, periods=config.days, freq="D", name="date")
    frame = pd.DataFrame({"n_signups": total, "catalog": catalog}, index=idx)
    for c, v in inc.items():
        frame[f"incremental:{c}"] = v
    return frame.astype("int64")


def simulate(config: ScenarioConfig) -> Simulation:
    """Generate an event log and its ground truth from ``config``."""
    rng = np.random.default_rng(config.rng_seed)
    counts = daily_counts(config, rng)
    n_days = config.days
    launches = list(config.launches)

    # subscriber table: per day, catalog signups then each launch's incrementals
    day_of, joined_for = [], []
    for d in range(n_days):
        day_of.append(np.full(counts["catalog"].iat[d], d))
        joined_for.append(np.full(counts["catalog"].iat[d], -1))
        for k, l in enumerate(launches):
            m = counts[f"incremental:{l.content_id}"].iat[d]
            day_of.append(np.full(m, d))
            joined_for.append(np.full(m, k))
    day_of = np.concatenate(day_of).astype(int) if day_of else np.zeros(0, int)
    joined_for = np.concatenate(joined_for).astype(int) if joined_for else np.zeros(0, int)
    n = len(day_of)
    width = max(6, len(str(n)))
    ids = np.array([f"{config.id_prefix}{k:0{width}d}" for k in range(n)], dtype=object)

    mu, sigma = config.activity_lognormal
    shift = np.where(joined_for >= 0, config.incremental_activity_shift, 0.0)
    activity = rng.lognormal(mu + shift, sigma)

    start = np.datetime64(config.start_date, "D")
    signup_dates = start + day_of.astype("timedelta64[D]")
    signups = pd.DataFrame({
        "subscriber_id": ids,
        "signup_date": signup_dates,
        "group": config.group,
        "activity": activity,
    })

    events, promos, probs = [], [], []
    inc_ids: dict[str, dict[dt.date, list[str]]] = {}
    for k, l in enumerate(launches):
        first_day = l.launch_day - l.pre_gap_days - l.pre_window_days
        sel = np.flatnonzero(day_of >= first_day)
        age = np.maximum(0, l.launch_day - day_of[sel])
        avail = np.maximum(day_of[sel], l.launch_day)
        if config.promotion_beta is not None:
            promo = rng.beta(*config.promotion_beta, size=len(sel))
            promos.append(pd.DataFrame({
                "subscriber_id": ids[sel], "content_id": l.content_id, "promo_intensity": promo,
            }))
        else:
            promo = np.zeros(len(sel))
        p = l.baseline.probability(age, activity[sel], promo)
        probs.append(pd.DataFrame({"subscriber_id": ids[sel], "content_id": l.content_id, "p": p}))

        incremental = joined_for[sel] == k
        consume = incremental | (rng.random(len(sel)) < p)
        sample = ~consume & (rng.random(len(sel)) < config.sampling_rate)
        lag = rng.integers(0, l.label_window_days, size=len(sel))
        thr = l.completion_threshold
        completion = np.where(consume, rng.uniform(thr, 1.0, size=len(sel)),
                              rng.uniform(0.0, thr, size=len(sel)))
        emit = consume | sample
        events.append(pd.DataFrame({
            "subscriber_id": ids[sel][emit],
            "content_id": l.content_id,
            "event_date": start + (avail + lag)[emit].astype("timedelta64[D]"),
            "completion_fraction": np.minimum(completion[emit], 1.0),
        }))
        per_day: dict[dt.date, list[str]] = {}
        for d in np.unique(day_of[sel][incremental]):
            day_ids = ids[sel][incremental & (day_of[sel] == d)]
            per_day[config.start_date + dt.timedelta(days=int(d))] = day_ids.tolist()
        inc_ids[l.content_id] = per_day

    cols_e = ["subscriber_id", "content_id", "event_date", "completion_fraction"]
    consumption = pd.concat(events, ignore_index=True) if events else pd.DataFrame(columns=cols_e)
    cols_p = ["subscriber_id", "content_id", "promo_intensity"]
    promotion = pd.concat(promos, ignore_index=True) if promos else pd.DataFrame(columns=cols_p)
    baseline = (pd.concat(probs, ignore_index=True) if probs
                else pd.DataFrame(columns=["subscriber_id", "content_id", "p"]))
    if len(consumption):
        consumption = consumption.sort_values(
            ["subscriber_id", "content_id", "event_date"], kind="mergesort"
        ).reset_index(drop=True)

    dataset = Dataset(signups, consumption, promotion)
    truth = GroundTruth(counts, inc_ids, baseline)
    return Simulation(config, dataset, truth, config.launch_objects())


# --------------------------------------------------------------------------
# canned scenarios
# --------------------------------------------------------------------------

TOY_LAUNCH_DAY = 70
TOY_SCHEDULE = tuple(int(round(375 * 0.97 ** k)) for k in range(29))


def toy_scenario(seed: int = 0, incremental_schedule: Sequence[int] = TOY_SCHEDULE) -> ScenarioConfig:
    """Album launch: flat 1000 signups/day, baseline consumption 0.2.

    375 of the 1000 launch-day signups join for the album, a slowly decaying
    stream follows, and a transient hump of extra (non-incremental) signups
    arrives a week after launch.
    """
    album = LaunchSpec(
        content_id="album_A",
        launch_day=TOY_LAUNCH_DAY,
        incremental_schedule=tuple(incremental_schedule),
        baseline=BaselineParams(intercept=logit(0.2)),
        pre_window_days=56,
        pre_gap_days=3,
        post_window_days=28,
    )
    return ScenarioConfig(
        days=TOY_LAUNCH_DAY + 29,
        base_signups_per_day=1000,
        launches=(album,),
        external_shocks=(Shock(TOY_LAUNCH_DAY + 7, TOY_LAUNCH_DAY + 9, 1.3),),
        rng_seed=seed,
        signup_noise="none",
        fixed_total=True,
        promotion_beta=None,
        analysis={"model": {"kind": "glm", "features": []}},
    )


def null_scenario(seed: int = 0) -> ScenarioConfig:
    """Flat signups with a phantom launch: nobody joins for the album and
    nothing else disturbs the series."""
    from dataclasses import replace

    return replace(toy_scenario(seed, incremental_schedule=()), external_shocks=())


WEEKLY_PATTERN = (0.9, 0.85, 0.9, 0.95, 1.05, 1.2, 1.15)


def seasonal_scenario(seed: int = 0, noise: str = "poisson") -> ScenarioConfig:
    """Half a year of seasonal signups with four spiky launches."""
    launches = tuple(
        LaunchSpec(
            content_id=f"title_{k}",
            launch_day=day,
            incremental_schedule=tuple(int(round(size * 0.75 ** t)) for t in range(15)),
            post_window_days=14,
        )
        for k, (day, size) in enumerate([(40, 300), (75, 450), (110, 250), (145, 380)])
    )
    return ScenarioConfig(
        days=182,
        base_signups_per_day=1000,
        launches=launches,
        dow_multipliers=WEEKLY_PATTERN,
        annual_amplitude=0.15,
        rng_seed=seed,
        signup_noise=noise,
    )


MEGA_BASELINE = BaselineParams(intercept=-1.6, age=-0.15, activity=0.35, promotion=1.0)


def mega_launch_scenario(seed: int = 0) -> ScenarioConfig:
    """A blockbuster: during launch week half of all signups join for it."""
    schedule = [1000] * 7 + [int(round(1000 * 0.7 ** k)) for k in range(1, 9)]
    launch = LaunchSpec(
        content_id="blockbuster",
        launch_day=84,
        incremental_schedule=tuple(schedule),
        baseline=MEGA_BASELINE,
        pre_window_days=56,
        post_window_days=14,
    )
    return ScenarioConfig(
        days=140,
        base_signups_per_day=1000,
        launches=(launch,),
        dow_multipliers=WEEKLY_PATTERN,
        rng_seed=seed,
    )


def shock_scenario(seed: int = 0) -> ScenarioConfig:
    """An external surge in signups that coincides with an ordinary launch.

    Nobody joins for the title; the surge doubles catalog signups for ten
    days starting on launch day.
    """
    launch = LaunchSpec(
        content_id="bystander",
        launch_day=84,
        incremental_schedule=(),
        baseline=MEGA_BASELINE,
        pre_window_days=56,
        post_window_days=14,
    )
    return ScenarioConfig(
        days=140,
        base_signups_per_day=1000,
        launches=(launch,),
        dow_multipliers=WEEKLY_PATTERN,
        external_shocks=(Shock(84, 93, 2.0),),
        rng_seed=seed,
    )


# --------------------------------------------------------------------------
# attribution-scale simulation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AttributionScenario:
    n_subscribers: int = 10_000
    n_contents: int = 1_200
    n_days: int = 30
    # P(a subscriber consumes exactly one content) in the zero-truncated geometric
    geometric_p: float = 0.4
    max_contents: int = 12
    incremental_share: float = 0.5
    rng_seed: int = 0
    start_date: dt.date = dt.date(2024, 1, 1)

    def __post_init__(self) -> None:
        if isinstance(self.start_date, str):
            object.__setattr__(self, "start_date", dt.date.fromisoformat(self.start_date))
        if self.n_contents < self.max_contents:
            raise ValueError("n_contents must be at least max_contents")
        if not 0 < self.geometric_p <= 1:
            raise ValueError("geometric_p must lie in (0, 1]")

    @classmethod
    def from_json(cls, obj: dict) -> "AttributionScenario":
        return _from_dict(cls, dict(obj))

    def to_json(self) -> dict:
        out = asdict(self)
        out["start_date"] = self.start_date.isoformat()
        return out


@dataclass
class AttributionSimulation:
    instances: list[AttributionInstance]
    truth: list[frozenset]
    # p_ijt per candidate pair
    baseline: dict

    @property
    def contents_per_subscriber(self) -> np.ndarray:
        sizes = []
        for inst in self.instances:
            sizes.extend(len(v) for v in inst.by_subscriber().values())
        return np.asarray(sizes)

    @property
    def multi_fraction(self) -> float:
        sizes = self.contents_per_subscriber
        return float((sizes >= 2).mean()) if len(sizes) else 0.0


def simulate_attribution(config: AttributionScenario = AttributionScenario()) -> AttributionSimulation:
    """Per-day instances of a large-catalogue attribution problem.

    Each subscriber consumes a zero-truncated geometric number of distinct
    contents upon signing up, with ``p ~ Uniform(0, 1)`` per pair.  With
    probability ``incremental_share`` a subscriber is incremental for one of
    the consumed contents (chosen proportionally to ``1 - p``); quotas are
    the resulting true counts, so a one-to-one assignment always exists.
    """
    rng = np.random.default_rng(config.rng_seed)
    contents = [f"c{k:05d}" for k in range(config.n_contents)]
    day = rng.integers(0, config.n_days, size=config.n_subscribers)
    k = np.minimum(rng.geometric(config.geometric_p, size=config.n_subscribers), config.max_contents)
    per_day: list[dict] = [
        {"aff": {}, "truth": set(), "rank": {}} for _ in range(config.n_days)
    ]
    baseline = {}
    width = len(str(config.n_subscribers))
    for s in range(config.n_subscribers):
        sid = f"u{s:0{width}d}"
        chosen = rng.choice(config.n_contents, size=k[s], replace=False)
        p = rng.uniform(0.0, 1.0, size=k[s])
        bucket = per_day[day[s]]
        for r, (c, pv) in enumerate(zip(chosen, p), start=1):
            pair = (sid, contents[c])
            bucket["aff"][pair] = 1.0 - float(pv)
            bucket["rank"][pair] = r
            baseline[pair] = float(pv)
        if rng.random() < config.incremental_share:
            w = 1.0 - p
            w = w / w.sum() if w.sum() > 0 else np.full(k[s], 1.0 / k[s])
            pick = rng.choice(k[s], p=w)
            bucket["truth"].add((sid, contents[chosen[pick]]))

    instances, truth = [], []
    for d, b in enumerate(per_day):
        quotas = {j: 0 for _, j in b["aff"]}
        for _, j in b["truth"]:
            quotas[j] += 1
        instances.append(AttributionInstance(
            tuple(b["aff"]), b["aff"], quotas,
            config.start_date + dt.timedelta(days=d), None, b["rank"],
        ))
        truth.append(frozenset(b["truth"]))
    return AttributionSimulation(instances, truth, baseline)


# --------------------------------------------------------------------------
# randomised acquisition campaign
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentScenario:
    """Two arms of a campaign promoting one launch to non-members.

    Both arms see organic incrementals; the treatment arm additionally gains
    ``round(lift * treatment_size)`` campaign-driven subscribers, spread over
    the campaign days proportionally to ``campaign_profile``.
    """

    lift: float = 0.02
    treatment_size: int = 10_000
    arm_signups_per_day: float = 40.0
    organic_schedule: tuple[int, ...] = (30, 20, 12, 8, 5, 3, 2)
    campaign_profile: tuple[float, ...] = (0.3, 0.25, 0.18, 0.12, 0.08, 0.05, 0.02)
    baseline_rate: float = 0.1
    launch_day: int = 60
    post_window_days: int = 10
    pre_window_days: int = 56
    rng_seed: int = 0

    def campaign_schedule(self) -> tuple[int, ...]:
        total = int(round(self.lift * self.treatment_size))
        w = np.asarray(self.campaign_profile, dtype=float)
        raw = total * w / w.sum()
        counts = np.floor(raw).astype(int)
        # largest remainders get the leftover units
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[: total - counts.sum()]] += 1
        return tuple(int(c) for c in counts)

    def arm(self, name: str, seed: int) -> ScenarioConfig:
        organic = np.zeros(max(len(self.organic_schedule), len(self.campaign_profile)), dtype=int)
        organic[: len(self.organic_schedule)] = self.organic_schedule
        if name == "treatment":
            camp = self.campaign_schedule()
            organic[: len(camp)] += camp
        launch = LaunchSpec(
            content_id="campaign_title",
            launch_day=self.launch_day,
            incremental_schedule=tuple(int(v) for v in organic),
            baseline=BaselineParams(intercept=logit(self.baseline_rate)),
            pre_window_days=self.pre_window_days,
            post_window_days=self.post_window_days,
        )
        return ScenarioConfig(
            days=self.launch_day + self.post_window_days + 1,
            base_signups_per_day=self.arm_signups_per_day,
            launches=(launch,),
            rng_seed=seed,
            group=name,
            id_prefix=f"{name[0]}",
            promotion_beta=None,
            analysis={"model": {"kind": "glm", "features": []}},
        )


@dataclass
class ExperimentSimulation:
    scenario: ExperimentScenario
    dataset: Dataset
    truth: dict[str, GroundTruth]
    launch: ContentLaunch


def simulate_experiment(scenario: ExperimentScenario = ExperimentScenario()) -> ExperimentSimulation:
    seeds = np.random.SeedSequence(scenario.rng_seed).generate_state(2)
    sims = {
        name: simulate(scenario.arm(name, int(s)))
        for name, s in zip(("treatment", "control"), seeds)
    }
    signups = pd.concat([s.dataset.signups for s in sims.values()])
    consumption = pd.concat([s.dataset.consumption for s in sims.values()], ignore_index=True)
    promotion = pd.concat([s.dataset.promotion for s in sims.values()], ignore_index=True)
    dataset = Dataset(signups, consumption, promotion)
    launch = sims["treatment"].launches[0]
    return ExperimentSimulation(scenario, dataset, {k: v.truth for k, v in sims.items()}, launch)

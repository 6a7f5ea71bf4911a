"""Regenerate the committed fixtures.

Scenario files mirror the builtin scenarios.  The tiny attribution dataset is
small enough (at most 21 candidate pairs per day) for exhaustive search, which
produces the golden ``attribute --solver exact --lambda 0.1`` output.

    python3 fixtures/build_fixtures.py
"""

import datetime as dt
import json
from pathlib import Path

import numpy as np

from acquisition_impact.attribution import attribution_frame, brute_force, build_instances
from acquisition_impact.cli import BUILTIN_SCENARIOS, scenario_to_json
from acquisition_impact.domain import (
    ConsumptionRecord,
    ContentLaunch,
    Dataset,
    PromotionRecord,
    SignupRecord,
    write_dataset,
    write_launches,
)
from acquisition_impact.estimator import estimate_all, fit_pooled_baseline

HERE = Path(__file__).resolve().parent
TINY = HERE / "tiny_attribution"
LAUNCH = dt.date(2024, 2, 10)
CONTENTS = ("A", "B", "C")
TINY_MODEL = {"kind": "glm", "hyperparams": {"features": ["activity", "promotion"]}}
GOLDEN_LAMBDA = 0.1


def write_scenarios() -> None:
    for name, make in BUILTIN_SCENARIOS.items():
        kind, scenario = make()
        path = HERE / f"{name}.json"
        path.write_text(json.dumps(scenario_to_json(kind, scenario), indent=2) + "\n", encoding="utf-8")


def tiny_dataset(seed: int = 11) -> tuple[Dataset, list[ContentLaunch]]:
    rng = np.random.default_rng(seed)
    launches = [ContentLaunch(c, LAUNCH, pre_window_days=10, pre_gap_days=1, post_window_days=2,
                              label_window_days=3) for c in CONTENTS]
    signups, consumption, promotion = [], [], []
    pre_days = [LAUNCH - dt.timedelta(days=k) for k in range(11, 1, -1)]
    post_days = [LAUNCH + dt.timedelta(days=k) for k in range(3)]
    n = 0
    for day in pre_days + post_days:
        post = day >= LAUNCH
        for _ in range(7 if post else 6):
            sid = f"t{n:03d}"
            n += 1
            signups.append(SignupRecord(sid, day, "", round(float(rng.lognormal(1.0, 0.6)), 4)))
            avail = max(day, LAUNCH)
            for c in CONTENTS:
                promo = round(float(rng.uniform(0, 1)), 4)
                promotion.append(PromotionRecord(sid, c, promo))
                rate = (0.75 if post else 0.25) * (0.6 + 0.8 * promo)
                if rng.random() < min(rate, 0.95):
                    lag = int(rng.integers(0, 3))
                    consumption.append(ConsumptionRecord(
                        sid, c, avail + dt.timedelta(days=lag),
                        round(float(rng.uniform(0.7, 1.0)), 4),
                    ))
    return Dataset.from_records(signups, consumption, promotion), launches


def write_tiny() -> None:
    dataset, launches = tiny_dataset()
    write_dataset(dataset, TINY)
    write_launches(launches, TINY / "launches.json")
    config = {
        "signups": "signups.csv", "consumption": "consumption.csv",
        "promotion": "promotion.csv", "launches": "launches.json",
        "model": TINY_MODEL, "solver": "exact", "lambda": GOLDEN_LAMBDA,
        "lambdas": [0.0, 0.1, 1.0, 10.0],
    }
    (TINY / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")

    model, _ = fit_pooled_baseline(dataset, launches, TINY_MODEL["kind"], TINY_MODEL["hyperparams"])
    impacts = estimate_all(dataset, launches, model)
    instances = build_instances(dataset, launches, impacts, model)
    assignments = [brute_force(inst, GOLDEN_LAMBDA) for inst in instances]
    frame = attribution_frame(assignments, instances)
    frame.to_csv(TINY / "golden_attribution_exact_lambda0.1.csv", index=False, float_format="%.10g")


if __name__ == "__main__":
    write_scenarios()
    write_tiny()

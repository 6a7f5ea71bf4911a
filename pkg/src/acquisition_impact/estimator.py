"""Incremental signup estimates per content, day and group."""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .baseline import BaselineModel, fit_baseline, predict_frame
from .domain import POST_LAUNCH, PRE_LAUNCH, ContentLaunch, Dataset, _slices_from_frame, launch_frame
from .errors import DataError, UnstableDenominatorError

log = logging.getLogger(__name__)

DELTA = 1e-3

IMPACT_COLUMNS = (
    "content_id", "group", "date", "n_signups", "n_consumers",
    "baseline_rate", "n_incremental", "clamped",
)


@dataclass(frozen=True)
class DailyEstimate:
    content_id: str
    date: dt.date
    group: str | None
    n_signups: int
    n_consumers: int
    baseline_rate: float
    n_incremental: float
    clamped: bool = False
    raw_incremental: float = 0.0


@dataclass(frozen=True)
class LaunchImpactSeries:
    content_id: str
    group: str | None
    daily: tuple[DailyEstimate, ...] = field(default_factory=tuple)

    @property
    def total_incremental(self) -> float:
        return float(sum(d.n_incremental for d in self.daily))

    @property
    def total_unclamped(self) -> float:
        """Sum of raw (unclamped) daily values; exposes clamping bias."""
        return float(sum(d.raw_incremental for d in self.daily))

    def to_series(self) -> pd.Series:
        idx = pd.DatetimeIndex([pd.Timestamp(d.date) for d in self.daily], name="date")
        return pd.Series([d.n_incremental for d in self.daily], index=idx, dtype="float64")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                (d.content_id, d.group or "", d.date.isoformat(), d.n_signups, d.n_consumers,
                 d.baseline_rate, d.n_incremental, d.clamped)
                for d in self.daily
            ],
            columns=IMPACT_COLUMNS,
        )


def estimate_incremental(n_signups: int, n_consumers: int, baseline_rate: float) -> tuple[float, bool]:
    """Incremental signups from signups, consumers and the baseline rate.

    Returns ``(value, clamped)`` where ``value = (S - N p) / (1 - p)`` clipped
    into ``[0, S]`` and ``clamped`` tells whether clipping happened.
    """
    if not 0 <= n_consumers <= n_signups:
        raise ValueError(f"need 0 <= n_consumers <= n_signups, got {n_consumers}, {n_signups}")
    if baseline_rate < 0:
        raise ValueError(f"baseline_rate must be >= 0, got {baseline_rate}")
    if baseline_rate >= 1 - DELTA:
        raise UnstableDenominatorError(
            f"baseline rate {baseline_rate:.6f} >= {1 - DELTA}; the incrementality "
            "equation is unstable"
        )
    raw = (n_consumers - n_signups * baseline_rate) / (1.0 - baseline_rate)
    value = min(max(raw, 0.0), float(n_consumers))
    return value, value != raw


def incremental_propensity(p_consume: float, p_hat: float) -> float:
    """Probability that a consumer is incremental, given consumption probability
    ``p_consume`` and baseline probability ``p_hat``; clipped to ``[0, 1]``."""
    if p_hat >= 1 - DELTA:
        raise UnstableDenominatorError(f"baseline probability {p_hat} too close to 1")
    value = (p_consume - p_hat) / (1.0 - p_hat)
    return min(max(value, 0.0), 1.0)


def pre_launch_rows(
    dataset: Dataset, launches: Iterable[ContentLaunch], group: str | None = None
) -> pd.DataFrame:
    """Control-cohort rows pooled across launches, ready for :func:`fit_baseline`."""
    frames = []
    for launch in launches:
        f = launch_frame(dataset, launch, group)
        f = f[f["kind"] == PRE_LAUNCH]
        frames.append(f.assign(content_id=launch.content_id))
    if not frames:
        raise DataError("no launches given")
    return pd.concat(frames)


def fit_pooled_baseline(
    dataset: Dataset,
    launches: Sequence[ContentLaunch],
    kind: str = "glm",
    hyperparams=None,
):
    """Fit the baseline model on the pooled control cohorts of ``launches``."""
    return fit_baseline(pre_launch_rows(dataset, launches), kind, hyperparams)


def estimate_launch_impact(
    dataset: Dataset,
    launch: ContentLaunch,
    model: BaselineModel,
    group: str | None = None,
) -> LaunchImpactSeries:
    """Daily incremental estimates over the launch's treatment window.

    For each post-launch day ``N`` is the number of signups, ``S`` the number
    of them that consumed the content upon signing up, and the baseline rate
    is the model's mean prediction over that day's covariates.
    """
    frame = launch_frame(dataset, launch, group)
    _slices_from_frame(frame, launch)  # raises EmptyControlError
    post = frame[frame["kind"] == POST_LAUNCH]
    post = post.assign(p_hat=predict_frame(model, post) if len(post) else np.zeros(0))
    stats = post.groupby("signup_date").agg(
        n=("consumed", "size"), s=("consumed", "sum"), p=("p_hat", "mean")
    )
    daily = []
    for day in launch.post_dates():
        ts = pd.Timestamp(day)
        if ts in stats.index:
            n, s, p = int(stats.at[ts, "n"]), int(stats.at[ts, "s"]), float(stats.at[ts, "p"])
        else:
            n, s, p = 0, 0, float(model.base_rate)
        if n == 0:
            daily.append(DailyEstimate(launch.content_id, day, group, 0, 0, p, 0.0))
            continue
        try:
            value, clamped = estimate_incremental(n, s, p)
        except UnstableDenominatorError as exc:
            raise UnstableDenominatorError(str(exc), date=day) from exc
        raw = (s - n * p) / (1.0 - p)
        daily.append(DailyEstimate(launch.content_id, day, group, n, s, p, value, clamped, raw))
    return LaunchImpactSeries(launch.content_id, group, tuple(daily))


def estimate_all(
    dataset: Dataset,
    launches: Sequence[ContentLaunch],
    model: BaselineModel,
    by_group: bool = True,
) -> list[LaunchImpactSeries]:
    """Impact series for every launch (and every group when ``by_group``)."""
    groups: list[str | None] = list(dataset.groups) if by_group else [None]
    if by_group and groups == [""]:
        groups = [None]
    out = []
    for launch in launches:
        for g in groups:
            out.append(estimate_launch_impact(dataset, launch, model, g))
    return out


def impact_frame(series_list: Iterable[LaunchImpactSeries]) -> pd.DataFrame:
    frames = [s.to_frame() for s in series_list]
    if not frames:
        return pd.DataFrame(columns=IMPACT_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def impact_summary(series_list: Iterable[LaunchImpactSeries]) -> dict:
    launches = []
    for s in series_list:
        launches.append(
            {
                "content_id": s.content_id,
                "group": s.group or "",
                "days": len(s.daily),
                "total_incremental": s.total_incremental,
                "total_unclamped": s.total_unclamped,
                "clamped_days": sum(d.clamped for d in s.daily),
            }
        )
    return {"launches": launches, "total_incremental": sum(l["total_incremental"] for l in launches)}

"""Diagnostics for impact estimates when no experiment is available.

Signups follow a predictable seasonal shape, so removing well-estimated
content-driven signups from the aggregate series should leave something
*more* regular.  Regularity is measured as the RMSE of a series around its
own seasonal template (day-of-week factors times a centred 28-day trend).
The same template provides the baseline for judging how much of a visible
signup spike the estimates explain.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .domain import ContentLaunch
from .errors import InsufficientDataError

TEMPLATE_WINDOW = 28


def _as_series(obj) -> pd.Series:
    if isinstance(obj, pd.Series):
        s = obj.astype("float64")
    elif hasattr(obj, "to_series"):
        s = obj.to_series()
    else:
        raise TypeError(f"cannot interpret {type(obj).__name__} as a daily series")
    s.index = pd.DatetimeIndex(s.index)
    return s


def _sum_aligned(index: pd.DatetimeIndex, parts) -> pd.Series:
    total = pd.Series(0.0, index=index)
    for p in parts:
        s = _as_series(p)
        s = s.groupby(level=0).sum()
        total = total.add(s.reindex(index, fill_value=0.0), fill_value=0.0)
    return total


def _centred_mean(values: pd.Series, window: int) -> pd.Series:
    min_periods = max(2, window // 4)
    trend = values.rolling(window, center=True, min_periods=min_periods).mean()
    return trend.interpolate(limit_direction="both")


def fit_seasonal_template(
    series: pd.Series, window: int = TEMPLATE_WINDOW, mask: pd.Series | np.ndarray | None = None
) -> pd.Series:
    """Day-of-week factors times a smooth trend.

    ``mask`` marks days excluded from the fit (e.g. a launch window); the
    template is still evaluated there, by interpolating the trend.
    """
    y = _as_series(series)
    keep = np.ones(len(y), dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)
    observed = y.where(keep)
    dow = y.index.dayofweek

    rough = _centred_mean(observed, window)
    ratio = (observed / rough).replace([np.inf, -np.inf], np.nan)
    # weekday factors only from days whose trend window is not cut by the series ends
    half = window // 2
    if len(y) >= 2 * window:
        ratio.iloc[:half] = np.nan
        ratio.iloc[len(y) - half:] = np.nan
    factors = ratio.groupby(dow).mean().reindex(range(7))
    factors = factors.fillna(1.0)
    if factors.mean() > 0:
        factors = factors / factors.mean()
    f = factors.to_numpy()[dow]

    deseasonalised = observed / f
    trend = _centred_mean(deseasonalised, window)
    return pd.Series(trend.to_numpy() * f, index=y.index, name="template")


def _rmse_about_template(series: pd.Series, window: int) -> float:
    template = fit_seasonal_template(series, window)
    diff = (series - template).to_numpy()
    return float(np.sqrt(np.mean(diff ** 2)))


@dataclass(frozen=True)
class ResidualReport:
    residual_series: pd.Series
    regularity_score: float
    baseline_score: float

    @property
    def improvement(self) -> float:
        return self.baseline_score - self.regularity_score


def residual_regularity(
    aggregate_series: pd.Series, impact_series_list: Iterable = (), window: int = TEMPLATE_WINDOW
) -> ResidualReport:
    """Regularity of signups with and without the estimated impacts removed.

    Raises
    ------
    InsufficientDataError
        If the aggregate series is shorter than two template windows.
    """
    agg = _as_series(aggregate_series)
    if len(agg) < 2 * window:
        raise InsufficientDataError(
            f"series has {len(agg)} days; need at least {2 * window} for the seasonal template"
        )
    removed = _sum_aligned(agg.index, impact_series_list)
    residual = (agg - removed).rename("residual")
    return ResidualReport(
        residual_series=residual,
        regularity_score=_rmse_about_template(residual, window),
        baseline_score=_rmse_about_template(agg, window),
    )


def compare_tunings(
    aggregate_series: pd.Series, candidates: Mapping[str, Iterable], window: int = TEMPLATE_WINDOW
) -> pd.DataFrame:
    """Regularity score of each candidate set of estimates, best first."""
    rows = []
    for name, impacts in candidates.items():
        rep = residual_regularity(aggregate_series, impacts, window)
        rows.append((name, rep.regularity_score, rep.baseline_score))
    out = pd.DataFrame(rows, columns=["candidate", "regularity_score", "baseline_score"])
    return out.sort_values(["regularity_score", "candidate"]).reset_index(drop=True)


# --------------------------------------------------------------------------
# multiple assignment
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiAssignmentReport:
    rate: float
    n_subscribers: int
    n_multi: int
    by_content: pd.DataFrame
    by_date: pd.DataFrame
    by_group: pd.DataFrame


def _rate_table(counts: Mapping, key: str) -> pd.DataFrame:
    rows = [(k, m, n, m / n if n else 0.0) for k, (m, n) in counts.items()]
    df = pd.DataFrame(rows, columns=[key, "n_multi", "n_subscribers", "multi_rate"])
    df["_k"] = df[key].astype(str)
    df = df.sort_values(["multi_rate", "_k"], ascending=[False, True]).drop(columns="_k")
    return df.reset_index(drop=True)


def multiple_assignment_diagnostic(assignments: Iterable) -> MultiAssignmentReport:
    """Share of attributed subscribers credited to two or more contents,
    overall and broken down by content, day and group (highest first)."""
    per_content: dict = defaultdict(lambda: [0, 0])
    per_date: dict = defaultdict(lambda: [0, 0])
    per_group: dict = defaultdict(lambda: [0, 0])
    total = multi = 0
    for a in assignments:
        subs_by_content = defaultdict(set)
        for i, j in a.assigned:
            subs_by_content[j].add(i)
        subs = {i for i, _ in a.assigned}
        n_m = len(a.multi_assigned)
        total += len(subs)
        multi += n_m
        for j, members in subs_by_content.items():
            per_content[j][0] += len(members & a.multi_assigned)
            per_content[j][1] += len(members)
        day = a.date.isoformat() if a.date else ""
        per_date[day][0] += n_m
        per_date[day][1] += len(subs)
        per_group[a.group or ""][0] += n_m
        per_group[a.group or ""][1] += len(subs)
    return MultiAssignmentReport(
        rate=multi / total if total else 0.0,
        n_subscribers=total,
        n_multi=multi,
        by_content=_rate_table(per_content, "content_id"),
        by_date=_rate_table(per_date, "date"),
        by_group=_rate_table(per_group, "group"),
    )


# --------------------------------------------------------------------------
# spikes and experiments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpikeReport:
    content_id: str
    capture: float
    estimated: float
    excess: float
    undefined: bool


def spike_capture(
    aggregate_series: pd.Series,
    impact_series,
    launch: ContentLaunch,
    window: int = TEMPLATE_WINDOW,
    min_excess: float | None = None,
) -> SpikeReport:
    """Share of the signup spike after a launch explained by its estimates.

    The expected signups are the seasonal template fitted with the launch
    window masked out; excess is observed minus expected over
    ``[launch, launch + post_window]``.  A spike smaller than ``min_excess``
    (default: two Poisson standard deviations of the expected total) is
    flagged as undefined and its capture reported as NaN.  Captures are
    clipped to ``[0, 2]``.
    """
    agg = _as_series(aggregate_series)
    start, end = pd.Timestamp(launch.launch_date), pd.Timestamp(launch.post_end)
    if start < agg.index.min() or start > agg.index.max():
        raise ValueError(f"launch {launch.content_id!r} outside the aggregate series")
    in_window = (agg.index >= start) & (agg.index <= end)
    template = fit_seasonal_template(agg, window, mask=in_window)
    excess = float((agg[in_window] - template[in_window]).sum())
    est = _sum_aligned(agg.index, [impact_series])
    estimated = float(est[in_window].sum())
    threshold = min_excess
    if threshold is None:
        threshold = 2.0 * math.sqrt(max(float(template[in_window].sum()), 0.0))
    if excess <= threshold:
        return SpikeReport(launch.content_id, float("nan"), estimated, excess, True)
    capture = min(max(estimated / excess, 0.0), 2.0)
    return SpikeReport(launch.content_id, capture, estimated, excess, False)


@dataclass(frozen=True)
class ExperimentReport:
    observed_difference: float
    expected_difference: float
    discrepancy: float
    relative_discrepancy: float
    small_arms: bool


SMALL_ARM = 1_000


def experiment_consistency(
    treatment_estimate: float,
    control_estimate: float,
    experiment_lift: float,
    treatment_size: int,
) -> ExperimentReport:
    """Compare the arm difference of impact estimates with lift x arm size."""
    if treatment_size <= 0:
        raise ValueError("treatment_size must be positive")
    expected = experiment_lift * treatment_size
    observed = treatment_estimate - control_estimate
    disc = observed - expected
    rel = disc / expected if expected else float("inf") if disc else 0.0
    return ExperimentReport(observed, expected, disc, rel, treatment_size < SMALL_ARM)


@dataclass(frozen=True)
class ConsistencyReport:
    spike_capture_fraction: float
    experiment_discrepancy: float
    multi_assignment_rate: float


# --------------------------------------------------------------------------
# report assembly
# --------------------------------------------------------------------------


def fingerprint(config) -> str:
    """Stable short hash of a JSON-serialisable config."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def validation_report(
    aggregate_series: pd.Series,
    impact_series_list: Sequence,
    launches: Sequence[ContentLaunch],
    assignments: Sequence = (),
    experiment: ExperimentReport | None = None,
    config=None,
) -> dict:
    """All diagnostics in one JSON-ready dict."""
    report: dict = {"config_fingerprint": fingerprint(config or {})}
    try:
        res = residual_regularity(aggregate_series, impact_series_list)
        report["residual_regularity"] = {
            "regularity_score": res.regularity_score,
            "baseline_score": res.baseline_score,
            "improvement": res.improvement,
        }
    except InsufficientDataError as exc:
        report["residual_regularity"] = {"error": str(exc)}

    by_content = defaultdict(list)
    for s in impact_series_list:
        by_content[s.content_id].append(s)
    spikes = []
    for launch in launches:
        parts = by_content.get(launch.content_id, [])
        est = _sum_aligned(_as_series(aggregate_series).index, parts)
        rep = spike_capture(aggregate_series, est, launch)
        spikes.append({
            "content_id": rep.content_id, "capture": _clean(rep.capture),
            "estimated": rep.estimated, "excess": rep.excess, "undefined_spike": rep.undefined,
        })
    report["spike_capture"] = spikes

    if assignments:
        m = multiple_assignment_diagnostic(assignments)
        report["multiple_assignment"] = {
            "rate": m.rate, "n_subscribers": m.n_subscribers, "n_multi": m.n_multi,
            "by_content": m.by_content.head(20).to_dict(orient="records"),
        }
    if experiment is not None:
        report["experiment"] = {
            "observed_difference": experiment.observed_difference,
            "expected_difference": experiment.expected_difference,
            "discrepancy": experiment.discrepancy,
            "relative_discrepancy": _clean(experiment.relative_discrepancy),
            "note": "arms below %d members; result is underpowered" % SMALL_ARM
            if experiment.small_arms else "",
        }
    report["total_estimated"] = float(sum(s.total_incremental for s in impact_series_list))
    return report

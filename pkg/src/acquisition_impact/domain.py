"""Domain records, event-log ingestion and launch cohorts.

A :class:`Dataset` holds three columnar tables (signups, consumption events,
promotion exposure) and is treated as immutable once constructed.  Everything
downstream reads it through :func:`launch_frame`, which lines up the eligible
signups of one launch with their covariates and binary consumption label.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
import pandas as pd

from .errors import EmptyControlError, IntegrityError, ParseError

PRE_LAUNCH = "pre_launch"
POST_LAUNCH = "post_launch"

SIGNUP_COLUMNS = ("subscriber_id", "signup_date", "group", "activity")
CONSUMPTION_COLUMNS = ("subscriber_id", "content_id", "event_date", "completion_fraction")
PROMOTION_COLUMNS = ("subscriber_id", "content_id", "promo_intensity")


@dataclass(frozen=True)
class SignupRecord:
    subscriber_id: str
    signup_date: dt.date
    group: str | None = None
    activity: float = 0.0


@dataclass(frozen=True)
class ConsumptionRecord:
    subscriber_id: str
    content_id: str
    event_date: dt.date
    completion_fraction: float


@dataclass(frozen=True)
class PromotionRecord:
    subscriber_id: str
    content_id: str
    promo_intensity: float


@dataclass(frozen=True)
class ContentLaunch:
    """A content launch and the windows used to analyse it.

    The control window is ``[launch - gap - pre_window, launch - gap)``; the
    treatment window is ``[launch, launch + post_window]`` (both ends
    inclusive).  A subscriber counts as a consumer when some event falls in
    ``[availability, availability + label_window)`` with completion at or above
    ``completion_threshold``.
    """

    content_id: str
    launch_date: dt.date
    pre_window_days: int = 28
    pre_gap_days: int = 3
    post_window_days: int = 28
    completion_threshold: float = 0.7
    label_window_days: int = 7

    def __post_init__(self) -> None:
        if self.pre_window_days < 1:
            raise ValueError("pre_window_days must be >= 1")
        if self.pre_gap_days < 0:
            raise ValueError("pre_gap_days must be >= 0")
        if self.post_window_days < 1:
            raise ValueError("post_window_days must be >= 1")
        if not 0.0 < self.completion_threshold <= 1.0:
            raise ValueError("completion_threshold must lie in (0, 1]")
        if self.label_window_days < 1:
            raise ValueError("label_window_days must be >= 1")

    @property
    def pre_start(self) -> dt.date:
        return self.launch_date - dt.timedelta(days=self.pre_gap_days + self.pre_window_days)

    @property
    def pre_end(self) -> dt.date:
        """Exclusive end of the control window."""
        return self.launch_date - dt.timedelta(days=self.pre_gap_days)

    @property
    def post_end(self) -> dt.date:
        """Inclusive end of the treatment window."""
        return self.launch_date + dt.timedelta(days=self.post_window_days)

    def pre_dates(self) -> list[dt.date]:
        return [self.pre_start + dt.timedelta(days=k) for k in range(self.pre_window_days)]

    def post_dates(self) -> list[dt.date]:
        return [self.launch_date + dt.timedelta(days=k) for k in range(self.post_window_days + 1)]

    def to_json(self) -> dict:
        out = asdict(self)
        out["launch_date"] = self.launch_date.isoformat()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ContentLaunch":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown launch field(s): {sorted(unknown)}")
        kwargs = dict(obj)
        kwargs["content_id"] = str(kwargs["content_id"])
        kwargs["launch_date"] = dt.date.fromisoformat(str(kwargs["launch_date"]))
        return cls(**kwargs)


@dataclass(frozen=True)
class CohortSlice:
    content_id: str
    signup_date: dt.date
    members: tuple[str, ...]
    kind: Literal["pre_launch", "post_launch"]


@dataclass(frozen=True)
class LabeledRow:
    subscriber_id: str
    content_id: str
    consumed: bool
    age_days: int
    activity: float
    promo_intensity: float


def _empty_frame(columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame({c: [] for c in columns})


class Dataset:
    """Signups, consumption events and promotion exposure.

    ``signups`` is indexed by ``subscriber_id``; the other two tables are flat.
    Instances are not meant to be mutated after construction; the frames are
    validated once here and shared freely afterwards.
    """

    __slots__ = ("signups", "consumption", "promotion")

    def __init__(
        self,
        signups: pd.DataFrame,
        consumption: pd.DataFrame | None = None,
        promotion: pd.DataFrame | None = None,
        *,
        validate: bool = True,
    ) -> None:
        signups = _normalise_signups(signups)
        consumption = _normalise_consumption(
            _empty_frame(CONSUMPTION_COLUMNS) if consumption is None else consumption
        )
        promotion = _normalise_promotion(
            _empty_frame(PROMOTION_COLUMNS) if promotion is None else promotion
        )
        if validate:
            _validate(signups, consumption, promotion)
        object.__setattr__(self, "signups", signups)
        object.__setattr__(self, "consumption", consumption)
        object.__setattr__(self, "promotion", promotion)

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    @classmethod
    def from_records(
        cls,
        signups: Iterable[SignupRecord],
        consumption: Iterable[ConsumptionRecord] = (),
        promotion: Iterable[PromotionRecord] = (),
    ) -> "Dataset":
        s = pd.DataFrame([asdict(r) for r in signups], columns=SIGNUP_COLUMNS)
        c = pd.DataFrame([asdict(r) for r in consumption], columns=CONSUMPTION_COLUMNS)
        p = pd.DataFrame([asdict(r) for r in promotion], columns=PROMOTION_COLUMNS)
        return cls(s, c, p)

    def __len__(self) -> int:
        return len(self.signups)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.signups.equals(other.signups)
            and self.consumption.equals(other.consumption)
            and self.promotion.equals(other.promotion)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"Dataset({len(self.signups)} signups, {len(self.consumption)} events, "
            f"{len(self.promotion)} promotions)"
        )

    @property
    def groups(self) -> list[str]:
        return sorted(self.signups["group"].unique().tolist())

    def signup_records(self) -> list[SignupRecord]:
        s = self.signups
        return [
            SignupRecord(sid, d.date(), g or None, float(a))
            for sid, d, g, a in zip(s.index, s["signup_date"], s["group"], s["activity"])
        ]

    def restrict_group(self, group: str | None) -> "Dataset":
        """Signups of one group (``None`` keeps everything)."""
        if group is None:
            return self
        keep = self.signups["group"] == (group or "")
        ids = self.signups.index[keep]
        c = self.consumption[self.consumption["subscriber_id"].isin(ids)]
        p = self.promotion[self.promotion["subscriber_id"].isin(ids)]
        return Dataset(
            self.signups[keep], c.reset_index(drop=True), p.reset_index(drop=True),
            validate=False,
        )

    def daily_signups(self, group: str | None = None) -> pd.Series:
        """Number of signups per calendar day, with zero-filled gaps."""
        s = self.signups if group is None else self.signups[self.signups["group"] == group]
        counts = s.groupby("signup_date").size()
        if counts.empty:
            return counts.astype("int64")
        full = pd.date_range(counts.index.min(), counts.index.max(), freq="D")
        return counts.reindex(full, fill_value=0).astype("int64").rename_axis("date")


def _normalise_signups(df: pd.DataFrame) -> pd.DataFrame:
    df = df.copy()
    if df.index.name == "subscriber_id":
        df = df.reset_index()
    missing = set(SIGNUP_COLUMNS) - set(df.columns)
    if missing == {"group"}:
        df["group"] = ""
    elif missing:
        raise IntegrityError(f"signups missing column(s): {sorted(missing)}")
    df = df.loc[:, list(SIGNUP_COLUMNS)]
    df["subscriber_id"] = df["subscriber_id"].astype(str)
    df["signup_date"] = pd.to_datetime(df["signup_date"]).astype("datetime64[ns]")
    df["group"] = df["group"].where(df["group"].notna(), "").astype(str)
    df["activity"] = df["activity"].astype("float64")
    return df.set_index("subscriber_id")


def _normalise_consumption(df: pd.DataFrame) -> pd.DataFrame:
    df = df.loc[:, list(CONSUMPTION_COLUMNS)].copy()
    df["subscriber_id"] = df["subscriber_id"].astype(str)
    df["content_id"] = df["content_id"].astype(str)
    df["event_date"] = pd.to_datetime(df["event_date"]).astype("datetime64[ns]")
    df["completion_fraction"] = df["completion_fraction"].astype("float64")
    return df.reset_index(drop=True)


def _normalise_promotion(df: pd.DataFrame) -> pd.DataFrame:
    df = df.loc[:, list(PROMOTION_COLUMNS)].copy()
    df["subscriber_id"] = df["subscriber_id"].astype(str)
    df["content_id"] = df["content_id"].astype(str)
    df["promo_intensity"] = df["promo_intensity"].astype("float64")
    return df.reset_index(drop=True)


def _validate(signups: pd.DataFrame, consumption: pd.DataFrame, promotion: pd.DataFrame) -> None:
    dup = signups.index[signups.index.duplicated()]
    if len(dup):
        raise IntegrityError(f"duplicate subscriber_id in signups: {dup[0]!r}")
    if (signups["activity"] < 0).any() or signups["activity"].isna().any():
        raise IntegrityError("signup activity must be a non-negative number")

    frac = consumption["completion_fraction"]
    if ((frac < 0) | (frac > 1) | frac.isna()).any():
        raise IntegrityError("completion_fraction must lie in [0, 1]")
    unknown = ~consumption["subscriber_id"].isin(signups.index)
    if unknown.any():
        sid = consumption.loc[unknown, "subscriber_id"].iloc[0]
        raise IntegrityError(f"consumption references unknown subscriber {sid!r}")
    joined = signups["signup_date"].reindex(consumption["subscriber_id"]).to_numpy()
    early = consumption["event_date"].to_numpy() < joined
    if early.any():
        sid = consumption.loc[early, "subscriber_id"].iloc[0]
        raise IntegrityError(f"consumption by {sid!r} predates their signup")

    promo = promotion["promo_intensity"]
    if ((promo < 0) | (promo > 1) | promo.isna()).any():
        raise IntegrityError("promo_intensity must lie in [0, 1]")
    unknown = ~promotion["subscriber_id"].isin(signups.index)
    if unknown.any():
        sid = promotion.loc[unknown, "subscriber_id"].iloc[0]
        raise IntegrityError(f"promotion references unknown subscriber {sid!r}")
    if promotion.duplicated(["subscriber_id", "content_id"]).any():
        raise IntegrityError("duplicate (subscriber_id, content_id) promotion rows")


# --------------------------------------------------------------------------
# File I/O
# --------------------------------------------------------------------------


def _read_rows(path: Path, required: Sequence[str], optional: Sequence[str] = ()):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "missing header row") from None
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(path, 1, f"header lacks column(s) {missing}")
        pos = {c: header.index(c) for c in (*required, *optional) if c in header}
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
            yield lineno, {c: row[i] for c, i in pos.items()}


def _parse_date(path, lineno, text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(path, lineno, f"invalid ISO date {text!r}") from None


def _parse_unit(path, lineno, name: str, text: str, lo: float = 0.0, hi: float = 1.0) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, lineno, f"{name} is not a number: {text!r}") from None
    if math.isnan(value) or not lo <= value <= hi:
        raise ParseError(path, lineno, f"{name}={value} outside [{lo}, {hi}]")
    return value


def read_signups(path) -> pd.DataFrame:
    path = Path(path)
    ids, dates, groups, acts = [], [], [], []
    seen: set[str] = set()
    for lineno, row in _read_rows(path, ("subscriber_id", "signup_date"), ("group", "activity")):
        sid = row["subscriber_id"].strip()
        if not sid:
            raise ParseError(path, lineno, "empty subscriber_id")
        if sid in seen:
            raise IntegrityError(f"{path}:{lineno}: duplicate subscriber_id {sid!r}")
        seen.add(sid)
        ids.append(sid)
        dates.append(_parse_date(path, lineno, row["signup_date"]))
        groups.append(row.get("group", "").strip())
        acts.append(_parse_unit(path, lineno, "activity", row.get("activity", "0") or "0", 0.0, math.inf))
    return pd.DataFrame(
        {"subscriber_id": ids, "signup_date": pd.to_datetime(dates), "group": groups, "activity": acts},
        columns=SIGNUP_COLUMNS,
    )


def read_consumption(path) -> pd.DataFrame:
    path = Path(path)
    cols: dict[str, list] = {c: [] for c in CONSUMPTION_COLUMNS}
    for lineno, row in _read_rows(path, CONSUMPTION_COLUMNS):
        cols["subscriber_id"].append(row["subscriber_id"].strip())
        cols["content_id"].append(row["content_id"].strip())
        cols["event_date"].append(_parse_date(path, lineno, row["event_date"]))
        cols["completion_fraction"].append(
            _parse_unit(path, lineno, "completion_fraction", row["completion_fraction"])
        )
    cols["event_date"] = pd.to_datetime(cols["event_date"])
    return pd.DataFrame(cols, columns=CONSUMPTION_COLUMNS)


def read_promotion(path) -> pd.DataFrame:
    path = Path(path)
    cols: dict[str, list] = {c: [] for c in PROMOTION_COLUMNS}
    for lineno, row in _read_rows(path, PROMOTION_COLUMNS):
        cols["subscriber_id"].append(row["subscriber_id"].strip())
        cols["content_id"].append(row["content_id"].strip())
        cols["promo_intensity"].append(
            _parse_unit(path, lineno, "promo_intensity", row["promo_intensity"])
        )
    return pd.DataFrame(cols, columns=PROMOTION_COLUMNS)


def load_dataset(signup_path, consumption_path=None, promotion_path=None) -> Dataset:
    """Read the three CSV tables into a validated :class:`Dataset`.

    ``consumption_path`` and ``promotion_path`` may be ``None``; the missing
    table is then empty (all promotion intensities default to 0).
    """
    signups = read_signups(signup_path)
    consumption = read_consumption(consumption_path) if consumption_path else None
    promotion = read_promotion(promotion_path) if promotion_path else None
    try:
        return Dataset(signups, consumption, promotion)
    except IntegrityError as exc:
        raise IntegrityError(f"{exc} (while loading {signup_path})") from exc


def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_dataset(dataset: Dataset, out_dir) -> dict[str, Path]:
    """Write ``signups.csv``, ``consumption.csv`` and ``promotion.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "signups": out / "signups.csv",
        "consumption": out / "consumption.csv",
        "promotion": out / "promotion.csv",
    }
    s = dataset.signups
    with open(paths["signups"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIGNUP_COLUMNS)
        dates = s["signup_date"].dt.strftime("%Y-%m-%d")
        for row in zip(s.index, dates, s["group"], map(_fmt_float, s["activity"])):
            w.writerow(row)
    c = dataset.consumption
    with open(paths["consumption"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONSUMPTION_COLUMNS)
        dates = c["event_date"].dt.strftime("%Y-%m-%d")
        for row in zip(c["subscriber_id"], c["content_id"], dates,
                       map(_fmt_float, c["completion_fraction"])):
            w.writerow(row)
    p = dataset.promotion
    with open(paths["promotion"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROMOTION_COLUMNS)
        for row in zip(p["subscriber_id"], p["content_id"], map(_fmt_float, p["promo_intensity"])):
            w.writerow(row)
    return paths


def load_launches(path) -> list[ContentLaunch]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, list):
        raise ValueError(f"{path}: expected a JSON array of launches")
    return [ContentLaunch.from_json(obj) for obj in payload]


def write_launches(launches: Sequence[ContentLaunch], path) -> Path:
    path = Path(path)
    path.write_text(json.dumps([l.to_json() for l in launches], indent=2) + "\n", encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# Labels and cohorts
# --------------------------------------------------------------------------


def _ts(d: dt.date) -> pd.Timestamp:
    return pd.Timestamp(d)


def launch_frame(dataset: Dataset, launch: ContentLaunch, group: str | None = None) -> pd.DataFrame:
    """Eligible signups of one launch with covariates and consumption label.

    Returns a frame indexed by ``subscriber_id`` with columns ``signup_date``,
    ``group``, ``kind``, ``age_days``, ``activity``, ``promo_intensity``,
    ``consumed`` and ``first_consumed`` (date of the first qualifying event,
    NaT when not consumed).  Gap-day signups are excluded.
    """
    s = dataset.signups
    if group is not None:
        s = s[s["group"] == group]
    launch_ts = _ts(launch.launch_date)
    offset = (s["signup_date"] - launch_ts).dt.days.to_numpy()
    lo = -(launch.pre_gap_days + launch.pre_window_days)
    is_pre = (offset >= lo) & (offset < -launch.pre_gap_days)
    is_post = (offset >= 0) & (offset <= launch.post_window_days)
    keep = is_pre | is_post
    frame = s.loc[keep, ["signup_date", "group", "activity"]].copy()
    post = is_post[keep]
    frame["kind"] = np.where(post, POST_LAUNCH, PRE_LAUNCH)
    frame["age_days"] = np.where(post, 0, -offset[keep]).astype("int64")

    promo = dataset.promotion
    promo = promo[promo["content_id"] == launch.content_id].set_index("subscriber_id")["promo_intensity"]
    frame["promo_intensity"] = promo.reindex(frame.index).fillna(0.0).to_numpy(dtype="float64")

    first = _first_qualifying_event(dataset, launch, frame)
    frame["first_consumed"] = first
    frame["consumed"] = first.notna().to_numpy()
    return frame


def _first_qualifying_event(dataset: Dataset, launch: ContentLaunch, frame: pd.DataFrame) -> pd.Series:
    c = dataset.consumption
    c = c[(c["content_id"] == launch.content_id)
          & (c["completion_fraction"] >= launch.completion_threshold)]
    c = c[c["subscriber_id"].isin(frame.index)]
    if c.empty:
        return pd.Series(pd.NaT, index=frame.index, dtype="datetime64[ns]")
    launch_ts = _ts(launch.launch_date)
    avail = frame["signup_date"].where(frame["signup_date"] > launch_ts, launch_ts)
    since = (c["event_date"].to_numpy() - avail.reindex(c["subscriber_id"]).to_numpy())
    since = since.astype("timedelta64[D]").astype("int64")
    ok = (since >= 0) & (since < launch.label_window_days)
    first = c.loc[ok].groupby("subscriber_id")["event_date"].min()
    return first.reindex(frame.index)


def consumption_label(dataset: Dataset, subscriber_id: str, launch: ContentLaunch) -> bool:
    """Whether a subscriber consumed the launch content upon availability.

    Availability is the launch date for subscribers who joined earlier and
    the signup date otherwise.  Absent events give ``False``.
    """
    joined = dataset.signups.loc[subscriber_id, "signup_date"]
    launch_ts = _ts(launch.launch_date)
    avail = max(joined, launch_ts)
    c = dataset.consumption
    ev = c[(c["subscriber_id"] == subscriber_id) & (c["content_id"] == launch.content_id)]
    since = (ev["event_date"] - avail).dt.days
    inside = ev[(since >= 0) & (since < launch.label_window_days)]
    if inside.empty:
        return False
    return bool(inside["completion_fraction"].max() >= launch.completion_threshold)


def build_cohorts(
    dataset: Dataset, launch: ContentLaunch, group: str | None = None
) -> list[CohortSlice]:
    """One slice per day of the control window and of the treatment window.

    Raises
    ------
    EmptyControlError
        If nobody signed up during the control window.
    """
    frame = launch_frame(dataset, launch, group)
    return _slices_from_frame(frame, launch)


def _slices_from_frame(frame: pd.DataFrame, launch: ContentLaunch) -> list[CohortSlice]:
    if not (frame["kind"] == PRE_LAUNCH).any():
        raise EmptyControlError(
            f"no signups in control window [{launch.pre_start}, {launch.pre_end}) "
            f"for content {launch.content_id!r}"
        )
    by_day = {
        d.date(): tuple(sorted(ids))
        for d, ids in frame.groupby("signup_date").groups.items()
    }
    slices = [
        CohortSlice(launch.content_id, d, by_day.get(d, ()), PRE_LAUNCH) for d in launch.pre_dates()
    ]
    slices += [
        CohortSlice(launch.content_id, d, by_day.get(d, ()), POST_LAUNCH) for d in launch.post_dates()
    ]
    return slices


def rows_from_frame(frame: pd.DataFrame, content_id: str) -> list[LabeledRow]:
    return [
        LabeledRow(sid, content_id, bool(c), int(a), float(act), float(p))
        for sid, c, a, act, p in zip(
            frame.index, frame["consumed"], frame["age_days"],
            frame["activity"], frame["promo_intensity"],
        )
    ]


def labeled_rows(dataset: Dataset, cohort_slice: CohortSlice, launch: ContentLaunch) -> list[LabeledRow]:
    """Label and covariates for every member of a cohort slice."""
    frame = launch_frame(dataset, launch)
    frame = frame.loc[list(cohort_slice.members)]
    return rows_from_frame(frame, launch.content_id)

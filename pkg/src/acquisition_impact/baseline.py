"""Baseline (non-incremental) consumption probability model.

The model maps subscription age, subscriber activity and promotion intensity
to the probability that a subscriber who did *not* join for the content
consumes it anyway.  It is trained on pre-launch cohorts only and then scored
on post-launch covariates, which is how the control cohort is re-weighted to
look like the treatment cohort.

Two estimators are provided:

``glm``
    Logistic regression on ``log1p(age)``, ``log1p(activity)`` and the raw
    promotion intensity, fitted by full-batch gradient ascent with a
    backtracking line search and a small L2 penalty on the slopes.
``binned``
    Empirical consumption rate per (age, activity, promotion) cell.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .domain import LabeledRow
from .errors import DataError

log = logging.getLogger(__name__)

EPS = 1e-6
FEATURES = ("age", "activity", "promotion")
TRANSFORMS = {"age": "log1p", "activity": "log1p", "promotion": "identity"}
_COLUMN = {"age": "age_days", "activity": "activity", "promotion": "promo_intensity"}

DEFAULT_HYPERPARAMS = {
    "features": list(FEATURES),
    "l2": 1e-6,
    "max_iter": 500,
    "tol": 1e-8,
    "age_edges": [7, 14, 21, 28],
    "activity_edges": [1.0, 3.0, 10.0],
    "promotion_edges": [0.25, 0.5, 0.75],
}


class DegenerateFitWarning(UserWarning):
    """All training labels are identical; a constant model was returned."""


@dataclass(frozen=True)
class BaselineModel:
    kind: str
    features: tuple[str, ...]
    intercept: float = 0.0
    weights: tuple[float, ...] = ()
    edges: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    cells: Mapping[tuple[int, ...], tuple[int, int]] = field(default_factory=dict)
    base_rate: float = 0.5
    min_age: int = 0
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("glm", "binned"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        bad = [f for f in self.features if f not in FEATURES]
        if bad:
            raise ValueError(f"unknown feature(s) {bad}")
        if self.kind == "glm" and len(self.weights) != len(self.features):
            raise ValueError("one weight per feature required")

    @property
    def is_constant(self) -> bool:
        return not self.features or (
            self.kind == "glm" and all(w == 0.0 for w in self.weights)
        )

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "feature_spec": [{"name": f, "transform": TRANSFORMS[f]} for f in self.features],
            "base_rate": self.base_rate,
            "min_age": self.min_age,
            "metadata": dict(self.metadata),
        }
        if self.kind == "glm":
            out["coefficients"] = {"intercept": self.intercept, "weights": list(self.weights)}
        else:
            out["edges"] = {k: list(v) for k, v in self.edges.items()}
            out["grid"] = [[*key, pos, n] for key, (pos, n) in sorted(self.cells.items())]
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "BaselineModel":
        features = tuple(f["name"] for f in obj["feature_spec"])
        common = dict(
            kind=obj["kind"], features=features, base_rate=float(obj["base_rate"]),
            min_age=int(obj.get("min_age", 0)), metadata=dict(obj.get("metadata", {})),
        )
        if obj["kind"] == "glm":
            coef = obj["coefficients"]
            return cls(intercept=float(coef["intercept"]),
                       weights=tuple(float(w) for w in coef["weights"]), **common)
        k = len(features)
        cells = {tuple(int(v) for v in row[:k]): (int(row[k]), int(row[k + 1])) for row in obj["grid"]}
        edges = {name: tuple(float(e) for e in v) for name, v in obj["edges"].items()}
        return cls(edges=edges, cells=cells, **common)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "BaselineModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class TrainingReport:
    n_rows: int
    log_loss: float
    iterations: int
    converged: bool
    # distance in days between the youngest training subscription and age 0
    extrapolation_days: int = 0
    degenerate: bool = False


def constant_model(rate: float, kind: str = "glm") -> BaselineModel:
    """A model predicting ``rate`` for every covariate value."""
    rate = float(rate)
    if kind == "binned":
        return BaselineModel("binned", (), base_rate=rate)
    p = min(max(rate, EPS), 1 - EPS)
    return BaselineModel("glm", (), intercept=math.log(p / (1 - p)), base_rate=rate)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _as_frame(rows) -> pd.DataFrame:
    if isinstance(rows, pd.DataFrame):
        return rows
    rows = list(rows)
    return pd.DataFrame(
        {
            "consumed": [r.consumed for r in rows],
            "age_days": [r.age_days for r in rows],
            "activity": [r.activity for r in rows],
            "promo_intensity": [r.promo_intensity for r in rows],
        }
    )


def _transform(name: str, values) -> np.ndarray:
    v = np.asarray(values, dtype="float64")
    return np.log1p(v) if TRANSFORMS[name] == "log1p" else v


def _design(features: Sequence[str], frame: pd.DataFrame) -> np.ndarray:
    cols = [_transform(f, frame[_COLUMN[f]].to_numpy()) for f in features]
    if not cols:
        return np.empty((len(frame), 0))
    return np.column_stack(cols)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, EPS, 1 - EPS)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


def _bucket(values: np.ndarray, edges: Sequence[float]) -> np.ndarray:
    return np.searchsorted(np.asarray(edges, dtype="float64"), values, side="right")


# --------------------------------------------------------------------------
# fitting
# --------------------------------------------------------------------------


def fit_baseline(rows, kind: str = "glm", hyperparams: Mapping | None = None):
    """Fit the baseline model on pre-launch rows.

    Parameters
    ----------
    rows : sequence of LabeledRow or DataFrame
        Control-cohort rows pooled across launches.  Rows with
        ``age_days == 0`` belong to a post-launch cohort and are rejected.
    kind : {"glm", "binned"}
    hyperparams : mapping, optional
        Overrides for :data:`DEFAULT_HYPERPARAMS`.

    Returns
    -------
    (BaselineModel, TrainingReport)
    """
    hp = {**DEFAULT_HYPERPARAMS, **(hyperparams or {})}
    frame = _as_frame(rows)
    if frame.empty:
        raise DataError("cannot fit a baseline model on zero rows")
    if (frame["age_days"].to_numpy() == 0).any():
        raise DataError("training rows must come from pre-launch cohorts (age_days == 0 found)")

    y = frame["consumed"].to_numpy(dtype="float64")
    n = len(y)
    rate = float(y.mean())
    min_age = int(frame["age_days"].min())
    meta = {"n_rows": n, "positive_rate": rate, "hyperparams": hp}

    if rate in (0.0, 1.0):
        warnings.warn(
            f"all {n} training labels equal {int(rate)}; returning a constant model",
            DegenerateFitWarning, stacklevel=2,
        )
        model = constant_model(rate, kind)
        model = replace(model, min_age=min_age, metadata=meta)
        report = TrainingReport(n, _log_loss(y, np.full(n, rate)), 0, True, min_age, True)
        return model, report

    features = tuple(hp["features"])
    if kind == "glm":
        return _fit_glm(frame, y, features, hp, min_age, meta)
    if kind == "binned":
        return _fit_binned(frame, y, features, hp, min_age, meta)
    raise ValueError(f"unknown model kind {kind!r}")


def _fit_glm(frame, y, features, hp, min_age, meta):
    X = _design(features, frame)
    n, k = X.shape
    mu = X.mean(axis=0) if k else np.zeros(0)
    sd = X.std(axis=0) if k else np.zeros(0)
    sd = np.where(sd > 0, sd, 1.0)
    Z = np.column_stack([np.ones(n), (X - mu) / sd])
    l2 = float(hp["l2"])
    penalty = np.r_[0.0, np.ones(k)] * l2

    def objective(beta):
        eta = Z @ beta
        ll = np.mean(y * eta - np.logaddexp(0.0, eta))
        return ll - 0.5 * np.dot(penalty * beta, beta)

    def gradient(beta):
        return Z.T @ (y - _sigmoid(Z @ beta)) / n - penalty * beta

    rate = y.mean()
    beta = np.zeros(k + 1)
    beta[0] = math.log(rate / (1 - rate))
    step = 1.0
    value = objective(beta)
    converged = False
    it = 0
    for it in range(1, int(hp["max_iter"]) + 1):
        g = gradient(beta)
        gnorm2 = float(g @ g)
        if math.sqrt(gnorm2) < hp["tol"]:
            converged = True
            it -= 1
            break
        step *= 2.0
        while True:
            cand = beta + step * g
            cand_value = objective(cand)
            if cand_value >= value + 1e-4 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        beta, value = cand, cand_value
    else:
        converged = math.sqrt(float(gradient(beta) @ gradient(beta))) < hp["tol"]

    weights = beta[1:] / sd
    intercept = float(beta[0] - np.dot(weights, mu))
    model = BaselineModel(
        "glm", features, intercept=intercept, weights=tuple(float(w) for w in weights),
        base_rate=float(rate), min_age=min_age, metadata=meta,
    )
    p = _sigmoid(Z @ beta)
    report = TrainingReport(n, _log_loss(y, p), it, converged, min_age)
    if not converged:
        log.warning("baseline GLM stopped after %d iterations without converging", it)
    return model, report


def _fit_binned(frame, y, features, hp, min_age, meta):
    edges = {f: tuple(float(e) for e in hp[f"{f}_edges"]) for f in features}
    keys = _cell_keys(features, edges, frame, min_age)
    cells: dict[tuple[int, ...], tuple[int, int]] = {}
    if keys.shape[1]:
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        pos = np.bincount(inverse, weights=y).round().astype(int)
        cnt = np.bincount(inverse)
        for key, p_, c_ in zip(uniq, pos, cnt):
            cells[tuple(int(v) for v in key)] = (int(p_), int(c_))
    else:
        cells[()] = (int(y.sum()), len(y))
    model = BaselineModel(
        "binned", features, edges=edges, cells=cells, base_rate=float(y.mean()),
        min_age=min_age, metadata=meta,
    )
    p = _predict_binned(model, frame)
    return model, TrainingReport(len(y), _log_loss(y, p), 1, True, min_age)


def _cell_keys(features, edges, frame, min_age) -> np.ndarray:
    cols = []
    for f in features:
        v = frame[_COLUMN[f]].to_numpy(dtype="float64")
        if f == "age":
            v = np.maximum(v, min_age)
        cols.append(_bucket(v, edges[f]))
    if not cols:
        return np.empty((len(frame), 0), dtype=int)
    return np.column_stack(cols)


# --------------------------------------------------------------------------
# prediction
# --------------------------------------------------------------------------


def _predict_binned(model: BaselineModel, frame: pd.DataFrame) -> np.ndarray:
    keys = _cell_keys(model.features, model.edges, frame, model.min_age)
    out = np.full(len(frame), model.base_rate)
    for i, key in enumerate(map(tuple, keys.tolist())):
        cell = model.cells.get(key)
        if cell and cell[1] > 0:
            out[i] = cell[0] / cell[1]
    return out


def predict_frame(model: BaselineModel, frame: pd.DataFrame) -> np.ndarray:
    """Vectorised :func:`predict_p` over a frame of covariates."""
    if model.kind == "glm":
        X = _design(model.features, frame)
        eta = model.intercept + (X @ np.asarray(model.weights) if X.shape[1] else 0.0)
        p = _sigmoid(np.broadcast_to(eta, (len(frame),)))
    else:
        p = _predict_binned(model, frame)
    return np.clip(p, EPS, 1 - EPS)


def predict_p(model: BaselineModel, age_days, activity, promo_intensity):
    """Baseline consumption probability, clipped to ``[1e-6, 1 - 1e-6]``.

    Accepts scalars or array-likes (broadcast together).
    """
    a, b, c = np.broadcast_arrays(
        np.asarray(age_days, dtype="float64"),
        np.asarray(activity, dtype="float64"),
        np.asarray(promo_intensity, dtype="float64"),
    )
    frame = pd.DataFrame(
        {"age_days": a.ravel(), "activity": b.ravel(), "promo_intensity": c.ravel()}
    )
    p = predict_frame(model, frame).reshape(a.shape)
    return float(p) if p.ndim == 0 else p


def adjusted_mean_rate(model: BaselineModel, post_rows) -> float:
    """Mean baseline probability over the post-launch cohort's covariates."""
    frame = _as_frame(post_rows)
    if frame.empty:
        raise DataError("adjusted_mean_rate needs at least one post-launch row")
    return float(predict_frame(model, frame).mean())

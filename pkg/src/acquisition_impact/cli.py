"""Command-line front end: ``aim simulate | fit | estimate | attribute | pareto | validate``.

Every command reads a JSON run config (``--config``) whose relative paths are
resolved against the config file's directory; flags override config values.
``simulate`` writes such a config next to the files it generates, so a
typical session is::

    aim simulate --scenario fixtures/toy.json --seed 7 --out run/
    aim estimate --config run/config.json --out run/
    aim validate --config run/config.json --out run/

Exit codes: 0 success, 1 computational failure, 2 usage or config error.
Set ``AIM_LOG`` (e.g. ``INFO`` or ``DEBUG``) for progress logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import pandas as pd

from . import simulator as sim
from .attribution import (
    assignment_violations,
    attribution_frame,
    build_instances,
    instances_from_json,
    instances_to_json,
    pareto_sweep,
    solve_all,
)
from .baseline import fit_baseline
from .domain import ContentLaunch, Dataset, load_dataset, load_launches
from .errors import AIMError, DataError
from .estimator import (
    estimate_all,
    estimate_launch_impact,
    fit_pooled_baseline,
    impact_frame,
    impact_summary,
    pre_launch_rows,
)
from .validation import experiment_consistency, validation_report

log = logging.getLogger("acquisition_impact")

DEFAULT_LAMBDAS = (0.0, 0.25, 0.5, 1.0, 2.0, 5.0)
BUILTIN_SCENARIOS = {
    "toy": lambda: ("launch", sim.toy_scenario()),
    "null": lambda: ("launch", sim.null_scenario()),
    "seasonal": lambda: ("launch", sim.seasonal_scenario()),
    "mega_launch": lambda: ("launch", sim.mega_launch_scenario()),
    "shock": lambda: ("launch", sim.shock_scenario()),
    "attribution": lambda: ("attribution", sim.AttributionScenario()),
    "experiment": lambda: ("experiment", sim.ExperimentScenario()),
}


class UsageError(Exception):
    """Bad flags, a missing file or an invalid config (exit code 2)."""


# --------------------------------------------------------------------------
# configs
# --------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Inputs and knobs of one analysis run.

    Paths are absolute once loaded.  ``model`` is ``{"kind": ..., "hyperparams": {...}}``.
    """

    signups: Path | None = None
    consumption: Path | None = None
    promotion: Path | None = None
    launches: Path | None = None
    ground_truth: Path | None = None
    instances: Path | None = None
    model: dict = field(default_factory=lambda: {"kind": "glm", "hyperparams": {}})
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    lam: float = 0.0
    solver: str = "exact"
    decay_gamma: float | None = None
    seed: int | None = None
    out: Path | None = None
    by_group: bool = True
    experiment: dict | None = None

    PATH_KEYS = ("signups", "consumption", "promotion", "launches", "ground_truth", "instances")

    @classmethod
    def from_json(cls, obj: dict, base: Path) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__} | {"lambda"}
        unknown = set(obj) - known
        if unknown:
            raise UsageError(f"unknown config key(s): {sorted(unknown)}")
        kw = dict(obj)
        if "lambda" in kw:
            kw["lam"] = kw.pop("lambda")
        for key in cls.PATH_KEYS + ("out",):
            if kw.get(key) is not None:
                kw[key] = (base / kw[key]).resolve()
        if "lambdas" in kw:
            kw["lambdas"] = tuple(float(v) for v in kw["lambdas"])
        model = kw.get("model") or {}
        kw["model"] = {"kind": model.get("kind", "glm"), "hyperparams": dict(model.get("hyperparams", {}))}
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_json(obj, path.parent.resolve())

    def to_json(self, base: Path) -> dict:
        def rel(p):
            return None if p is None else os.path.relpath(p, base)

        out = {k: rel(getattr(self, k)) for k in self.PATH_KEYS if getattr(self, k) is not None}
        out.update(
            model=self.model, lambdas=list(self.lambdas), **{"lambda": self.lam},
            solver=self.solver, decay_gamma=self.decay_gamma, seed=self.seed,
            by_group=self.by_group,
        )
        if self.experiment is not None:
            out["experiment"] = self.experiment
        return out

    def require(self, *keys: str) -> None:
        for key in keys:
            path = getattr(self, key)
            if path is None:
                raise UsageError(f"config has no {key!r} path")
            if not Path(path).exists():
                raise UsageError(f"{key} file not found: {path}")


def _load_scenario(source: str) -> tuple[str, object]:
    path = Path(source)
    if path.is_file():
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc})") from exc
        kind = obj.pop("type", "launch")
        try:
            if kind == "launch":
                return kind, sim.ScenarioConfig.from_json(obj)
            if kind == "attribution":
                return kind, sim.AttributionScenario.from_json(obj)
            if kind == "experiment":
                return kind, sim.ExperimentScenario(**obj)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{path}: invalid scenario ({exc})") from exc
        raise UsageError(f"{path}: unknown scenario type {kind!r}")
    if source in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[source]()
    raise UsageError(f"scenario file not found: {source}")


def scenario_to_json(kind: str, scenario) -> dict:
    """Scenario file contents for a builtin or loaded scenario."""
    if kind == "experiment":
        from dataclasses import asdict

        body = asdict(scenario)
        body = {k: list(v) if isinstance(v, tuple) else v for k, v in body.items()}
    else:
        body = scenario.to_json()
    return {"type": kind, **json.loads(json.dumps(body))}


# --------------------------------------------------------------------------
# shared pipeline steps
# --------------------------------------------------------------------------


def _dataset(cfg: RunConfig) -> Dataset:
    cfg.require("signups", "launches")
    consumption = cfg.consumption
    if consumption is not None and not consumption.exists():
        raise UsageError(f"consumption file not found: {consumption}")
    promotion = cfg.promotion
    if promotion is None or not promotion.exists():
        warnings.warn(
            f"promotion file {'not configured' if promotion is None else f'not found: {promotion}'}; "
            "promotion intensity defaults to 0",
            stacklevel=2,
        )
        promotion = None
    return load_dataset(cfg.signups, consumption, promotion)


def _launches(cfg: RunConfig) -> list[ContentLaunch]:
    cfg.require("launches")
    try:
        return load_launches(cfg.launches)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{cfg.launches}: invalid launch config ({exc})") from exc


def _fit(cfg: RunConfig, dataset: Dataset, launches):
    kind = cfg.model["kind"]
    if kind not in ("glm", "binned"):
        raise UsageError(f"unknown model kind {kind!r}")
    return fit_pooled_baseline(dataset, launches, kind, cfg.model["hyperparams"])


def _estimate(cfg: RunConfig):
    dataset = _dataset(cfg)
    launches = _launches(cfg)
    model, report = _fit(cfg, dataset, launches)
    log.info("fitted %s baseline on %d rows", model.kind, report.n_rows)
    impacts = estimate_all(dataset, launches, model, by_group=cfg.by_group)
    return dataset, launches, model, report, impacts


def _instances(cfg: RunConfig):
    if cfg.instances is not None:
        cfg.require("instances")
        obj = json.loads(Path(cfg.instances).read_text(encoding="utf-8"))
        instances = instances_from_json(obj)
        if cfg.decay_gamma is not None:
            instances = [i.with_decay(cfg.decay_gamma) for i in instances]
        return instances
    dataset, launches, model, _, impacts = _estimate(cfg)
    return build_instances(dataset, launches, impacts, model, cfg.decay_gamma)


def _solve(instances, lam: float, solver: str):
    assignments = solve_all(instances, lam, solver)
    for inst, a in zip(instances, assignments):
        problems = assignment_violations(inst, a)
        if problems:
            raise AIMError(f"invalid assignment on {inst.date}: {problems[0]}")
    return assignments


def _out_dir(cfg: RunConfig) -> Path:
    if cfg.out is None:
        raise UsageError("no output directory: pass --out or --config")
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _report_dict(report) -> dict:
    from dataclasses import asdict

    return asdict(report)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    source = args.scenario
    if source is None:
        raise UsageError("simulate needs --scenario (a scenario JSON file or builtin name)")
    seed = args.seed
    if seed is None:
        raise UsageError("simulate needs --seed")
    if args.out is None:
        raise UsageError("simulate needs --out")
    out = Path(args.out).resolve()
    out.mkdir(parents=True, exist_ok=True)
    kind, scenario = _load_scenario(source)

    if kind == "attribution":
        from dataclasses import replace

        scenario = replace(scenario, rng_seed=seed)
        result = sim.simulate_attribution(scenario)
        _dump(out / "instances.json", instances_to_json(result.instances))
        truth = [sorted(map(list, t)) for t in result.truth]
        _dump(out / "attribution_truth.json", {"assigned": truth, "multi_fraction": result.multi_fraction})
        cfg = RunConfig(instances=out / "instances.json", seed=seed, solver=args.solver or "exact")
    elif kind == "experiment":
        from dataclasses import replace

        scenario = replace(scenario, rng_seed=seed)
        result = sim.simulate_experiment(scenario)
        from .domain import write_dataset, write_launches

        paths = write_dataset(result.dataset, out)
        write_launches([result.launch], out / "launches.json")
        for arm, truth in result.truth.items():
            _dump(out / f"ground_truth_{arm}.json", truth.to_json())
        cfg = RunConfig(
            signups=paths["signups"], consumption=paths["consumption"],
            promotion=paths["promotion"], launches=out / "launches.json", seed=seed,
            model={"kind": "glm", "hyperparams": {"features": []}},
            experiment={
                "lift": scenario.lift, "treatment_size": scenario.treatment_size,
                "treatment_group": "treatment", "control_group": "control",
            },
        )
    else:
        scenario = scenario.with_seed(seed)
        result = sim.simulate(scenario)
        paths = result.write(out)
        analysis = scenario.analysis.get("model", {})
        hyper = {k: v for k, v in analysis.items() if k != "kind"}
        cfg = RunConfig(
            signups=paths["signups"], consumption=paths["consumption"],
            promotion=paths["promotion"], launches=paths["launches"],
            ground_truth=paths["ground_truth"], seed=seed,
            model={"kind": analysis.get("kind", "glm"), "hyperparams": hyper},
        )
    _dump(out / "scenario.json", scenario_to_json(kind, scenario))
    _dump(out / "config.json", cfg.to_json(out))
    print(f"wrote {kind} simulation (seed {seed}) to {out}")
    return 0


def cmd_fit(args) -> int:
    cfg = _config(args)
    dataset, launches = _dataset(cfg), _launches(cfg)
    model, report = _fit(cfg, dataset, launches)
    out = _out_dir(cfg)
    model.save(out / "model.json")
    _dump(out / "fit_report.json", _report_dict(report))
    print(f"{model.kind} baseline fitted on {report.n_rows} rows "
          f"(log loss {report.log_loss:.5f}, converged={report.converged})")
    return 0


def cmd_estimate(args) -> int:
    cfg = _config(args)
    _, _, model, report, impacts = _estimate(cfg)
    out = _out_dir(cfg)
    impact_frame(impacts).to_csv(out / "impact.csv", index=False, float_format="%.10g")
    model.save(out / "model.json")
    summary = impact_summary(impacts)
    summary["model"] = {"kind": model.kind, "training": _report_dict(report)}
    _dump(out / "summary.json", summary)
    print(f"estimated {summary['total_incremental']:.1f} incremental signups "
          f"over {len(impacts)} launch series")
    return 0


def cmd_attribute(args) -> int:
    cfg = _config(args)
    instances = _instances(cfg)
    assignments = _solve(instances, cfg.lam, cfg.solver)
    out = _out_dir(cfg)
    frame = attribution_frame(assignments, instances)
    frame.to_csv(out / "attribution.csv", index=False, float_format="%.10g")
    n_multi = sum(a.n_multi for a in assignments)
    n_subs = sum(a.n_subscribers for a in assignments)
    print(f"attributed {len(frame)} pairs; {n_multi} of {n_subs} subscribers multi-assigned "
          f"(solver={cfg.solver}, lambda={cfg.lam:g})")
    return 0


def cmd_pareto(args) -> int:
    cfg = _config(args)
    instances = _instances(cfg)
    try:
        points = pareto_sweep(instances, cfg.lambdas, cfg.solver)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(cfg)
    frame = pd.DataFrame(
        [(p.lam, p.multi_rate, p.mean_affinity) for p in points],
        columns=["lambda", "multi_rate", "mean_affinity"],
    )
    frame.to_csv(out / "pareto.csv", index=False, float_format="%.10g")
    print(frame.to_string(index=False))
    return 0


def _experiment_report(cfg: RunConfig, dataset: Dataset, launches, kind: str):
    exp = cfg.experiment
    totals = {}
    for arm in (exp.get("treatment_group", "treatment"), exp.get("control_group", "control")):
        rows = pre_launch_rows(dataset, launches, arm)
        model, _ = fit_baseline(rows, kind, cfg.model["hyperparams"])
        totals[arm] = sum(
            estimate_launch_impact(dataset, l, model, arm).total_incremental for l in launches
        )
    t, c = totals.values()
    return experiment_consistency(t, c, float(exp["lift"]), int(exp["treatment_size"]))


def cmd_validate(args) -> int:
    cfg = _config(args)
    dataset, launches, model, _, impacts = _estimate(cfg)
    instances = build_instances(dataset, launches, impacts, model, cfg.decay_gamma)
    assignments = _solve(instances, cfg.lam, cfg.solver)
    experiment = None
    if cfg.experiment:
        experiment = _experiment_report(cfg, dataset, launches, cfg.model["kind"])
    report = validation_report(
        dataset.daily_signups(), impacts, launches, assignments, experiment,
        config=cfg.to_json(Path.cwd()),
    )
    defined = [s for s in report["spike_capture"] if not s["undefined_spike"]]
    report["n_spikes"] = len(defined)
    if cfg.ground_truth is not None and cfg.ground_truth.exists():
        truth = sim.GroundTruth.from_json(json.loads(cfg.ground_truth.read_text(encoding="utf-8")))
        report["ground_truth"] = {
            s.content_id: {
                "estimated": s.total_incremental,
                "true": float(truth.incremental(s.content_id).sum()),
            }
            for s in impacts
            if f"incremental:{s.content_id}" in truth.daily
        }
    out = _out_dir(cfg)
    _dump(out / "validation_report.json", report)
    print(f"validation report: {report['n_spikes']} spike(s), "
          f"{report['total_estimated']:.1f} estimated incremental signups")
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _lambda_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if cfg.out is None and args.config:
        cfg.out = Path(args.config).resolve().parent
    if getattr(args, "out", None):
        cfg.out = Path(args.out).resolve()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "model", None):
        cfg.model = {**cfg.model, "kind": args.model}
    if getattr(args, "solver", None):
        cfg.solver = args.solver
    if getattr(args, "lam", None) is not None:
        cfg.lam = args.lam
    if getattr(args, "lambdas", None) is not None:
        cfg.lambdas = args.lambdas
    if getattr(args, "decay_gamma", None) is not None:
        cfg.decay_gamma = args.decay_gamma
    if cfg.lam < 0:
        raise UsageError("lambda must be non-negative")
    if cfg.solver not in ("exact", "greedy"):
        raise UsageError(f"unknown solver {cfg.solver!r}")
    if cfg.decay_gamma is not None and not 0 < cfg.decay_gamma <= 1:
        raise UsageError("decay gamma must lie in (0, 1]")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aim", description="Content acquisition impact toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="run config JSON")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        return p

    p = add("simulate", cmd_simulate, "generate a synthetic dataset with ground truth")
    p.add_argument("--scenario", help="scenario JSON file or builtin name "
                   f"({', '.join(sorted(BUILTIN_SCENARIOS))})")
    p.add_argument("--solver", choices=("greedy", "exact"))

    for name, func, text in (
        ("fit", cmd_fit, "fit the baseline consumption model"),
        ("estimate", cmd_estimate, "daily incremental signups per launch"),
        ("attribute", cmd_attribute, "assign incremental signups to subscribers"),
        ("pareto", cmd_pareto, "sweep the attribution trade-off weight"),
        ("validate", cmd_validate, "diagnostics for the estimates"),
    ):
        p = add(name, func, text)
        p.add_argument("--model", choices=("glm", "binned"))
        if name in ("attribute", "pareto", "validate"):
            p.add_argument("--solver", choices=("greedy", "exact"))
            p.add_argument("--decay-gamma", dest="decay_gamma", type=float)
        if name in ("attribute", "validate"):
            p.add_argument("--lambda", dest="lam", type=float)
        if name == "pareto":
            p.add_argument("--lambdas", type=_lambda_list, help="comma-separated grid, ascending")
    return parser


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, _value):
        pass


def _configure_logging() -> None:
    level = os.environ.get("AIM_LOG", "WARNING").upper()
    log.setLevel(getattr(logging, level, logging.WARNING))
    if not any(getattr(h, "_aim", False) for h in log.handlers):
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        handler._aim = True
        log.addHandler(handler)


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"aim {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"aim {args.command}: input error: {exc}", file=sys.stderr)
        return 2
    except (AIMError, ValueError, RuntimeError) as exc:
        print(f"aim {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

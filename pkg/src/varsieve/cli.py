"""Command-line driver for the screening workflow.

Every stage can run on its own (``ingest``, ``discretize``, ``train``,
``evaluate``, ``rank``, ``select``, ``reduce``, ``report``, ``synth``) or
chained end to end with ``pipeline``.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import dataset, evaluation, screening, synthbench
from .trees import LearnerSpec, TreeModel, train

ENV_SEED = "VARSIEVE_SEED"
PROTOCOL_ALIASES = {"loo": "leave-one-out", "leave-one-out": "leave-one-out", "training": "training"}


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause

    def to_dict(self) -> dict:
        return {"error": {"stage": self.stage, "type": type(self.cause).__name__,
                          "message": str(self.cause)}}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration


@dataclass
class PipelineConfig:
    input: str
    objectives: list[str]
    out: str
    discretization: dict = field(default_factory=dict)
    learner: dict = field(default_factory=lambda: {"kind": "ladtree", "params": {}})
    protocol: str = "leave-one-out"
    mae: float = 0.4
    rmse: float = 0.55
    max_rounds: int = 20
    compare: list | None = None

    KEYS = ("input", "objectives", "out", "discretization", "learner", "protocol", "mae", "rmse",
            "max_rounds", "compare")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        unknown = sorted(set(d) - set(cls.KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        for key in ("input", "objectives", "out"):
            if d.get(key) in (None, "", []):
                raise ConfigError(f"config needs {key!r}")
        objectives = d["objectives"]
        if isinstance(objectives, str):
            objectives = [o for o in objectives.split(",") if o]
        cfg = cls(input=str(d["input"]), objectives=list(objectives), out=str(d["out"]))
        for key in ("discretization", "learner", "protocol", "mae", "rmse", "max_rounds", "compare"):
            if key in d and d[key] is not None:
                setattr(cfg, key, d[key])
        cfg.validate()
        return cfg

    def validate(self):
        if self.protocol not in PROTOCOL_ALIASES:
            raise ConfigError(f"protocol must be one of {sorted(PROTOCOL_ALIASES)}")
        self.protocol = PROTOCOL_ALIASES[self.protocol]
        try:
            self.learner_spec = LearnerSpec.from_dict(self.learner)
            self.discretization_specs = {
                name: dataset.DiscretizationSpec.from_dict(spec)
                for name, spec in self.discretization.items()
            }
            self.compare_specs = [LearnerSpec.from_dict(s) for s in self.compare] if self.compare else None
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        unknown = sorted(set(self.discretization) - set(self.objectives))
        if unknown:
            raise ConfigError(f"discretization given for non-objectives: {unknown}")
        if not (float(self.mae) > 0 and float(self.rmse) > 0):
            raise ConfigError("mae and rmse thresholds must be > 0")
        if int(self.max_rounds) != self.max_rounds or self.max_rounds < 1:
            raise ConfigError("max_rounds must be an integer >= 1")
        if self.compare is not None and len(self.compare) < 2:
            raise ConfigError("compare needs at least 2 learner specs")

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in self.KEYS}


def _parse_scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(config: dict, dotted: str, value) -> None:
    """``config['a']['b'] = value`` for ``dotted='a.b'``, creating levels as needed."""
    parts = dotted.replace("-", "_").split(".") if "." not in dotted else dotted.split(".")
    parts[0] = parts[0].replace("-", "_")
    node = config
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted!r}: {part!r} is not a mapping")
    node[parts[-1]] = value


def parse_dotted_overrides(extra: list[str]) -> list[tuple[str, object]]:
    """Turn leftover ``--a.b value`` / ``--a.b=value`` arguments into pairs."""
    pairs, i = [], 0
    while i < len(extra):
        arg = extra[i]
        if not arg.startswith("--"):
            raise ConfigError(f"unexpected argument {arg!r}")
        key = arg[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"flag {arg!r} needs a value")
            value = extra[i + 1]
            i += 2
        pairs.append((key, _parse_scalar(value)))
    return pairs


def build_config(args, extra: list[str]) -> PipelineConfig:
    raw: dict = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    flags = {
        "input": args.input, "out": args.out, "protocol": args.protocol, "mae": args.mae,
        "rmse": args.rmse, "max_rounds": args.max_rounds,
    }
    for key, value in flags.items():
        if value is not None:
            raw[key] = value
    if args.objectives:
        raw["objectives"] = [o for o in args.objectives.split(",") if o]
    if args.learner:
        if raw.get("learner", {}).get("kind") != args.learner:
            raw["learner"] = {"kind": args.learner, "params": {}}
    if args.iterations is not None:
        raw.setdefault("learner", {"kind": "ladtree", "params": {}})
        raw["learner"].setdefault("params", {})["iterations"] = args.iterations
    overrides = parse_dotted_overrides(extra)
    if any(key.startswith("learner.") for key, _ in overrides):
        raw.setdefault("learner", {"kind": "ladtree", "params": {}})
    for key, value in overrides:
        set_dotted(raw, key, value)
    return PipelineConfig.from_dict(raw)


# ---------------------------------------------------------------- helpers


def load_table(path, objectives=None) -> dataset.RunTable:
    path = Path(path)
    if path.suffix.lower() == ".arff":
        return dataset.load_arff(path, objectives or None)
    if not objectives:
        raise ConfigError("CSV input needs --objectives")
    return dataset.load_csv(path, objectives)


def discretize_all(table, objectives, specs) -> dataset.RunTable:
    """Bin every continuous objective; equal-frequency into 4 classes unless a spec is given."""
    for name in objectives:
        obj = table.objective(name)
        spec = specs.get(name)
        if obj.categorical:
            if spec is not None:
                raise dataset.DatasetError(f"objective {name!r} is already categorical")
            continue
        table = dataset.discretize_objective(table, name, spec or dataset.DiscretizationSpec("equal-frequency", k=4))
    return table


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # surfaced with the stage name
        raise StageError(name, exc) from exc


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _learner_from_args(args) -> LearnerSpec:
    params = {}
    if args.iterations is not None:
        params["iterations"] = args.iterations
    for key, value in parse_dotted_overrides(args.extra):
        if not key.startswith("learner.params."):
            raise ConfigError(f"unsupported flag --{key} for this subcommand")
        params[key.split(".", 2)[2]] = value
    return LearnerSpec(args.learner or "ladtree", params)


def _objectives(args) -> list[str]:
    return [o for o in (args.objectives or "").split(",") if o]


# ---------------------------------------------------------------- pipeline


def run_pipeline(config: PipelineConfig, canonical: bool = False, stdout=None):
    """Load, discretize, optionally compare, select, reduce and report.

    All artifacts are written at the end; if writing fails, whatever was
    written is removed. Returns the ScreeningReport.
    """
    stdout = stdout or sys.stdout
    start = time.perf_counter()
    table = _stage("load", load_table, config.input, config.objectives)
    table = _stage("discretize", discretize_all, table, config.objectives, config.discretization_specs)
    comparison = None
    if config.compare_specs:
        comparison = {
            name: [e.to_dict() for e in _stage("compare", evaluation.compare_learners, table, name,
                                               config.compare_specs, config.protocol)]
            for name in config.objectives
        }
    selections = [
        _stage("select", screening.select_variables, table, name, config.learner_spec,
               float(config.mae), float(config.rmse), int(config.max_rounds), config.protocol)
        for name in config.objectives
    ]
    reduced = _stage("reduce", screening.reduce_dataset, table, selections)
    duration = time.perf_counter() - start
    report = _stage("report", screening.build_report, table, selections, duration)

    out = Path(config.out)
    created_dir = not out.exists()
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "models").mkdir(exist_ok=True)
        written.append(out / "models")
        path = out / "report.json"
        path.write_text(report.to_json(canonical), encoding="utf-8")
        written.append(path)
        path = out / "selection.json"
        path.write_text(_dump([s.to_dict() for s in selections]) + "\n", encoding="utf-8")
        written.append(path)
        written.append(dataset.write_csv(reduced, out / "reduced.csv"))
        for s in selections:
            path = out / "models" / f"{s.objective}.json"
            path.write_text(s.model.to_json() + "\n", encoding="utf-8")
            written.append(path)
        if comparison is not None:
            path = out / "comparison.json"
            path.write_text(_dump(comparison) + "\n", encoding="utf-8")
            written.append(path)
    except Exception as exc:
        for p in reversed(written):
            if p.is_dir():
                shutil.rmtree(p, ignore_errors=True)
            else:
                p.unlink(missing_ok=True)
        if created_dir:
            shutil.rmtree(out, ignore_errors=True)
        raise StageError("write", exc) from exc
    print(screening.format_table(report), file=stdout)
    return report


# ---------------------------------------------------------------- subcommands


def cmd_ingest(args):
    table = _stage("load", load_table, args.input, _objectives(args))
    summary = {
        "n_runs": table.n_runs,
        "variables": list(table.variables),
        "objectives": [
            {"name": o.name, "kind": "categorical" if o.categorical else "continuous",
             "alphabet": list(o.alphabet) if o.categorical else None}
            for o in table.objectives
        ],
    }
    if args.out:
        dataset.write_csv(table, args.out)
    print(_dump(summary))


def cmd_discretize(args):
    table = _stage("load", load_table, args.input, _objectives(args))
    spec = _stage("discretize", dataset.DiscretizationSpec, args.method, args.k,
                  tuple(float(t) for t in args.thresholds.split(",")) if args.thresholds else None,
                  tuple(args.labels.split(",")) if args.labels else None)
    targets = [args.objective] if args.objective else _objectives(args)
    for name in targets:
        table = _stage("discretize", dataset.discretize_objective, table, name, spec)
    _stage("write", dataset.write_csv, table, args.out)
    print(_dump(table.meta.get("discretization", {})))


def cmd_train(args):
    table = _stage("load", load_table, args.input, _objectives(args))
    table = _stage("discretize", discretize_all, table, _objectives(args), {})
    spec = _stage("train", _learner_from_args, args)
    models = {name: _stage("train", train, spec, table, name) for name in _objectives(args)}
    if len(models) == 1:
        _emit(next(iter(models.values())).to_json(), args.out)
    else:
        out = Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        for name, model in models.items():
            (out / f"{name}.json").write_text(model.to_json() + "\n", encoding="utf-8")


def cmd_evaluate(args):
    table = _stage("load", load_table, args.input, _objectives(args))
    table = _stage("discretize", discretize_all, table, _objectives(args), {})
    spec = _stage("evaluate", _learner_from_args, args)
    protocol = PROTOCOL_ALIASES[args.protocol or "loo"]
    results = {name: _stage("evaluate", evaluation.evaluate, spec, table, name, protocol)[1].to_dict()
               for name in _objectives(args)}
    _emit(_dump(results), args.out)


def cmd_rank(args):
    model = _stage("load", lambda p: TreeModel.from_json(Path(p).read_text(encoding="utf-8")), args.model)
    _emit(_dump(screening.rank_variables(model).to_dict()), args.out)


def cmd_select(args):
    table = _stage("load", load_table, args.input, _objectives(args))
    table = _stage("discretize", discretize_all, table, _objectives(args), {})
    spec = _stage("select", _learner_from_args, args)
    protocol = PROTOCOL_ALIASES[args.protocol or "loo"]
    selections = [
        _stage("select", screening.select_variables, table, name, spec, args.mae, args.rmse,
               args.max_rounds, protocol).to_dict()
        for name in _objectives(args)
    ]
    _emit(_dump(selections), args.out)


def _load_selection(path):
    return [screening.ImportanceRanking.from_dict(d)
            for d in json.loads(Path(path).read_text(encoding="utf-8"))]


def cmd_reduce(args):
    table = _stage("load", load_table, args.input, _objectives(args))
    selections = _stage("load", _load_selection, args.selection)
    reduced = _stage("reduce", screening.reduce_dataset, table, selections)
    _stage("write", dataset.write_csv, reduced, args.out)


def cmd_report(args):
    table = _stage("load", load_table, args.input, _objectives(args))
    selections = _stage("load", _load_selection, args.selection)
    report = _stage("report", screening.build_report, table, selections, args.duration)
    if args.out:
        Path(args.out).write_text(report.to_json(args.canonical), encoding="utf-8")
    print(screening.format_table(report))


def cmd_synth(args):
    seed = int(os.environ.get(ENV_SEED, args.seed))
    groups = [g for g in args.effective.split(";") if g]
    specs = [synthbench.PlantedSpec(args.n_vars, tuple(int(i) for i in g.split(",")), args.family,
                                    args.noise, args.k, seed + m)
             for m, g in enumerate(groups)]
    table, truth = _stage("synth", synthbench.generate_problem, specs, args.n_runs)
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_name(prefix.name + ".csv")
    dataset.write_csv(table, csv_path)
    sidecar = {"seed": seed, "n_runs": args.n_runs, "truth": truth,
               "specs": [s.to_dict() for s in specs]}
    truth_path = prefix.with_name(prefix.name + ".truth.json")
    truth_path.write_text(_dump(sidecar) + "\n", encoding="utf-8")
    print(_dump({"csv": str(csv_path), "truth": str(truth_path)}))


def cmd_pipeline(args):
    try:
        config = build_config(args, args.extra)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        raise StageError("config", exc) from exc
    run_pipeline(config, canonical=args.canonical)


# ---------------------------------------------------------------- parser


def _common(p, *, learner=False, out=True):
    p.add_argument("--input", help="run table (.csv or .arff)")
    p.add_argument("--objectives", help="comma-separated objective columns, e.g. O1,O2")
    if out:
        p.add_argument("--out", help="output path")
    if learner:
        p.add_argument("--learner", choices=["sdr", "info-gain", "best-first", "ladtree"])
        p.add_argument("--iterations", type=int, help="ladtree boosting iterations")
        p.add_argument("--protocol", choices=sorted(PROTOCOL_ALIASES))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varsieve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate a run table")
    _common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("discretize", help="bin continuous objectives into classes")
    _common(p)
    p.add_argument("--objective", help="objective to bin (default: all of --objectives)")
    p.add_argument("--method", required=True, choices=list(dataset.METHODS))
    p.add_argument("--k", type=int)
    p.add_argument("--thresholds", help="comma-separated ascending cut points")
    p.add_argument("--labels", help="comma-separated class labels")
    p.set_defaults(func=cmd_discretize)

    for name, func, help_ in (("train", cmd_train, "train one model per objective"),
                              ("evaluate", cmd_evaluate, "MAE/RMSE of a learner")):
        p = sub.add_parser(name, help=help_)
        _common(p, learner=True)
        p.set_defaults(func=func)

    p = sub.add_parser("rank", help="variable importance of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("select", help="threshold-driven variable selection")
    _common(p, learner=True)
    p.add_argument("--mae", type=float, required=True)
    p.add_argument("--rmse", type=float, required=True)
    p.add_argument("--max-rounds", dest="max_rounds", type=int, default=20)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("reduce", help="keep only selected variables")
    _common(p)
    p.add_argument("--selection", required=True, help="JSON written by `select`")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("report", help="variable-importance report")
    _common(p)
    p.add_argument("--selection", required=True)
    p.add_argument("--duration", type=float)
    p.add_argument("--canonical", action="store_true", help="omit wall-clock duration")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a planted benchmark table")
    p.add_argument("--n-vars", dest="n_vars", type=int, default=42)
    p.add_argument("--effective", required=True,
                   help="1-based planted indices; ';' separates objectives, e.g. '38,15;41,35'")
    p.add_argument("--family", default="linear-threshold", choices=list(synthbench.FAMILIES))
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-runs", dest="n_runs", type=int, default=12)
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and PREFIX.truth.json")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="run the whole workflow")
    _common(p, learner=True)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--mae", type=float)
    p.add_argument("--rmse", type=float)
    p.add_argument("--max-rounds", dest="max_rounds", type=int)
    p.add_argument("--canonical", action="store_true", help="omit wall-clock duration from report.json")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    args.extra = extra
    if extra and args.command not in ("pipeline", "train", "evaluate", "select"):
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        args.func(args)
    except StageError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except (ConfigError, ValueError, OSError) as exc:
        print(json.dumps(StageError(args.command, exc).to_dict()), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

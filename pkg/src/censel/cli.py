"""Command line front end.

Three subcommands:

  censel synth  --preset mas-like --out DIR [--seed N] [overrides]
  censel run    --config cfg.json --out DIR [--workers N] [--seed N]
  censel report --out DIR [--thresholds] [--consensus] [--top-t N] [--freq F]

run reads a JSON config naming either a CSV dataset or an inline synthetic
recipe, executes the full grid, and writes report.csv, report.json and
scatter.svg into --out. report re-reads report.json and prints the
threshold ranking and the consensus feature table.

Exit codes: 0 success, 1 when the run finished but at least one grid cell
failed, 2 for config, parse or I/O problems. The effective seed is
resolved as: --seed flag, then the config's "seed", then the CENSEL_SEED
environment variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .data import Dataset, SynthConfig, generate_synthetic, load_csv, write_csv, write_truth_json
from .errors import CenselError, ConfigError
from .harness import (
    ExperimentConfig,
    consensus_features,
    emit_report,
    emit_scatter,
    parse_threshold,
    rank_thresholds,
    results_from_json,
    run_experiment,
)
from .coxnet import BoostConfig
from .selectors import CBOOST, ENET, LASSO, UNI, SelectorKind

SYNTH_PRESETS = {
    "mas-like": dict(n=873, p=140, n_relevant=10, target_censoring=0.93, correlation=0.2),
    "adni-like": dict(n=819, p=216, n_relevant=10, target_censoring=0.47, correlation=0.2),
}

DEFAULT_SELECTORS = ("uni", "lasso", "enet", "cboost")
DEFAULT_AGGREGATORS = ("mr", "mw", "rra", "ta", "medrank")
DEFAULT_THRESHOLDS = ("fixed:0.10", "fixed:0.25", "quantile75", "kde", "best_probe")


def _resolve_seed(flag_seed: int | None, config_seed) -> int:
    if flag_seed is not None:
        return int(flag_seed)
    if config_seed is not None:
        if not isinstance(config_seed, int) or isinstance(config_seed, bool):
            raise ConfigError("config seed must be an integer")
        return config_seed
    env = os.environ.get("CENSEL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"CENSEL_SEED is not an integer: {env!r}") from None
    return 0


def _reject_unknown(doc: dict, allowed, where: str) -> None:
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _relevant_map(spec, p: int) -> dict[int, float]:
    """Accept a count (alternating +/-1.5 on the first features) or an
    explicit {index: coefficient} object."""
    if isinstance(spec, bool) or not isinstance(spec, (int, dict)):
        raise ConfigError("synth.relevant must be an integer count or an index->coefficient object")
    if isinstance(spec, int):
        if spec < 0 or spec > p:
            raise ConfigError("synth.relevant count out of range")
        return {j: (1.5 if j % 2 == 0 else -1.5) for j in range(spec)}
    out = {}
    for key, value in spec.items():
        try:
            idx = int(key)
        except ValueError:
            raise ConfigError(f"synth.relevant index is not an integer: {key!r}") from None
        out[idx] = float(value)
    return out


def _parse_selector(spec) -> SelectorKind:
    if isinstance(spec, str):
        name, params = spec, {}
    elif isinstance(spec, dict):
        params = dict(spec)
        name = params.pop("name", None)
        if not isinstance(name, str):
            raise ConfigError("selector object needs a \"name\"")
    else:
        raise ConfigError("selectors must be names or objects with a \"name\"")
    if name == "uni":
        _reject_unknown(params, (), "selector uni")
        return UNI()
    if name == "lasso":
        _reject_unknown(params, (), "selector lasso")
        return LASSO()
    if name == "enet":
        _reject_unknown(params, ("alpha",), "selector enet")
        return ENET(float(params.get("alpha", 0.5)))
    if name == "cboost":
        _reject_unknown(params, ("steps", "penalty"), "selector cboost")
        steps = params.get("steps", 100)
        penalty = params.get("penalty")
        return CBOOST(BoostConfig(steps=int(steps), penalty=None if penalty is None else float(penalty)))
    raise ConfigError(f"unknown selector {name!r}")


CONFIG_KEYS = (
    "seed",
    "dataset",
    "synth",
    "selectors",
    "aggregators",
    "thresholds",
    "B",
    "k_folds",
    "repeats",
    "include_individual",
    "rra_alpha",
    "medrank_quorum",
)


def _load_config(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(doc, CONFIG_KEYS, "config")
    return doc


def _experiment_config(doc: dict, seed: int) -> ExperimentConfig:
    selectors = tuple(_parse_selector(s) for s in doc.get("selectors", DEFAULT_SELECTORS))
    aggregators = tuple(doc.get("aggregators", DEFAULT_AGGREGATORS))
    thresholds = tuple(parse_threshold(t) for t in doc.get("thresholds", DEFAULT_THRESHOLDS))
    return ExperimentConfig(
        selectors=selectors,
        aggregators=aggregators,
        thresholds=thresholds,
        B=int(doc.get("B", 50)),
        k_folds=int(doc.get("k_folds", 5)),
        repeats=int(doc.get("repeats", 5)),
        seed=seed,
        include_individual=bool(doc.get("include_individual", True)),
        rra_alpha=float(doc.get("rra_alpha", 0.05)),
        medrank_quorum=float(doc.get("medrank_quorum", 0.2)),
    )


def _load_dataset(doc: dict, config_dir: Path, seed: int, out_dir: Path | None):
    """Materialize the dataset a run config names.

    Relative CSV paths resolve against the config file's directory. An
    inline synth recipe is generated from the run seed; when an output
    directory is given the generated data and its truth sidecar are saved
    there for reproducibility.
    """
    has_csv = "dataset" in doc
    has_synth = "synth" in doc
    if has_csv == has_synth:
        raise ConfigError("config needs exactly one of \"dataset\" or \"synth\"")
    if has_csv:
        section = doc["dataset"]
        if not isinstance(section, dict):
            raise ConfigError("\"dataset\" must be an object")
        _reject_unknown(section, ("path", "time_col", "event_col"), "dataset")
        if "path" not in section:
            raise ConfigError("dataset.path is required")
        path = Path(section["path"])
        if not path.is_absolute():
            path = config_dir / path
        return load_csv(path, section.get("time_col", "time"), section.get("event_col", "event"))
    section = doc["synth"]
    if not isinstance(section, dict):
        raise ConfigError("\"synth\" must be an object")
    _reject_unknown(section, ("n", "p", "relevant", "target_censoring", "correlation"), "synth")
    try:
        n, p = int(section["n"]), int(section["p"])
    except KeyError as err:
        raise ConfigError(f"synth.{err.args[0]} is required") from None
    cfg = SynthConfig(
        n=n,
        p=p,
        relevant=_relevant_map(section.get("relevant", 0), p),
        target_censoring=float(section.get("target_censoring", 0.0)),
        correlation=float(section.get("correlation", 0.0)),
        seed=seed,
    )
    ds, truth = generate_synthetic(cfg)
    if out_dir is not None:
        write_csv(ds, out_dir / "synth.csv")
        write_truth_json(out_dir / "synth.truth.json", ds, truth, cfg)
    return ds


def _cmd_synth(args) -> int:
    seed = _resolve_seed(args.seed, None)
    preset = dict(SYNTH_PRESETS[args.preset])
    if args.n is not None:
        preset["n"] = args.n
    if args.p is not None:
        preset["p"] = args.p
    if args.relevant is not None:
        preset["n_relevant"] = args.relevant
    if args.censoring is not None:
        preset["target_censoring"] = args.censoring
    if args.correlation is not None:
        preset["correlation"] = args.correlation
    cfg = SynthConfig(
        n=preset["n"],
        p=preset["p"],
        relevant=_relevant_map(preset["n_relevant"], preset["p"]),
        target_censoring=preset["target_censoring"],
        correlation=preset["correlation"],
        seed=seed,
    )
    ds, truth = generate_synthetic(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "synth.csv"
    truth_path = out / "synth.truth.json"
    write_csv(ds, csv_path)
    write_truth_json(truth_path, ds, truth, cfg)
    print(f"wrote {csv_path} and {truth_path}")
    print(
        f"n={ds.n} p={ds.p} events={ds.n_events} "
        f"target_censoring={cfg.target_censoring:.4f} realized_censoring={ds.censoring_rate:.4f}"
    )
    return 0


def _cmd_run(args) -> int:
    config_path = Path(args.config)
    doc = _load_config(config_path)
    seed = _resolve_seed(args.seed, doc.get("seed"))
    exp_cfg = _experiment_config(doc, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = _load_dataset(doc, config_path.parent, seed, out)
    results = run_experiment(exp_cfg, ds, workers=args.workers)
    emit_report(results, out / "report.csv", out / "report.json")
    emit_scatter(results, out / "scatter.svg")
    n_failed = sum(r.failed for r in results)
    print(f"wrote {out / 'report.csv'}, {out / 'report.json'}, {out / 'scatter.svg'}")
    print(f"{len(results)} cells, {n_failed} failed (seed {seed})")
    return 1 if n_failed else 0


def _print_threshold_table(results) -> None:
    rows = rank_thresholds(results)
    print("threshold ranking (mean distance over ensemble cells):")
    width = max([len("threshold")] + [len(r[0]) for r in rows])
    print(f"  {'threshold':<{width}}  mean_distance  n_cells")
    for label, dist, n in rows:
        print(f"  {label:<{width}}  {dist:13.6f}  {n:7d}")


def _print_consensus_table(results, top_t: int, freq: float) -> None:
    report = consensus_features(results, top_t=top_t, freq=freq)
    line = f"consensus features (>= {freq:g} of top {top_t} models)"
    if report.short_field:
        line += f" [only {len(report.model_keys)} models available]"
    print(line + ":")
    if not report.features:
        print("  (none)")
        return
    for name in report.features:
        print(f"  {name}  {report.counts[name]}/{len(report.model_keys)}")


def _cmd_report(args) -> int:
    path = Path(args.out) / "report.json"
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from None
    results = results_from_json(payload)
    if not results:
        raise ConfigError(f"{path} holds no results")
    show_thresholds = args.thresholds or not args.consensus
    show_consensus = args.consensus or not args.thresholds
    if show_thresholds:
        _print_threshold_table(results)
    if show_consensus:
        if show_thresholds:
            print()
        _print_consensus_table(results, args.top_t, args.freq)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="censel", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic survival dataset")
    p_synth.add_argument("--preset", choices=sorted(SYNTH_PRESETS), required=True)
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--seed", type=int, default=None)
    p_synth.add_argument("--n", type=int, default=None, help="override sample count")
    p_synth.add_argument("--p", type=int, default=None, help="override feature count")
    p_synth.add_argument("--relevant", type=int, default=None, help="override relevant feature count")
    p_synth.add_argument("--censoring", type=float, default=None, help="override target censoring rate")
    p_synth.add_argument("--correlation", type=float, default=None, help="override design correlation")
    p_synth.set_defaults(func=_cmd_synth)

    p_run = sub.add_parser("run", help="run the selection grid from a JSON config")
    p_run.add_argument("--config", required=True, help="JSON config path")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("report", help="summarize a finished run")
    p_rep.add_argument("--out", required=True, help="directory holding report.json")
    p_rep.add_argument("--thresholds", action="store_true", help="print only the threshold ranking")
    p_rep.add_argument("--consensus", action="store_true", help="print only the consensus features")
    p_rep.add_argument("--top-t", type=int, default=10, dest="top_t")
    p_rep.add_argument("--freq", type=float, default=0.8)
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0
    try:
        return args.func(args)
    except CenselError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entry() -> None:
    raise SystemExit(main(sys.argv[1:]))

"""Command-line entry point: validate, synth, run, score, lag-sweep,
inspect.

Every command reads one YAML config (see README for the schema), honors
``--set key.path=value`` overrides, never mutates its inputs, and puts
all artifacts under the ``--output`` root. Failures print one
machine-parsable line to stderr and exit nonzero.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .corpus import (
    enumerate_dataset,
    generate_synthetic_dataset,
    load_annotations,
    load_recording,
)
from .errors import AffectPipeError, ConfigError
from .evaluation import (
    aggregate_scores,
    lag_sweep,
    score_run,
    write_file_scores,
    write_summary,
)
from .pipeline import run_scenario

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affectpipe",
        description="Continuous valence/arousal prediction from "
                    "multi-channel physiology")
    parser.add_argument("command",
                        choices=("validate", "synth", "run", "score",
                                 "lag-sweep", "inspect"))
    parser.add_argument("--config", required=True,
                        help="YAML configuration file")
    parser.add_argument("--output", default=None,
                        help="output root (overrides paths.output_root)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override run.seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="override run.workers")
    parser.add_argument("--scenario", default=None,
                        help="override run.scenario")
    parser.add_argument("--set", dest="overrides", action="append",
                        metavar="KEY=VALUE", default=[],
                        help="dotted-path config override (repeatable)")
    return parser


def _load_effective_config(args) -> dict:
    config = cfgmod.load_config_file(args.config)
    return cfgmod.apply_overrides(config, args.overrides)


def _require_data_root(config, args):
    data_root, _ = cfgmod.get_paths(config, args.output)
    if data_root is None:
        raise ConfigError("paths.data_root is required")
    if not Path(data_root).is_dir():
        raise ConfigError(f"paths.data_root {data_root} is not a directory")
    return data_root


def _require_output(config, args):
    _, output_root = cfgmod.get_paths(config, args.output)
    if output_root is None:
        raise ConfigError("an output root is required "
                          "(--output or paths.output_root)")
    return output_root


def cmd_validate(args) -> int:
    config = _load_effective_config(args)
    data_root = _require_data_root(config, args)
    index = enumerate_dataset(data_root)
    problems = []
    for entry in index.entries:
        for label, path, loader in (
                ("physiology", entry.physiology_path, load_recording),
                ("annotations", entry.annotation_path, load_annotations)):
            if path is None:
                continue
            if label == "annotations" and entry.split == "test":
                continue  # held-out grids may lack labels
            try:
                loader(path)
            except AffectPipeError as err:
                problems.append((path, type(err).__name__, str(err)))
    for path, kind, message in problems:
        print(f"ERROR {path}: {kind}: {message}")
    print(f"validated {len(index)} entries, {len(problems)} problem(s)")
    return EXIT_FAILURE if problems else EXIT_OK


def cmd_synth(args) -> int:
    config = _load_effective_config(args)
    output_root = _require_output(config, args)
    spec = cfgmod.build_synth_spec(config)
    seed = args.seed if args.seed is not None else \
        (config.get("run") or {}).get("seed", 0)
    index = generate_synthetic_dataset(output_root, int(seed), spec)
    for scenario in index.scenarios():
        folds = index.folds(scenario)
        train = len(index.select(scenario, folds[0], "train"))
        test = len(index.select(scenario, folds[0], "test"))
        print(f"{scenario}: {len(folds)} fold(s), {train} train / "
              f"{test} test files per fold")
    print(f"synthetic dataset written to {output_root}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load_effective_config(args)
    data_root = _require_data_root(config, args)
    output_root = _require_output(config, args)
    run_cfg = cfgmod.build_run_config(config, scenario=args.scenario,
                                      seed=args.seed, workers=args.workers)
    index = enumerate_dataset(data_root)
    tracks, manifest = run_scenario(run_cfg, index,
                                    output_root=output_root)
    manifest["effective_config"] = config
    manifest_path = Path(output_root) / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    print(f"{run_cfg.scenario}: {len(tracks)} prediction tracks written "
          f"under {output_root}")
    print(f"config_hash={manifest['config_hash']}")
    return EXIT_OK


def cmd_score(args) -> int:
    config = _load_effective_config(args)
    data_root = _require_data_root(config, args)
    output_root = _require_output(config, args)
    index = enumerate_dataset(data_root)
    scores = score_run(index, output_root, scenario=args.scenario)
    if not scores:
        raise ConfigError(
            f"no scoreable predictions under {output_root} "
            "(missing files or no ground truth)")
    tree = aggregate_scores(scores)
    reports = Path(output_root) / "reports"
    write_file_scores(scores, reports / "file_scores.csv")
    write_summary(tree, reports / "summary.csv")
    for scenario, stats in tree.scenario_level.items():
        print(f"{scenario}: arousal={stats['arousal'].mean:.4f} "
              f"valence={stats['valence'].mean:.4f}")
    print(f"overall_rmse={tree.overall:.4f}")
    return EXIT_OK


def cmd_lag_sweep(args) -> int:
    config = _load_effective_config(args)
    data_root = _require_data_root(config, args)
    output_root = _require_output(config, args)
    run_cfg = cfgmod.build_run_config(config, scenario=args.scenario,
                                      seed=args.seed, workers=args.workers)
    subsets, delays = cfgmod.build_lag_settings(config)
    index = enumerate_dataset(data_root)
    table = lag_sweep(run_cfg, index, subsets=subsets, delays=delays)
    out = Path(output_root) / "reports" / "lag_table.csv"
    table.to_csv(out)
    for subset in subsets:
        print(f"{subset}: best delay {table.best_delay(subset):.3f}s "
              f"(rmse {table.values[:, subsets.index(subset)].min():.4f})")
    print(f"lag table written to {out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    config = _load_effective_config(args)
    data_root = _require_data_root(config, args)
    output_root = _require_output(config, args)
    index = enumerate_dataset(data_root)
    rows = []
    for entry in index.entries:
        rec = load_recording(entry.physiology_path)
        row = {
            "scenario": entry.scenario, "fold": entry.fold,
            "split": entry.split, "subject": entry.subject_id,
            "video": entry.video_id,
            "physiology_s": f"{rec.duration:.3f}",
            "n_samples": rec.n_samples,
        }
        if entry.annotation_path is not None:
            try:
                track = load_annotations(entry.annotation_path)
                row.update(annotation_s=f"{track.duration:.3f}",
                           valence_mean=f"{track.valence.mean():.3f}",
                           arousal_mean=f"{track.arousal.mean():.3f}")
            except AffectPipeError:
                row.update(annotation_s="", valence_mean="",
                           arousal_mean="")
        rows.append(row)
    out = Path(output_root) / "reports" / "inspect.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    keys = ["scenario", "fold", "split", "subject", "video",
            "physiology_s", "n_samples", "annotation_s", "valence_mean",
            "arousal_mean"]
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, restval="")
        writer.writeheader()
        writer.writerows(rows)
    durations = [float(r["physiology_s"]) for r in rows]
    print(f"{len(rows)} files; duration min/mean/max = "
          f"{min(durations):.1f}/{np.mean(durations):.1f}/"
          f"{max(durations):.1f} s")
    print(f"per-file summaries written to {out}")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "synth": cmd_synth,
    "run": cmd_run,
    "score": cmd_score,
    "lag-sweep": cmd_lag_sweep,
    "inspect": cmd_inspect,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"error: ConfigError: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except AffectPipeError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

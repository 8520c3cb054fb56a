"""Command-line front end: ``synth``, ``fit``, ``produce`` and ``search``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 runtime failure,
5 every search trial failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import errors
from .data_io import SyntheticSpec, generate_synthetic_dataset, split_table, write_table_csv
from .hyperspace import default_autovideo_space, load_space
from .pipeline import atomic_write_bytes, bind_config, fit_pipeline, load_fitted, produce_pipeline, save_fitted
from .searcher import PipelineSearcher, table_input
from .tuners import JsonlTrialLog
from .values import Table
from .zoo import STANDARD_ALIASES, build_standard_pipeline, default_registry
from .zoo.annotations import extract_frames, frame_files, load_annotations

log = logging.getLogger("vidpipe")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME, EXIT_ALL_FAILED = 0, 2, 3, 4, 5
DEFAULT_SEED = 42

REQUIRED = {
    "synth": ("out",),
    "fit": ("table", "media", "target_index", "out"),
    "produce": ("table", "media", "artifact", "out"),
    "search": ("table", "media", "target_index", "valid_table", "valid_media", "out"),
}


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


DATA_ERRORS = (OSError, DataError, errors.RaggedRows, errors.BadTargetIndex, errors.CorruptVideo,
               errors.UnsupportedExtension, errors.CorruptArtifact, errors.TooFewRows)
CONFIG_ERRORS = (ConfigError, errors.MalformedSpace, errors.UnknownAlgorithm, errors.MissingPretrainedPath,
                 errors.UnknownKey, errors.OutOfDomainValue)


def _parse_set(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _load_table(path, media, target_index: Optional[int]) -> Table:
    if target_index is None:
        # unlabeled table: nothing marked as target
        return replace(load_annotations(path, 0, media), target_index=None)
    return load_annotations(path, target_index, media)


def _prepare_media(table: Table) -> None:
    """Extract frames for every table entry lacking a frame directory."""
    media = Path(table.media_dir)
    if not media.is_dir():
        raise DataError(f"media directory {media} does not exist")
    names = table.video_column()
    if not names:
        raise DataError("annotation table has no rows")
    missing = [n for n in names if not frame_files(media / Path(n).stem)]
    if not missing:
        return
    ext = Path(missing[0]).suffix.lstrip(".")
    if not any(media.glob(f"*.{ext}")):
        raise DataError(f"no .{ext} videos in {media}")
    extract_frames(media, ext)
    still = [n for n in missing if not frame_files(media / Path(n).stem)]
    if still:
        raise DataError(f"{len(still)} videos named in the table are missing, e.g. {still[0]}")


def _atomic_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def cmd_synth(args) -> int:
    try:
        spec = SyntheticSpec(args.classes, args.videos_per_class, args.frames, args.height, args.width,
                             args.channels, args.noise_std, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    bundle = generate_synthetic_dataset(spec, out)
    table = load_annotations(bundle.table_path, bundle.target_index, bundle.media_dir)
    train, valid = split_table(table, args.valid_fraction, args.seed)
    write_table_csv(train, out / "train.csv")
    write_table_csv(valid, out / "valid.csv")
    print(f"synth ok train={len(train)} valid={len(valid)}")
    return EXIT_OK


def cmd_fit(args) -> int:
    registry = default_registry()
    config = {"algorithm": args.algorithm, **_parse_set(args.set)}
    if args.pretrained:
        config.update(load_pretrained=True, pretrained_path=args.pretrained)
    desc = build_standard_pipeline(config, registry)
    table = load_annotations(args.table, args.target_index, args.media)
    _prepare_media(table)
    fitted = fit_pipeline(desc, table_input(table), registry, args.seed)
    out = produce_pipeline(fitted, table_input(table), registry).payload
    train_acc = float(np.mean(np.array(out.predicted()) == np.array(table.labels())))
    save_fitted(fitted, args.out)
    print(f"fit ok steps={len(desc.steps)} train_acc={train_acc:.4f}")
    return EXIT_OK


def predictions_csv(table: Table, predicted: Sequence[str]) -> str:
    lines = ["d3mIndex,label"]
    lines += [f"{i},{p}" for i, p in zip(table.index_column(), predicted)]
    return "\n".join(lines) + "\n"


def cmd_produce(args) -> int:
    registry = default_registry()
    if not Path(args.artifact).is_file():
        raise DataError(f"fitted artifact {args.artifact} does not exist")
    fitted = load_fitted(args.artifact)
    table = _load_table(args.table, args.media, args.target_index)
    _prepare_media(table)
    predicted = produce_pipeline(fitted, table_input(table), registry).payload.predicted()
    _atomic_text(args.out, predictions_csv(table, predicted))
    line = f"produce ok rows={len(predicted)}"
    if table.target_index is not None:
        acc = float(np.mean(np.array(predicted) == np.array(table.labels())))
        line += f" acc={acc:.4f}"
    print(line)
    return EXIT_OK


def cmd_search(args) -> int:
    registry = default_registry()
    space = load_space(args.space) if args.space else default_autovideo_space()
    base = _parse_set(args.set)
    probe = build_standard_pipeline({"algorithm": args.algorithm, **base}, registry)
    rng = np.random.default_rng(0)
    for key, dom in space.items():
        try:
            bind_config(probe, {key: dom.sample(rng)}, registry, STANDARD_ALIASES)
        except errors.OutOfDomainValue:
            pass  # such trials fail individually
    train = load_annotations(args.table, args.target_index, args.media)
    valid = load_annotations(args.valid_table, args.target_index, args.valid_media)
    _prepare_media(train)
    _prepare_media(valid)
    searcher = PipelineSearcher(train, valid, args.algorithm, registry, fit_seed=args.seed, base_config=base)
    log_path = Path(args.log) if args.log else Path(str(args.out) + ".trials.jsonl")
    partial = log_path.with_name(log_path.name + ".partial")
    if partial.exists():
        partial.unlink()
    try:
        result = searcher.search(space, {"strategy": args.strategy, "max_trials": args.trials, "seed": args.seed},
                                 JsonlTrialLog(partial))
    except BaseException:
        if partial.exists():
            partial.unlink()
        raise
    os.replace(partial, log_path)
    best = {k: (list(v) if isinstance(v, tuple) else v) for k, v in result.best_config.items()}
    _atomic_text(args.out, json.dumps(best, indent=2) + "\n")
    print(f"search ok trials={len(result.trials)} best={result.best_value:.4f}")
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "fit": cmd_fit, "produce": cmd_produce, "search": cmd_search}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidpipe", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file of option defaults; explicit flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--table", help="annotation CSV")
        p.add_argument("--media", help="directory holding the videos")
        p.add_argument("--target-index", type=int, help="label column index")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out")

    p = sub.add_parser("synth", help="generate a synthetic train/valid dataset")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--videos-per-class", type=int, default=25)
    p.add_argument("--frames", type=int, default=16)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--channels", type=int, choices=(1, 3), default=3)
    p.add_argument("--noise-std", type=float, default=8.0)
    p.add_argument("--valid-fraction", type=float, default=0.2)

    p = sub.add_parser("fit", help="fit the standard pipeline and save the artifact")
    shared(p)
    p.add_argument("--algorithm", default="toy_mlp")
    p.add_argument("--pretrained", help="initial classifier weights")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="hyperparameter override")

    p = sub.add_parser("produce", help="predict with a fitted artifact")
    shared(p)
    p.add_argument("--artifact", help="fitted pipeline file")

    p = sub.add_parser("search", help="tune hyperparameters on a validation split")
    shared(p)
    p.add_argument("--algorithm", default="toy_mlp")
    p.add_argument("--strategy", choices=("random", "tpe"), default="tpe")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--space", help="search-space JSON file")
    p.add_argument("--valid-table")
    p.add_argument("--valid-media")
    p.add_argument("--log", help="trial log (JSONL)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="fixed override for every trial")
    return parser


def parse_args(argv: Optional[List[str]] = None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config:
        try:
            defaults = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read --config: {exc}")
        if not isinstance(defaults, dict):
            parser.error("--config must hold a JSON object")
        # flags win: re-parse with the file's values as defaults
        for action in parser._subparsers._group_actions[0].choices.values():
            action.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
        args = parser.parse_args(argv)
    missing = [name for name in REQUIRED[args.command] if getattr(args, name, None) is None]
    if missing:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.error("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    if getattr(args, "trials", 1) is not None and getattr(args, "trials", 1) < 1:
        parser.error("--trials must be >= 1")
    return args


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except errors.AllTrialsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

"""Command-line entry point: extract, train, eval, reproduce, bench.

Exit codes: 0 success, 1 reproduction failure, 2 input error,
3 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .audio import load_wav
from .config import PipelineConfig, load_config
from .encoding import (
    BinaryPattern,
    build_pattern_set,
    fit_ranges,
    fixed_ranges,
    read_features_csv,
    write_features_csv,
    summarize_track,
)
from .errors import ConfigError, DimensionMismatch, InputError, MfhError
from .evaluation import bench_forward, epoch_error_curve, evaluate, format_bench, split_dataset
from .features import analyze_track
from .hebbnet import EpochLog, init_network, load_model, save_model, train
from .reference import run_checks

log = logging.getLogger("mfhebb")

EXIT_OK, EXIT_REPRODUCE, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2, 3
EPOCHS_FILE = "epochs.csv"
CURVE_FILE = "curve.csv"


def discover_tracks(root) -> list:
    """(label, path) for every ``*.wav`` under one-subdirectory-per-label, sorted."""
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"dataset root {root} is not a directory")
    tracks = []
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for path in sorted(label_dir.iterdir()):
            if path.is_file() and path.suffix.lower() == ".wav":
                tracks.append((label_dir.name, path))
    return tracks


def extract_one(label: str, path: Path, cfg: PipelineConfig):
    """Summary for one file, or the error message if it cannot be analysed."""
    try:
        buf = load_wav(path)
        f_min, f_max = cfg.mel_band()
        feats = analyze_track(buf, cfg.frame_spec(), cfg.n_mels, cfg.n_mfcc, f_min, f_max)
        return summarize_track(feats, f"{label}/{path.stem}", label), None
    except MfhError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def cmd_extract(args) -> int:
    cfg = load_config(args.config)
    root = args.dataset or cfg.dataset_root
    if not root:
        raise ConfigError("no dataset given (--dataset or dataset_root)")
    tracks = discover_tracks(root)
    if not tracks:
        log.error("no .wav files under %s", root)
        return EXIT_INPUT
    workers = args.workers if args.workers is not None else cfg.n_workers()
    n = len(tracks)
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n)) as pool:
            results = list(pool.map(extract_one, *zip(*tracks), [cfg] * n))
    else:
        results = [extract_one(label, path, cfg) for label, path in tracks]

    summaries = []
    for (label, path), (summary, err) in zip(tracks, results):
        if err:
            log.warning("skipping %s: %s", path, err)
        else:
            summaries.append(summary)
    if not summaries:
        log.error("every file failed to decode")
        return EXIT_INPUT
    write_features_csv(summaries, args.out)
    log.info("wrote %d of %d tracks to %s", len(summaries), n, args.out)
    return EXIT_OK


def _encoding_doc(features, ranges, codes) -> dict:
    return {
        "features": list(features),
        "ranges": {f: [float(lo), float(hi)] for f, (lo, hi) in ranges.items()},
        "class_codes": {label: str(code) for label, code in codes.items()},
    }


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    summaries = read_features_csv(args.features)
    if not summaries:
        raise InputError(f"{args.features} has no tracks")
    train_split, _ = split_dataset(summaries, cfg.split_ratio, cfg.seed)
    if not train_split:
        log.error("split ratio %.2f leaves the training split empty", cfg.split_ratio)
        return EXIT_CONFIG

    features = cfg.feature_list()
    codes = cfg.codes_for(s.label for s in summaries)
    ranges = fixed_ranges(features) if cfg.quantization == "fixed" else fit_ranges(train_split, features)
    patterns = build_pattern_set(train_split, codes, ranges, features)

    n_inputs = patterns.input_width + (1 if cfg.bias_input else 0)
    net = init_network(n_inputs, patterns.target_width, cfg.bias_input)
    tcfg = cfg.train_config()
    net, epochs = train(net, patterns, tcfg)
    log.info("trained %d epochs on %d patterns, final error %.6f",
             len(epochs), len(patterns), epochs.errors[-1])

    out = Path(args.out)
    extra = {
        "encoding": _encoding_doc(features, ranges, codes),
        "split": {"ratio": cfg.split_ratio, "seed": cfg.seed},
    }
    save_model(out, net, tcfg, extra)
    (out.parent / EPOCHS_FILE).write_text(epoch_error_curve(epochs).to_csv(), encoding="utf-8")
    return EXIT_OK


def _read_epochs(path: Path) -> EpochLog:
    log_ = EpochLog()
    if not path.is_file():
        return log_
    for line in path.read_text(encoding="utf-8").splitlines()[1:]:
        epoch, err = line.split(",")
        log_.epochs.append(int(epoch))
        log_.errors.append(float(err))
    return log_


def cmd_eval(args) -> int:
    net, _, extra = load_model(args.model)
    try:
        enc = extra["encoding"]
        split = extra["split"]
        features = tuple(enc["features"])
        ranges = {f: tuple(v) for f, v in enc["ranges"].items()}
        codes = {label: BinaryPattern.parse(bits) for label, bits in enc["class_codes"].items()}
    except (KeyError, TypeError) as exc:
        raise InputError(f"model {args.model} lacks encoding metadata: {exc}") from exc

    summaries = read_features_csv(args.features)
    if not summaries:
        raise InputError(f"{args.features} has no tracks")
    _, test_split = split_dataset(summaries, split["ratio"], split["seed"])
    if not test_split:
        log.error("test split is empty")
        return EXIT_CONFIG
    patterns = build_pattern_set(test_split, codes, ranges, features)
    width = patterns.input_width + (1 if net.bias_input else 0)
    if width != net.n_inputs or patterns.target_width != net.n_outputs:
        raise DimensionMismatch(
            f"model is {net.n_inputs}x{net.n_outputs}, patterns are "
            f"{patterns.input_width}->{patterns.target_width}"
        )

    epochs = _read_epochs(Path(args.model).parent / EPOCHS_FILE)
    report = evaluate(net, patterns, codes, epochs)
    out = Path(args.out)
    out.write_text(report.to_json(), encoding="utf-8")
    if len(epochs):
        (out.parent / CURVE_FILE).write_text(epoch_error_curve(epochs).to_csv(), encoding="utf-8")
    print(f"accuracy {report.accuracy_overall:.6f}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    checks = run_checks()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<24} {c.detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_REPRODUCE


def _int_list(text: str) -> list:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive integers")
    return values


def cmd_bench(args) -> int:
    rows = bench_forward([(n, args.outputs) for n in args.sizes], reps=args.reps)
    print(format_bench(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfh", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="audio corpus -> features CSV")
    p.add_argument("--dataset", help="root with one subdirectory of .wav files per label")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--workers", type=int, help="extraction processes (default: config, else cores)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="features CSV -> model JSON + epochs.csv")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a model on the test split")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="replay the reference worked examples")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("bench", help="time the forward pass")
    p.add_argument("--sizes", type=_int_list, default=[8, 64, 512], help="input counts, e.g. 8,64,512")
    p.add_argument("--outputs", type=int, default=8)
    p.add_argument("--reps", type=int, default=50)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    warnings.simplefilter("default")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

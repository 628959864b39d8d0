"""Split validation, signed-binary error tables, LMS, accuracy and timing."""

from __future__ import annotations

import json
import math
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .encoding import BinaryPattern, PatternSet, decode, from_bipolar
from .errors import (
    EmptyLog,
    EmptyManifest,
    EmptyPredictions,
    EmptyRows,
    InputError,
    WidthMismatch,
)
from .hebbnet import EpochLog, HebbNetwork, forward, init_network, predict_many


def _default_label(item):
    if hasattr(item, "label"):
        return item.label
    return item[1]


def split_dataset(
    manifest: Sequence,
    ratio: float = 0.66,
    seed: int = 0,
    label: Callable = _default_label,
) -> tuple:
    """Stratified train/test split.

    Per label, floor(ratio * count) shuffled items go to train and the rest to
    test; both halves are then shuffled. Items may be anything ``label`` can
    read a class from (objects with ``.label`` or ``(id, label)`` tuples by
    default).
    """
    if not 0 < ratio < 1:
        raise InputError(f"split ratio must be in (0, 1), got {ratio}")
    if len(manifest) == 0:
        raise EmptyManifest("nothing to split")
    rng = np.random.default_rng(seed)
    groups = defaultdict(list)
    for i, item in enumerate(manifest):
        groups[label(item)].append(i)
    train_idx, test_idx = [], []
    for name in sorted(groups):
        idx = groups[name]
        order = rng.permutation(len(idx))
        # tolerance keeps e.g. 0.29 * 100 from flooring to 28
        cut = math.floor(ratio * len(idx) + 1e-9)
        train_idx += [idx[j] for j in order[:cut]]
        test_idx += [idx[j] for j in order[cut:]]
    train_idx = [train_idx[j] for j in rng.permutation(len(train_idx))]
    test_idx = [test_idx[j] for j in rng.permutation(len(test_idx))]
    return [manifest[i] for i in train_idx], [manifest[i] for i in test_idx]


def signed_binary(n: int) -> str:
    """Minimal base-2 string with a leading '-' for negatives; '0' for zero."""
    return ("-" if n < 0 else "") + format(abs(n), "b")


def signed_binary_error(desired: BinaryPattern, actual: BinaryPattern) -> tuple:
    """(decode(desired) - decode(actual), its signed binary string)."""
    if desired.width != actual.width:
        raise WidthMismatch(f"desired has {desired.width} bits, actual has {actual.width}")
    err = decode(desired) - decode(actual)
    return err, signed_binary(err)


@dataclass(frozen=True)
class EvalRow:
    input: BinaryPattern
    actual: BinaryPattern
    desired: BinaryPattern
    error_int: int
    error_binary: str

    @classmethod
    def build(cls, input: BinaryPattern, actual: BinaryPattern, desired: BinaryPattern) -> "EvalRow":
        err, text = signed_binary_error(desired, actual)
        return cls(input, actual, desired, err, text)


def lms_error(rows: Sequence[EvalRow]) -> float:
    """Root mean square of error_int / 2**width over the rows."""
    if not rows:
        raise EmptyRows("no rows to score")
    return math.sqrt(sum((r.error_int / 2 ** r.desired.width) ** 2 for r in rows) / len(rows))


def nearest_label(pattern: BinaryPattern, class_codes: Mapping[str, BinaryPattern]) -> str:
    """Label whose code is closest in Hamming distance; ties go to the lowest code."""
    if not class_codes:
        raise InputError("no class codes to decode against")

    def key(item):
        _, code = item
        if code.width != pattern.width:
            raise WidthMismatch(f"pattern has {pattern.width} bits, code has {code.width}")
        dist = sum(a != b for a, b in zip(pattern.bits, code.bits))
        return dist, decode(code)

    return min(class_codes.items(), key=key)[0]


@dataclass
class AccuracyReport:
    overall: float
    per_class: dict
    counts: dict


def accuracy_report(predictions: Sequence[tuple]) -> AccuracyReport:
    """Percent correct over (predicted, true) label pairs, overall and per true label."""
    if not predictions:
        raise EmptyPredictions("no predictions to score")
    hits = defaultdict(int)
    totals = defaultdict(int)
    for predicted, true in predictions:
        totals[true] += 1
        hits[true] += predicted == true
    overall = 100.0 * sum(hits.values()) / len(predictions)
    per_class = {k: 100.0 * hits[k] / totals[k] for k in sorted(totals)}
    return AccuracyReport(overall, per_class, dict(sorted(totals.items())))


@dataclass
class ErrorCurve:
    epochs: list
    errors: list
    first: float
    last: float
    non_increasing: bool  # after epoch 1
    constant: bool

    def to_csv(self) -> str:
        lines = ["epoch,error"]
        lines += [f"{e},{err:.6f}" for e, err in zip(self.epochs, self.errors)]
        return "\n".join(lines) + "\n"

    @property
    def note(self) -> str:
        if self.constant:
            return "constant series: non-increasing holds trivially"
        return "non-increasing" if self.non_increasing else "error rises after epoch 1"


def epoch_error_curve(log: EpochLog) -> ErrorCurve:
    if len(log) == 0:
        raise EmptyLog("training log has no epochs")
    errs = [float(e) for e in log.errors]
    return ErrorCurve(
        epochs=list(log.epochs),
        errors=errs,
        first=errs[0],
        last=errs[-1],
        non_increasing=all(b <= a for a, b in zip(errs, errs[1:])),
        constant=len(set(errs)) == 1,
    )


@dataclass
class EvalReport:
    rows: list
    lms: float
    accuracy_overall: float
    accuracy_per_class: dict
    epoch_errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "input": str(r.input),
                    "actual": str(r.actual),
                    "desired": str(r.desired),
                    "error_int": r.error_int,
                    "error_binary": r.error_binary,
                }
                for r in self.rows
            ],
            "lms": self.lms,
            "accuracy_overall": self.accuracy_overall,
            "accuracy_per_class": self.accuracy_per_class,
            "epoch_errors": [{"epoch": e, "error": err} for e, err in self.epoch_errors],
        }

    def to_json(self) -> str:
        return dumps_fixed(self.to_dict()) + "\n"


def dumps_fixed(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON text with every float written to 6 decimal places.

    The stdlib encoder has no float format hook, hence the small walker.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return {True: "true", False: "false", None: "null"}[obj]
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError(f"cannot serialise {obj}")
        return f"{float(obj):.6f}"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps_fixed(str(k))}: {dumps_fixed(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps_fixed(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def evaluate(
    net: HebbNetwork,
    patterns: PatternSet,
    class_codes: Mapping[str, BinaryPattern],
    log: Optional[EpochLog] = None,
) -> EvalReport:
    """Predict every pattern and assemble rows, LMS and accuracies."""
    if len(patterns) == 0:
        raise EmptyRows("test split is empty")
    actual = predict_many(net, patterns.inputs)
    rows, pairs = [], []
    for entry, out in zip(patterns, actual):
        desired = from_bipolar(entry.target)
        rows.append(EvalRow.build(from_bipolar(entry.input), out, desired))
        pairs.append((nearest_label(out, class_codes), entry.label))
    acc = accuracy_report(pairs)
    curve = list(zip(log.epochs, log.errors)) if log is not None and len(log) else []
    return EvalReport(rows, lms_error(rows), acc.overall, acc.per_class, curve)


@dataclass(frozen=True)
class BenchRow:
    n_inputs: int
    n_outputs: int
    median_seconds: float
    ratio: Optional[float]  # against the previous row


def bench_forward(sizes: Sequence[tuple], reps: int = 50, calls: int = 100, seed: int = 0) -> list:
    """Median wall time of one ``forward`` call for each (n_inputs, n_outputs).

    Each repetition times ``calls`` back-to-back calls after a warm-up pass;
    BLAS is pinned to one thread.
    """
    if reps < 10:
        raise InputError(f"reps must be >= 10, got {reps}")
    rng = np.random.default_rng(seed)
    rows = []
    prev = None
    with threadpool_limits(limits=1):
        for n, m in sorted(sizes):
            if n < 1 or m < 1:
                raise InputError(f"sizes must be positive, got ({n}, {m})")
            net = init_network(n, m)
            net.weights[:] = rng.standard_normal((n, m))
            x = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            for _ in range(calls):
                forward(net, x)
            samples = []
            for _ in range(reps):
                t0 = time.perf_counter()
                for _ in range(calls):
                    forward(net, x)
                samples.append((time.perf_counter() - t0) / calls)
            med = statistics.median(samples)
            rows.append(BenchRow(n, m, med, med / prev if prev else None))
            prev = med
    return rows


def format_bench(rows: Sequence[BenchRow]) -> str:
    lines = [f"{'n_inputs':>9} {'n_outputs':>9} {'median_us':>10} {'ratio':>7}"]
    for r in rows:
        ratio = f"{r.ratio:7.2f}" if r.ratio is not None else f"{'-':>7}"
        lines.append(f"{r.n_inputs:>9} {r.n_outputs:>9} {r.median_seconds * 1e6:>10.3f} {ratio}")
    return "\n".join(lines)

"""Reference worked examples and the self-checks that replay them.

Three small artefacts need no audio: the bipolar AND training run of the Hebb
rule (patterns, per-step deltas and weights), the byte encodings of four
reference feature values, and a table of signed binary output errors. The
``reproduce`` command runs every check here.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .encoding import (
    CANONICAL_FEATURES,
    BinaryPattern,
    PatternEntry,
    PatternSet,
    quantize_to_byte,
    to_binary_pattern,
)
from .evaluation import signed_binary_error
from .hebbnet import TrainConfig, activate, forward, init_network, train

# Bias column first; the target is the AND of the last two components.
AND_INPUTS = ((1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1))
AND_TARGETS = (1, -1, -1, -1)
AND_DELTAS = ((1, 1, 1), (-1, -1, 1), (-1, 1, -1), (-1, 1, 1))
AND_WEIGHTS = ((1, 1, 1), (0, 0, 2), (-1, 1, 1), (-2, 2, 2))

# Plain Hebb: unit rate, no momentum, a single pass.
AND_CONFIG = TrainConfig(learning_rate=1.0, momentum=0.0, max_epochs=1,
                         target_error=0.0, momentum_enabled=False)

FEATURE_VALUES = dict(zip(CANONICAL_FEATURES, (26.5, 61.2, 58.4, 36.6)))
FEATURE_CODES = dict(zip(CANONICAL_FEATURES, ("00011010", "00111101", "00111010", "00100100")))


@dataclass(frozen=True)
class ErrorRow:
    input: str
    actual: str
    desired: str
    printed: str  # error string as listed
    consistent: bool  # False where the listed string disagrees with desired - actual


ERROR_ROWS = (
    ErrorRow("1010101", "1110001", "1010001", "-100000", True),
    ErrorRow("1010100", "1010110", "1010010", "-100", True),
    ErrorRow("1010101", "1010011", "1010011", "0", True),
    ErrorRow("1010011", "0010011", "1010010", "111111", True),
    ErrorRow("1010010", "1011011", "1010011", "-1000", True),
    ErrorRow("1010011", "1110100", "1010001", "-10011", False),
    ErrorRow("1010010", "1010010", "1010010", "0", True),
    ErrorRow("1010001", "1000101", "1010101", "100", False),
)


def and_patterns(order=None) -> PatternSet:
    idx = range(len(AND_INPUTS)) if order is None else order
    return PatternSet([
        PatternEntry(np.array(AND_INPUTS[i], dtype=float), np.array([AND_TARGETS[i]], dtype=float), "and")
        for i in idx
    ])


def train_and(order=None, record_updates: bool = True):
    net = init_network(3, 1, bias_input=True)
    return train(net, and_patterns(order), AND_CONFIG, record_updates=record_updates)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def check_and_trajectory() -> Check:
    _, log = train_and()
    got = [tuple(int(v) for v in w[:, 0]) for w in log.updates]
    ok = got == list(AND_WEIGHTS) and all(
        np.array_equal(w[:, 0], np.array(ref, dtype=float)) for w, ref in zip(log.updates, AND_WEIGHTS)
    )
    return Check("and-trajectory", ok, f"weights {' -> '.join(map(str, got))}")


def check_and_classification() -> Check:
    net, _ = train_and(record_updates=False)
    outs = tuple(int(activate(forward(net, x))[0]) for x in AND_INPUTS)
    return Check("and-classification", outs == AND_TARGETS, f"outputs {outs}")


def check_and_order_invariance() -> Check:
    finals = {tuple(train_and(p, record_updates=False)[0].weights[:, 0]) for p in permutations(range(4))}
    return Check("and-order-invariance", len(finals) == 1, f"{len(finals)} distinct final weight vector(s) over 24 orders")


def check_feature_codes() -> list:
    checks = []
    for name in CANONICAL_FEATURES:
        code = str(to_binary_pattern(quantize_to_byte(FEATURE_VALUES[name], 0.0, 255.0)))
        checks.append(Check(f"encoding-{name}", code == FEATURE_CODES[name],
                            f"{FEATURE_VALUES[name]} -> {code} (expected {FEATURE_CODES[name]})"))
    return checks


def oracle_error(row: ErrorRow) -> int:
    return int(row.desired, 2) - int(row.actual, 2)


def check_error_rows() -> list:
    checks = []
    for i, row in enumerate(ERROR_ROWS, start=1):
        err, text = signed_binary_error(BinaryPattern.parse(row.desired), BinaryPattern.parse(row.actual))
        oracle = oracle_error(row)
        if row.consistent:
            ok = err == oracle and text == row.printed
            detail = f"{text} (listed {row.printed})"
        else:
            oracle_text = ("-" if oracle < 0 else "") + format(abs(oracle), "b")
            ok = err == oracle and text == oracle_text
            detail = f"{text}; listed {row.printed} is inconsistent with desired - actual (documented)"
        checks.append(Check(f"error-row-{i}", ok, detail))
    return checks


def run_checks() -> list:
    return [
        check_and_trajectory(),
        check_and_classification(),
        check_and_order_invariance(),
        *check_feature_codes(),
        *check_error_rows(),
    ]

"""Single-layer feedforward network trained with the Hebb rule.

Inputs connect straight to outputs through one weight matrix ``W`` of shape
(n_inputs, n_outputs); the net input is ``x @ W`` and each output fires +1
when its net input is positive, -1 otherwise. Training adds the outer product
of input and target to ``W`` for every pattern, optionally with a heavy-ball
momentum term carried from the previous update.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .encoding import BinaryPattern, PatternSet, from_bipolar, to_bipolar
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyPatternSet,
    InputError,
    InvalidDimensions,
)


@dataclass
class HebbNetwork:
    weights: np.ndarray
    bias_input: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise InvalidDimensions(f"weights must be 2-D, got shape {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)):
            raise InputError("weights must be finite")

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "HebbNetwork":
        return HebbNetwork(self.weights.copy(), self.bias_input)


@dataclass
class TrainConfig:
    learning_rate: float = 0.2
    momentum: float = 0.7
    max_epochs: int = 10000
    target_error: float = 0.01
    momentum_enabled: bool = True
    normalize: bool = False  # divide W by max |w| after each epoch
    unsupervised: bool = False  # use the network's own output as the target

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if int(self.max_epochs) != self.max_epochs or self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be a positive integer, got {self.max_epochs}")
        if not self.target_error >= 0:
            raise ConfigError(f"target_error must be >= 0, got {self.target_error}")
        self.max_epochs = int(self.max_epochs)

    @property
    def effective_momentum(self) -> float:
        return self.momentum if self.momentum_enabled else 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class EpochLog:
    epochs: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # W after each epoch, if recorded
    updates: list = field(default_factory=list)  # W after each pattern, if recorded

    def __len__(self) -> int:
        return len(self.epochs)


def init_network(n_inputs: int, n_outputs: int, bias_input: bool = False) -> HebbNetwork:
    if n_inputs < 1 or n_outputs < 1 or (bias_input and n_inputs < 2):
        raise InvalidDimensions(
            f"need n_inputs >= {2 if bias_input else 1} and n_outputs >= 1, "
            f"got ({n_inputs}, {n_outputs})"
        )
    return HebbNetwork(np.zeros((n_inputs, n_outputs)), bias_input)


def _as_input(net: HebbNetwork, x) -> np.ndarray:
    """Input as a float array (or row stack), bias prepended when missing."""
    x = np.asarray(x, dtype=np.float64)
    width = x.shape[-1] if x.ndim else 0
    if net.bias_input and width == net.n_inputs - 1:
        ones = np.ones(x.shape[:-1] + (1,))
        x = np.concatenate((ones, x), axis=-1)
    elif width != net.n_inputs:
        raise DimensionMismatch(f"input width {width} does not match n_inputs={net.n_inputs}")
    return x


def _as_target(net: HebbNetwork, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if t.shape[-1] != net.n_outputs:
        raise DimensionMismatch(f"target width {t.shape[-1]} does not match n_outputs={net.n_outputs}")
    return t


def forward(net: HebbNetwork, x) -> np.ndarray:
    """Net input ``x @ W``; no activation."""
    return _as_input(net, x) @ net.weights


def activate(y_in):
    """+1 where the net input is positive, -1 otherwise (including 0)."""
    out = np.where(np.asarray(y_in) > 0, 1.0, -1.0)
    return float(out) if out.ndim == 0 else out


def _delta(x, t, cfg: TrainConfig, prev) -> np.ndarray:
    d = cfg.learning_rate * np.outer(x, t)
    mu = cfg.effective_momentum
    if mu and prev is not None:
        d += mu * prev
    return d


def hebb_update(net: HebbNetwork, x, t, cfg: TrainConfig, prev_delta=None):
    """One Hebb step. Returns the updated copy of ``net`` and the applied delta.

    delta = lr * outer(x, t) + momentum * prev_delta
    """
    x = _as_input(net, x)
    t = _as_target(net, t)
    if prev_delta is not None and np.shape(prev_delta) != net.weights.shape:
        raise DimensionMismatch(f"prev_delta shape {np.shape(prev_delta)} != {net.weights.shape}")
    d = _delta(x, t, cfg, prev_delta)
    return HebbNetwork(net.weights + d, net.bias_input), d


def pattern_error(net: HebbNetwork, inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean over patterns of (Hamming distance to target) / n_outputs."""
    out = activate(inputs @ net.weights)
    return float(np.mean(out != targets))


def train(
    net: HebbNetwork,
    patterns: PatternSet,
    cfg: TrainConfig = TrainConfig(),
    record_weights: bool = False,
    record_updates: bool = False,
) -> tuple:
    """Apply Hebb updates over ``patterns`` in order, epoch after epoch.

    Stops after ``cfg.max_epochs`` or once the epoch error is at or below
    ``cfg.target_error``. ``net`` is not modified.
    """
    if len(patterns) == 0:
        raise EmptyPatternSet("nothing to train on")
    inputs = _as_input(net, patterns.inputs)
    targets = _as_target(net, patterns.targets)

    w = net.weights.copy()
    prev = None
    log = EpochLog()
    for epoch in range(1, cfg.max_epochs + 1):
        for x, t in zip(inputs, targets):
            if cfg.unsupervised:
                t = activate(x @ w)
            prev = _delta(x, t, cfg, prev)
            w += prev
            if record_updates:
                log.updates.append(w.copy())
        if cfg.normalize:
            peak = np.abs(w).max()
            if peak > 0:
                w /= peak
        current = HebbNetwork(w, net.bias_input)
        err = pattern_error(current, inputs, targets)
        log.epochs.append(epoch)
        log.errors.append(err)
        if record_weights:
            log.snapshots.append(w.copy())
        if err <= cfg.target_error:
            break
    return HebbNetwork(w, net.bias_input), log


def predict(net: HebbNetwork, x: Union[BinaryPattern, np.ndarray, list]) -> BinaryPattern:
    """Binary output pattern for one input (bipolar -1 maps to bit 0)."""
    if isinstance(x, BinaryPattern):
        x = to_bipolar(x)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("predict takes a single input vector")
    return from_bipolar(activate(forward(net, x)))


def predict_many(net: HebbNetwork, inputs) -> list:
    out = activate(forward(net, np.atleast_2d(inputs)))
    return [from_bipolar(row) for row in np.atleast_2d(out)]


def model_to_dict(net: HebbNetwork, cfg: Optional[TrainConfig] = None, extra: Optional[dict] = None) -> dict:
    doc = {
        "n_inputs": net.n_inputs,
        "n_outputs": net.n_outputs,
        "bias_input": net.bias_input,
        "weights": [float(v) for v in net.weights.ravel()],
        "config": asdict(cfg) if cfg is not None else {},
    }
    if extra:
        doc.update(extra)
    return doc


def model_from_dict(doc: dict) -> tuple:
    """Inverse of model_to_dict: (network, config or None, extra keys)."""
    try:
        n, m = int(doc["n_inputs"]), int(doc["n_outputs"])
        weights = np.array(doc["weights"], dtype=np.float64)
        bias = bool(doc["bias_input"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model document: {exc}") from exc
    if weights.size != n * m:
        raise DimensionMismatch(f"{weights.size} weights for a {n}x{m} network")
    cfg = TrainConfig.from_dict(doc["config"]) if doc.get("config") else None
    extra = {k: v for k, v in doc.items()
             if k not in ("n_inputs", "n_outputs", "bias_input", "weights", "config")}
    return HebbNetwork(weights.reshape(n, m), bias), cfg, extra


def save_model(path, net: HebbNetwork, cfg: Optional[TrainConfig] = None, extra: Optional[dict] = None) -> None:
    text = json.dumps(model_to_dict(net, cfg, extra), indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> tuple:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    return model_from_dict(doc)

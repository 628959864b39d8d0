"""Flat ``key = value`` pipeline configuration.

Every key has a default, so an empty file (or no file) is a valid config.
The file is parsed as TOML, which covers the flat format with ``#``
comments; nested tables are rejected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .audio import FrameSpec
from .encoding import CANONICAL_FEATURES, SCALAR_FEATURES, default_class_codes, parse_class_codes
from .errors import ConfigError, MfhError
from .hebbnet import TrainConfig

SEED_ENV = "MFH_SEED"


@dataclass
class PipelineConfig:
    dataset_root: str = ""
    output_dir: str = "."
    # framing
    frame_len: int = 2048
    hop: int = 512
    window: str = "hann"
    # mfcc
    n_mels: int = 26
    n_mfcc: int = 13
    f_min: float = 0.0
    f_max: float = 0.0  # 0 means Nyquist
    # encoding
    quantization: str = "minmax"  # or "fixed": (0, 255) for every feature
    features: str = ",".join(CANONICAL_FEATURES)
    class_codes: str = ""  # "label=bits, ..."; empty means sorted-index codes
    # training
    learning_rate: float = 0.2
    momentum: float = 0.7
    momentum_enabled: bool = True
    max_epochs: int = 10000
    target_error: float = 0.01
    normalize: bool = False
    unsupervised: bool = False
    bias_input: bool = False
    # split
    split_ratio: float = 0.66
    seed: int = 0
    # extraction
    workers: int = 0  # 0 means one per logical core

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            self.frame_spec()
            self.train_config()
        except (ValueError, MfhError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.n_mels < 2 or not 2 <= self.n_mfcc <= self.n_mels:
            raise ConfigError(f"need 2 <= n_mfcc <= n_mels, got n_mfcc={self.n_mfcc}, n_mels={self.n_mels}")
        if self.f_min < 0 or self.f_max < 0 or (self.f_max and self.f_max <= self.f_min):
            raise ConfigError(f"bad mel band f_min={self.f_min}, f_max={self.f_max}")
        if self.quantization not in ("minmax", "fixed"):
            raise ConfigError(f"quantization must be 'minmax' or 'fixed', got {self.quantization!r}")
        unknown = set(self.feature_list()) - set(SCALAR_FEATURES)
        if unknown or not self.feature_list():
            raise ConfigError(f"unknown or empty feature list: {self.features!r}")
        if not 0 < self.split_ratio < 1:
            raise ConfigError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")
        if self.class_codes:
            try:
                parse_class_codes(self.class_codes)
            except MfhError as exc:
                raise ConfigError(f"class_codes: {exc}") from exc
        if self.dataset_root and not Path(self.dataset_root).is_dir():
            raise ConfigError(f"dataset_root {self.dataset_root!r} is not a directory")

    def frame_spec(self) -> FrameSpec:
        return FrameSpec(self.frame_len, self.hop, self.window)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            max_epochs=self.max_epochs,
            target_error=self.target_error,
            momentum_enabled=self.momentum_enabled,
            normalize=self.normalize,
            unsupervised=self.unsupervised,
        )

    def feature_list(self) -> tuple:
        return tuple(f.strip() for f in self.features.split(",") if f.strip())

    def codes_for(self, labels) -> dict:
        if self.class_codes:
            return parse_class_codes(self.class_codes)
        return default_class_codes(labels)

    def mel_band(self) -> tuple:
        return self.f_min, (self.f_max or None)

    def n_workers(self) -> int:
        return self.workers or os.cpu_count() or 1


def _coerce(name: str, kind, value):
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{name} must be true or false, got {value!r}")
    if kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if isinstance(value, str):
        return value
    raise ConfigError(f"{name} must be a string, got {value!r}")


_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def config_from_mapping(values: dict) -> PipelineConfig:
    known = {f.name: _TYPES[f.type] for f in fields(PipelineConfig)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, dict):
            raise ConfigError(f"nested tables are not allowed ({key!r})")
        kwargs[key] = _coerce(key, known[key], value)
    return PipelineConfig(**kwargs)


def load_config(path: Optional[str] = None, env: Optional[dict] = None) -> PipelineConfig:
    """Read ``path`` (if given), then apply the MFH_SEED override."""
    values = {}
    if path:
        try:
            with open(path, "rb") as fh:
                values = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            values["seed"] = int(env[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from exc
    return config_from_mapping(values)

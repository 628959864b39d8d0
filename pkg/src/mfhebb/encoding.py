"""Per-track summaries, 8-bit quantisation and bipolar pattern sets."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    DuplicateClassCode,
    EmptyTrack,
    InputError,
    InvalidRange,
    OutOfRange,
    UnknownLabel,
)
from .features import TrackFeatures

BYTE_WIDTH = 8
BYTE_MAX = 255

# Classifier inputs in row order: beat, FFT-derived centroid, MFCC, pitch.
CANONICAL_FEATURES = ("beat", "fft_stat", "mfcc_stat", "pitch")
CSV_COLUMNS = ("track_id", "label", "beat", "fft_stat", "mfcc_stat", "pitch", "zcr_mean")
SCALAR_FEATURES = CSV_COLUMNS[2:]


@dataclass
class FeatureSummary:
    track_id: str
    label: str
    beat: float
    fft_stat: float
    mfcc_stat: float
    pitch: float
    zcr_mean: float
    beat_default: bool = False
    unvoiced: bool = False
    frames: Optional[TrackFeatures] = field(default=None, repr=False, compare=False)

    def value(self, feature: str) -> float:
        if feature not in SCALAR_FEATURES:
            raise KeyError(f"unknown feature {feature!r}")
        return getattr(self, feature)


def summarize_track(
    features: TrackFeatures,
    track_id: str = "",
    label: str = "",
    keep_frames: bool = False,
) -> FeatureSummary:
    """Collapse per-frame features to one scalar each.

    Silent frames are left out of the centroid mean and unvoiced frames out
    of the pitch median. A track with no voiced frame gets pitch 0 and the
    ``unvoiced`` flag.
    """
    if features.n_frames == 0:
        raise EmptyTrack(f"track {track_id!r} has no frames")
    if features.mfcc.shape[1] < 2:
        raise InputError("mfcc_stat needs at least 2 coefficients per frame")

    centroid = features.centroid[~np.isnan(features.centroid)]
    voiced = features.pitch[~np.isnan(features.pitch)]
    return FeatureSummary(
        track_id=track_id,
        label=label,
        beat=float(features.tempo.bpm),
        fft_stat=float(centroid.mean()) if centroid.size else 0.0,
        mfcc_stat=float(features.mfcc[:, 1].mean()),
        pitch=float(np.median(voiced)) if voiced.size else 0.0,
        zcr_mean=float(np.mean(features.zcr)),
        beat_default=not features.tempo.periodic,
        unvoiced=voiced.size == 0,
        frames=features if keep_frames else None,
    )


def quantize_to_byte(value: float, lo: float = 0.0, hi: float = 255.0) -> int:
    """floor((value - lo) / (hi - lo) * 255), clamped to [0, 255].

    With the default range this is plain ``floor(value)``.
    """
    if not hi > lo:
        raise InvalidRange(f"need lo < hi, got lo={lo}, hi={hi}")
    # multiply before dividing so lo=0, hi=255 stays exact
    scaled = (value - lo) * BYTE_MAX / (hi - lo)
    return int(min(BYTE_MAX, max(0, math.floor(scaled))))


@dataclass(frozen=True)
class BinaryPattern:
    """Fixed-width unsigned binary word, most significant bit first."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits or any(b not in (0, 1) for b in bits):
            raise OutOfRange(f"pattern bits must be a non-empty 0/1 sequence, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text: str) -> "BinaryPattern":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise OutOfRange(f"not a binary string: {text!r}")
        return cls(tuple(int(c) for c in text))

    @property
    def width(self) -> int:
        return len(self.bits)

    def __int__(self) -> int:
        return decode(self)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


def decode(pattern: BinaryPattern) -> int:
    value = 0
    for bit in pattern.bits:
        value = (value << 1) | bit
    return value


def to_binary_pattern(n: int, width: int = BYTE_WIDTH) -> BinaryPattern:
    if not 0 <= n < (1 << width):
        raise OutOfRange(f"{n} does not fit in {width} unsigned bits")
    return BinaryPattern(tuple((n >> (width - 1 - i)) & 1 for i in range(width)))


def to_bipolar(pattern: BinaryPattern) -> np.ndarray:
    return np.array(pattern.bits, dtype=np.float64) * 2.0 - 1.0


def from_bipolar(vector) -> BinaryPattern:
    """Inverse of to_bipolar; positive components become 1, the rest 0."""
    return BinaryPattern(tuple(int(v > 0) for v in np.asarray(vector).ravel()))


Ranges = Mapping[str, tuple]


def fixed_ranges(features: Sequence[str] = CANONICAL_FEATURES) -> dict:
    """(0, 255) for every feature: quantisation reduces to floor(value)."""
    return {f: (0.0, float(BYTE_MAX)) for f in features}


def fit_ranges(
    summaries: Sequence[FeatureSummary],
    features: Sequence[str] = CANONICAL_FEATURES,
) -> dict:
    """Per-feature (min, max) over the given (training) summaries.

    A feature that is constant over the split gets a unit-wide range so the
    map stays defined.
    """
    if not summaries:
        raise InputError("cannot fit quantisation ranges on an empty split")
    ranges = {}
    for f in features:
        values = [s.value(f) for s in summaries]
        lo, hi = float(min(values)), float(max(values))
        ranges[f] = (lo, hi if hi > lo else lo + 1.0)
    return ranges


def encode_summary(
    summary: FeatureSummary,
    ranges: Ranges,
    features: Sequence[str] = CANONICAL_FEATURES,
) -> BinaryPattern:
    """Concatenate each feature's 8-bit code, in ``features`` order."""
    bits = []
    for f in features:
        lo, hi = ranges[f]
        bits.extend(to_binary_pattern(quantize_to_byte(summary.value(f), lo, hi)).bits)
    return BinaryPattern(tuple(bits))


def default_class_codes(labels: Iterable[str], width: int = BYTE_WIDTH) -> dict:
    """Label i in sorted order gets code i + 1 (00000001, 00000010, ...)."""
    names = sorted(set(labels))
    if len(names) >= 1 << width:
        raise OutOfRange(f"{len(names)} labels do not fit in {width}-bit codes")
    return {name: to_binary_pattern(i + 1, width) for i, name in enumerate(names)}


def parse_class_codes(text: str) -> dict:
    """Parse ``"blues=00000001, rock=00000010"`` into a code map."""
    codes = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        label, sep, bits = item.partition("=")
        if not sep:
            raise InputError(f"class code entry {item!r} is not label=bits")
        codes[label.strip()] = BinaryPattern.parse(bits)
    check_class_codes(codes)
    return codes


def check_class_codes(codes: Mapping[str, BinaryPattern]) -> None:
    seen = {}
    for label, code in codes.items():
        if code in seen:
            raise DuplicateClassCode(f"labels {seen[code]!r} and {label!r} share code {code}")
        seen[code] = label
    if len({c.width for c in codes.values()}) > 1:
        raise InputError("class codes must all have the same width")


class PatternEntry(NamedTuple):
    input: np.ndarray
    target: np.ndarray
    label: str


@dataclass
class PatternSet:
    entries: list

    def __post_init__(self):
        if not self.entries:
            return
        widths = {len(e.input) for e in self.entries}
        targets = {len(e.target) for e in self.entries}
        if len(widths) > 1 or len(targets) > 1:
            raise InputError("pattern set mixes vector widths")
        for e in self.entries:
            if not (np.all(np.abs(e.input) == 1) and np.all(np.abs(e.target) == 1)):
                raise InputError(f"non-bipolar component in entry labelled {e.label!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def input_width(self) -> int:
        return len(self.entries[0].input)

    @property
    def target_width(self) -> int:
        return len(self.entries[0].target)

    @property
    def inputs(self) -> np.ndarray:
        return np.array([e.input for e in self.entries])

    @property
    def targets(self) -> np.ndarray:
        return np.array([e.target for e in self.entries])

    @property
    def labels(self) -> list:
        return [e.label for e in self.entries]


def build_pattern_set(
    summaries: Sequence[FeatureSummary],
    class_codes: Mapping[str, BinaryPattern],
    ranges: Optional[Ranges] = None,
    features: Sequence[str] = CANONICAL_FEATURES,
) -> PatternSet:
    """One (input, target) pair per track, in the order given."""
    check_class_codes(class_codes)
    if ranges is None:
        ranges = fixed_ranges(features)
    entries = []
    for s in summaries:
        if s.label not in class_codes:
            raise UnknownLabel(f"no class code for label {s.label!r} (track {s.track_id!r})")
        entries.append(PatternEntry(
            input=to_bipolar(encode_summary(s, ranges, features)),
            target=to_bipolar(class_codes[s.label]),
            label=s.label,
        ))
    return PatternSet(entries)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_features_csv(summaries: Iterable[FeatureSummary], path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in summaries:
        writer.writerow([s.track_id, s.label] + [_fmt(s.value(f)) for f in SCALAR_FEATURES])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_features_csv(path) -> list:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read features file {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise InputError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
    summaries = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise InputError(f"{path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        try:
            values = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in values):
            raise InputError(f"{path}:{lineno}: non-finite feature value")
        summaries.append(FeatureSummary(row[0], row[1], *values))
    return summaries


def save_patterns(patterns: PatternSet, path) -> None:
    doc = [
        {
            "input": str(from_bipolar(e.input)),
            "target": str(from_bipolar(e.target)),
            "label": e.label,
        }
        for e in patterns
    ]
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_patterns(path) -> PatternSet:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return PatternSet([
        PatternEntry(
            to_bipolar(BinaryPattern.parse(item["input"])),
            to_bipolar(BinaryPattern.parse(item["target"])),
            item["label"],
        )
        for item in doc
    ])

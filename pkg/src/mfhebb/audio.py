"""WAV decoding and frame slicing.

Only what GTZAN-style corpora need: uncompressed RIFF/WAVE, integer PCM at
8/16/24 bits or 32-bit IEEE float, mono or stereo. Stereo is averaged to mono
and no resampling is done; every downstream feature takes the sample rate as a
parameter instead.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptHeader, NotFound, SignalTooShort, UnsupportedFormat

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

WINDOWS = ("rectangular", "hamming", "hann")


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class FrameSpec:
    frame_len: int = 2048
    hop: int = 512
    # hann rather than hamming: its sidelobes fall off fast enough that a
    # pure tone's magnitude centroid stays within a bin of the tone
    window: str = "hann"

    def __post_init__(self):
        n = self.frame_len
        if n < 1 or n & (n - 1):
            raise ValueError(f"frame_len must be a power of two, got {n}")
        if not 0 < self.hop <= n:
            raise ValueError(f"hop must satisfy 0 < hop <= frame_len, got {self.hop}")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}, got {self.window!r}")

    def window_coefficients(self) -> np.ndarray:
        if self.window == "hamming":
            return np.hamming(self.frame_len)
        if self.window == "hann":
            return np.hanning(self.frame_len)
        return np.ones(self.frame_len)


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if body + size > len(data):
            raise CorruptHeader(
                f"chunk {cid!r} declares {size} bytes but only {len(data) - body} remain"
            )
        yield cid, data[body:body + size]
        pos = body + size + (size & 1)


def _decode_samples(raw: bytes, fmt_code: int, bits: int, channels: int) -> np.ndarray:
    width = bits // 8
    n = len(raw) // (width * channels) * channels
    raw = raw[:n * width]
    if fmt_code == WAVE_FORMAT_IEEE_FLOAT:
        x = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        return np.clip(np.nan_to_num(x), -1.0, 1.0)
    if bits == 8:
        # 8-bit WAV is unsigned with a 128 offset
        return (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    if bits == 16:
        return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    # 24-bit: sign-extend three little-endian bytes into int32
    b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
    v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
    v = np.where(v >= 1 << 23, v - (1 << 24), v)
    return v.astype(np.float64) / float(1 << 23)


def parse_wav(data: bytes) -> AudioBuffer:
    """Decode an in-memory RIFF/WAVE file into a mono buffer in [-1, 1]."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat("not a RIFF/WAVE file")
    riff_size = struct.unpack_from("<I", data, 4)[0]
    if riff_size + 8 < 12:
        raise CorruptHeader(f"RIFF size {riff_size} is too small")

    fmt = None
    raw = None
    for cid, body in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader(f"fmt chunk is {len(body)} bytes, need at least 16")
            fmt = body
        elif cid == b"data":
            raw = body
            break
    if fmt is None or raw is None:
        raise CorruptHeader("missing fmt or data chunk")

    fmt_code, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if fmt_code == WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 26:
            raise CorruptHeader("extensible fmt chunk too short")
        fmt_code = struct.unpack_from("<H", fmt, 24)[0]

    if fmt_code == WAVE_FORMAT_PCM:
        if bits not in (8, 16, 24):
            raise UnsupportedFormat(f"{bits}-bit integer PCM is not supported")
    elif fmt_code == WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedFormat(f"{bits}-bit float is not supported")
    else:
        raise UnsupportedFormat(f"compression code {fmt_code:#06x}")
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{channels} channels; only mono and stereo are supported")
    if rate == 0:
        raise CorruptHeader("sample rate is zero")
    if block_align != channels * bits // 8:
        raise CorruptHeader(
            f"block align {block_align} does not match {channels} ch x {bits} bits"
        )

    samples = _decode_samples(raw, fmt_code, bits, channels)
    if channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    return AudioBuffer(samples=samples, sample_rate=int(rate))


def load_wav(path) -> AudioBuffer:
    path = Path(path)
    if not path.is_file():
        raise NotFound(f"no such file: {path}")
    return parse_wav(path.read_bytes())


def write_wav(path, samples, sample_rate: int, bits: int = 16) -> None:
    """Write mono integer PCM. Used to build fixtures and synthetic corpora."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    if bits == 16:
        payload = np.round(x * 32767).astype("<i2").tobytes()
    elif bits == 8:
        payload = np.round(x * 127 + 128).astype(np.uint8).tobytes()
    else:
        raise ValueError(f"unsupported bit depth {bits}")
    block = bits // 8
    pad = b"\x00" if len(payload) & 1 else b""
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload) + len(pad), b"WAVE",
        b"fmt ", 16, WAVE_FORMAT_PCM, 1, sample_rate, sample_rate * block, block, bits,
        b"data", len(payload),
    )
    Path(path).write_bytes(header + payload + pad)


def frame_count(n_samples: int, spec: FrameSpec) -> int:
    if n_samples < spec.frame_len:
        return 0
    return (n_samples - spec.frame_len) // spec.hop + 1


def frame_signal(buf: AudioBuffer, spec: FrameSpec) -> np.ndarray:
    """Slice into windowed frames, shape (count, frame_len).

    The trailing remainder that does not fill a whole frame is dropped.
    """
    x = np.asarray(buf.samples, dtype=np.float64)
    count = frame_count(len(x), spec)
    if count == 0:
        raise SignalTooShort(
            f"signal has {len(x)} samples, frame needs {spec.frame_len}"
        )
    idx = np.arange(spec.frame_len)[None, :] + spec.hop * np.arange(count)[:, None]
    return x[idx] * spec.window_coefficients()

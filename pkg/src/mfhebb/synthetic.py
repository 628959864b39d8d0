"""Synthetic inputs: a separable feature corpus and test signals."""

from __future__ import annotations

import numpy as np

from .encoding import BYTE_WIDTH, CANONICAL_FEATURES, FeatureSummary


def _prototypes(rng, n_classes: int, n_bits: int, min_distance: int) -> np.ndarray:
    for _ in range(10000):
        protos = rng.integers(0, 2, size=(n_classes, n_bits))
        dists = [np.count_nonzero(a != b) for i, a in enumerate(protos) for b in protos[i + 1:]]
        if not dists or min(dists) >= min_distance:
            return protos
    raise RuntimeError(f"could not place {n_classes} prototypes {min_distance} bits apart")


def separable_corpus(
    n_tracks: int = 200,
    n_classes: int = 4,
    max_flips: int = 2,
    seed: int = 0,
    min_distance: int = 12,
    features=CANONICAL_FEATURES,
) -> list:
    """Feature summaries whose encoded patterns are class prototypes plus noise.

    Each class gets a random prototype over ``8 * len(features)`` bits, at
    least ``min_distance`` bits from every other prototype. Every track copies
    its class prototype and flips up to ``max_flips`` random bits. Feature
    values are ``byte + 0.5`` so fixed (0, 255) quantisation recovers the
    bytes exactly. Tracks are dealt round-robin over the classes.
    """
    rng = np.random.default_rng(seed)
    n_bits = BYTE_WIDTH * len(features)
    protos = _prototypes(rng, n_classes, n_bits, min_distance)
    weights = 1 << np.arange(BYTE_WIDTH - 1, -1, -1)
    summaries = []
    for i in range(n_tracks):
        c = i % n_classes
        bits = protos[c].copy()
        flips = rng.choice(n_bits, size=rng.integers(0, max_flips + 1), replace=False)
        bits[flips] ^= 1
        values = dict.fromkeys(("beat", "fft_stat", "mfcc_stat", "pitch", "zcr_mean"), 0.0)
        for k, f in enumerate(features):
            values[f] = float(bits[k * BYTE_WIDTH:(k + 1) * BYTE_WIDTH] @ weights) + 0.5
        summaries.append(FeatureSummary(f"class{c}/{i:04d}", f"class{c}", **values))
    return summaries


def sine(freq: float, sample_rate: int, n: int, amplitude: float = 1.0, phase: float = 0.0) -> np.ndarray:
    t = np.arange(n) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq * t + phase)


def click_train(bpm: float, sample_rate: int, seconds: float, width: int = 20, offset: float = 0.0) -> np.ndarray:
    """Rectangular clicks of ``width`` samples every 60/bpm seconds."""
    x = np.zeros(int(round(seconds * sample_rate)))
    period = 60.0 / bpm
    t = offset
    while t < seconds:
        i = int(round(t * sample_rate))
        x[i:i + width] = 1.0
        t += period
    return x

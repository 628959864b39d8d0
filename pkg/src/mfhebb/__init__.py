"""Music feature extraction, 8-bit pattern encoding and Hebbian single-layer networks."""

from .audio import AudioBuffer, FrameSpec, frame_signal, load_wav
from .encoding import (
    BinaryPattern,
    FeatureSummary,
    PatternSet,
    build_pattern_set,
    decode,
    from_bipolar,
    quantize_to_byte,
    summarize_track,
    to_binary_pattern,
    to_bipolar,
)
from .evaluation import (
    EvalReport,
    EvalRow,
    accuracy_report,
    bench_forward,
    epoch_error_curve,
    lms_error,
    signed_binary_error,
    split_dataset,
)
from .features import (
    Spectrum,
    analyze_track,
    build_mel_filterbank,
    dft_magnitude,
    estimate_pitch,
    estimate_tempo,
    mfcc,
    spectral_centroid,
    zero_crossing_rate,
)
from .hebbnet import (
    HebbNetwork,
    TrainConfig,
    activate,
    forward,
    hebb_update,
    init_network,
    predict,
    train,
)

__version__ = "0.1.0"

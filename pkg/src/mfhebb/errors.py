"""Exception hierarchy shared by every stage of the pipeline."""


class MfhError(Exception):
    """Base class for all errors raised by this package."""


class InputError(MfhError):
    """Bad input data: files, buffers, frames, patterns."""


class ConfigError(MfhError):
    """A configuration value is missing or out of range."""


# audio io
class NotFound(InputError, FileNotFoundError):
    pass


class UnsupportedFormat(InputError):
    pass


class CorruptHeader(InputError):
    pass


class SignalTooShort(InputError):
    pass


# dsp
class FrameTooShort(InputError):
    pass


class NonPowerOfTwoLength(InputError):
    pass


class SilentFrame(InputError):
    pass


class InvalidBand(ConfigError):
    pass


class DimensionMismatch(InputError):
    pass


# encoding
class EmptyTrack(InputError):
    pass


class InvalidRange(ConfigError):
    pass


class OutOfRange(InputError):
    pass


class UnknownLabel(InputError):
    pass


class DuplicateClassCode(ConfigError):
    pass


# network
class InvalidDimensions(ConfigError):
    pass


class EmptyPatternSet(InputError):
    pass


# evaluation
class EmptyManifest(InputError):
    pass


class WidthMismatch(InputError):
    pass


class EmptyRows(InputError):
    pass


class EmptyPredictions(InputError):
    pass


class EmptyLog(InputError):
    pass

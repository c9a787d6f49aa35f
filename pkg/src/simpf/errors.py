"""Exception taxonomy shared by all simpf modules."""


class SimpfError(Exception):
    """Base class for all domain errors raised by this package."""


class AudioFormatError(SimpfError):
    """Byte stream is not a well-formed RIFF/WAVE container."""


class UnsupportedCodecError(AudioFormatError):
    """WAV container is valid but uses an encoding we do not decode."""


class ConfigError(SimpfError):
    """A configuration object violates its invariants."""


class InputTooShortError(SimpfError):
    """Input has too few time frames for the requested operation."""


class ShapeError(SimpfError):
    """Array or layer geometry is incompatible with the operation."""

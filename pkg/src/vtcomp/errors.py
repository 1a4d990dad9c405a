"""Exception types shared across the engine.

Two families: configuration problems (bad dimensions, incompatible
options) and dump/sequence data problems (malformed bytes, invalid
values). The CLI maps ConfigError to exit code 2 and DumpError /
I/O failures to exit code 1.
"""


class ConfigError(ValueError):
    """Invalid configuration: divisibility, ranges, incompatible options."""


class DumpError(ValueError):
    """Base class for dump and sequence data errors."""


class MagicError(DumpError):
    """Stream does not start with the expected magic bytes."""


class VersionError(DumpError):
    """Unsupported format version."""


class TruncatedPayloadError(DumpError):
    """Stream ended before the declared payload was complete."""


class ShapeError(DumpError):
    """Declared shape is invalid or does not match the payload."""


class NonFiniteError(DumpError):
    """Payload contains NaN or infinite values."""


class NegativeAttentionError(DumpError):
    """Attention payload contains negative values."""


class ReservedFlagError(DumpError):
    """Reserved header flag bits or padding bytes are nonzero."""

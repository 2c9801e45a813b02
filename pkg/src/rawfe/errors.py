"""Exception taxonomy shared by all rawfe modules."""


class RawFeError(Exception):
    """Base class for all rawfe errors."""


# --- waveform / DSP ---

class EmptyInput(RawFeError):
    """Input signal too short to define the operation."""


class ZeroVariance(RawFeError):
    """Signal is constant; normalization undefined."""


class KernelTooLong(RawFeError):
    """FIR kernel exceeds the requested DFT size."""


class InputTooShort(RawFeError):
    """Signal shorter than one analysis window / receptive field."""


class BadFrequencyRange(RawFeError):
    """Frequency bounds outside the representable band."""


class BadDim(RawFeError):
    """Dimension argument inconsistent with the input."""


class BadRange(RawFeError):
    """Center-frequency range outside the valid band."""


class BadFrequency(RawFeError):
    """Non-positive probe/synthesis frequency."""


class AliasedFrequency(RawFeError):
    """Frequency at or above Nyquist."""


class TooFewFrames(RawFeError):
    """Feature matrix has too few frames for per-dimension statistics."""


# --- neural front-ends ---

class UnknownPreset(RawFeError):
    """Preset name not in the catalog."""


class BadCount(RawFeError):
    """Mask count outside [0, n_filters]."""


# --- autodiff / training ---

class NoGraph(RawFeError):
    """backward() called on a tensor with no recorded graph."""


class InvalidEpsilon(RawFeError):
    """Finite-difference step must be positive."""


class FrameMismatch(RawFeError):
    """Front-end frame shift incompatible with the training targets."""


# --- analysis ---

class ZeroRow(RawFeError):
    """All-zero frequency response row; peak-to-average undefined."""


# --- file formats ---

class UnsupportedFormat(RawFeError):
    """WAV file is valid but not mono 16-bit 16 kHz PCM."""


class CorruptFile(RawFeError):
    """File structure violates the declared format."""


class MagicMismatch(RawFeError):
    """Archive does not start with the expected magic bytes."""


class ShapeMismatch(RawFeError):
    """Tensor table inconsistent with the archive's config echo."""


class TruncatedPayload(RawFeError):
    """Archive payload shorter than the tensor table requires."""


class EmptyMatrix(RawFeError):
    """Refusing to serialize a matrix with no rows or columns."""


class IoFailure(RawFeError):
    """Underlying file operation failed."""

"""Deterministic signal-processing primitives shared by every front-end.

All operations are pure functions over numpy arrays at 16 kHz; nothing in
here holds state, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.signal

from rawfe.errors import (
    AliasedFrequency,
    BadDim,
    BadFrequency,
    BadFrequencyRange,
    BadRange,
    EmptyInput,
    InputTooShort,
    KernelTooLong,
    ZeroVariance,
)

SAMPLE_RATE = 16000
LOG_FLOOR = 1e-10  # added before every log of a possibly-zero energy

# Glasberg & Moore auditory constants used by the gammatone bank.
ERB_SCALE_Q = 21.4
ERB_BREAK = 0.00437  # 1/Hz
GAMMATONE_BANDWIDTH_FACTOR = 1.019


@dataclass
class Waveform:
    """Mono PCM audio: samples (dimensionless amplitude) at a fixed rate."""

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise EmptyInput("waveform must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.samples)):
            raise EmptyInput("waveform contains non-finite samples")
        if self.sample_rate_hz <= 0:
            raise BadFrequency("sample rate must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass
class NormalizedWaveform(Waveform):
    """Waveform brought to zero mean and unit variance by normalize_waveform."""


@dataclass
class Spectrum:
    """Single-sided magnitude spectrum over n_fft/2 + 1 bins."""

    magnitudes: np.ndarray
    bin_width_hz: float


@dataclass
class MelMatrix:
    """Triangular mel warping matrix, (n_fft/2 + 1) x n_mels."""

    weights: np.ndarray
    mel_centers_hz: np.ndarray = field(repr=False)


@dataclass
class FilterBank:
    """Strided FIR filterbank: one kernel per row, applied without padding."""

    kernels: np.ndarray  # (n_filters, taps)
    stride: int = 1
    center_freqs_hz: np.ndarray | None = None  # set for analytic banks only

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        if self.kernels.ndim != 2:
            raise BadDim("filterbank kernels must be a 2-D (filters x taps) array")
        if not np.all(np.isfinite(self.kernels)):
            raise BadDim("filterbank kernels must be finite")
        if self.stride < 1:
            raise BadDim("stride must be a positive integer")

    @property
    def n_filters(self) -> int:
        return self.kernels.shape[0]

    @property
    def taps(self) -> int:
        return self.kernels.shape[1]


def normalize_waveform(wav: Waveform) -> NormalizedWaveform:
    """Shift and scale a waveform to zero mean and unit (population) variance.

    Raises:
        EmptyInput: fewer than 2 samples.
        ZeroVariance: all samples equal.
    """
    x = wav.samples
    if x.size < 2:
        raise EmptyInput("need at least 2 samples to normalize")
    mean = x.mean()
    std = x.std()  # ddof=0: population convention
    if std == 0.0:
        raise ZeroVariance("constant signal has no variance")
    return NormalizedWaveform((x - mean) / std, wav.sample_rate_hz)


def dft_magnitude(kernel: np.ndarray, n_fft: int,
                  sample_rate: int = SAMPLE_RATE) -> Spectrum:
    """|DFT| of a zero-padded kernel over the single-sided n_fft/2+1 bins.

    Raises:
        KernelTooLong: kernel longer than n_fft.
        BadDim: n_fft not a power of two.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if n_fft < 1 or (n_fft & (n_fft - 1)) != 0:
        raise BadDim(f"n_fft must be a power of two, got {n_fft}")
    if kernel.size > n_fft:
        raise KernelTooLong(f"kernel of {kernel.size} taps exceeds n_fft={n_fft}")
    mags = np.abs(np.fft.rfft(kernel, n=n_fft))
    return Spectrum(mags, sample_rate / n_fft)


def hann_window(win_samples: int) -> np.ndarray:
    """Periodic Hann window (DFT-even), the analysis window of the STFT."""
    n = np.arange(win_samples)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / win_samples)


def frame_count(n_samples: int, win_samples: int, hop_samples: int) -> int:
    """Number of fully covered analysis windows: floor((L - win)/hop) + 1."""
    if n_samples < win_samples:
        return 0
    return (n_samples - win_samples) // hop_samples + 1


def frame_signal(x: np.ndarray, win_samples: int, hop_samples: int) -> np.ndarray:
    """Slice a 1-D signal into (n_frames, win) fully covered frames, no padding."""
    n_frames = frame_count(x.size, win_samples, hop_samples)
    if n_frames == 0:
        raise InputTooShort(
            f"{x.size} samples cannot fill one {win_samples}-sample window")
    frames = np.lib.stride_tricks.sliding_window_view(x, win_samples)
    return frames[::hop_samples][:n_frames]


def stft_power(wav: Waveform, win_samples: int = 400, hop_samples: int = 160,
               window: str = "hann", n_fft: int = 512) -> list[Spectrum]:
    """Squared-magnitude STFT as a list of per-frame spectra.

    Defaults are the 25 ms window / 10 ms shift at 16 kHz, zero-padded to a
    512-point FFT.

    Raises:
        InputTooShort: signal shorter than one window.
    """
    if n_fft < win_samples:
        raise BadDim(f"n_fft={n_fft} smaller than the {win_samples}-sample window")
    if window == "hann":
        w = hann_window(win_samples)
    else:
        w = scipy.signal.get_window(window, win_samples, fftbins=True)
    frames = frame_signal(wav.samples, win_samples, hop_samples) * w
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    bin_width = wav.sample_rate_hz / n_fft
    return [Spectrum(row, bin_width) for row in power]


def hz_to_mel(f):
    """Mel scale: 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    """Inverse of hz_to_mel."""
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_matrix(n_fft: int = 512, n_mels: int = 80, f_min: float = 0.0,
               f_max: float = 8000.0, sample_rate: int = SAMPLE_RATE) -> MelMatrix:
    """Triangular mel filterbank matrix of shape (n_fft/2 + 1, n_mels).

    Filters are unit-peak triangles with apexes uniformly spaced on the mel
    scale between f_min and f_max.

    Raises:
        BadFrequencyRange: unless 0 <= f_min < f_max <= sample_rate/2.
    """
    if not (0.0 <= f_min < f_max <= sample_rate / 2):
        raise BadFrequencyRange(
            f"need 0 <= f_min < f_max <= {sample_rate / 2}, got [{f_min}, {f_max}]")
    mel_points = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)

    lower, center, upper = hz_points[:-2], hz_points[1:-1], hz_points[2:]
    rising = (bin_freqs[:, None] - lower) / (center - lower)
    falling = (upper - bin_freqs[:, None]) / (upper - center)
    weights = np.clip(np.minimum(rising, falling), 0.0, None)
    return MelMatrix(weights, center.copy())


def dct_ii(vec: np.ndarray, out_dim: int) -> np.ndarray:
    """Orthonormal DCT-II truncated to the first out_dim coefficients.

    Raises:
        BadDim: out_dim not in [1, len(vec)].
    """
    vec = np.asarray(vec, dtype=np.float64)
    if not (1 <= out_dim <= vec.shape[-1]):
        raise BadDim(f"out_dim={out_dim} outside [1, {vec.shape[-1]}]")
    return scipy.fft.dct(vec, type=2, norm="ortho", axis=-1)[..., :out_dim]


def idct_ii(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of the full-length orthonormal DCT-II."""
    return scipy.fft.idct(np.asarray(coeffs, dtype=np.float64),
                          type=2, norm="ortho", axis=-1)


def erb_bandwidth(fc):
    """Equivalent rectangular bandwidth at center frequency fc, in Hz."""
    return 24.7 * (4.37 * np.asarray(fc, dtype=np.float64) / 1000.0 + 1.0)


def hz_to_erb_rate(f):
    """ERB-rate (ERB-number) scale."""
    return ERB_SCALE_Q * np.log10(1.0 + ERB_BREAK * np.asarray(f, dtype=np.float64))


def erb_rate_to_hz(e):
    """Inverse of hz_to_erb_rate."""
    return (10.0 ** (np.asarray(e, dtype=np.float64) / ERB_SCALE_Q) - 1.0) / ERB_BREAK


def gammatone_center_frequencies(n_channels: int = 50, f_lo: float = 100.0,
                                 f_hi: float = 7500.0) -> np.ndarray:
    """Center frequencies uniformly spaced on the ERB-rate scale."""
    rates = np.linspace(hz_to_erb_rate(f_lo), hz_to_erb_rate(f_hi), n_channels)
    return erb_rate_to_hz(rates)


def gammatone_kernels(n_channels: int = 50, taps: int = 640,
                      fc_range: tuple[float, float] = (100.0, 7500.0),
                      order: int = 4, sample_rate: int = SAMPLE_RATE):
    """Sampled gammatone impulse responses, one peak-normalized row per channel.

    Row i is t^(order-1) * exp(-2*pi*b_i*t) * cos(2*pi*fc_i*t) with
    b_i = 1.019 * ERB(fc_i), sampled at `sample_rate` over `taps` samples.

    Returns:
        A FilterBank (stride 1) whose kernels matrix is (n_channels, taps).

    Raises:
        BadRange: fc_range outside (0, sample_rate/2).
    """
    f_lo, f_hi = fc_range
    if not (0.0 < f_lo < f_hi < sample_rate / 2):
        raise BadRange(
            f"fc_range must lie inside (0, {sample_rate / 2}), got {fc_range}")
    fcs = gammatone_center_frequencies(n_channels, f_lo, f_hi)
    b = GAMMATONE_BANDWIDTH_FACTOR * erb_bandwidth(fcs)
    t = np.arange(taps) / sample_rate
    envelope = t[None, :] ** (order - 1) * np.exp(-2.0 * np.pi * b[:, None] * t[None, :])
    kernels = envelope * np.cos(2.0 * np.pi * fcs[:, None] * t[None, :])
    # Unit peak gain per channel (frequency-domain peak on a 4096-point grid),
    # so channel energies are directly comparable across the bank.
    n_fft = max(4096, 1 << (taps - 1).bit_length())
    gains = np.abs(np.fft.rfft(kernels, n=n_fft, axis=1)).max(axis=1)
    kernels /= gains[:, None]
    return FilterBank(kernels=kernels, stride=1, center_freqs_hz=fcs)


def synthesize_sine(freq: float, duration_s: float, sample_rate: int = SAMPLE_RATE,
                    amplitude: float = 1.0) -> Waveform:
    """Pure sine wave: amplitude * sin(2*pi*freq*n/sample_rate).

    Raises:
        BadFrequency: freq <= 0 or duration_s <= 0.
        AliasedFrequency: freq at or above Nyquist.
    """
    if freq <= 0.0:
        raise BadFrequency(f"frequency must be positive, got {freq}")
    if freq >= sample_rate / 2:
        raise AliasedFrequency(f"{freq} Hz is not below Nyquist ({sample_rate / 2} Hz)")
    if duration_s <= 0.0:
        raise BadFrequency(f"duration must be positive, got {duration_s}")
    n = np.arange(int(round(duration_s * sample_rate)))
    return Waveform(amplitude * np.sin(2.0 * np.pi * freq * n / sample_rate),
                    sample_rate)

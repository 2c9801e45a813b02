"""Hand-designed reference front-ends: log mel filterbank and gammatone features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from rawfe.dsp import (
    LOG_FLOOR,
    Waveform,
    dct_ii,
    frame_count,
    gammatone_kernels,
    hann_window,
    mel_matrix,
    normalize_waveform,
    stft_power,
)
from rawfe.errors import InputTooShort, TooFewFrames

PRE_EMPHASIS = 0.97
WIN_SAMPLES = 400   # 25 ms at 16 kHz
HOP_SAMPLES = 160   # 10 ms
FRAME_SHIFT_MS = 10.0
N_MELS = 80
N_GAMMATONE = 50
GAMMATONE_TAPS = 640
COMPRESSION_ROOT = 10  # gammatone magnitude compression exponent is 1/root

# Module-level banks: deterministic, shared by every extraction call.
MEL = mel_matrix(n_fft=512, n_mels=N_MELS)
GAMMATONE_BANK = gammatone_kernels(N_GAMMATONE, GAMMATONE_TAPS)


@dataclass
class FeatureMatrix:
    """Per-frame feature vectors: (n_frames, n_dims) plus frame-shift metadata."""

    values: np.ndarray
    frame_shift_ms: float
    dim_labels: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise InputTooShort("feature matrix needs at least one frame")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite values")
        if self.frame_shift_ms <= 0:
            raise ValueError("frame shift must be positive")

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_dims(self) -> int:
        return self.values.shape[1]


def pre_emphasize(x: np.ndarray, coeff: float = PRE_EMPHASIS) -> np.ndarray:
    """First-order pre-emphasis y[t] = x[t] - coeff * x[t-1], keeping y[0] = x[0]."""
    return np.concatenate(([x[0]], x[1:] - coeff * x[:-1]))


def _normalize_columns(values: np.ndarray) -> np.ndarray:
    """Zero-mean/unit-variance per column; near-constant columns map to zeros."""
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    dead = std < 1e-12 * np.maximum(1.0, np.abs(mean))
    out = (values - mean) / np.where(dead, 1.0, std)
    out[:, dead] = 0.0
    return out


def feature_normalize(feat: FeatureMatrix) -> FeatureMatrix:
    """Per-utterance, per-dimension normalization to zero mean and unit variance.

    Dimensions with zero variance become all-zero columns rather than an error.

    Raises:
        TooFewFrames: fewer than 2 frames.
    """
    if feat.n_frames < 2:
        raise TooFewFrames("per-dimension statistics need at least 2 frames")
    return FeatureMatrix(_normalize_columns(feat.values), feat.frame_shift_ms,
                         feat.dim_labels)


def logmel_extract(wav: Waveform, normalize: bool = True) -> FeatureMatrix:
    """80-dim log mel filterbank features at a 10 ms shift.

    Pipeline: waveform normalization -> power STFT (25 ms / 10 ms, Hann,
    512-point FFT) -> mel warping -> log10(. + floor) -> per-dimension
    utterance normalization (skipped when normalize=False).

    Raises:
        InputTooShort: fewer than 400 samples.
    """
    if len(wav) < WIN_SAMPLES:
        raise InputTooShort(f"need at least {WIN_SAMPLES} samples, got {len(wav)}")
    frames = stft_power(normalize_waveform(wav), WIN_SAMPLES, HOP_SAMPLES)
    power = np.stack([s.magnitudes for s in frames])
    feats = np.log10(power @ MEL.weights + LOG_FLOOR)
    if normalize:
        feats = _normalize_columns(feats)
    return FeatureMatrix(feats, FRAME_SHIFT_MS)


def gammatone_envelopes(wav: Waveform) -> FeatureMatrix:
    """Compressed gammatone channel envelopes (the pre-DCT stage).

    Pipeline: waveform normalization -> pre-emphasis -> 50-channel gammatone
    convolution (valid) -> magnitude -> Hann-weighted temporal integration
    (25 ms window, 10 ms shift) -> 10th-root compression.  Channel identity is
    preserved, which the cepstral output of gammatone_extract destroys.

    Raises:
        InputTooShort: fewer than 1040 samples (one kernel plus one window).
    """
    if len(wav) < GAMMATONE_TAPS + WIN_SAMPLES:
        raise InputTooShort(
            f"need at least {GAMMATONE_TAPS + WIN_SAMPLES} samples, got {len(wav)}")
    x = pre_emphasize(normalize_waveform(wav).samples)
    channels = np.abs(scipy.signal.fftconvolve(
        x[None, :], GAMMATONE_BANK.kernels, mode="valid", axes=1)).T  # (time, 50)
    w = hann_window(WIN_SAMPLES)
    n_frames = frame_count(channels.shape[0], WIN_SAMPLES, HOP_SAMPLES)
    seg = np.lib.stride_tricks.sliding_window_view(channels, WIN_SAMPLES, axis=0)
    integrated = seg[::HOP_SAMPLES][:n_frames] @ w  # (frames, 50)
    return FeatureMatrix(integrated ** (1.0 / COMPRESSION_ROOT), FRAME_SHIFT_MS)


def gammatone_extract(wav: Waveform, normalize: bool = True) -> FeatureMatrix:
    """50-dim gammatone features: compressed envelopes -> per-frame DCT-II.

    The DCT runs across the 50 channels of each frame and keeps all 50
    coefficients; per-dimension utterance normalization follows unless
    normalize=False.

    Raises:
        InputTooShort: fewer than 1040 samples.
    """
    env = gammatone_envelopes(wav)
    feats = dct_ii(env.values, N_GAMMATONE)
    if normalize:
        feats = _normalize_columns(feats)
    return FeatureMatrix(feats, FRAME_SHIFT_MS)

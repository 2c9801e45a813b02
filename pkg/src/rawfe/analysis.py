"""Filter diagnostics: frequency responses, sorting, sine probing, mask ranking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from rawfe.dsp import (
    FilterBank,
    Waveform,
    dft_magnitude,
    normalize_waveform,
    synthesize_sine,
)
from rawfe.errors import AliasedFrequency, ZeroRow
from rawfe.fixed import FeatureMatrix
from rawfe.neural import FeModel, forward

RESPONSE_NFFT = 2048  # 7.8 Hz bins at 16 kHz
CUTOFF_LEVEL = 1.0 / np.sqrt(2.0)  # -3 dB relative to the row's own peak


@dataclass
class FrequencyResponse:
    """Per-filter magnitude responses with peak, cutoff and sharpness stats.

    Cutoffs are the outermost bins still within 3 dB of the row's peak, so a
    multi-passband filter gets the widest bracket.  peak_to_average is NaN
    for all-zero rows.
    """

    magnitudes: np.ndarray  # (filters, bins), linear scale
    bin_hz: float
    peak_bin: np.ndarray
    peak_value: np.ndarray
    lower_cutoff_hz: np.ndarray
    upper_cutoff_hz: np.ndarray
    peak_to_average: np.ndarray

    @property
    def n_filters(self) -> int:
        return self.magnitudes.shape[0]


@dataclass
class ProbeResponse:
    """Mean absolute per-channel activations over a grid of probe tones."""

    matrix: np.ndarray  # (n_freqs, n_output_channels)
    freqs_hz: np.ndarray
    peak_to_mean: np.ndarray  # per probe frequency


def frequency_response(fb: FilterBank, n_fft: int = RESPONSE_NFFT) -> FrequencyResponse:
    """Single-sided |DFT| of every kernel plus per-row statistics.

    Raises:
        KernelTooLong: kernels longer than n_fft.
    """
    rows = [dft_magnitude(k, n_fft) for k in fb.kernels]
    mags = np.stack([r.magnitudes for r in rows])
    bin_hz = rows[0].bin_width_hz

    peak_bin = mags.argmax(axis=1)
    peak_value = mags.max(axis=1)
    n_rows, n_bins = mags.shape
    lower = np.zeros(n_rows)
    upper = np.zeros(n_rows)
    ratio = np.full(n_rows, np.nan)
    for i in range(n_rows):
        if peak_value[i] > 0.0:
            above = np.flatnonzero(mags[i] >= CUTOFF_LEVEL * peak_value[i])
            lower[i] = above[0] * bin_hz
            upper[i] = above[-1] * bin_hz
            ratio[i] = peak_value[i] / mags[i].mean()
        else:  # masked filter: flat zero row, ratio undefined
            lower[i] = 0.0
            upper[i] = (n_bins - 1) * bin_hz
    return FrequencyResponse(mags, bin_hz, peak_bin, peak_value,
                             lower, upper, ratio)


def sort_filters(fr: FrequencyResponse) -> list[int]:
    """Display permutation: ascending (peak bin, upper cutoff, lower cutoff).

    Stable: rows with identical keys keep their original order.
    """
    keys = [(int(fr.peak_bin[i]), float(fr.upper_cutoff_hz[i]),
             float(fr.lower_cutoff_hz[i])) for i in range(fr.n_filters)]
    return sorted(range(fr.n_filters), key=keys.__getitem__)


def peak_to_average(fr: FrequencyResponse, row: int) -> float:
    """max/mean of one row's linear magnitudes.

    Raises:
        ZeroRow: the row is identically zero (ratio undefined, ranked last).
    """
    if not np.isfinite(fr.peak_to_average[row]):
        raise ZeroRow(f"filter {row} has an all-zero response")
    return float(fr.peak_to_average[row])


def ranking_for_masking(model: FeModel, n_fft: int = RESPONSE_NFFT) -> list[int]:
    """First-layer filter indices by descending peak-to-average ratio.

    The 'sharp' masking selection is a prefix of this order, 'soft' a suffix.
    Zero rows (undefined ratio) rank last; ties keep index order.
    """
    fr = frequency_response(model.first_layer_bank(), n_fft)
    ratio = np.where(np.isfinite(fr.peak_to_average), fr.peak_to_average, -np.inf)
    return sorted(range(fr.n_filters), key=lambda i: (-ratio[i], i))


Extractor = Callable[[Waveform], FeatureMatrix]


def model_extractor(model: FeModel) -> Extractor:
    """Wrap a neural front-end as waveform-in, features-out."""
    return lambda wav: forward(model, normalize_waveform(wav))


DEFAULT_PROBE_GRID = np.arange(50.0, 7951.0, 50.0)


def sine_probe(fe: FeModel | Extractor, freqs=DEFAULT_PROBE_GRID,
               duration_s: float = 1.0, amplitude: float = 1.0) -> ProbeResponse:
    """Mean absolute channel activation of a front-end for pure probe tones.

    Each probe is synthesized, normalized, and run through the front-end;
    activations are averaged over frames (excluding the first and last frame
    when more than two exist, to suppress edge effects).

    Raises:
        AliasedFrequency: any probe at or above Nyquist.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    if np.any(freqs >= 8000.0) or np.any(freqs <= 0.0):
        raise AliasedFrequency("probe frequencies must lie strictly inside (0, 8000)")
    extractor = model_extractor(fe) if isinstance(fe, FeModel) else fe

    rows = []
    for f in freqs:
        wav = normalize_waveform(synthesize_sine(float(f), duration_s,
                                                 amplitude=amplitude))
        feats = extractor(wav).values
        if feats.shape[0] > 2:
            feats = feats[1:-1]
        rows.append(np.abs(feats).mean(axis=0))
    matrix = np.stack(rows)
    means = matrix.mean(axis=1)
    safe = np.where(means > 0.0, means, 1.0)
    peak_to_mean = np.where(means > 0.0, matrix.max(axis=1) / safe, np.nan)
    return ProbeResponse(matrix, freqs, peak_to_mean)

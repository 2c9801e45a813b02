"""Speech-like synthetic utterances for demos and desk-scale training runs."""

from __future__ import annotations

import numpy as np

from rawfe.dsp import SAMPLE_RATE, Waveform

NOISE_LEVEL = 0.05
GATE_RAMP_S = 0.05
CONTOUR_KNOTS = 6


def synthetic_utterance(rng: np.random.Generator, duration_s: float = 1.0,
                        n_tones: int = 3, sample_rate: int = SAMPLE_RATE) -> Waveform:
    """One synthetic utterance: gated random sines over noise, with a loudness contour.

    Each tone gets a random frequency, amplitude, and an on/off gate with
    soft ramps; tones plus background noise are shaped by a slow random
    loudness contour so the result is non-stationary the way speech is.
    """
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    x = NOISE_LEVEL * rng.standard_normal(n)
    for _ in range(n_tones):
        freq = rng.uniform(80.0, 7000.0)
        amp = rng.uniform(0.2, 1.0)
        start = rng.uniform(0.0, 0.6) * duration_s
        width = rng.uniform(0.2, 0.4) * duration_s
        gate = (np.clip((t - start) / GATE_RAMP_S, 0.0, 1.0)
                * np.clip((start + width - t) / GATE_RAMP_S, 0.0, 1.0))
        x = x + amp * gate * np.sin(2.0 * np.pi * freq * t
                                    + rng.uniform(0.0, 2.0 * np.pi))
    knots = np.exp(rng.uniform(np.log(0.05), np.log(1.0), size=CONTOUR_KNOTS))
    contour = np.interp(t, np.linspace(0.0, duration_s, CONTOUR_KNOTS), knots)
    return Waveform(x * contour, sample_rate)


def synthetic_corpus(n_utterances: int, seed: int,
                     duration_s: float = 1.0) -> list[Waveform]:
    """Deterministic list of synthetic utterances for a given seed."""
    rng = np.random.default_rng(seed)
    return [synthetic_utterance(rng, duration_s) for _ in range(n_utterances)]

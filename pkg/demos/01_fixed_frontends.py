"""Fixed front-ends: log mel and gammatone features from one utterance.

Synthesizes a short multi-tone signal, runs both hand-designed pipelines,
and writes the feature matrices as CSV for external plotting.
"""

from pathlib import Path

import numpy as np

from rawfe import dsp, fixed, formats

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# A one-second test signal: two tones plus a little noise.
rng = np.random.default_rng(0)
t = np.arange(16000) / 16000.0
wav = dsp.Waveform(0.7 * np.sin(2 * np.pi * 440 * t)
                   + 0.4 * np.sin(2 * np.pi * 2200 * t)
                   + 0.05 * rng.standard_normal(16000))

# Log mel: power STFT (25 ms / 10 ms) -> 80 triangular mel filters -> log10
# -> per-dimension utterance normalization.
logmel = fixed.logmel_extract(wav)
print(f"log mel:    {logmel.n_frames} frames x {logmel.n_dims} dims, "
      f"shift {logmel.frame_shift_ms} ms")

# Which mel band lights up for the 440 Hz tone?  Check pre-normalization.
raw = fixed.logmel_extract(wav, normalize=False)
band = int(np.bincount(raw.values.argmax(axis=1)).argmax())
print(f"dominant mel band: {band} "
      f"(center {fixed.MEL.mel_centers_hz[band]:.0f} Hz)")

# Gammatone: pre-emphasis -> 50-channel ERB-spaced filterbank -> magnitude
# -> Hann integration -> 10th root -> DCT across channels -> normalization.
gammatone = fixed.gammatone_extract(wav)
print(f"gammatone:  {gammatone.n_frames} frames x {gammatone.n_dims} dims")

envelopes = fixed.gammatone_envelopes(wav)
channel = int(np.bincount(envelopes.values.argmax(axis=1)).argmax())
print(f"dominant gammatone channel: {channel} "
      f"(fc {fixed.GAMMATONE_BANK.center_freqs_hz[channel]:.0f} Hz)")

formats.write_matrix_csv(logmel.values, {"shift_ms": 10.0}, OUT / "logmel.csv")
formats.write_matrix_csv(gammatone.values, {"shift_ms": 10.0},
                         OUT / "gammatone.csv")
print(f"wrote {OUT / 'logmel.csv'} and {OUT / 'gammatone.csv'}")

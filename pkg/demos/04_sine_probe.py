"""Sine probing: how each front-end's channels respond across frequency.

Feeds pure tones on a 100 Hz grid through the gammatone channel stage and
through a random SC model, then reports tuning sharpness per probe.
"""

from pathlib import Path

import numpy as np

from rawfe import analysis, fixed, formats, neural

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

freqs = np.arange(100.0, 7901.0, 100.0)

# Gammatone: channel identity is kept by probing the pre-DCT envelope stage.
gt = analysis.sine_probe(fixed.gammatone_envelopes, freqs, duration_s=0.5)
print(f"gammatone probe: {gt.matrix.shape[0]} tones x "
      f"{gt.matrix.shape[1]} channels, "
      f"median peak-to-mean {np.median(gt.peak_to_mean):.1f}")

argmax_fc = fixed.GAMMATONE_BANK.center_freqs_hz[gt.matrix.argmax(axis=1)]
print(f"argmax channel fc monotone with probe frequency: "
      f"{bool(np.all(np.diff(argmax_fc) >= 0))}")

# Random SC model: 750 output dims, much flatter tuning before training.
model = neural.init_model("sc", neural.ScConfig(), seed=3)
sc = analysis.sine_probe(model, freqs, duration_s=0.5)
print(f"sc probe:        {sc.matrix.shape[0]} tones x {sc.matrix.shape[1]} dims, "
      f"median peak-to-mean {np.median(sc.peak_to_mean):.1f}")

formats.write_matrix_csv(gt.matrix, {"f_lo": 100, "f_hi": 7900, "f_step": 100},
                         OUT / "probe_gammatone.csv")
formats.write_matrix_csv(sc.matrix, {"f_lo": 100, "f_hi": 7900, "f_step": 100},
                         OUT / "probe_sc_random.csv")
print(f"wrote {OUT / 'probe_gammatone.csv'} and {OUT / 'probe_sc_random.csv'}")

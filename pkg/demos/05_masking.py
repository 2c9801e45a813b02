"""Filter masking: zero the N sharpest or softest first-layer filters.

Filters are ranked by the peak-to-average ratio of their frequency response;
masked kernels produce exactly zero at the filterbank stage because the
convolution carries no bias.
"""

import numpy as np

from rawfe import analysis, dsp, neural

model = neural.init_model("sc", neural.ScConfig(), seed=3)
ranking = analysis.ranking_for_masking(model)
fr = analysis.frequency_response(model.first_layer_bank())

print("sharpest five filters (masked first in 'sharp' mode):")
for i in ranking[:5]:
    print(f"  filter {i:3d}: peak-to-average {fr.peak_to_average[i]:6.2f}, "
          f"band [{fr.lower_cutoff_hz[i]:5.0f}, {fr.upper_cutoff_hz[i]:5.0f}] Hz")
print("softest five (masked first in 'soft' mode):")
for i in ranking[-5:]:
    print(f"  filter {i:3d}: peak-to-average {fr.peak_to_average[i]:6.2f}")

wav = dsp.normalize_waveform(
    dsp.Waveform(np.random.default_rng(1).standard_normal(8000)))

for mode, n in (("sharp", 5), ("soft", 50)):
    masked = neural.mask_filters(model, neural.MaskSpec(mode, n), ranking)
    out = neural.filterbank_output(masked, wav)
    silent = int((~out.any(axis=1)).sum())
    print(f"mask {mode} n={n}: {silent} silent channels, "
          f"output rms {np.sqrt((out ** 2).mean()):.4f}")

"""First-layer filter analysis: responses, display sorting, 3 dB cutoffs.

Compares the fixed gammatone bank against a randomly initialized SC
filterbank and writes both sorted response matrices (dB) to CSV.
"""

from pathlib import Path

import numpy as np

from rawfe import analysis, fixed, formats, neural

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def describe(name, bank):
    fr = analysis.frequency_response(bank)
    order = analysis.sort_filters(fr)
    sharp = np.nanmax(fr.peak_to_average)
    soft = np.nanmin(fr.peak_to_average)
    print(f"{name}: {fr.n_filters} filters, bin {fr.bin_hz:.2f} Hz, "
          f"peak-to-average in [{soft:.1f}, {sharp:.1f}]")
    first = order[0]
    print(f"  lowest-peaked filter after sorting: row {first}, "
          f"band [{fr.lower_cutoff_hz[first]:.0f}, "
          f"{fr.upper_cutoff_hz[first]:.0f}] Hz")
    db = 20.0 * np.log10(fr.magnitudes[order] + 1e-10)
    path = OUT / f"response_{name}.csv"
    formats.write_matrix_csv(db, {"bin_hz": fr.bin_hz, "scale": "db"}, path)
    print(f"  wrote {path}")
    return fr


# Reference: the analytic gammatone bank is already ordered by design.
describe("gammatone", fixed.GAMMATONE_BANK)

# A freshly initialized SC filterbank is unordered broadband noise; the
# sorting makes its response matrix comparable to the reference plot.
model = neural.init_model("sc", neural.ScConfig(), seed=3)
describe("sc_random", model.first_layer_bank())

"""Tour of the conv-stack preset catalog: sizes, receptive fields, shifts.

Prints one line per preset with its exact parameter total and geometry,
the numbers the `rawfe params` and `rawfe audit` subcommands expose.
"""

from rawfe import neural
from rawfe.cli import humanize_count

print(f"{'preset':22s} {'params':>10s} {'rounded':>8s} {'rf':>5s} "
      f"{'rf_ms':>6s} {'shift':>6s} {'ms':>5s}")
for name in neural.PRESET_NAMES:
    config = neural.preset_config(name)
    total = neural.count_params(neural.zero_model("w2v", config))
    rf, rf_ms, shift, shift_ms = neural.audit_geometry(config)
    print(f"{name:22s} {total:10d} {humanize_count(total):>8s} {rf:5d} "
          f"{rf_ms:6.1f} {shift:6d} {shift_ms:5.1f}")

sc_total = neural.count_params(neural.zero_model("sc", neural.ScConfig()))
rf, rf_ms, shift, shift_ms = neural.audit_geometry(neural.ScConfig())
print(f"{'sc (default)':22s} {sc_total:10d} {humanize_count(sc_total):>8s} "
      f"{rf:5d} {rf_ms:6.1f} {shift:6d} {shift_ms:5.1f}")

# The projection alone is ~394k of the 512-dim stacks:
from dataclasses import replace
cfg = neural.preset_config("w2v6@512")
with_proj = neural.count_params(neural.zero_model("w2v", cfg))
without = neural.count_params(
    neural.zero_model("w2v", replace(cfg, include_projection=False)))
print(f"\nfinal projection cost for w2v6@512: {with_proj - without} parameters")

"""Weight archives: save, validate, reload: the RFE1 container end to end.

The archive is self-describing (config echo plus a tensor table), so loads
fail closed on any mismatch instead of silently reinterpreting bytes.
"""

from pathlib import Path

import numpy as np

from rawfe import formats, neural

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

model = neural.init_model("w2v", neural.preset_config("w2v6@512"), seed=21)
path = OUT / "w2v6_512.rfe1"
formats.save_weights(model, path)
print(f"saved {neural.count_params(model)} parameters to {path} "
      f"({path.stat().st_size} bytes)")

back = formats.load_weights(path)
print(f"loaded kind={back.kind}, {len(back.config.layers)} layers, "
      f"projection {back.config.layers[-1].out_channels} -> "
      f"{back.config.projection_dim}")

# Values survive the 32-bit container exactly.
same = all(np.array_equal(back.params[k],
                          model.params[k].astype(np.float32).astype(np.float64))
           for k in model.params)
print(f"float32 round-trip exact: {same}")

# A second save of the loaded model is byte-identical: stable fixed point.
again = OUT / "w2v6_512_again.rfe1"
formats.save_weights(back, again)
print(f"byte-stable fixed point: {path.read_bytes() == again.read_bytes()}")

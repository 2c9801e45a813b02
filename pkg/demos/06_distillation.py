"""Desk-scale training: distill an SC front-end toward log mel targets.

A short run on a synthetic corpus; the loss curve lands in output/ as CSV.
The full-length reproducible run lives in the acceptance suite.
"""

from pathlib import Path

from rawfe import neural, train
from rawfe.synth import synthetic_corpus

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

corpus = synthetic_corpus(20, seed=42)
model = neural.init_model("sc", neural.ScConfig(), seed=7)
cfg = train.TrainConfig(steps=60, peak_lr=0.01, schedule="one-cycle",
                        seed=11, batch_utterances=4)

print(f"training sc ({neural.count_params(model)} params + linear head) "
      f"on {len(corpus)} utterances for {cfg.steps} steps")
result = train.train_distill(model, corpus, cfg)

first = result.curve[:5, 2].mean()
last = result.curve[-5:, 2].mean()
print(f"loss: {first:.3f} -> {last:.3f}  ({last / first:.2f}x)")
print(f"peak lr reached at step {result.curve[:, 1].argmax()} "
      f"of {cfg.steps} (one-cycle schedule)")

train.write_loss_curve(OUT / "distill_curve.csv", result.curve)
print(f"wrote {OUT / 'distill_curve.csv'}")

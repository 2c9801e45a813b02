"""Desk-scale training: gradient checking and distillation to log mel targets.

The trainer fits a neural front-end plus a linear head to reproduce the
80-dim log mel features frame by frame.  It exists to demonstrate that the
learnable front-ends optimize, not to reach recognition-grade quality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rawfe import autodiff as ad
from rawfe.autodiff import Tensor, backward
from rawfe.dsp import Waveform, normalize_waveform
from rawfe.errors import FrameMismatch, InputTooShort, InvalidEpsilon, RawFeError
from rawfe.fixed import N_MELS, logmel_extract
from rawfe.neural import FeModel, audit_geometry, sc_graph, w2v_graph

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
TARGET_SHIFT_MS = 10.0
MIN_UTTERANCE_SAMPLES = 16000  # 1 s


@dataclass(frozen=True)
class TrainConfig:
    """Distillation run settings; peak_lr = 0 degenerates to a no-op run."""

    steps: int
    peak_lr: float
    schedule: str = "one-cycle"  # constant | one-cycle
    seed: int = 0
    batch_utterances: int = 4

    def __post_init__(self):
        if self.steps < 1:
            raise RawFeError("steps must be >= 1")
        if self.peak_lr < 0:
            raise RawFeError("peak_lr must be non-negative")
        if self.schedule not in ("constant", "one-cycle"):
            raise RawFeError(f"unknown schedule '{self.schedule}'")
        if self.batch_utterances < 1:
            raise RawFeError("batch_utterances must be >= 1")


def one_cycle_lr(step: int, total_steps: int, peak_lr: float) -> float:
    """Piecewise-linear one-cycle schedule.

    Warm-up from peak/10 to peak over the first 45% of steps, decay back to
    peak/10 over the next 45%, then a final linear decay to peak/100 at the
    last step.
    """
    warm = round(0.45 * total_steps)
    if warm == 0:
        return peak_lr
    if step <= warm:
        return peak_lr * (0.1 + 0.9 * step / warm)
    if step <= 2 * warm:
        return peak_lr * (1.0 - 0.9 * (step - warm) / warm)
    tail = max(1, total_steps - 1 - 2 * warm)
    return peak_lr * (0.1 - 0.09 * (step - 2 * warm) / tail)


def schedule_lr(cfg: TrainConfig, step: int) -> float:
    if cfg.schedule == "constant":
        return cfg.peak_lr
    return one_cycle_lr(step, cfg.steps, cfg.peak_lr)


class Adam:
    """Adaptive-moment optimizer over a dict of named parameter arrays."""

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = params
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray], lr: float):
        self.t += 1
        b1c = 1.0 - ADAM_BETA1 ** self.t
        b2c = 1.0 - ADAM_BETA2 ** self.t
        for name, p in self.params.items():
            g = grads.get(name)
            if g is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + ADAM_EPS)


def _graph(model_kind: str, config, params: dict[str, Tensor], x: Tensor) -> Tensor:
    if model_kind == "w2v":
        return w2v_graph(params, config, x)
    return sc_graph(params, config, x)


def _probe_loss(model: FeModel, params_np: dict[str, np.ndarray],
                x: np.ndarray) -> float:
    """Mean squared activation: the fixed scalar loss used for grad checking."""
    params = {k: Tensor(v) for k, v in params_np.items()}
    out = _graph(model.kind, model.config, params, Tensor(x))
    return float((out.data ** 2).mean())


def finite_diff_check(model: FeModel, wav, eps: float = 1e-4,
                      max_checked: int = 512, seed: int = 0) -> float:
    """Max relative error between backward() and central finite differences.

    The loss is the mean squared output activation.  All parameters are
    perturbed when the model holds at most max_checked scalars, otherwise a
    seeded sample of max_checked entries.

    The magnitude rectification makes the loss only piecewise smooth, so a
    perturbation interval can bracket a kink where the central difference
    stops estimating the derivative.  The step is therefore shrunk (up to
    10000x) until two consecutive central estimates agree; the derivative
    exists at such points, the smaller step just lets the oracle converge to
    it.  Errors are measured relative to
    max(|analytic|, |numeric|, 1e-3 * largest analytic gradient).

    Raises:
        InvalidEpsilon: eps <= 0.
    """
    if eps <= 0:
        raise InvalidEpsilon(f"finite-difference step must be positive, got {eps}")
    x = wav.samples[None, :]

    params = {k: Tensor(v.copy(), requires_grad=True)
              for k, v in model.params.items()}
    out = _graph(model.kind, model.config, params, Tensor(x))
    backward(ad.mean(ad.mul(out, out)))
    analytic = {k: t.grad for k, t in params.items()}

    names = sorted(model.params)
    sizes = [model.params[k].size for k in names]
    total = sum(sizes)
    if total <= max_checked:
        flat_idx = np.arange(total)
    else:
        flat_idx = np.sort(np.random.default_rng(seed).choice(
            total, size=max_checked, replace=False))

    bounds = np.cumsum([0] + sizes)
    work = {k: model.params[k].copy() for k in names}
    gmax = max(np.abs(g).max() for g in analytic.values())
    floor = max(1e-3 * gmax, 1e-12)
    worst = 0.0
    for idx in flat_idx:
        which = np.searchsorted(bounds, idx, side="right") - 1
        name = names[which]
        local = int(idx - bounds[which])
        flat = work[name].reshape(-1)
        keep = flat[local]

        def central(step):
            flat[local] = keep + step
            hi = _probe_loss(model, work, x)
            flat[local] = keep - step
            lo = _probe_loss(model, work, x)
            flat[local] = keep
            return (hi - lo) / (2.0 * step)

        # Shrink the step until two consecutive estimates agree: a bracketed
        # kink keeps them apart, a smooth bracket converges immediately.
        step = eps
        numeric = central(step)
        for _ in range(4):
            step /= 10.0
            refined = central(step)
            close = abs(refined - numeric) <= 1e-5 * max(
                abs(refined), abs(numeric), floor)
            numeric = refined
            if close:
                break
        exact = analytic[name].reshape(-1)[local]
        err = abs(exact - numeric) / max(abs(exact), abs(numeric), floor)
        worst = max(worst, err)
    return worst


@dataclass
class TrainResult:
    """Trained front-end, its linear head, and the per-step loss curve."""

    model: FeModel
    head_weight: np.ndarray
    head_bias: np.ndarray
    curve: np.ndarray = field(repr=False)  # (steps, 3): step, lr, loss


def train_distill(model: FeModel, corpus: list[Waveform],
                  cfg: TrainConfig) -> TrainResult:
    """Fit front-end + linear head to the log mel features of each utterance.

    Front-end output and targets are frame-aligned at the 10 ms shift by
    truncating both to their common frame count.  Deterministic for a fixed
    seed and single-threaded execution.

    Raises:
        FrameMismatch: the model does not produce 10 ms frames.
        InputTooShort: an utterance is shorter than 1 s.
    """
    shift_ms = audit_geometry(model)[3]
    if shift_ms != TARGET_SHIFT_MS:
        raise FrameMismatch(
            f"front-end shift is {shift_ms} ms, targets are {TARGET_SHIFT_MS} ms")
    if not corpus:
        raise InputTooShort("corpus is empty")
    for i, wav in enumerate(corpus):
        if len(wav) < MIN_UTTERANCE_SAMPLES:
            raise InputTooShort(f"utterance {i} shorter than 1 s ({len(wav)} samples)")

    rng = np.random.default_rng(cfg.seed)
    inputs = [normalize_waveform(w).samples[None, :] for w in corpus]
    targets = [logmel_extract(w).values for w in corpus]

    out_dim = model.config.output_dim
    bound = np.sqrt(1.0 / out_dim)
    params = {k: v.copy() for k, v in model.params.items()}
    params["head.weight"] = rng.uniform(-bound, bound, size=(out_dim, N_MELS))
    params["head.bias"] = rng.uniform(-bound, bound, size=(N_MELS,))

    optimizer = Adam(params)
    n = len(corpus)
    order = np.arange(n)
    cursor = n  # force a reshuffle on the first step
    curve = np.zeros((cfg.steps, 3))

    for step in range(cfg.steps):
        batch = []
        if cfg.batch_utterances >= n:
            batch = list(range(n))
        else:
            while len(batch) < cfg.batch_utterances:
                if cursor >= n:
                    order = rng.permutation(n)
                    cursor = 0
                batch.append(int(order[cursor]))
                cursor += 1

        tensors = {k: Tensor(v, requires_grad=True) for k, v in params.items()}
        losses = []
        for j in batch:
            out = _graph(model.kind, model.config, tensors, Tensor(inputs[j]))
            pred = ad.add(ad.matmul(out, tensors["head.weight"]),
                          tensors["head.bias"])
            frames = min(pred.data.shape[0], targets[j].shape[0])
            losses.append(ad.mse(ad.slice_rows(pred, frames),
                                 Tensor(targets[j][:frames])))
        loss = losses[0]
        for extra in losses[1:]:
            loss = ad.add(loss, extra)
        loss = ad.mul(loss, 1.0 / len(losses))

        backward(loss)
        lr = schedule_lr(cfg, step)
        grads = {k: (t.grad if t.grad is not None else np.zeros_like(t.data))
                 for k, t in tensors.items()}
        optimizer.step(grads, lr)
        curve[step] = (step, lr, float(loss.data))

    head_w = params.pop("head.weight")
    head_b = params.pop("head.bias")
    trained = FeModel(model.kind, model.config, params)
    return TrainResult(trained, head_w, head_b, curve)


def write_loss_curve(path, curve: np.ndarray):
    """Loss curve as CSV with a 'step,lr,loss' header."""
    lines = ["step,lr,loss"]
    lines += [f"{int(s)},{lr:.9g},{loss:.9g}" for s, lr, loss in curve]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")

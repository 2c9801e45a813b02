"""Pull the feature-encoder weights out of a training checkpoint."""

from __future__ import annotations

import sys

import numpy as np
import torch

from w2vfe_exporter.archive import conv_stack_echo, write_archive
from w2vfe_exporter.mapping import KERNELS, N_CONV_LAYERS, detect_layout


class MissingKey(KeyError):
    """A mapped tensor is absent from the checkpoint."""


class ShapeSurprise(ValueError):
    """A mapped tensor has unexpected dimensions."""


def _load_state_dict(path) -> dict:
    try:
        ckpt = torch.load(path, map_location="cpu", weights_only=True)
    except Exception:
        # full training checkpoints carry pickled config objects
        print("weights-only load failed, retrying with full unpickling",
              file=sys.stderr)
        ckpt = torch.load(path, map_location="cpu", weights_only=False)
    for key in ("model", "state_dict"):
        if isinstance(ckpt, dict) and key in ckpt and isinstance(ckpt[key], dict):
            ckpt = ckpt[key]
    if not isinstance(ckpt, dict):
        raise ShapeSurprise("checkpoint does not contain a state dict")
    return ckpt


def _check_conv_shapes(kernels: list[np.ndarray]):
    widths = []
    in_channels = 1
    for i, kernel in enumerate(kernels):
        if kernel.ndim != 3:
            raise ShapeSurprise(f"conv{i}.weight has {kernel.ndim} dims, need 3")
        out, inp, taps = kernel.shape
        if taps != KERNELS[i]:
            raise ShapeSurprise(
                f"conv{i}.weight kernel size {taps}, expected {KERNELS[i]}")
        if inp != in_channels:
            raise ShapeSurprise(
                f"conv{i}.weight reads {inp} channels, expected {in_channels}")
        widths.append(out)
        in_channels = out
    return widths


def export_fe(checkpoint_path, out_path, drop_last_layer: bool = False) -> dict:
    """Write the checkpoint's feature encoder as an RFE1 archive.

    Float values are copied bit-for-bit at 32-bit precision; the projection
    matrix is stored transposed ((in, out) order) to match the archive
    convention, which permutes but never recomputes values.
    drop_last_layer emits the 6-layer variant that halves the frame shift.

    Returns a small summary dict (layers, width, tensor count).

    Raises:
        MissingKey: an expected tensor is absent.
        ShapeSurprise: a tensor has unexpected dimensions.
    """
    state = _load_state_dict(checkpoint_path)
    try:
        layout, prefix = detect_layout(state.keys())
    except KeyError as e:
        raise MissingKey(str(e)) from e

    grabbed: dict[str, np.ndarray] = {}
    for source, target in layout.pairs:
        key = prefix + source
        if key not in state:
            raise MissingKey(f"checkpoint lacks '{key}' (for {target})")
        tensor = state[key]
        if tensor.dtype != torch.float32:
            raise ShapeSurprise(f"{key}: dtype {tensor.dtype}, need float32")
        grabbed[target] = tensor.detach().cpu().numpy()

    widths = _check_conv_shapes([grabbed[f"conv{i}.weight"]
                                 for i in range(N_CONV_LAYERS)])
    width = widths[-1]
    for name in ("conv0.norm.scale", "conv0.norm.offset",
                 "final_norm.scale", "final_norm.offset"):
        if grabbed[name].shape != ((widths[0],) if name.startswith("conv0")
                                   else (width,)):
            raise ShapeSurprise(f"{name}: shape {grabbed[name].shape}")
    proj = grabbed["projection.weight"]
    if proj.ndim != 2 or proj.shape[1] != width:
        raise ShapeSurprise(f"projection.weight: shape {proj.shape}, "
                            f"expected (*, {width})")
    projection_dim = proj.shape[0]
    if grabbed["projection.bias"].shape != (projection_dim,):
        raise ShapeSurprise("projection.bias inconsistent with weight")
    grabbed["projection.weight"] = proj.T  # archive stores (in, out)

    n_layers = N_CONV_LAYERS - 1 if drop_last_layer else N_CONV_LAYERS
    if drop_last_layer:
        del grabbed[f"conv{N_CONV_LAYERS - 1}.weight"]
        widths = widths[:n_layers]

    echo = conv_stack_echo(widths, projection_dim)
    write_archive(out_path, "w2v", echo, grabbed)
    return {"layers": n_layers, "width": width, "tensors": len(grabbed)}

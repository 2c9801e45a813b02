"""Standalone RFE1 archive writer.

Byte layout shared with the consumer: 'RFE1' magic, uint32 little-endian
header length, a JSON header (format_version, kind, config echo, tensor
table with byte offsets), then contiguous little-endian float32 data.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from w2vfe_exporter.mapping import KERNELS, STRIDES

MAGIC = b"RFE1"
FORMAT_VERSION = 1
PROJECTION_ACTIVATION = "gelu"


def conv_stack_echo(widths: list[int], projection_dim: int) -> dict:
    """Config echo for a strided stack: group norm on layer 0, GELU throughout."""
    layers = []
    in_channels = 1
    for i, width in enumerate(widths):
        layers.append({
            "kernel": KERNELS[i],
            "stride": STRIDES[i],
            "in_channels": in_channels,
            "out_channels": width,
            "norm": "group" if i == 0 else "none",
            "activation": PROJECTION_ACTIVATION,
            "pointwise": False,
        })
        in_channels = width
    return {
        "layers": layers,
        "final_layer_norm": True,
        "projection_dim": projection_dim,
        "include_projection": True,
    }


def write_archive(path, kind: str, config_echo: dict,
                  tensors: dict[str, np.ndarray]):
    """Serialize float32 tensors in sorted-name order with declared offsets."""
    table = []
    chunks = []
    offset = 0
    for name in sorted(tensors):
        value = np.ascontiguousarray(tensors[name], dtype="<f4")
        table.append({"name": name, "shape": list(value.shape),
                      "offset": offset})
        chunks.append(value.tobytes())
        offset += len(chunks[-1])
    header = {"format_version": FORMAT_VERSION, "kind": kind,
              "config": config_echo, "tensors": table}
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(b"".join(chunks))

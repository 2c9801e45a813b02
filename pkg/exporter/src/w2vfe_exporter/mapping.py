"""Source-key layouts of published checkpoints and the archive name map."""

from __future__ import annotations

from dataclasses import dataclass, field

N_CONV_LAYERS = 7
# The published base feature encoder: 7 strided conv layers.
KERNELS = (10, 3, 3, 3, 3, 2, 2)
STRIDES = (5, 2, 2, 2, 2, 2, 2)


@dataclass(frozen=True)
class TensorNameMap:
    """Ordered (source key -> archive tensor name) pairs for one layout.

    Covers the 7 conv kernels, the first layer's group-norm affine pair, the
    trailing layer-norm pair, and the projection weight and bias: 13 tensors.
    """

    name: str
    pairs: tuple[tuple[str, str], ...] = field(repr=False)

    def __post_init__(self):
        sources = [src for src, _ in self.pairs]
        if len(sources) != len(set(sources)):
            raise ValueError(f"{self.name}: a source key is mapped twice")
        if len(self.pairs) != N_CONV_LAYERS + 2 + 2 + 2:
            raise ValueError(f"{self.name}: expected 13 mapped tensors, "
                             f"got {len(self.pairs)}")


def _fairseq_map() -> TensorNameMap:
    pairs = [(f"feature_extractor.conv_layers.{i}.0.weight", f"conv{i}.weight")
             for i in range(N_CONV_LAYERS)]
    pairs += [
        ("feature_extractor.conv_layers.0.2.weight", "conv0.norm.scale"),
        ("feature_extractor.conv_layers.0.2.bias", "conv0.norm.offset"),
        ("layer_norm.weight", "final_norm.scale"),
        ("layer_norm.bias", "final_norm.offset"),
        ("post_extract_proj.weight", "projection.weight"),
        ("post_extract_proj.bias", "projection.bias"),
    ]
    return TensorNameMap("fairseq", tuple(pairs))


def _transformers_map() -> TensorNameMap:
    pairs = [(f"feature_extractor.conv_layers.{i}.conv.weight", f"conv{i}.weight")
             for i in range(N_CONV_LAYERS)]
    pairs += [
        ("feature_extractor.conv_layers.0.layer_norm.weight", "conv0.norm.scale"),
        ("feature_extractor.conv_layers.0.layer_norm.bias", "conv0.norm.offset"),
        ("feature_projection.layer_norm.weight", "final_norm.scale"),
        ("feature_projection.layer_norm.bias", "final_norm.offset"),
        ("feature_projection.projection.weight", "projection.weight"),
        ("feature_projection.projection.bias", "projection.bias"),
    ]
    return TensorNameMap("transformers", tuple(pairs))


LAYOUTS = (_fairseq_map(), _transformers_map())
PREFIXES = ("", "wav2vec2.", "model.")


def detect_layout(keys) -> tuple[TensorNameMap, str]:
    """Pick the layout (and key prefix) whose first conv key is present.

    Raises:
        KeyError: no known layout matches.
    """
    keys = set(keys)
    for layout in LAYOUTS:
        probe = layout.pairs[0][0]
        for prefix in PREFIXES:
            if prefix + probe in keys:
                return layout, prefix
    raise KeyError("no known feature-encoder key layout found in checkpoint")

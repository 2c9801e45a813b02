"""Learnable front-ends: the strided conv-stack encoder and the SC features.

Models are plain parameter dictionaries plus a config; forward passes build
an autodiff graph only when the parameters are wrapped with gradients, so
inference stays a pure numpy computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rawfe import autodiff as ad
from rawfe.autodiff import Tensor
from rawfe.dsp import SAMPLE_RATE, FilterBank, NormalizedWaveform
from rawfe.errors import BadCount, BadDim, InputTooShort, UnknownPreset
from rawfe.fixed import FeatureMatrix

PROJECTION_DIM = 768
SC_COMPRESSION_EPS = 1e-2  # floor of the smooth log compression


@dataclass(frozen=True)
class ConvLayerSpec:
    """One strided conv layer: kernel taps, stride, channels, norm, activation."""

    kernel: int
    stride: int
    in_channels: int
    out_channels: int
    norm: str = "none"          # none | group
    activation: str = "gelu"    # none | gelu
    pointwise: bool = False

    def __post_init__(self):
        if self.kernel < 1 or self.stride < 1:
            raise BadDim("kernel and stride must be positive")
        if self.in_channels < 1 or self.out_channels < 1:
            raise BadDim("channel counts must be positive")
        if self.pointwise and (self.kernel != 1 or self.stride != 1):
            raise BadDim("pointwise layers must have kernel=1 and stride=1")
        if self.norm not in ("none", "group"):
            raise BadDim(f"unknown norm '{self.norm}'")
        if self.activation not in ("none", "gelu"):
            raise BadDim(f"unknown activation '{self.activation}'")


@dataclass(frozen=True)
class ConvStackConfig:
    """Full conv-stack encoder: layers, trailing layer norm, linear projection."""

    layers: tuple[ConvLayerSpec, ...]
    final_layer_norm: bool = True
    projection_dim: int = PROJECTION_DIM
    include_projection: bool = True

    def __post_init__(self):
        if not self.layers:
            raise BadDim("config needs at least one layer")
        if self.layers[0].in_channels != 1:
            raise BadDim("first layer must read the 1-channel waveform")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_channels != b.in_channels:
                raise BadDim(
                    f"channel chain broken: {a.out_channels} -> {b.in_channels}")
        if self.projection_dim < 1:
            raise BadDim("projection dim must be positive")

    @property
    def output_dim(self) -> int:
        if self.include_projection:
            return self.projection_dim
        return self.layers[-1].out_channels


@dataclass(frozen=True)
class ScConfig:
    """Learned filterbank + shared temporal-integration filters."""

    fb_size: int = 160
    fb_stride: int = 10
    fb_channels: int = 150
    n_integration: int = 5
    int_size: int = 40
    int_stride: int = 16

    def __post_init__(self):
        for name in ("fb_size", "fb_stride", "fb_channels",
                     "n_integration", "int_size", "int_stride"):
            if getattr(self, name) < 1:
                raise BadDim(f"{name} must be positive")

    @property
    def output_dim(self) -> int:
        return self.fb_channels * self.n_integration


@dataclass(frozen=True)
class MaskSpec:
    """Masking request: zero the N sharpest or N softest first-layer filters."""

    mode: str  # sharp | soft
    count: int

    def __post_init__(self):
        if self.mode not in ("sharp", "soft"):
            raise BadCount(f"mask mode must be 'sharp' or 'soft', got '{self.mode}'")
        if self.count < 0:
            raise BadCount("mask count must be non-negative")


@dataclass
class FeModel:
    """A learnable front-end: kind ('w2v' or 'sc'), config, named parameters."""

    kind: str
    config: ConvStackConfig | ScConfig
    params: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        expected = param_shapes(self.kind, self.config)
        if set(self.params) != set(expected):
            missing = set(expected) - set(self.params)
            extra = set(self.params) - set(expected)
            raise BadDim(f"parameter names mismatch (missing={sorted(missing)}, "
                         f"extra={sorted(extra)})")
        for name, shape in expected.items():
            if tuple(self.params[name].shape) != shape:
                raise BadDim(f"{name}: expected shape {shape}, "
                             f"got {tuple(self.params[name].shape)}")

    def first_layer_bank(self) -> FilterBank:
        """The waveform-facing filterbank (one kernel row per output channel)."""
        if self.kind == "sc":
            return FilterBank(self.params["filterbank.weight"],
                              stride=self.config.fb_stride)
        return FilterBank(self.params["conv0.weight"][:, 0, :],
                          stride=self.config.layers[0].stride)


# --- preset catalog ---

_STACKS = {
    7: ((10, 3, 3, 3, 3, 2, 2), (5, 2, 2, 2, 2, 2, 2)),
    6: ((10, 3, 3, 3, 3, 2), (5, 2, 2, 2, 2, 2)),
    5: ((10, 6, 3, 3, 3), (5, 4, 2, 2, 2)),
    4: ((10, 6, 6, 3), (5, 4, 4, 2)),
    3: ((20, 6, 6), (10, 4, 4)),
    2: ((32, 20), (16, 10)),
    1: ((320,), (160,)),
}


def _progressive_dims(first: int, n_layers: int) -> tuple[int, ...]:
    """Widths doubling after every odd layer (1-based): 64,128,128,256,256,512."""
    dims, d = [], first
    for i in range(1, n_layers + 1):
        dims.append(d)
        if i % 2 == 1:
            d *= 2
    return tuple(dims)


def _stack_config(kernels, strides, dims, pointwise_after_first=False) -> ConvStackConfig:
    layers = []
    in_ch = 1
    for i, (k, s, d) in enumerate(zip(kernels, strides, dims)):
        layers.append(ConvLayerSpec(k, s, in_ch, d,
                                    norm="group" if i == 0 else "none"))
        if pointwise_after_first and i > 0:
            layers.append(ConvLayerSpec(1, 1, d, d, pointwise=True))
        in_ch = d
    return ConvStackConfig(tuple(layers))


def preset_config(name: str) -> ConvStackConfig:
    """Named encoder configurations from the preset catalog.

    Strided stacks: 'w2v7' (25 ms field, 20 ms shift), 'w2vN@D' for N in 2..6
    layers at width D, 'w2v1' (single 320/160 layer, known not to converge),
    'w2vN' as shorthand for 'w2vN@512'.  Progressive widths:
    'w2v6-prog64-512', 'w2v6-prog128-1024', and 'w2v11-prog128-1024' with a
    pointwise layer after every strided layer but the first.

    Raises:
        UnknownPreset: name not in the catalog.
    """
    base = name.split("@")[0]
    width = None
    if "@" in name:
        try:
            width = int(name.split("@")[1])
        except ValueError:
            raise UnknownPreset(f"bad width in preset '{name}'") from None

    if base == "w2v6-prog64-512" and width is None:
        kernels, strides = _STACKS[6]
        return _stack_config(kernels, strides, _progressive_dims(64, 6))
    if base == "w2v6-prog128-1024" and width is None:
        kernels, strides = _STACKS[6]
        return _stack_config(kernels, strides, _progressive_dims(128, 6))
    if base == "w2v11-prog128-1024" and width is None:
        kernels, strides = _STACKS[6]
        return _stack_config(kernels, strides, _progressive_dims(128, 6),
                             pointwise_after_first=True)

    if base.startswith("w2v") and base[3:].isdigit():
        n_layers = int(base[3:])
        if n_layers in _STACKS:
            allowed = {1: (512,), 7: (512,),
                       6: (64, 128, 256, 512, 1024)}.get(n_layers, (64, 512))
            width = 512 if width is None else width
            if width in allowed:
                kernels, strides = _STACKS[n_layers]
                return _stack_config(kernels, strides, (width,) * n_layers)
    raise UnknownPreset(f"unknown preset '{name}'")


PRESET_NAMES = (
    ["w2v7", "w2v1"]
    + [f"w2v6@{d}" for d in (64, 128, 256, 512, 1024)]
    + [f"w2v{n}@{d}" for n in (5, 4, 3, 2) for d in (64, 512)]
    + ["w2v6-prog64-512", "w2v6-prog128-1024", "w2v11-prog128-1024"]
)


# --- parameters ---

def param_shapes(kind: str, config) -> dict[str, tuple[int, ...]]:
    """Canonical tensor table for a model: name -> shape.

    Single source of truth for construction, counting, serialization and
    archive validation.
    """
    shapes: dict[str, tuple[int, ...]] = {}
    if kind == "w2v":
        for i, layer in enumerate(config.layers):
            shapes[f"conv{i}.weight"] = (layer.out_channels, layer.in_channels,
                                         layer.kernel)
            if layer.norm == "group":
                shapes[f"conv{i}.norm.scale"] = (layer.out_channels,)
                shapes[f"conv{i}.norm.offset"] = (layer.out_channels,)
        last = config.layers[-1].out_channels
        if config.final_layer_norm:
            shapes["final_norm.scale"] = (last,)
            shapes["final_norm.offset"] = (last,)
        if config.include_projection:
            shapes["projection.weight"] = (last, config.projection_dim)
            shapes["projection.bias"] = (config.projection_dim,)
    elif kind == "sc":
        shapes["filterbank.weight"] = (config.fb_channels, config.fb_size)
        shapes["integration.weight"] = (config.n_integration, config.int_size)
        shapes["output.scale"] = (config.output_dim,)
        shapes["output.offset"] = (config.output_dim,)
    else:
        raise BadDim(f"unknown model kind '{kind}'")
    return shapes


def _fan_in(name: str, shape: tuple[int, ...], kind: str, config) -> int | None:
    """Fan-in for uniform initialization; None for norm/offset tensors."""
    if name.endswith(".scale") or name.endswith(".offset"):
        return None
    if name == "projection.weight" or name == "projection.bias":
        return shape[0] if name.endswith("weight") else config.layers[-1].out_channels
    if kind == "w2v":  # conv weight (out, in, k)
        return shape[1] * shape[2]
    return shape[-1]  # sc filterbank/integration kernels see one channel


def init_model(kind: str, config, seed: int) -> FeModel:
    """Deterministic model construction from a seed.

    Conv and projection tensors are uniform in +-sqrt(1/fan_in); norm and
    output scales start at 1, offsets at 0.
    """
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(kind, config).items():
        fan = _fan_in(name, shape, kind, config)
        if fan is None:
            fill = 1.0 if name.endswith(".scale") else 0.0
            params[name] = np.full(shape, fill, dtype=np.float64)
        else:
            bound = np.sqrt(1.0 / fan)
            params[name] = rng.uniform(-bound, bound, size=shape)
    return FeModel(kind, config, params)


def zero_model(kind: str, config) -> FeModel:
    """All-zero parameters; cheap scaffold for counting and shape checks."""
    params = {name: np.zeros(shape)
              for name, shape in param_shapes(kind, config).items()}
    return FeModel(kind, config, params)


def count_params(model: FeModel) -> int:
    """Number of learnable scalars actually held by the model."""
    return sum(p.size for p in model.params.values())


def audit_geometry(model_or_config) -> tuple[int, float, int, float]:
    """(receptive field samples, ms, frame shift samples, ms) of a conv stack.

    Receptive field is 1 + sum_i (k_i - 1) * prod_{j<i} s_j; the shift is the
    product of all strides.  Accepts a model, a ConvStackConfig or an ScConfig.
    """
    config = getattr(model_or_config, "config", model_or_config)
    if isinstance(config, ScConfig):
        specs = [(config.fb_size, config.fb_stride),
                 (config.int_size, config.int_stride)]
    else:
        specs = [(l.kernel, l.stride) for l in config.layers]
    rf, jump = 1, 1
    for k, s in specs:
        rf += (k - 1) * jump
        jump *= s
    ms = 1000.0 / SAMPLE_RATE
    return rf, rf * ms, jump, jump * ms


def output_frames(model_or_config, n_samples: int) -> int:
    """Composed floor((L - k)/s) + 1 frame count; 0 when the input is too short."""
    config = getattr(model_or_config, "config", model_or_config)
    if isinstance(config, ScConfig):
        specs = [(config.fb_size, config.fb_stride),
                 (config.int_size, config.int_stride)]
    else:
        specs = [(l.kernel, l.stride) for l in config.layers]
    length = n_samples
    for k, s in specs:
        if length < k:
            return 0
        length = (length - k) // s + 1
    return length


# --- forward passes ---

def _as_tensors(model: FeModel, trainable: bool) -> dict[str, Tensor]:
    return {name: Tensor(value, requires_grad=trainable)
            for name, value in model.params.items()}


def w2v_graph(params: dict[str, Tensor], config: ConvStackConfig,
              x: Tensor) -> Tensor:
    """Conv-stack forward over tensors: x (1, T) -> features (frames, dims)."""
    h = x
    for i, layer in enumerate(config.layers):
        h = ad.conv1d(h, params[f"conv{i}.weight"], layer.stride)
        if layer.norm == "group":
            scale = ad.reshape(params[f"conv{i}.norm.scale"], (-1, 1))
            offset = ad.reshape(params[f"conv{i}.norm.offset"], (-1, 1))
            h = ad.normalize_rows(h, scale, offset)
        if layer.activation == "gelu":
            h = ad.gelu(h)
    h = ad.transpose(h)  # (frames, channels)
    if config.final_layer_norm:
        h = ad.normalize_rows(h, params["final_norm.scale"],
                              params["final_norm.offset"])
    if config.include_projection:
        h = ad.add(ad.matmul(h, params["projection.weight"]),
                   params["projection.bias"])
    return h


def sc_graph(params: dict[str, Tensor], config: ScConfig, x: Tensor) -> Tensor:
    """SC forward over tensors: x (1, T) -> features (frames, dims).

    Filterbank conv -> magnitude -> shared integration filters -> smooth
    log compression -> stacked (filter-major) -> learned per-dim scale and
    offset.
    """
    fb = ad.reshape(params["filterbank.weight"],
                    (config.fb_channels, 1, config.fb_size))
    h = ad.conv1d(x, fb, config.fb_stride)          # (channels, T1)
    h = ad.abs_(h)
    h = ad.conv1d_shared(h, params["integration.weight"],
                         config.int_stride)          # (n_int, channels, T2)
    h = ad.log10_hypot_eps(h, SC_COMPRESSION_EPS)
    t2 = h.data.shape[-1]
    h = ad.reshape(h, (config.output_dim, t2))       # dim index = f*channels + c
    scale = ad.reshape(params["output.scale"], (-1, 1))
    offset = ad.reshape(params["output.offset"], (-1, 1))
    h = ad.add(ad.mul(h, scale), offset)
    return ad.transpose(h)


def _forward(model: FeModel, wav: NormalizedWaveform) -> np.ndarray:
    if output_frames(model, len(wav)) < 1:
        rf = audit_geometry(model)[0]
        raise InputTooShort(
            f"{len(wav)} samples below the {rf}-sample receptive field")
    x = Tensor(wav.samples[None, :])
    params = _as_tensors(model, trainable=False)
    if model.kind == "w2v":
        return w2v_graph(params, model.config, x).data
    return sc_graph(params, model.config, x).data


def w2v_forward(model: FeModel, wav: NormalizedWaveform) -> FeatureMatrix:
    """Run the conv-stack encoder; frame shift follows audit_geometry.

    Raises:
        InputTooShort: input below the receptive field.
    """
    values = _forward(model, wav)
    return FeatureMatrix(values, audit_geometry(model)[3])


def sc_forward(model: FeModel, wav: NormalizedWaveform) -> FeatureMatrix:
    """Run the SC front-end (10 ms shift with the default config).

    Raises:
        InputTooShort: input below the receptive field.
    """
    values = _forward(model, wav)
    return FeatureMatrix(values, audit_geometry(model)[3])


def forward(model: FeModel, wav: NormalizedWaveform) -> FeatureMatrix:
    """Kind-dispatching forward pass."""
    return w2v_forward(model, wav) if model.kind == "w2v" else sc_forward(model, wav)


def filterbank_output(model: FeModel, wav: NormalizedWaveform) -> np.ndarray:
    """Raw first-layer filterbank response (n_filters, T1), before any norm."""
    bank = model.first_layer_bank()
    x = Tensor(wav.samples[None, :])
    w = Tensor(bank.kernels[:, None, :])
    return ad.conv1d(x, w, bank.stride).data


def mask_filters(model: FeModel, spec: MaskSpec, ranking) -> FeModel:
    """Copy of the model with the selected first-layer kernels zeroed.

    'sharp' masks the first spec.count entries of the ranking, 'soft' the
    last.  Bias-free convolution makes masked channels output exactly 0.

    Raises:
        BadCount: count outside [0, n_filters] or ranking incomplete.
    """
    if model.kind == "sc":
        key, n_filters = "filterbank.weight", model.config.fb_channels
    else:
        key, n_filters = "conv0.weight", model.config.layers[0].out_channels
    ranking = list(ranking)
    if sorted(ranking) != list(range(n_filters)):
        raise BadCount(f"ranking must be a permutation of 0..{n_filters - 1}")
    if not 0 <= spec.count <= n_filters:
        raise BadCount(f"mask count {spec.count} outside [0, {n_filters}]")
    selected = ranking[:spec.count] if spec.mode == "sharp" else \
        ranking[len(ranking) - spec.count:]
    params = {name: value.copy() for name, value in model.params.items()}
    params[key][selected] = 0.0
    return FeModel(model.kind, model.config, params)

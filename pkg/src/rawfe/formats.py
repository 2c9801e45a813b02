"""External file formats: WAV ingestion, weight archives, matrix CSV/binary.

All multi-byte fields are little-endian; identical inputs produce identical
bytes on every platform.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from rawfe.dsp import SAMPLE_RATE, Waveform
from rawfe.errors import (
    CorruptFile,
    EmptyMatrix,
    IoFailure,
    MagicMismatch,
    ShapeMismatch,
    TruncatedPayload,
    UnsupportedFormat,
)
from rawfe.fixed import FeatureMatrix
from rawfe.neural import (
    ConvLayerSpec,
    ConvStackConfig,
    FeModel,
    ScConfig,
    param_shapes,
)

ARCHIVE_MAGIC = b"RFE1"
FEATURE_MAGIC = b"RFM1"
ARCHIVE_VERSION = 1


# --- WAV (RIFF PCM, mono, 16-bit, 16 kHz) ---

def read_wav(path) -> Waveform:
    """Read a mono 16-bit 16 kHz PCM WAV file; samples scaled to [-1, 1).

    Raises:
        CorruptFile: structure is not a well-formed RIFF/WAVE PCM file.
        UnsupportedFormat: valid WAV but not mono/16-bit/16 kHz PCM.
    """
    try:
        blob = open(path, "rb").read()
    except OSError as e:
        raise IoFailure(str(e)) from e
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise CorruptFile("missing RIFF/WAVE header")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        size = struct.unpack_from("<I", blob, pos + 4)[0]
        body = blob[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise CorruptFile(f"chunk '{cid.decode(errors='replace')}' truncated")
        if cid == b"fmt ":
            if size < 16:
                raise CorruptFile("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise CorruptFile("missing fmt or data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormat(f"compression code {audio_format}, need PCM")
    if channels != 1:
        raise UnsupportedFormat(f"{channels} channels, need mono")
    if bits != 16:
        raise UnsupportedFormat(f"{bits}-bit samples, need 16")
    if rate != SAMPLE_RATE:
        raise UnsupportedFormat(f"{rate} Hz, need {SAMPLE_RATE}")
    if len(data) % 2 != 0:
        raise CorruptFile("data chunk holds a partial sample")
    samples = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    if samples.size == 0:
        raise CorruptFile("data chunk is empty")
    return Waveform(samples, rate)


def write_wav(path, wav: Waveform):
    """Write a waveform as mono 16-bit PCM; samples are clipped to [-1, 1)."""
    pcm = np.clip(np.round(wav.samples * 32768.0), -32768, 32767).astype("<i2")
    data = pcm.tobytes()
    rate = wav.sample_rate_hz
    header = (b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
              + b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, rate,
                                      rate * 2, 2, 16)
              + b"data" + struct.pack("<I", len(data)))
    try:
        with open(path, "wb") as f:
            f.write(header + data)
    except OSError as e:
        raise IoFailure(str(e)) from e


# --- weight archives ---

def _config_to_echo(kind: str, config) -> dict:
    if kind == "sc":
        return asdict(config)
    echo = {"layers": [asdict(l) for l in config.layers],
            "final_layer_norm": config.final_layer_norm,
            "projection_dim": config.projection_dim,
            "include_projection": config.include_projection}
    return echo


def _config_from_echo(kind: str, echo: dict):
    try:
        if kind == "sc":
            return ScConfig(**echo)
        layers = tuple(ConvLayerSpec(**l) for l in echo["layers"])
        return ConvStackConfig(layers,
                               final_layer_norm=echo["final_layer_norm"],
                               projection_dim=echo["projection_dim"],
                               include_projection=echo["include_projection"])
    except (KeyError, TypeError) as e:
        raise CorruptFile(f"bad config echo: {e}") from e


def save_weights(model: FeModel, path):
    """Serialize a model: magic, JSON header, contiguous float32 payload.

    The header declares (name, shape, byte offset) for every tensor, plus a
    config echo so archives are self-describing.
    """
    names = sorted(model.params)
    tensors = []
    offset = 0
    chunks = []
    for name in names:
        value = np.ascontiguousarray(model.params[name], dtype="<f4")
        tensors.append({"name": name, "shape": list(value.shape),
                        "offset": offset})
        chunks.append(value.tobytes())
        offset += len(chunks[-1])
    header = {"format_version": ARCHIVE_VERSION, "kind": model.kind,
              "config": _config_to_echo(model.kind, model.config),
              "tensors": tensors}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as f:
            f.write(ARCHIVE_MAGIC)
            f.write(struct.pack("<I", len(header_bytes)))
            f.write(header_bytes)
            f.write(b"".join(chunks))
    except OSError as e:
        raise IoFailure(str(e)) from e


def load_weights(path) -> FeModel:
    """Read an archive back into a model, failing closed on any inconsistency.

    Raises:
        MagicMismatch: wrong leading magic bytes.
        CorruptFile: unreadable header, bad offsets, oversized payload.
        ShapeMismatch: tensor table disagrees with the config echo.
        TruncatedPayload: payload shorter than the tensor table requires.
    """
    try:
        blob = open(path, "rb").read()
    except OSError as e:
        raise IoFailure(str(e)) from e
    if len(blob) < 8 or blob[:4] != ARCHIVE_MAGIC:
        raise MagicMismatch("not a weight archive")
    header_len = struct.unpack_from("<I", blob, 4)[0]
    if 8 + header_len > len(blob):
        raise CorruptFile("declared header exceeds the file")
    try:
        header = json.loads(blob[8:8 + header_len].decode("utf-8"))
        kind = header["kind"]
        echo = header["config"]
        table = header["tensors"]
        version = header["format_version"]
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise CorruptFile(f"unreadable header: {e}") from e
    if version != ARCHIVE_VERSION:
        raise CorruptFile(f"unsupported format version {version}")

    config = _config_from_echo(kind, echo)
    expected = param_shapes(kind, config)
    seen = {entry.get("name") for entry in table}
    if seen != set(expected):
        raise ShapeMismatch(
            f"tensor names {sorted(seen)} do not match config "
            f"(expected {sorted(expected)})")

    payload = blob[8 + header_len:]
    params = {}
    spans = []
    for entry in table:
        name = entry["name"]
        shape = tuple(entry["shape"])
        if shape != expected[name]:
            raise ShapeMismatch(
                f"{name}: header says {shape}, config implies {expected[name]}")
        nbytes = int(np.prod(shape)) * 4 if shape else 4
        start = entry["offset"]
        if start < 0 or start % 4 != 0:
            raise CorruptFile(f"{name}: bad offset {start}")
        if start + nbytes > len(payload):
            raise TruncatedPayload(
                f"{name} needs bytes [{start}, {start + nbytes}) of a "
                f"{len(payload)}-byte payload")
        spans.append((start, start + nbytes))
        raw = np.frombuffer(payload, dtype="<f4", count=nbytes // 4, offset=start)
        params[name] = raw.reshape(shape).astype(np.float64)
    spans.sort()
    for (_, end), (start, _) in zip(spans, spans[1:]):
        if start < end:
            raise CorruptFile("tensor payload spans overlap")
    if spans and spans[-1][1] != len(payload):
        raise CorruptFile("payload longer than the tensor table declares")
    return FeModel(kind, config, params)


# --- matrix CSV ---

def _format_meta_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.9g}"


def write_matrix_csv(matrix: np.ndarray, metadata: dict, path):
    """Write '# rows=R cols=C key=val ...' then one comma-separated line per row.

    Values carry 9 significant digits, enough for a lossless round-trip at
    the stated precision.

    Raises:
        EmptyMatrix: zero rows or columns.
        IoFailure: non-finite values or OS-level write failure.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise EmptyMatrix(f"refusing to write shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise IoFailure("matrix contains non-finite values")
    parts = [f"rows={matrix.shape[0]}", f"cols={matrix.shape[1]}"]
    parts += [f"{k}={_format_meta_value(v)}" for k, v in metadata.items()]
    lines = ["# " + " ".join(parts)]
    lines += [",".join(f"{v:.9g}" for v in row) for row in matrix]
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise IoFailure(str(e)) from e


def read_matrix_csv(path) -> tuple[np.ndarray, dict]:
    """Inverse of write_matrix_csv; returns (matrix, metadata)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [l for l in f.read().splitlines() if l]
    except OSError as e:
        raise IoFailure(str(e)) from e
    if not lines or not lines[0].startswith("# "):
        raise CorruptFile("missing '# rows=... cols=...' header")
    meta = {}
    for token in lines[0][2:].split():
        if "=" not in token:
            raise CorruptFile(f"bad header token '{token}'")
        key, value = token.split("=", 1)
        try:
            meta[key] = int(value)
        except ValueError:
            try:
                meta[key] = float(value)
            except ValueError:
                meta[key] = value
    try:
        rows, cols = int(meta["rows"]), int(meta["cols"])
    except KeyError as e:
        raise CorruptFile(f"header lacks {e}") from e
    if len(lines) - 1 != rows:
        raise CorruptFile(f"expected {rows} rows, found {len(lines) - 1}")
    matrix = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    if matrix.shape != (rows, cols):
        raise CorruptFile(f"row width inconsistent with cols={cols}")
    return matrix, meta


# --- feature binary (RFM1) ---

def write_feature_binary(feat: FeatureMatrix, path):
    """RFM1 layout: magic, uint32 rows/cols, float32 shift, float32 row-major data."""
    if feat.values.shape[0] == 0 or feat.values.shape[1] == 0:
        raise EmptyMatrix("feature matrix has no cells")
    rows, cols = feat.values.shape
    payload = np.ascontiguousarray(feat.values, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as f:
            f.write(FEATURE_MAGIC)
            f.write(struct.pack("<IIf", rows, cols, feat.frame_shift_ms))
            f.write(payload)
    except OSError as e:
        raise IoFailure(str(e)) from e


def read_feature_binary(path) -> FeatureMatrix:
    """Inverse of write_feature_binary.

    Raises:
        MagicMismatch / TruncatedPayload / CorruptFile on malformed files.
    """
    try:
        blob = open(path, "rb").read()
    except OSError as e:
        raise IoFailure(str(e)) from e
    if len(blob) < 4 or blob[:4] != FEATURE_MAGIC:
        raise MagicMismatch("not an RFM1 feature file")
    if len(blob) < 16:
        raise CorruptFile("header truncated")
    rows, cols, shift = struct.unpack_from("<IIf", blob, 4)
    need = 16 + rows * cols * 4
    if len(blob) < need:
        raise TruncatedPayload(f"need {need} bytes, file has {len(blob)}")
    if len(blob) > need:
        raise CorruptFile("trailing bytes after the data block")
    values = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=16)
    return FeatureMatrix(values.reshape(rows, cols).astype(np.float64), float(shift))

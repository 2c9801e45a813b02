"""WAV ingestion, weight archives, CSV and binary feature files."""

import json
import struct

import numpy as np
import pytest

from rawfe import dsp, formats, neural
from rawfe.errors import (
    CorruptFile,
    EmptyMatrix,
    MagicMismatch,
    ShapeMismatch,
    TruncatedPayload,
    UnsupportedFormat,
)
from rawfe.fixed import FeatureMatrix


def wav_bytes(pcm: bytes, channels=1, rate=16000, bits=16, fmt=1) -> bytes:
    header = (b"RIFF" + struct.pack("<I", 36 + len(pcm)) + b"WAVE"
              + b"fmt " + struct.pack("<IHHIIHH", 16, fmt, channels, rate,
                                      rate * channels * bits // 8,
                                      channels * bits // 8, bits)
              + b"data" + struct.pack("<I", len(pcm)))
    return header + pcm


class TestWav:
    def test_round_trip_16000_frames(self, tmp_path, rng):
        wav = dsp.Waveform(rng.uniform(-0.9, 0.9, 16000))
        path = tmp_path / "t.wav"
        formats.write_wav(path, wav)
        back = formats.read_wav(path)
        assert len(back) == 16000
        np.testing.assert_allclose(back.samples, wav.samples, atol=1.0 / 32768)

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        path.write_bytes(wav_bytes(b"\x00" * 8, channels=2))
        with pytest.raises(UnsupportedFormat):
            formats.read_wav(path)

    def test_wrong_rate_rejected(self, tmp_path):
        path = tmp_path / "rate.wav"
        path.write_bytes(wav_bytes(b"\x00" * 8, rate=8000))
        with pytest.raises(UnsupportedFormat):
            formats.read_wav(path)

    def test_wrong_depth_rejected(self, tmp_path):
        path = tmp_path / "depth.wav"
        path.write_bytes(wav_bytes(b"\x00" * 8, bits=8))
        with pytest.raises(UnsupportedFormat):
            formats.read_wav(path)

    def test_compressed_rejected(self, tmp_path):
        path = tmp_path / "float.wav"
        path.write_bytes(wav_bytes(b"\x00" * 8, fmt=3))
        with pytest.raises(UnsupportedFormat):
            formats.read_wav(path)

    def test_most_negative_sample_maps_to_minus_one(self, tmp_path):
        path = tmp_path / "edge.wav"
        path.write_bytes(wav_bytes(struct.pack("<hh", -32768, 32767)))
        wav = formats.read_wav(path)
        assert wav.samples[0] == -1.0
        assert wav.samples[1] == pytest.approx(32767 / 32768)

    def test_not_riff_rejected(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"OggS" + b"\x00" * 64)
        with pytest.raises(CorruptFile):
            formats.read_wav(path)

    def test_truncated_data_chunk_rejected(self, tmp_path):
        blob = wav_bytes(b"\x00" * 64)
        path = tmp_path / "cut.wav"
        path.write_bytes(blob[:-10])
        with pytest.raises(CorruptFile):
            formats.read_wav(path)

    def test_missing_data_chunk_rejected(self, tmp_path):
        blob = wav_bytes(b"")[:36]  # RIFF + fmt only
        path = tmp_path / "nodata.wav"
        path.write_bytes(blob)
        with pytest.raises(CorruptFile):
            formats.read_wav(path)


class TestWeightArchive:
    @pytest.fixture
    def w2v_model(self):
        return neural.init_model("w2v", neural.preset_config("w2v6@64"), seed=3)

    @pytest.fixture
    def sc_model(self):
        return neural.init_model("sc", neural.ScConfig(), seed=3)

    def test_w2v_round_trip_bitwise_at_f32(self, tmp_path, w2v_model):
        path = tmp_path / "m.rfe1"
        formats.save_weights(w2v_model, path)
        back = formats.load_weights(path)
        assert back.kind == "w2v"
        assert back.config == w2v_model.config
        for name, value in w2v_model.params.items():
            np.testing.assert_array_equal(back.params[name],
                                          value.astype(np.float32).astype(np.float64))

    def test_save_is_stable_fixed_point(self, tmp_path, sc_model):
        a = tmp_path / "a.rfe1"
        b = tmp_path / "b.rfe1"
        formats.save_weights(sc_model, a)
        formats.save_weights(formats.load_weights(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_w2v7_archive_declares_7_layers(self, tmp_path):
        model = neural.init_model("w2v", neural.preset_config("w2v7"), seed=0)
        path = tmp_path / "w7.rfe1"
        formats.save_weights(model, path)
        back = formats.load_weights(path)
        assert len(back.config.layers) == 7
        assert back.config.layers[0].out_channels == 512

    def test_magic_mismatch(self, tmp_path):
        path = tmp_path / "bad.rfe1"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(MagicMismatch):
            formats.load_weights(path)

    def test_shape_mismatch_on_tampered_header(self, tmp_path, sc_model):
        path = tmp_path / "m.rfe1"
        formats.save_weights(sc_model, path)
        blob = bytearray(path.read_bytes())
        header_len = struct.unpack_from("<I", blob, 4)[0]
        header = json.loads(blob[8:8 + header_len].decode())
        header["tensors"][0]["shape"][0] += 1
        new_header = json.dumps(header, sort_keys=True).encode()
        # pad to the original length so offsets stay valid
        assert len(new_header) <= header_len + 64
        tampered = (bytes(blob[:4]) + struct.pack("<I", len(new_header))
                    + new_header + bytes(blob[8 + header_len:]))
        path.write_bytes(tampered)
        with pytest.raises(ShapeMismatch):
            formats.load_weights(path)

    def test_truncated_payload(self, tmp_path, sc_model):
        path = tmp_path / "m.rfe1"
        formats.save_weights(sc_model, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-100])
        with pytest.raises(TruncatedPayload):
            formats.load_weights(path)

    def test_oversized_payload_rejected(self, tmp_path, sc_model):
        path = tmp_path / "m.rfe1"
        formats.save_weights(sc_model, path)
        path.write_bytes(path.read_bytes() + b"\x00" * 8)
        with pytest.raises(CorruptFile):
            formats.load_weights(path)

    def test_missing_tensor_rejected(self, tmp_path, sc_model):
        path = tmp_path / "m.rfe1"
        formats.save_weights(sc_model, path)
        blob = bytearray(path.read_bytes())
        header_len = struct.unpack_from("<I", blob, 4)[0]
        header = json.loads(blob[8:8 + header_len].decode())
        header["tensors"] = header["tensors"][1:]
        new_header = json.dumps(header, sort_keys=True).encode()
        path.write_bytes(bytes(blob[:4]) + struct.pack("<I", len(new_header))
                         + new_header + bytes(blob[8 + header_len:]))
        with pytest.raises(ShapeMismatch):
            formats.load_weights(path)


class TestMatrixCsv:
    def test_identity_round_trip(self, tmp_path):
        path = tmp_path / "m.csv"
        formats.write_matrix_csv(np.eye(2), {"shift_ms": 10.0}, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        assert lines[0] == "# rows=2 cols=2 shift_ms=10"
        back, meta = formats.read_matrix_csv(path)
        np.testing.assert_allclose(back, np.eye(2), atol=1e-9)
        assert meta["rows"] == 2 and meta["shift_ms"] == 10.0

    def test_nine_significant_digits_round_trip(self, tmp_path, rng):
        matrix = rng.standard_normal((30, 12)) * 100.0
        path = tmp_path / "m.csv"
        formats.write_matrix_csv(matrix, {}, path)
        back, _ = formats.read_matrix_csv(path)
        np.testing.assert_allclose(back, matrix, rtol=1e-8)

    def test_empty_matrix_rejected(self, tmp_path):
        with pytest.raises(EmptyMatrix):
            formats.write_matrix_csv(np.zeros((0, 4)), {}, tmp_path / "e.csv")

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("1.0,2.0\n")
        with pytest.raises(CorruptFile):
            formats.read_matrix_csv(path)

    def test_row_count_validated(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("# rows=3 cols=2\n1,2\n3,4\n")
        with pytest.raises(CorruptFile):
            formats.read_matrix_csv(path)


class TestFeatureBinary:
    def test_size_formula(self, tmp_path, rng):
        feats = FeatureMatrix(rng.standard_normal((98, 80)), 10.0)
        path = tmp_path / "f.rfm1"
        formats.write_feature_binary(feats, path)
        assert path.stat().st_size == 16 + 98 * 80 * 4

    def test_round_trip(self, tmp_path, rng):
        feats = FeatureMatrix(rng.standard_normal((31, 7)), 10.0)
        path = tmp_path / "f.rfm1"
        formats.write_feature_binary(feats, path)
        back = formats.read_feature_binary(path)
        assert back.frame_shift_ms == 10.0
        np.testing.assert_array_equal(
            back.values, feats.values.astype(np.float32).astype(np.float64))

    def test_write_read_write_is_byte_stable(self, tmp_path, rng):
        feats = FeatureMatrix(rng.standard_normal((5, 3)), 10.0)
        a, b = tmp_path / "a.rfm1", tmp_path / "b.rfm1"
        formats.write_feature_binary(feats, a)
        formats.write_feature_binary(formats.read_feature_binary(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bad.rfm1"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(MagicMismatch):
            formats.read_feature_binary(path)

    def test_truncated(self, tmp_path, rng):
        feats = FeatureMatrix(rng.standard_normal((5, 3)), 10.0)
        path = tmp_path / "f.rfm1"
        formats.write_feature_binary(feats, path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(TruncatedPayload):
            formats.read_feature_binary(path)

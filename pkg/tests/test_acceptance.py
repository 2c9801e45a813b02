"""Acceptance gate: one test per release criterion, each timed and printed.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion.  Every tolerance is fixed here; nothing is calibrated at runtime.
"""

import functools
import time

import numpy as np
import pytest

from rawfe import analysis, dsp, fixed, formats, neural, train
from rawfe.cli import main
from rawfe.errors import (
    CorruptFile,
    InputTooShort,
    MagicMismatch,
    TruncatedPayload,
    UnsupportedFormat,
)
from rawfe.synth import synthetic_corpus
from tests.test_analysis import windowed_sinc_bandpass
from tests.test_dsp import naive_dct_ii, naive_dft_magnitude


class _Stopwatch:
    def __init__(self, name, budget_s):
        self.name, self.budget_s = name, budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        if exc_type is None:
            assert elapsed < self.budget_s, \
                f"{self.name} took {elapsed:.1f}s (budget {self.budget_s}s)"
            print(f"ACCEPTANCE {self.name}: PASS ({elapsed:.2f}s)")
        else:
            print(f"ACCEPTANCE {self.name}: FAIL")
        return False


# Catalog rounding targets: preset -> printed total.
PARAM_TABLE = {
    "w2v6@1024": "15.5M",
    "w2v6@512": "4.1M",
    "w2v6@256": "1.1M",
    "w2v6@128": "330k",
    "w2v6@64": "108k",
    "w2v5@512": "4.3M",
    "w2v5@64": "112k",
    "w2v4@512": "4.3M",
    "w2v4@64": "112k",
    "w2v3@512": "3.6M",
    "w2v3@64": "101k",
    "w2v2@64": "134k",
    "w2v6-prog64-512": "1.0M",
    "w2v6-prog128-1024": "3.3M",
    "w2v11-prog128-1024": "5.0M",
}

FIXED_TABLE = {
    ("params", "--fe", "logmel"): "20560 (~21k)",
    ("params", "--fe", "gammatone"): "32000 (~32k)",
    ("params", "--fe", "sc"): "25700 (~26k)",
    ("params", "--preset", "w2v6@512"): "4071168 (~4.1M)",
}


def test_parameter_count_audit(capsys):
    with _Stopwatch("parameter-count-audit", budget_s=1.0):
        for preset, printed in PARAM_TABLE.items():
            assert main(["params", "--preset", preset]) == 0
            out = capsys.readouterr().out.strip()
            assert out.endswith(f"(~{printed})"), f"{preset}: {out}"
        for argv, expected in FIXED_TABLE.items():
            assert main(list(argv)) == 0
            assert capsys.readouterr().out.strip() == expected
        # documented rounding exception: computed 5,655,296 prints as 5.7M,
        # one decimal off the published 5.6M
        assert main(["params", "--preset", "w2v2@512"]) == 0
        assert capsys.readouterr().out.strip() == "5655296 (~5.7M)"


def test_geometry_audit(capsys):
    with _Stopwatch("geometry-audit", budget_s=1.0):
        assert main(["audit", "--preset", "w2v7"]) == 0
        assert capsys.readouterr().out == \
            "rf=400 samples (25.0 ms), shift=320 (20.0 ms)\n"
        assert main(["audit", "--preset", "w2v6@512"]) == 0
        assert capsys.readouterr().out == \
            "rf=240 samples (15.0 ms), shift=160 (10.0 ms)\n"
        # analytic values
        assert neural.audit_geometry(neural.preset_config("w2v7")) == \
            (400, 25.0, 320, 20.0)
        assert neural.audit_geometry(neural.preset_config("w2v6@512")) == \
            (240, 15.0, 160, 10.0)
        # empirical minimum-input probing
        for name, rf in (("w2v7", 400), ("w2v6@512", 240)):
            model = neural.init_model("w2v", neural.preset_config(name), seed=0)
            ramp = np.linspace(-1.0, 1.0, rf)
            assert neural.w2v_forward(model, dsp.NormalizedWaveform(ramp)).n_frames == 1
            with pytest.raises(InputTooShort):
                neural.w2v_forward(model, dsp.NormalizedWaveform(ramp[:-1]))


def test_dsp_oracle_suite():
    rng = np.random.default_rng(101)
    with _Stopwatch("dsp-oracle-suite", budget_s=30.0):
        cases = 0
        for _ in range(50):  # fast rfft vs direct-sum DFT
            n_fft = int(rng.choice([64, 128, 256, 512]))
            kernel = rng.standard_normal(int(rng.integers(1, n_fft + 1)))
            fast = dsp.dft_magnitude(kernel, n_fft).magnitudes
            slow = naive_dft_magnitude(kernel, n_fft)
            np.testing.assert_allclose(fast, slow, rtol=1e-6, atol=1e-9)
            cases += 1
        for _ in range(40):  # fast DCT vs direct cosine sums
            n = int(rng.integers(2, 96))
            out_dim = int(rng.integers(1, n + 1))
            vec = rng.standard_normal(n)
            np.testing.assert_allclose(dsp.dct_ii(vec, out_dim),
                                       naive_dct_ii(vec, out_dim), atol=1e-9)
            cases += 1
        window = dsp.hann_window(400)
        for _ in range(15):  # STFT frames vs per-frame naive DFT + Parseval
            x = rng.standard_normal(int(rng.integers(400, 1200)))
            frames = dsp.stft_power(dsp.Waveform(x), 400, 160, n_fft=512)
            for i, spec in enumerate(frames[:2]):
                seg = x[i * 160: i * 160 + 400] * window
                naive = naive_dft_magnitude(seg, 512) ** 2
                np.testing.assert_allclose(spec.magnitudes, naive,
                                           rtol=1e-6, atol=1e-9)
                time_energy = np.sum(seg ** 2)
                mags = spec.magnitudes
                freq_energy = (mags[0] + mags[-1] + 2 * mags[1:-1].sum()) / 512
                np.testing.assert_allclose(freq_energy, time_energy, rtol=1e-6)
                cases += 1
        assert cases >= 100


def test_gradient_suite(rng):
    from tests.test_autodiff import check_op, t
    from rawfe import autodiff as ad
    with _Stopwatch("gradient-suite", budget_s=120.0):
        # primitives: linear ops at 1e-6, smooth nonlinearities at 1e-4
        check_op(lambda x, w: ad.conv1d(x, w, 2),
                 [t(rng, 2, 30), t(rng, 3, 2, 5)], 1e-6)
        check_op(lambda x, w: ad.conv1d_shared(x, w, 3),
                 [t(rng, 3, 40), t(rng, 4, 6)], 1e-6)
        check_op(lambda a, b: ad.matmul(a, b), [t(rng, 4, 5), t(rng, 5, 3)], 1e-6)
        check_op(lambda a, b: ad.add(a, b), [t(rng, 4, 6), t(rng, 6)], 1e-6)
        check_op(lambda a: ad.abs_(a), [t(rng, 4, 6, shift=4.0)], 1e-4)
        check_op(lambda a: ad.gelu(a), [t(rng, 5, 5)], 1e-4)
        check_op(lambda a: ad.log10_hypot_eps(a, 1e-2),
                 [t(rng, 4, 6, shift=2.0)], 1e-4)
        check_op(lambda x, s, o: ad.normalize_rows(x, s, o),
                 [t(rng, 3, 12), t(rng, 3, 1, shift=1.0), t(rng, 3, 1)], 1e-4)
        check_op(lambda a, b: ad.mse(a, b), [t(rng, 6, 4), t(rng, 6, 4)], 1e-4)

        # composed front-ends against the adaptive central-difference oracle
        wav = dsp.normalize_waveform(dsp.Waveform(rng.standard_normal(4000)))
        for kind, config in (
                ("w2v", neural.preset_config("w2v6@64")),
                ("w2v", neural.preset_config("w2v3@64")),
                ("sc", neural.ScConfig(fb_channels=16))):
            model = neural.init_model(kind, config, seed=0)
            err = train.finite_diff_check(model, wav, eps=1e-4, max_checked=512)
            assert err < 1e-4, f"{kind} gradcheck error {err}"


def test_masking_mechanics(rng):
    with _Stopwatch("masking-mechanics", budget_s=10.0):
        model = neural.init_model("sc", neural.ScConfig(), seed=99)
        ranking = analysis.ranking_for_masking(model)
        wav = dsp.normalize_waveform(dsp.Waveform(rng.standard_normal(8000)))

        # N=0 is bitwise identity end to end
        identity = neural.mask_filters(model, neural.MaskSpec("sharp", 0), ranking)
        np.testing.assert_array_equal(neural.sc_forward(model, wav).values,
                                      neural.sc_forward(identity, wav).values)

        # masked channels produce exact zeros at the filterbank stage
        for mode, n in (("sharp", 5), ("sharp", 50), ("soft", 20), ("soft", 150)):
            selected = ranking[:n] if mode == "sharp" else ranking[-n:]
            masked = neural.mask_filters(model, neural.MaskSpec(mode, n), ranking)
            out = neural.filterbank_output(masked, wav)
            np.testing.assert_array_equal(out[selected], 0.0)
            keep = [i for i in range(150) if i not in set(selected)]
            np.testing.assert_array_equal(
                out[keep], neural.filterbank_output(model, wav)[keep])

        # ranking equals the brute-force peak-to-average comparator
        fr = analysis.frequency_response(model.first_layer_bank())
        ratios = fr.magnitudes.max(axis=1) / fr.magnitudes.mean(axis=1)

        def compare(i, j):
            if ratios[i] != ratios[j]:
                return -1 if ratios[i] > ratios[j] else 1
            return -1 if i < j else 1

        assert ranking == sorted(range(150), key=functools.cmp_to_key(compare))


def test_analysis_fidelity():
    with _Stopwatch("analysis-fidelity", budget_s=60.0):
        # constructed bandpass kernels recover their design band at -3 dB
        for f1, f2 in ((1000.0, 2000.0), (500.0, 3000.0), (2500.0, 4000.0)):
            h = windowed_sinc_bandpass(f1, f2, 1601)
            fr = analysis.frequency_response(dsp.FilterBank(h[None, :], 1), 2048)
            assert abs(fr.lower_cutoff_hz[0] - f1) <= fr.bin_hz
            assert abs(fr.upper_cutoff_hz[0] - f2) <= fr.bin_hz

        # gammatone probe: argmax channel fc monotone over the 50 Hz grid
        freqs = np.arange(50.0, 7951.0, 50.0)
        probe = analysis.sine_probe(fixed.gammatone_envelopes, freqs)
        argmax_fc = fixed.GAMMATONE_BANK.center_freqs_hz[
            probe.matrix.argmax(axis=1)]
        assert np.all(np.diff(argmax_fc) >= 0.0)


def test_toy_training():
    with _Stopwatch("toy-training", budget_s=600.0):
        corpus = synthetic_corpus(50, seed=123)
        model = neural.init_model("sc", neural.ScConfig(), seed=7)
        cfg = train.TrainConfig(steps=200, peak_lr=0.01, schedule="one-cycle",
                                seed=11, batch_utterances=4)
        first = train.train_distill(model, corpus, cfg)
        initial = first.curve[:10, 2].mean()
        final = first.curve[-10:, 2].mean()
        assert final < 0.5 * initial, f"loss only reached {final/initial:.2f}x"

        second = train.train_distill(model, corpus, cfg)
        np.testing.assert_array_equal(first.curve, second.curve)
        for name in first.model.params:
            np.testing.assert_array_equal(first.model.params[name],
                                          second.model.params[name])


def test_format_suite(tmp_path, rng):
    import struct
    with _Stopwatch("format-suite", budget_s=10.0):
        # WAV edge cases
        wav_path = tmp_path / "a.wav"
        formats.write_wav(wav_path, dsp.Waveform(rng.uniform(-1, 0.99, 16000)))
        assert len(formats.read_wav(wav_path)) == 16000
        edge = tmp_path / "edge.wav"
        pcm = struct.pack("<h", -32768)
        edge.write_bytes(b"RIFF" + struct.pack("<I", 36 + 2) + b"WAVE"
                         + b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 16000,
                                                 32000, 2, 16)
                         + b"data" + struct.pack("<I", 2) + pcm)
        assert formats.read_wav(edge).samples[0] == -1.0
        stereo = tmp_path / "stereo.wav"
        stereo.write_bytes(b"RIFF" + struct.pack("<I", 40) + b"WAVE"
                           + b"fmt " + struct.pack("<IHHIIHH", 16, 1, 2, 16000,
                                                   64000, 4, 16)
                           + b"data" + struct.pack("<I", 4) + b"\0\0\0\0")
        with pytest.raises(UnsupportedFormat):
            formats.read_wav(stereo)
        with pytest.raises(CorruptFile):
            bad = tmp_path / "bad.wav"
            bad.write_bytes(b"not a riff file")
            formats.read_wav(bad)

        # archive round-trip: byte-stable fixed point, fail-closed validation
        model = neural.init_model("w2v", neural.preset_config("w2v6@64"), seed=1)
        a, b = tmp_path / "a.rfe1", tmp_path / "b.rfe1"
        formats.save_weights(model, a)
        formats.save_weights(formats.load_weights(a), b)
        assert a.read_bytes() == b.read_bytes()
        with pytest.raises(MagicMismatch):
            bad = tmp_path / "bad.rfe1"
            bad.write_bytes(b"ZZZZ" + a.read_bytes()[4:])
            formats.load_weights(bad)
        with pytest.raises(TruncatedPayload):
            cut = tmp_path / "cut.rfe1"
            cut.write_bytes(a.read_bytes()[:-40])
            formats.load_weights(cut)

        # RFM1 round-trip byte stability
        feats = fixed.FeatureMatrix(rng.standard_normal((98, 80)), 10.0)
        fa, fb = tmp_path / "a.rfm1", tmp_path / "b.rfm1"
        formats.write_feature_binary(feats, fa)
        assert fa.stat().st_size == 16 + 98 * 80 * 4
        formats.write_feature_binary(formats.read_feature_binary(fa), fb)
        assert fa.read_bytes() == fb.read_bytes()

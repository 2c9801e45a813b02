import numpy as np
import pytest

from rawfe.dsp import Waveform


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture
def speech_like(rng):
    """One second of noisy multi-tone audio at 16 kHz."""
    t = np.arange(16000) / 16000.0
    x = (0.6 * np.sin(2 * np.pi * 440.0 * t)
         + 0.3 * np.sin(2 * np.pi * 1330.0 * t + 0.7)
         + 0.2 * rng.standard_normal(16000))
    return Waveform(x)

import numpy as np
import pytest

from gesi.stimuli import set_level, synthetic_word


@pytest.fixture(scope="session")
def word16():
    """A synthetic word at 16 kHz, calibrated to -26 dBFS."""
    return synthetic_word(16000, seed=3)


def tone(freq, fs, dur=0.5, dbfs=-26.0, phase=0.0):
    t = np.arange(int(dur * fs)) / fs
    return set_level(np.sin(2 * np.pi * freq * t + phase), dbfs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

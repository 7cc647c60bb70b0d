import numpy as np
import pytest
from scipy import signal

from gesi.f0 import F0Track, estimate_f0

FS = 16000


def brute_f0(frame, fs, f_min=70.0, f_max=400.0):
    """Exhaustive normalized-autocorrelation search: the shortest local peak
    within 90% of the global maximum, refined by a parabola."""
    n = len(frame) // 2
    head = frame[:n]
    lags = range(int(fs // f_max), int(np.ceil(fs / f_min)) + 1)
    r = {}
    for lag in lags:
        seg = frame[lag:lag + n]
        r[lag] = float(np.dot(head, seg) / np.sqrt(np.dot(head, head) * np.dot(seg, seg)))
    best = max(r.values())
    keys = sorted(r)
    for lag in keys[1:-1]:
        if r[lag] >= 0.9 * best and r[lag] >= r[lag - 1] and r[lag] >= r[lag + 1]:
            a, b, c = r[lag - 1], r[lag], r[lag + 1]
            return fs / (lag + 0.5 * (a - c) / (a - 2 * b + c))
    return fs / max(r, key=r.get)


def sawtooth(f0, fs, dur=1.0):
    t = np.arange(int(dur * fs)) / fs
    return 0.1 * signal.sawtooth(2 * np.pi * f0 * t)


def test_sawtooth_median_and_oracle():
    x = sawtooth(150, FS)
    tr = estimate_f0(x, FS)
    med = np.median(tr.f0_hz[tr.voiced])
    assert abs(med - 150) <= 2
    win = int(0.025 * FS)
    oracle = [brute_f0(x[k:k + 2 * win], FS) for k in range(0, len(x) - 2 * win, 1600)]
    assert abs(np.median(oracle) - med) <= 2
    assert tr.voiced.mean() > 0.9


@pytest.mark.parametrize("f0", [90.0, 220.0, 330.0])
def test_other_pitches(f0):
    tr = estimate_f0(sawtooth(f0, 48000, 0.5), 48000)
    assert abs(np.median(tr.f0_hz[tr.voiced]) - f0) <= 2


@pytest.mark.parametrize("fs", [16000, 48000])
def test_white_noise_unvoiced(fs, rng):
    tr = estimate_f0(rng.standard_normal(fs), fs)
    assert np.mean(~tr.voiced) >= 0.9


def test_noise_voicing_threshold_sweep(rng):
    x = rng.standard_normal(FS)
    rates = [np.mean(~estimate_f0(x, FS, voicing_threshold=th).voiced) for th in (0.2, 0.3, 0.5)]
    assert rates == sorted(rates)
    assert rates[1] >= 0.9


def test_silence_all_epsilon():
    tr = estimate_f0(np.zeros(FS // 2), FS)
    assert np.all(tr.f0_hz == 1e-4) and tr.f0_hz.size == 50


def test_values_positive(word16):
    tr = estimate_f0(word16, FS)
    assert np.all(tr.f0_hz > 0)
    assert tr.voiced.any()


def test_at_frames_nearest():
    tr = F0Track(np.array([1e-4, 100.0, 200.0]), 10.0)
    out = tr.at_frames(60, 0.5)
    assert out[0] == 1e-4 and out[19] == 100.0 and out[-1] == 200.0
    assert F0Track(np.zeros(0)).at_frames(3, 0.5).tolist() == [1e-4] * 3

"""Stimulus construction: reverberation, SNR-controlled mixing, ideal ratio
masking, and synthetic speech-like test material."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import DataError

CAL_DBFS = -26.0


def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x ** 2))) if x.size else 0.0


def db(x: float) -> float:
    return 20.0 * np.log10(x)


def set_level(x, dbfs: float = CAL_DBFS):
    """Scale ``x`` to the given RMS level re full scale."""
    r = rms(x)
    if r == 0:
        raise DataError("cannot set the level of a silent signal")
    return np.asarray(x, dtype=float) * (10.0 ** (dbfs / 20.0) / r)


def apply_rir(x, rir) -> np.ndarray:
    """Full linear convolution of ``x`` with a room impulse response."""
    x = np.asarray(x, dtype=float)
    rir = np.asarray(rir, dtype=float)
    if x.size == 0 or rir.size == 0:
        raise DataError("signal and impulse response must be non-empty")
    return signal.fftconvolve(x, rir, mode="full")


def scale_noise(speech, noise, snr_db: float) -> np.ndarray:
    """Noise cut (or tiled, if shorter) to the speech length and scaled to ``snr_db``."""
    speech = np.asarray(speech, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if noise.size == 0:
        raise DataError("empty noise")
    if noise.size < speech.size:
        noise = np.tile(noise, int(np.ceil(speech.size / noise.size)))
    noise = noise[: speech.size]
    rs, rn = rms(speech), rms(noise)
    if rs == 0 or rn == 0:
        raise DataError("speech and noise must both have non-zero energy")
    return noise * (rs / rn) * 10.0 ** (-snr_db / 20.0)


def mix_at_snr(speech, noise, snr_db: float) -> np.ndarray:
    """Speech plus noise scaled so that 20 log10(rms_s / rms_n) = ``snr_db``."""
    return np.asarray(speech, dtype=float) + scale_noise(speech, noise, snr_db)


@dataclass(frozen=True)
class StftConfig:
    window_ms: float = 32.0
    hop_ms: float = 8.0
    window: str = "hann"

    def frames(self, fs: int) -> tuple[int, int]:
        nper = int(round(fs * self.window_ms / 1000.0))
        hop = int(round(fs * self.hop_ms / 1000.0))
        if not 0 < hop < nper:
            raise DataError("STFT hop must be positive and shorter than the window")
        win = signal.get_window(self.window, nper)
        if not signal.check_NOLA(win, nper, nper - hop):
            raise DataError("STFT settings do not allow perfect reconstruction")
        return nper, hop


def stft(x, fs: int, cfg: StftConfig = StftConfig()):
    nper, hop = cfg.frames(fs)
    return signal.stft(x, fs, window=cfg.window, nperseg=nper, noverlap=nper - hop,
                       boundary="zeros", padded=True)[2]


def istft(spec, fs: int, n: int, cfg: StftConfig = StftConfig()):
    nper, hop = cfg.frames(fs)
    x = signal.istft(spec, fs, window=cfg.window, nperseg=nper, noverlap=nper - hop,
                     boundary=True)[1]
    return x[:n]


def ratio_mask(clean_spec, noise_spec, exponent: float = 0.5):
    ps = np.abs(clean_spec) ** 2
    pn = np.abs(noise_spec) ** 2
    tot = ps + pn
    # bins with neither speech nor noise carry nothing; leave them untouched
    return np.divide(ps, tot, out=np.ones_like(tot), where=tot > 0) ** exponent


def ideal_ratio_mask(clean, noise, fs: int, cfg: StftConfig = StftConfig(),
                     exponent: float = 0.5) -> np.ndarray:
    """Enhance ``clean + noise`` with the oracle ratio mask computed from both parts."""
    clean = np.asarray(clean, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if clean.shape != noise.shape:
        raise DataError("clean and noise must have the same length")
    s, n = stft(clean, fs, cfg), stft(noise, fs, cfg)
    return istft(ratio_mask(s, n, exponent) * (s + n), fs, clean.size, cfg)


# --- synthetic material -----------------------------------------------------

_VOWELS = np.array([[730, 1090, 2440], [270, 2290, 3010], [300, 870, 2240],
                    [530, 1840, 2480], [570, 840, 2410]], dtype=float)


def synthetic_word(fs: int, seed: int = 0, duration: float = 0.8, f0: float = 120.0,
                   n_morae: int = 4, dbfs: float = CAL_DBFS) -> np.ndarray:
    """A speech-like test token: a gliding harmonic complex shaped by moving
    formants, segmented into ``n_morae`` syllables with noisy onsets."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    f0_track = f0 * (1.0 + 0.12 * np.sin(2 * np.pi * 1.3 * t + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(f0_track) / fs
    seg = np.minimum((t / duration * n_morae).astype(int), n_morae - 1)
    vowels = _VOWELS[rng.integers(0, len(_VOWELS), n_morae)]
    formants = vowels[seg] * (1.0 + 0.03 * rng.standard_normal(3))
    x = np.zeros(n)
    for h in range(1, int(7000 / (f0 * 1.15))):
        fh = h * f0_track
        gain = sum(1.0 / (1.0 + ((fh - formants[:, k]) / (60.0 + 0.06 * formants[:, k])) ** 2)
                   for k in range(3))
        gain *= 1.0 / h ** 0.5
        x += np.where(fh < 0.45 * fs, gain, 0.0) * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    # syllable envelope with short gaps and a fricative burst at each onset
    local = (t / duration * n_morae) % 1.0
    env = np.sin(np.pi * np.clip((local - 0.08) / 0.84, 0, 1)) ** 0.6
    burst = rng.standard_normal(n) * np.exp(-((local - 0.05) / 0.03) ** 2)
    b, a = signal.butter(2, [2500, min(7000, 0.45 * fs)], btype="band", fs=fs)
    x = x * env + 0.3 * signal.lfilter(b, a, burst) * np.abs(x).max()
    return set_level(x, dbfs)


def speech_shaped_noise(reference, n: int | None = None, seed: int = 0) -> np.ndarray:
    """Random-phase noise with the long-term magnitude spectrum of ``reference``."""
    rng = np.random.default_rng(seed)
    reference = np.asarray(reference, dtype=float)
    n = reference.size if n is None else n
    mag = np.abs(np.fft.rfft(reference, n))
    mag = np.convolve(mag, np.ones(9) / 9, mode="same")
    spec = mag * np.exp(2j * np.pi * rng.uniform(size=mag.size))
    return set_level(np.fft.irfft(spec, n), CAL_DBFS)


def babble(fs: int, n: int, seed: int = 0, talkers: int = 6) -> np.ndarray:
    """Sum of several synthetic words at random offsets and pitches."""
    rng = np.random.default_rng(seed)
    out = np.zeros(n)
    for k in range(talkers):
        w = synthetic_word(fs, seed=int(rng.integers(1 << 30)), f0=rng.uniform(90, 220),
                           duration=rng.uniform(0.6, 1.0))
        w = np.tile(w, int(np.ceil(n / w.size)) + 1)
        start = int(rng.integers(0, w.size - n + 1))
        out += w[start:start + n]
    return set_level(out, CAL_DBFS)


def diffuse_babble(noise_a, noise_b, rir_near, rir_far) -> np.ndarray:
    """Two babble streams convolved with near/far responses and summed."""
    a = apply_rir(noise_a, rir_near)
    b = apply_rir(noise_b, rir_far)
    n = max(a.size, b.size)
    return np.pad(a, (0, n - a.size)) + np.pad(b, (0, n - b.size))


def synthetic_rir(fs: int, rt60: float = 0.5, seed: int = 0, delay_ms: float = 5.0):
    """Exponentially decaying noise tail after a direct-path impulse."""
    rng = np.random.default_rng(seed)
    n = int(rt60 * fs)
    t = np.arange(n) / fs
    tail = rng.standard_normal(n) * np.exp(-6.9 * t / rt60) * 0.3
    d = int(delay_ms * fs / 1000)
    h = np.zeros(n + d)
    h[d] = 1.0
    h[d + 1:] += tail[: n + d - d - 1]
    return h / np.sqrt(np.sum(h ** 2))

"""Autocorrelation F0 tracker for the reference speech."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

UNVOICED_F0 = 1e-4


@dataclass
class F0Track:
    """F0 per analysis frame; unvoiced frames hold ``epsilon_hz``."""

    f0_hz: np.ndarray
    frame_shift_ms: float = 10.0
    epsilon_hz: float = UNVOICED_F0

    @property
    def voiced(self) -> np.ndarray:
        return self.f0_hz > self.epsilon_hz

    def at_frames(self, n_frames: int, frame_shift_ms: float) -> np.ndarray:
        """Nearest-frame F0 for ``n_frames`` frames ending at k*frame_shift_ms."""
        if self.f0_hz.size == 0:
            return np.full(n_frames, self.epsilon_hz)
        t = (np.arange(n_frames) + 1) * frame_shift_ms
        idx = np.clip(np.round(t / self.frame_shift_ms).astype(int), 0, self.f0_hz.size - 1)
        return self.f0_hz[idx]


def nccf(segment: np.ndarray, win: int, lags: np.ndarray) -> np.ndarray:
    """Normalized cross-correlation of ``segment[:win]`` with its lagged copies."""
    head = segment[:win]
    raw = signal.correlate(segment[: win + lags[-1]], head, mode="valid")[lags]
    e0 = np.dot(head, head)
    c2 = np.concatenate([[0.0], np.cumsum(segment ** 2)])
    e_lag = c2[lags + win] - c2[lags]
    den = np.sqrt(e0 * e_lag)
    return np.divide(raw, den, out=np.zeros_like(raw), where=den > 0)


def estimate_f0(x, fs: int, f_min: float = 70.0, f_max: float = 400.0,
                hop_ms: float = 10.0, win_ms: float = 25.0,
                voicing_threshold: float = 0.3, silence_db: float = -50.0,
                epsilon_hz: float = UNVOICED_F0) -> F0Track:
    """Track F0 with a normalized autocorrelation peak search.

    Frames whose best normalized peak is at or below ``voicing_threshold``,
    or whose energy is more than ``silence_db`` below the loudest frame, are
    unvoiced. Among candidate peaks within 90% of the best, the shortest lag
    wins, which suppresses sub-octave errors.
    """
    x = np.asarray(x, dtype=float)
    hop = int(round(fs * hop_ms / 1000.0))
    win = int(round(fs * win_ms / 1000.0))
    lag_min = int(np.floor(fs / f_max))
    lag_max = int(np.ceil(fs / f_min))
    lags = np.arange(lag_min, lag_max + 1)
    need = win + lag_max
    n_frames = max(int(np.ceil(len(x) / hop)), 1) if x.size else 0
    # frame k is centred on sample k * hop
    padded = np.concatenate([np.zeros(win // 2), x, np.zeros(need + hop)])
    seg_energy = np.array([np.dot(padded[k * hop: k * hop + win], padded[k * hop: k * hop + win])
                           for k in range(n_frames)])
    f0 = np.full(n_frames, epsilon_hz)
    if n_frames == 0 or not np.any(seg_energy > 0):
        return F0Track(f0, hop_ms, epsilon_hz)
    gate = seg_energy.max() * 10.0 ** (silence_db / 10.0)
    for k in range(n_frames):
        if seg_energy[k] <= gate:
            continue
        r = nccf(padded[k * hop: k * hop + need], win, lags)
        best = r.max()
        if best <= voicing_threshold:
            continue
        peaks = np.flatnonzero((r[1:-1] >= r[:-2]) & (r[1:-1] >= r[2:])) + 1
        peaks = peaks[r[peaks] >= 0.9 * best]
        i = int(peaks[0]) if peaks.size else int(np.argmax(r))
        shift = 0.0
        if 0 < i < len(r) - 1:
            den = r[i - 1] - 2 * r[i] + r[i + 1]
            if den < 0:
                shift = 0.5 * (r[i - 1] - r[i + 1]) / den
        f0[k] = fs / (lags[i] + shift)
    return F0Track(f0, hop_ms, epsilon_hz)

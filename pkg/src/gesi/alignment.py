"""Global (waveform) and per-channel (EPgram) time alignment.

Lag convention: a positive lag means the test is *late* relative to the
reference, i.e. ``test[n] ~ ref[n - lag]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import DataError
from .frontend import EPgram

DEFAULT_TMA_MS = 30.0
_TIE_RTOL = 1e-9


def _pick_lag(corr: np.ndarray, lags: np.ndarray) -> int:
    """Lag of the largest value; near-ties go to the smallest |lag|."""
    peak = corr.max()
    tol = _TIE_RTOL * max(abs(peak), 1e-300)
    cand = lags[corr >= peak - tol]
    return int(cand[np.argmin(np.abs(cand))])


def global_align(ref, test):
    """Find the lag of ``test`` against ``ref`` and trim both to their overlap.

    The lag maximizes the magnitude of the full cross-correlation, so a
    polarity-inverted test aligns like the original.

    Returns
    -------
    lag : int
        Delay of ``test`` in samples.
    ref_trim, test_trim : ndarray
        Equal-length overlapping segments.
    """
    ref = np.asarray(ref, dtype=float)
    test = np.asarray(test, dtype=float)
    if ref.size == 0 or test.size == 0:
        raise DataError("cannot align empty signals")
    corr = signal.correlate(test, ref, mode="full", method="auto")
    lags = signal.correlation_lags(len(test), len(ref), mode="full")
    if not np.any(corr):
        lag = 0
    else:
        lag = _pick_lag(np.abs(corr), lags)
    if lag >= 0:
        r, t = ref, test[lag:]
    else:
        r, t = ref[-lag:], test
    n = min(len(r), len(t))
    if n == 0:
        raise DataError("no overlap between reference and test after alignment")
    return lag, r[:n], t[:n]


@dataclass
class AlignmentReport:
    global_lag_samples: int = 0
    global_lag_frames: float = 0.0
    channel_lags_frames: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    t_ma_ms: float = DEFAULT_TMA_MS

    def summary(self) -> dict:
        lags = np.asarray(self.channel_lags_frames)
        return {
            "global_lag_samples": int(self.global_lag_samples),
            "lag_mean_frames": float(lags.mean()) if lags.size else 0.0,
            "lag_min_frames": int(lags.min()) if lags.size else 0,
            "lag_max_frames": int(lags.max()) if lags.size else 0,
        }


def channel_lags(ref_levels: np.ndarray, test_levels: np.ndarray, max_lag: int) -> np.ndarray:
    """Per-row lag of ``test_levels`` against ``ref_levels``, clamped to ``max_lag``.

    Correlation uses mean-removed rows over the full lag range; the winning
    lag is then limited to +/- ``max_lag``.
    """
    n_ch, n_t = ref_levels.shape
    r = ref_levels - ref_levels.mean(axis=1, keepdims=True)
    t = test_levels - test_levels.mean(axis=1, keepdims=True)
    nfft = 1 << int(np.ceil(np.log2(max(2 * n_t - 1, 1))))
    c = np.fft.irfft(np.fft.rfft(t, nfft) * np.conj(np.fft.rfft(r, nfft)), nfft)
    # reorder circular lags to -(n_t-1) .. n_t-1
    c = np.concatenate([c[:, nfft - (n_t - 1):], c[:, :n_t]], axis=1)
    lags = np.arange(-(n_t - 1), n_t)
    out = np.zeros(n_ch, dtype=int)
    for i in range(n_ch):
        if not (np.any(r[i]) and np.any(t[i])):
            continue
        out[i] = _pick_lag(c[i], lags)
    return np.clip(out, -max_lag, max_lag)


def shift_rows(levels: np.ndarray, lags: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Advance each row by its lag: ``out[i, n] = levels[i, n + lags[i]]``."""
    out = np.full_like(levels, fill)
    n_t = levels.shape[1]
    for i, k in enumerate(lags):
        k = int(k)
        if k >= 0:
            out[i, : n_t - k] = levels[i, k:]
        else:
            out[i, -k:] = levels[i, : n_t + k]
    return out


def channel_align(ep_ref: EPgram, ep_test: EPgram, t_ma_ms: float = DEFAULT_TMA_MS,
                  fill_db: float = 0.0):
    """Shift every test channel onto the reference within +/- ``t_ma_ms``.

    Vacated frames are filled with ``fill_db`` (the absolute-threshold floor).
    The reference EPgram is not modified.
    """
    if ep_ref.levels.shape != ep_test.levels.shape:
        raise DataError(f"EPgram shapes differ: {ep_ref.levels.shape} vs {ep_test.levels.shape}")
    if ep_ref.frame_shift_ms != ep_test.frame_shift_ms:
        raise DataError("EPgram frame shifts differ")
    max_lag = int(round(t_ma_ms / ep_ref.frame_shift_ms))
    lags = channel_lags(ep_ref.levels, ep_test.levels, max_lag)
    aligned = ep_test.with_levels(shift_rows(ep_test.levels, lags, fill_db))
    return aligned, AlignmentReport(channel_lags_frames=lags, t_ma_ms=t_ma_ms)

"""Hearing-loss simulation by time-varying subband gains.

The gain per channel and frame is the difference between the EPgram a
listener with hearing loss would have and the normal-hearing EPgram of the
same input. The input is split into zero-phase gammatone subbands, each
subband is scaled by its (delay-compensated, smoothed) gain, and the
subbands are summed. Analysing the output with normal hearing therefore
approximately reproduces the impaired EPgram of the input.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import DataError
from .frontend import EPgram, FrontendConfig, analyze_epgram, get_filterbank
from .profiles import ListenerProfile


@dataclass
class GainTrajectory:
    gains_db: np.ndarray          # channels x frames
    smooth_ms: float = 2.0
    frame_shift_ms: float = 0.5


@dataclass(frozen=True)
class SimConfig:
    smooth_ms: float = 2.0
    pad_ms: float = 100.0
    frontend: FrontendConfig = field(default_factory=FrontendConfig)


def gain_trajectory(ep_nh: EPgram, ep_hl: EPgram, smooth_ms: float = 2.0) -> GainTrajectory:
    """Per-cell gain ``ep_hl - ep_nh`` in dB, smoothed along time.

    Smoothing is a zero-phase first-order low-pass with time constant
    ``smooth_ms`` (no smoothing when 0).
    """
    if ep_nh.levels.shape != ep_hl.levels.shape:
        raise DataError(f"EPgram shapes differ: {ep_nh.levels.shape} vs {ep_hl.levels.shape}")
    g = ep_hl.levels - ep_nh.levels
    if smooth_ms > 0 and g.shape[1] > 1:
        k = np.exp(-ep_nh.frame_shift_ms / smooth_ms)
        b, a = [1.0 - k], [1.0, -k]
        zi = signal.lfilter_zi(b, a)[0]
        # start each pass in steady state at the edge value
        g = signal.lfilter(b, a, g, axis=1, zi=zi * g[:, :1])[0]
        g = signal.lfilter(b, a, g[:, ::-1], axis=1, zi=zi * g[:, -1:])[0][:, ::-1]
    return GainTrajectory(g, smooth_ms, ep_nh.frame_shift_ms)


class SubbandSynth:
    """Zero-phase gammatone analysis whose channel sum is flat in the passband."""

    def __init__(self, fs: int, n: int, cfg: SimConfig = SimConfig()):
        self.fb = get_filterbank(fs, cfg.frontend)
        self.n = n
        self.pad = int(round(cfg.pad_ms * fs / 1000.0))
        self.nfft = int(2 ** np.ceil(np.log2(n + 2 * self.pad)))
        self.freqs = np.fft.rfftfreq(self.nfft, 1.0 / fs)
        pf = self.fb.peak_freqs
        probe = np.geomspace(pf[0] * 1.25, pf[-1] / 1.25, 200)
        self.norm = float(np.mean(np.sum(self.fb.magnitude(probe) ** 2, axis=0)))

    def channels(self, x: np.ndarray):
        """Yield (index, subband signal) pairs; the subbands sum to ~``x``."""
        if x.size != self.n:
            raise DataError("signal length differs from the synthesizer's")
        xp = np.concatenate([np.zeros(self.pad), x, np.zeros(self.nfft - x.size - self.pad)])
        spec = np.fft.rfft(xp)
        for i, sos in enumerate(self.fb.sos):
            power = np.abs(signal.sosfreqz(sos, worN=self.freqs, fs=self.fb.fs)[1]) ** 2
            y = np.fft.irfft(power * spec, self.nfft)
            yield i, y[self.pad:self.pad + x.size] / self.norm

    def gains(self, traj: GainTrajectory) -> np.ndarray:
        """Linear per-sample gains, advanced by each channel's analysis delay."""
        idx = self.fb.frame_index(self.n)
        delays = self.fb.channel_delays()
        t = np.arange(self.n, dtype=float)
        out = np.empty((traj.gains_db.shape[0], self.n))
        for i, g in enumerate(traj.gains_db):
            out[i] = np.interp(t + delays[i], idx, g)
        return 10.0 ** (out / 20.0)

    def resynthesize(self, x: np.ndarray, traj: GainTrajectory | None = None) -> np.ndarray:
        g = None if traj is None else self.gains(traj)
        y = np.zeros(self.n)
        for i, band in self.channels(x):
            y += band if g is None else band * g[i]
        return y


def synthesize_hl(x, fs: int, profile: ListenerProfile, cfg: SimConfig = SimConfig(),
                  return_gains: bool = False):
    """Render ``x`` as it would sound to ``profile``, for normal-hearing ears.

    The output has the same length as the input and is not loudness
    compensated, so it is quieter than the input whenever there is a loss.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DataError("expected a non-empty mono signal")
    ep_nh = analyze_epgram(x, fs, None, cfg.frontend, floor_db=None)
    ep_hl = analyze_epgram(x, fs, profile, cfg.frontend, floor_db=None)
    traj = gain_trajectory(ep_nh, ep_hl, cfg.smooth_ms)
    y = SubbandSynth(fs, x.size, cfg).resynthesize(x, traj)
    return (y, traj) if return_gains else y

"""ERB-spaced auditory front end producing excitation-pattern sequences (EPgrams).

Each channel is a fourth-order gammatone band-pass filter. The band
envelope (half-wave rectification followed by a 150 Hz low-pass) is sampled
every 0.5 ms and converted to dB SPL. Hearing loss is applied per channel as
a level-dependent attenuation: a passive part that does not depend on level
plus an active part that fades out between a knee and a catch-up level,
which produces recruitment. Levels are finally expressed relative to the
absolute threshold of a normal-hearing listener, so 0 dB means "just
audible".
"""
from __future__ import annotations

import functools
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal

from .errors import DataError
from .profiles import ListenerProfile, interpolate_hl

log = logging.getLogger(__name__)

MIN_RATE = 16000
MAX_RATE = 48000

# Minimum audible field, free-field binaural (ISO 389-7), dB SPL.
_MAF_FREQS = np.array([
    20, 25, 31.5, 40, 50, 63, 80, 100, 125, 160, 200, 250, 315, 400, 500, 630,
    750, 800, 1000, 1250, 1500, 1600, 2000, 2500, 3000, 3150, 4000, 5000, 6000,
    6300, 8000, 9000, 10000, 11200, 12500, 14000, 16000, 18000])
_MAF_DB = np.array([
    78.1, 68.7, 59.5, 51.1, 44.0, 37.5, 31.5, 26.5, 22.1, 17.9, 14.4, 11.4,
    8.6, 6.2, 4.4, 3.0, 2.4, 2.2, 2.4, 3.5, 2.4, 1.7, -1.3, -4.2, -5.8, -6.0,
    -5.4, -1.5, 4.3, 6.0, 12.6, 13.9, 13.9, 13.0, 12.3, 18.4, 40.2, 73.2])


def erb_number(f):
    """ERB-rate (Cams) of frequency ``f`` in Hz (Glasberg & Moore 1990)."""
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=float))


def erb_number_to_hz(e):
    return (10.0 ** (np.asarray(e, dtype=float) / 21.4) - 1.0) / 0.00437


def erb_space(f_lo: float, f_hi: float, n: int) -> np.ndarray:
    """``n`` frequencies equally spaced on the ERB-rate scale, inclusive."""
    return erb_number_to_hz(np.linspace(erb_number(f_lo), erb_number(f_hi), n))


def absolute_threshold(f, flat_db: float | None = None):
    """Normal-hearing absolute threshold in dB SPL at ``f``."""
    f = np.asarray(f, dtype=float)
    if flat_db is not None:
        return np.full_like(f, float(flat_db))
    return np.interp(np.log(f), np.log(_MAF_FREQS), _MAF_DB)


@dataclass(frozen=True)
class FrontendConfig:
    n_channels: int = 100
    f_lo: float = 100.0
    f_hi: float = 8000.0
    frame_shift_ms: float = 0.5
    calibration_db_spl: float = 63.0
    calibration_dbfs: float = -26.0   # RMS re full scale that maps to calibration_db_spl
    envelope_cutoff_hz: float = 150.0
    c_act_cap_db: float = 55.0
    knee_db: float = 30.0
    catch_db: float = 100.0
    at_flat_db: float | None = None   # replaces the MAF threshold curve when set
    max_fraction_of_nyquist: float = 0.9

    def __post_init__(self):
        if self.n_channels < 4:
            raise ValueError("n_channels must be >= 4")
        if not 0 < self.f_lo < self.f_hi:
            raise ValueError("need 0 < f_lo < f_hi")
        if self.frame_shift_ms <= 0:
            raise ValueError("frame_shift_ms must be positive")
        if self.catch_db <= self.knee_db:
            raise ValueError("catch_db must exceed knee_db")

    @property
    def db_offset(self) -> float:
        """dB SPL of a signal with unit RMS."""
        return self.calibration_db_spl - self.calibration_dbfs

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EPgram:
    """Excitation levels (dB re absolute threshold), channels x frames."""

    levels: np.ndarray
    peak_freqs_hz: np.ndarray
    frame_shift_ms: float = 0.5
    band_level_db: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_channels(self) -> int:
        return self.levels.shape[0]

    @property
    def n_frames(self) -> int:
        return self.levels.shape[1]

    @property
    def frame_rate(self) -> float:
        return 1000.0 / self.frame_shift_ms

    def with_levels(self, levels: np.ndarray) -> "EPgram":
        return EPgram(levels, self.peak_freqs_hz, self.frame_shift_ms)


@dataclass(frozen=True)
class HlSplit:
    hl_act_db: np.ndarray | float
    hl_pas_db: np.ndarray | float

    @property
    def hl_total_db(self):
        return np.add(self.hl_act_db, self.hl_pas_db)


def split_hl(hl_total, alpha: float, c_act_cap: float = 55.0) -> HlSplit:
    """Divide total hearing loss into active and passive components.

    ``alpha = 1`` (healthy compression) leaves everything passive; lower values
    move up to ``c_act_cap`` dB into the level-dependent active part.
    """
    hl = np.asarray(hl_total, dtype=float)
    if np.any(hl < 0):
        raise ValueError("hl_total must be non-negative")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    act = (1.0 - alpha) * np.minimum(hl, c_act_cap)
    pas = hl - act
    if act.ndim == 0:
        return HlSplit(float(act), float(pas))
    return HlSplit(act, pas)


def io_loss(level_in, split: HlSplit, knee_db: float = 30.0, catch_db: float = 100.0):
    """Attenuation in dB applied to a band at input level ``level_in`` dB SPL.

    The active loss applies in full below ``knee_db``, vanishes above
    ``catch_db`` and falls linearly in between.
    """
    lv = np.asarray(level_in, dtype=float)
    ramp = np.clip((catch_db - lv) / (catch_db - knee_db), 0.0, 1.0)
    out = np.asarray(split.hl_pas_db) + np.asarray(split.hl_act_db) * ramp
    return float(out) if np.ndim(out) == 0 else out


def gammatone_sos(cf: float, fs: int) -> np.ndarray:
    """Fourth-order gammatone as second-order sections, unit gain at ``cf``.

    Uses scipy's IIR design but rebuilds it from its exact (fourfold) pole
    pair, since the expanded 8th-order polynomial is unstable at low cf/fs.
    """
    b, a = signal.gammatone(cf, "iir", fs=fs)
    p = a[8] ** 0.125 * np.exp(2j * np.pi * cf / fs)
    sos = signal.zpk2sos(np.roots(b), np.array([p, np.conj(p)] * 4), b[0])
    h = signal.sosfreqz(sos, worN=[cf], fs=fs)[1][0]
    sos[0, :3] /= np.abs(h)
    return sos


class Filterbank:
    """Gammatone analysis filters plus envelope smoother for one sample rate."""

    def __init__(self, fs: int, cfg: FrontendConfig = FrontendConfig()):
        if not MIN_RATE <= fs <= MAX_RATE:
            raise DataError(f"unsupported sample rate {fs} Hz (accepted {MIN_RATE}-{MAX_RATE})")
        self.fs = int(fs)
        self.cfg = cfg
        f_hi = min(cfg.f_hi, cfg.max_fraction_of_nyquist * fs / 2)
        if f_hi < cfg.f_hi:
            log.info("f_hi lowered from %.0f to %.0f Hz for fs=%d", cfg.f_hi, f_hi, fs)
        self.peak_freqs = erb_space(cfg.f_lo, f_hi, cfg.n_channels)
        self.sos = [gammatone_sos(f, fs) for f in self.peak_freqs]
        self.env_b, self.env_a = signal.butter(2, cfg.envelope_cutoff_hz, fs=fs)
        self.hop = fs * cfg.frame_shift_ms / 1000.0

    def frame_index(self, n_samples: int) -> np.ndarray:
        """Sample index closing each frame (nearest sample for fractional hops)."""
        n_frames = int(np.floor(n_samples / self.hop + 1e-9))
        return np.round((np.arange(n_frames) + 1) * self.hop).astype(int) - 1

    def magnitude(self, freq) -> np.ndarray:
        """|H_i(freq)| for every channel, shape (n_channels, len(freq))."""
        freq = np.atleast_1d(np.asarray(freq, dtype=float))
        return np.array([np.abs(signal.sosfreqz(sos, worN=freq, fs=self.fs)[1])
                         for sos in self.sos])

    def channel_delays(self) -> np.ndarray:
        """Group delay (samples) of filter plus envelope smoother at each peak."""
        gd_env = signal.group_delay((self.env_b, self.env_a), w=[1e-3], fs=self.fs)[1][0]
        out = []
        for sos, f in zip(self.sos, self.peak_freqs):
            gd = sum(signal.group_delay((s[:3], s[3:]), w=[f], fs=self.fs)[1][0] for s in sos)
            out.append(gd + gd_env)
        return np.array(out)

    def band_levels(self, x: np.ndarray) -> np.ndarray:
        """Framed band levels in dB SPL (no hearing loss, no threshold)."""
        idx = self.frame_index(len(x))
        out = np.empty((len(self.sos), len(idx)))
        for i, sos in enumerate(self.sos):
            y = signal.sosfilt(sos, x)
            env = signal.lfilter(self.env_b, self.env_a, np.maximum(y, 0.0))[idx]
            # mean of a half-wave rectified sinusoid is A/pi; rescale to RMS
            rms = np.maximum(env, 0.0) * (np.pi / np.sqrt(2.0))
            out[i] = 20.0 * np.log10(np.maximum(rms, 1e-12))
        return out + self.cfg.db_offset


@functools.lru_cache(maxsize=16)
def get_filterbank(fs: int, cfg: FrontendConfig = FrontendConfig()) -> Filterbank:
    return Filterbank(fs, cfg)


def channel_hl(profile: ListenerProfile | None, peak_freqs) -> np.ndarray:
    """Total hearing loss per channel; negative audiogram values count as 0."""
    if profile is None:
        return np.zeros(len(peak_freqs))
    return np.maximum(interpolate_hl(profile.audiogram, peak_freqs), 0.0)


def analyze_epgram(x, fs: int, profile: ListenerProfile | None = None,
                   cfg: FrontendConfig = FrontendConfig(),
                   floor_db: float | None = 0.0) -> EPgram:
    """Compute the EPgram of ``x`` as heard by ``profile``.

    Parameters
    ----------
    x : array_like
        Mono signal, digital full scale.
    fs : int
        Sample rate, 16-48 kHz.
    profile : ListenerProfile, optional
        Listener; ``None`` means normal hearing.
    cfg : FrontendConfig
    floor_db : float or None
        Levels below this are clipped (0 dB = absolute threshold). ``None``
        keeps the unclipped values, which the hearing-loss simulator needs.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataError("expected a mono 1-D signal")
    if x.size == 0:
        raise DataError("empty signal")
    fb = get_filterbank(int(fs), cfg)
    if len(fb.frame_index(len(x))) == 0:
        raise DataError("signal shorter than one frame")
    level = fb.band_levels(x)
    at = absolute_threshold(fb.peak_freqs, cfg.at_flat_db)[:, None]
    alpha = 1.0 if profile is None else profile.alpha
    split = split_hl(channel_hl(profile, fb.peak_freqs), alpha, cfg.c_act_cap_db)
    split = HlSplit(np.asarray(split.hl_act_db)[:, None], np.asarray(split.hl_pas_db)[:, None])
    ep = level - io_loss(level, split, cfg.knee_db, cfg.catch_db) - at
    if floor_db is not None:
        ep = np.maximum(ep, floor_db)
    return EPgram(ep, fb.peak_freqs.copy(), cfg.frame_shift_ms, band_level_db=level)

"""IIR modulation filterbank applied to EPgram channel trajectories.

Band 1 is a first-order low-pass at 1 Hz; the others are second-order
band-pass sections with Q = 1 at octave-spaced centres up to 32 Hz. Each
band output is scaled by a peak gain derived from the listener's temporal
modulation transfer function (TMTF).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .errors import DataError
from .frontend import EPgram
from .profiles import NH_TMTF, Tmtf

MAX_MOD_FREQ = 32.0


@dataclass(frozen=True)
class MfbConfig:
    center_freqs_hz: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    q: float = 1.0
    frame_rate_hz: float = 2000.0

    def __post_init__(self):
        fc = tuple(float(f) for f in self.center_freqs_hz)
        object.__setattr__(self, "center_freqs_hz", fc)
        if len(fc) < 2:
            raise ValueError("need at least two modulation bands")
        if any(b <= a for a, b in zip(fc, fc[1:])):
            raise ValueError("modulation centre frequencies must ascend")
        if fc[-1] > MAX_MOD_FREQ:
            raise ValueError(f"modulation bands are limited to {MAX_MOD_FREQ} Hz")
        if fc[0] <= 0 or self.q <= 0:
            raise ValueError("frequencies and Q must be positive")

    @property
    def n_bands(self) -> int:
        return len(self.center_freqs_hz)

    def to_dict(self) -> dict:
        return {"center_freqs_hz": list(self.center_freqs_hz), "q": self.q,
                "frame_rate_hz": self.frame_rate_hz}


@dataclass
class ModulationEnvelopes:
    values: np.ndarray  # channels x bands x frames
    config: MfbConfig = field(default_factory=MfbConfig)


def tmtf_gains(cfg: MfbConfig, tmtf_nh: Tmtf = NH_TMTF, tmtf_hl: Tmtf = NH_TMTF):
    """Peak gains of each modulation band for reference and test analysis.

    The reference follows the normal-hearing low-pass TMTF; the test gain is
    additionally scaled by the sensitivity difference ``L_ps(NH) - L_ps(HL)``.
    Band 1 (the DC/low-pass band) keeps unit gain in both.
    """
    if tmtf_nh.fc_hz <= 0 or tmtf_hl.fc_hz <= 0:
        raise ValueError("TMTF cutoff must be positive")
    fm = np.asarray(cfg.center_freqs_hz)
    a_ref = 1.0 / np.sqrt(1.0 + (fm / tmtf_nh.fc_hz) ** 2)
    a_test = (10.0 ** ((tmtf_nh.lps_db - tmtf_hl.lps_db) / 20.0)
              / np.sqrt(1.0 + (fm / tmtf_hl.fc_hz) ** 2))
    a_ref[0] = 1.0
    a_test[0] = 1.0
    return a_ref, a_test


def band_filters(cfg: MfbConfig):
    """(b, a) coefficient pairs for every band at ``cfg.frame_rate_hz``."""
    fs = cfg.frame_rate_hz
    if fs < 2 * cfg.center_freqs_hz[-1]:
        raise DataError(f"frame rate {fs} Hz too low for a {cfg.center_freqs_hz[-1]} Hz band")
    out = [signal.butter(1, cfg.center_freqs_hz[0], fs=fs)]
    for fc in cfg.center_freqs_hz[1:]:
        out.append(signal.iirpeak(fc, cfg.q, fs=fs))
    return out


def mod_envelopes(levels, gains, cfg: MfbConfig = MfbConfig()) -> ModulationEnvelopes:
    """Run every channel trajectory through the bank.

    ``levels`` is an EPgram (its frame rate overrides ``cfg.frame_rate_hz``)
    or a channels x frames array sampled at ``cfg.frame_rate_hz``.

    Filtering is causal with zero initial state, so the first few hundred ms
    of band 1 contain a settling transient.
    """
    if isinstance(levels, EPgram):
        if levels.frame_rate != cfg.frame_rate_hz:
            cfg = replace(cfg, frame_rate_hz=levels.frame_rate)
        levels = levels.levels
    levels = np.atleast_2d(np.asarray(levels, dtype=float))
    gains = np.asarray(gains, dtype=float)
    if gains.shape != (cfg.n_bands,):
        raise DataError(f"expected {cfg.n_bands} gains, got {gains.shape}")
    out = np.empty((levels.shape[0], cfg.n_bands, levels.shape[1]))
    for j, (b, a) in enumerate(band_filters(cfg)):
        out[:, j, :] = gains[j] * signal.lfilter(b, a, levels, axis=-1)
    return ModulationEnvelopes(out, cfg)

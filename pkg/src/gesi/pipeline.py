"""End-to-end intelligibility prediction from a reference/test pair."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .alignment import AlignmentReport, channel_align, global_align
from .f0 import estimate_f0
from .frontend import FrontendConfig, analyze_epgram
from .metric import (MODES, SigmoidParams, WeightSet, efficiency_weight, metric_d,
                     sigmoid, similarity, ssi_weight)
from .modulation import MfbConfig, mod_envelopes, tmtf_gains
from .profiles import NH_TMTF, ListenerProfile, Tmtf


@dataclass(frozen=True)
class GesiConfig:
    rho: float = 0.52
    eta: float = 0.7
    h_max: float = 5.0
    sigmoid: SigmoidParams = SigmoidParams()
    t_ma_ms: float = 30.0
    mode: str = "channel_sum"
    use_tmtf: bool = True
    weighting: str = "full"          # "full" or "unit" (all w_i(tau) = 1)
    w_j: tuple[float, ...] | None = None
    nh_tmtf: Tmtf = NH_TMTF
    global_alignment: bool = True
    frontend: FrontendConfig = FrontendConfig()
    mfb: MfbConfig = MfbConfig()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.weighting not in ("full", "unit"):
            raise ValueError("weighting must be 'full' or 'unit'")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.eta < 0 or self.h_max <= 0 or self.t_ma_ms < 0:
            raise ValueError("eta >= 0, h_max > 0 and t_ma_ms >= 0 are required")
        if self.w_j is not None and len(self.w_j) != self.mfb.n_bands:
            raise ValueError("w_j needs one weight per modulation band")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if hasattr(v, "to_dict"):
                v = v.to_dict()
            elif hasattr(v, "__dataclass_fields__"):
                v = asdict(v)
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "GesiConfig":
        doc = dict(doc)
        if "sigmoid" in doc:
            doc["sigmoid"] = SigmoidParams(**doc["sigmoid"])
        if "nh_tmtf" in doc:
            doc["nh_tmtf"] = Tmtf(**doc["nh_tmtf"])
        if "frontend" in doc:
            doc["frontend"] = FrontendConfig(**doc["frontend"])
        if "mfb" in doc:
            m = dict(doc["mfb"])
            m["center_freqs_hz"] = tuple(m.get("center_freqs_hz", MfbConfig.center_freqs_hz))
            doc["mfb"] = MfbConfig(**m)
        if doc.get("w_j") is not None:
            doc["w_j"] = tuple(doc["w_j"])
        unknown = set(doc) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class PredictionRecord:
    ref_id: str
    test_id: str
    listener: str
    condition: str
    snr_db: float
    d: float
    intelligibility: float
    a: float
    b: float
    i_max: float
    rho: float
    eta: float
    h_max: float
    n_channels: int
    n_bands: int
    mode: str
    global_lag_samples: int
    lag_mean_frames: float
    lag_min_frames: int
    lag_max_frames: int
    n_at: int
    n_zero_denominator: int
    inaudible: bool
    s: np.ndarray | None = field(default=None, repr=False, compare=False)
    alignment: AlignmentReport | None = field(default=None, repr=False, compare=False)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name not in ("s", "alignment")]

    def to_row(self) -> list[str]:
        out = []
        for name in self.columns():
            v = getattr(self, name)
            if isinstance(v, bool):
                out.append(str(int(v)))
            elif isinstance(v, float):
                out.append("" if math.isnan(v) else repr(float(v)))
            else:
                out.append(str(v))
        return out


@dataclass
class Analysis:
    """Every intermediate of one prediction, for inspection and tests."""

    ep_ref: object
    ep_test: object
    m_ref: object
    m_test: object
    weights: WeightSet
    s: np.ndarray
    d: float
    n_zero: int
    alignment: AlignmentReport


def analyze_pair(ref, test, fs: int, profile: ListenerProfile | None = None,
                 config: GesiConfig = GesiConfig()) -> Analysis:
    """Run the metric chain up to d.

    The reference is always analysed as normal hearing; the test with
    ``profile`` (normal hearing when ``None``).
    """
    ref = np.asarray(ref, dtype=float)
    test = np.asarray(test, dtype=float)
    lag = 0
    if config.global_alignment:
        lag, ref, test = global_align(ref, test)
    else:
        n = min(len(ref), len(test))
        ref, test = ref[:n], test[:n]
    fe = config.frontend
    ep_ref = analyze_epgram(ref, fs, None, fe)
    ep_test = analyze_epgram(test, fs, profile, fe)
    ep_test, report = channel_align(ep_ref, ep_test, config.t_ma_ms)
    report.global_lag_samples = lag
    report.global_lag_frames = lag / (fs * fe.frame_shift_ms / 1000.0)

    mfb = replace(config.mfb, frame_rate_hz=ep_ref.frame_rate)
    if config.use_tmtf:
        tm_hl = profile.tmtf if profile is not None else config.nh_tmtf
        a_ref, a_test = tmtf_gains(mfb, config.nh_tmtf, tm_hl)
    else:
        a_ref = a_test = np.ones(mfb.n_bands)
    m_ref = mod_envelopes(ep_ref, a_ref, mfb)
    m_test = mod_envelopes(ep_test, a_test, mfb)

    eff, n_at = efficiency_weight(ep_test.levels, config.eta)
    if config.weighting == "unit":
        weights = WeightSet.unit(ep_ref.n_channels, ep_ref.n_frames, n_at)
    else:
        f0 = estimate_f0(ref, fs).at_frames(ep_ref.n_frames, fe.frame_shift_ms)
        ssi = ssi_weight(f0, ep_ref.peak_freqs_hz, config.h_max)
        weights = WeightSet(ssi, eff, config.h_max, config.eta, n_at)
    s, n_zero = similarity(m_ref, m_test, weights, config.rho)
    d = metric_d(s, config.w_j, config.mode)
    return Analysis(ep_ref, ep_test, m_ref, m_test, weights, s, d, n_zero, report)


def predict(ref, test, fs: int, profile: ListenerProfile | None = None,
            config: GesiConfig = GesiConfig(), ref_id: str = "", test_id: str = "",
            condition: str = "", snr_db: float = float("nan")) -> PredictionRecord:
    """Predict the word-correct score for ``test`` heard by ``profile``."""
    an = analyze_pair(ref, test, fs, profile, config)
    sp = config.sigmoid
    summary = an.alignment.summary()
    return PredictionRecord(
        ref_id=ref_id, test_id=test_id,
        listener=profile.listener_id if profile is not None else "NH",
        condition=condition, snr_db=float(snr_db), d=an.d,
        intelligibility=sigmoid(an.d, sp), a=sp.a, b=sp.b, i_max=sp.i_max,
        rho=config.rho, eta=config.eta, h_max=config.h_max,
        n_channels=an.s.shape[0], n_bands=an.s.shape[1], mode=config.mode,
        global_lag_samples=summary["global_lag_samples"],
        lag_mean_frames=summary["lag_mean_frames"],
        lag_min_frames=summary["lag_min_frames"], lag_max_frames=summary["lag_max_frames"],
        n_at=an.weights.n_at, n_zero_denominator=an.n_zero,
        inaudible=an.weights.inaudible, s=an.s, alignment=an.alignment)

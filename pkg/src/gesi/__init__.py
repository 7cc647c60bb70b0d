"""Speech intelligibility prediction from modulation-envelope similarity,
with listener-specific hearing loss and a matching hearing-loss simulator."""
from .alignment import AlignmentReport, channel_align, global_align
from .batch import batch_predict
from .errors import DataError, GesiError, NumericError
from .evaluate import EvaluationReport, fit_and_evaluate, subsample_protocol
from .f0 import F0Track, estimate_f0
from .frontend import EPgram, FrontendConfig, analyze_epgram, io_loss, split_hl
from .hlsim import gain_trajectory, synthesize_hl
from .metric import (SigmoidParams, WeightSet, efficiency_weight, fit_sigmoid, metric_d,
                     sigmoid, similarity, ssi_weight)
from .modulation import MfbConfig, ModulationEnvelopes, mod_envelopes, tmtf_gains
from .pipeline import GesiConfig, PredictionRecord, analyze_pair, predict
from .profiles import (NH_TMTF, OA7_PROFILE, Audiogram, ListenerProfile, Manifest, Tmtf, interpolate_hl,
                       load_profile, pta4, read_manifest)
from .stats import mean_ci95, pearson, rmse
from .stimuli import StftConfig, apply_rir, ideal_ratio_mask, mix_at_snr

__version__ = "0.1.0"

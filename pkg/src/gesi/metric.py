"""Channel weights, extended cosine similarity, the scalar metric and its
sigmoid mapping to word-correct scores."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DataError, NumericError

log = logging.getLogger(__name__)

MODES = ("channel_sum", "literal")


class FitError(NumericError):
    """The sigmoid fit was underdetermined or degenerate."""


def ssi_weight(f0_per_frame, peak_freqs, h_max: float = 5.0) -> np.ndarray:
    """Size-shape-image weights, channels x frames, each column summing to 1.

    Channels whose peak frequency lies below ``h_max`` harmonics of F0 are
    down-weighted in proportion to ``f_p / (h_max * F0)``.
    """
    if h_max <= 0:
        raise ValueError("h_max must be positive")
    f0 = np.asarray(f0_per_frame, dtype=float)
    fp = np.asarray(peak_freqs, dtype=float)
    w = np.minimum(fp[:, None] / (h_max * f0[None, :]), 1.0)
    return w / w.sum(axis=0, keepdims=True)


def efficiency_weight(levels, eta: float = 0.7, threshold_db: float = 0.0):
    """Per-channel efficiency weights from the test EPgram.

    Channels whose time-averaged level exceeds the absolute threshold get
    ``(N / N_AT) ** eta``; the rest get 0.

    Returns
    -------
    weights : ndarray, shape (N,)
    n_at : int
        Number of audible channels; 0 means the whole signal is inaudible.
    """
    if eta < 0:
        raise ValueError("eta must be non-negative")
    levels = getattr(levels, "levels", levels)
    mean = np.asarray(levels, dtype=float).mean(axis=1)
    audible = mean > threshold_db
    n, n_at = mean.size, int(audible.sum())
    if n_at == 0:
        return np.zeros(n), 0
    return np.where(audible, (n / n_at) ** eta, 0.0), n_at


@dataclass
class WeightSet:
    ssi: np.ndarray          # N x T
    eff: np.ndarray          # N
    h_max: float = 5.0
    eta: float = 0.7
    n_at: int = 0

    @property
    def combined(self) -> np.ndarray:
        return self.ssi * self.eff[:, None]

    @property
    def inaudible(self) -> bool:
        return self.n_at == 0

    @classmethod
    def unit(cls, n_channels: int, n_frames: int, n_at: int | None = None) -> "WeightSet":
        n_at = n_channels if n_at is None else n_at
        return cls(np.ones((n_channels, n_frames)), np.ones(n_channels), n_at=n_at)


def similarity(m_ref, m_test, weights, rho: float = 0.52):
    """Extended cosine similarity S_ij between modulation envelopes.

    Parameters
    ----------
    m_ref, m_test : ndarray, shape (N, M, T)
    weights : ndarray (N, T) or WeightSet
        Per-channel, per-frame weight applied to the inner product.
    rho : float
        Exponent split of the normalization between reference and test
        energies; 0.5 gives a level-invariant measure.

    Returns
    -------
    s : ndarray, shape (N, M)
    n_zero : int
        Number of (i, j) cells whose denominator vanished (set to 0).
    """
    m_ref = getattr(m_ref, "values", m_ref)
    m_test = getattr(m_test, "values", m_test)
    if m_ref.shape != m_test.shape:
        raise DataError(f"envelope shapes differ: {m_ref.shape} vs {m_test.shape}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    w = weights.combined if isinstance(weights, WeightSet) else np.asarray(weights, dtype=float)
    num = np.einsum("it,ijt,ijt->ij", w, m_ref, m_test)
    e_ref = np.einsum("ijt,ijt->ij", m_ref, m_ref)
    e_test = np.einsum("ijt,ijt->ij", m_test, m_test)
    den = e_ref ** rho * e_test ** (1.0 - rho)
    ok = (e_ref > 0) & (e_test > 0)
    s = np.divide(num, den, out=np.zeros_like(num), where=ok)
    return s, int((~ok).sum())


def metric_d(s, w_j=None, mode: str = "channel_sum") -> float:
    """Collapse S_ij into the scalar metric d.

    ``literal`` averages over all N*M cells. ``channel_sum`` sums over
    channels and averages over modulation bands, which keeps d near 1 for
    identical signals when the SSI weights sum to 1 across channels.
    """
    s = np.asarray(s, dtype=float)
    n, m = s.shape
    w_j = np.ones(m) if w_j is None else np.asarray(w_j, dtype=float)
    total = float(np.sum(s * w_j[None, :]))
    if mode == "literal":
        return total / (m * n)
    if mode == "channel_sum":
        return total / m
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def max_d(n_channels: int, n_bands: int, w_j=None, mode: str = "channel_sum",
          n_audible: int | None = None) -> float:
    """d reached when every audible S_ij equals 1 (unit weights, identical inputs)."""
    n_audible = n_channels if n_audible is None else n_audible
    w_j = np.ones(n_bands) if w_j is None else np.asarray(w_j, dtype=float)
    s = np.zeros((n_channels, n_bands))
    s[:n_audible] = 1.0
    return metric_d(s, w_j, mode)


@dataclass(frozen=True)
class SigmoidParams:
    a: float = -23.3
    b: float = 13.5
    i_max: float = 85.0

    def __post_init__(self):
        if not 0.0 < self.i_max <= 100.0:
            raise ValueError("i_max must lie in (0, 100]")


def sigmoid(d, params: SigmoidParams = SigmoidParams()):
    """Word-correct score (%) for metric value(s) ``d``."""
    with np.errstate(over="ignore"):
        z = params.a * np.asarray(d, dtype=float) + params.b
    out = params.i_max * expit(-z)
    return float(out) if out.ndim == 0 else out


def _sse(a, b, d, si, i_max):
    z = np.multiply.outer(a, d) + np.asarray(b)[..., None]
    return np.sum((i_max * expit(-z) - si) ** 2, axis=-1)


SEARCH_BOX = ((-100.0, 100.0), (-50.0, 50.0))


def fit_sigmoid(d, si, i_max: float = 85.0, box=SEARCH_BOX, grid: int = 201,
                max_iter: int = 200, tol: float = 1e-10) -> SigmoidParams:
    """Least-squares fit of (a, b) for the fixed ceiling ``i_max``.

    A coarse grid over ``box`` seeds a damped Gauss-Newton (Levenberg-Marquardt)
    refinement.
    """
    d = np.asarray(d, dtype=float)
    si = np.asarray(si, dtype=float)
    if d.shape != si.shape or d.ndim != 1:
        raise DataError("d and si must be 1-D arrays of equal length")
    if np.unique(d).size < 2:
        raise FitError("need at least two distinct d values")
    if np.ptp(si) == 0:
        raise FitError("all SI scores are identical; slope is undetermined")

    ga = np.linspace(*box[0], grid)
    gb = np.linspace(*box[1], grid)
    sse = np.array([_sse(a, gb, d, si, i_max) for a in ga])
    ia, ib = np.unravel_index(np.argmin(sse), sse.shape)
    p = np.array([ga[ia], gb[ib]])
    cur = float(sse[ia, ib])
    lam = 1e-3
    for _ in range(max_iter):
        z = p[0] * d + p[1]
        sig = expit(-z)
        r = i_max * sig - si
        dz = -i_max * sig * (1.0 - sig)
        jac = np.column_stack([dz * d, dz])
        jtj = jac.T @ jac
        g = jac.T @ r
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(np.diag(jtj) + 1e-12), -g)
            except np.linalg.LinAlgError:
                step = np.zeros(2)
            new = float(_sse(p[0] + step[0], p[1] + step[1], d, si, i_max))
            if new <= cur or lam > 1e12:
                break
            lam *= 10.0
        if new <= cur:
            p = p + step
            cur = new
            lam = max(lam / 10.0, 1e-12)
        if np.all(np.abs(step) <= tol * (1.0 + np.abs(p))) or lam > 1e12:
            break
    if not np.all(np.isfinite(p)):
        raise FitError("sigmoid fit diverged")
    return SigmoidParams(float(p[0]), float(p[1]), i_max)

"""Calibration and evaluation of predictions against subjective scores."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .metric import SigmoidParams, fit_sigmoid, sigmoid
from .stats import mean_ci95, pearson, rmse


@dataclass(frozen=True)
class ScoredItem:
    listener: str
    condition: str
    snr_db: float
    d: float
    si: float
    word: str = ""


@dataclass
class EvaluationReport:
    params: SigmoidParams
    rmse_rows: list[dict] = field(default_factory=list)
    curve_rows: list[dict] = field(default_factory=list)
    correlation_rows: list[dict] = field(default_factory=list)
    protocol_rows: list[dict] = field(default_factory=list)
    predictions: list[tuple[ScoredItem, float]] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def rmse_by_label(self) -> dict[tuple[str, str], list[float]]:
        out = defaultdict(list)
        for row in self.rmse_rows:
            out[(row["condition"], row["label"])].append(row["rmse"])
        return dict(out)


def _group(items, key):
    out = defaultdict(list)
    for it in items:
        out[key(it)].append(it)
    return out


def si_curves(pairs) -> list[dict]:
    """Per condition and SNR: listener-averaged subjective and predicted SI.

    Each listener contributes its own mean at that SNR, so the 95% interval
    reflects between-listener spread.
    """
    rows = []
    by_cs = _group(pairs, lambda p: (p[0].condition, p[0].snr_db))
    for (cond, snr) in sorted(by_cs, key=lambda k: (k[0], k[1])):
        per_l = _group(by_cs[(cond, snr)], lambda p: p[0].listener)
        subj = [np.mean([p[0].si for p in v]) for v in per_l.values()]
        pred = [np.mean([p[1] for p in v]) for v in per_l.values()]
        ms, cs = mean_ci95(subj)
        mp, cp = mean_ci95(pred)
        rows.append({"condition": cond, "snr_db": snr, "n_listeners": len(per_l),
                     "subjective_mean": ms, "subjective_ci95": cs,
                     "predicted_mean": mp, "predicted_ci95": cp})
    return rows


def fit_and_evaluate(train, evaluate, i_max: float = 85.0,
                     closed_listeners=None, closed_conditions=None) -> EvaluationReport:
    """Fit the sigmoid on ``train`` and score every listener/condition of ``evaluate``.

    A (listener, condition) cell is labelled ``closed`` when it took part in
    the fit and ``open`` otherwise.
    """
    train = list(train)
    evaluate = list(evaluate)
    if not train:
        raise DataError("empty training set")
    params = fit_sigmoid([t.d for t in train], [t.si for t in train], i_max)
    closed_listeners = set(closed_listeners or {t.listener for t in train})
    closed_conditions = set(closed_conditions or {t.condition for t in train})
    preds = [(it, sigmoid(it.d, params)) for it in evaluate]
    rows = []
    cells = _group(preds, lambda p: (p[0].listener, p[0].condition))
    for (lst, cond) in sorted(cells):
        v = cells[(lst, cond)]
        closed = lst in closed_listeners and cond in closed_conditions
        rows.append({"listener": lst, "condition": cond,
                     "label": "closed" if closed else "open", "n": len(v),
                     "rmse": rmse([p[1] for p in v], [p[0].si for p in v])})
    return EvaluationReport(params, rmse_rows=rows, curve_rows=si_curves(preds),
                            predictions=preds)


def subsample_protocol(items, n_train: int = 5, repeats: int = 10, seed: int = 0,
                       train_conditions=None, i_max: float = 85.0) -> EvaluationReport:
    """Repeat: draw ``n_train`` listeners, fit on their ``train_conditions``
    items, evaluate everyone. Returns the pooled report with per-run rows.

    Training uses the unprocessed condition ("Unpro") when present, otherwise
    the first condition in sorted order.
    """
    items = list(items)
    listeners = sorted({it.listener for it in items})
    if len(listeners) < n_train:
        raise DataError(f"need at least {n_train} listeners, have {len(listeners)}")
    conds = sorted({it.condition for it in items})
    default = ["Unpro"] if "Unpro" in conds else conds[:1]
    train_conditions = set(train_conditions or default)
    rng = np.random.default_rng(seed)
    runs, pooled_rows, last = [], [], None
    for r in range(repeats):
        chosen = sorted(rng.choice(listeners, size=n_train, replace=False).tolist())
        train = [it for it in items if it.listener in chosen and it.condition in train_conditions]
        rep = fit_and_evaluate(train, items, i_max, chosen, train_conditions)
        for (cond, label), vals in sorted(rep.rmse_by_label().items()):
            runs.append({"run": r, "condition": cond, "label": label,
                         "rmse_mean": float(np.mean(vals)), "a": rep.params.a,
                         "b": rep.params.b, "train_listeners": " ".join(chosen)})
        pooled_rows.extend(dict(row, run=r) for row in rep.rmse_rows)
        last = rep
    summary = []
    by = _group(runs, lambda row: (row["condition"], row["label"]))
    for key in sorted(by):
        vals = [row["rmse_mean"] for row in by[key]]
        summary.append({"run": "all", "condition": key[0], "label": key[1],
                        "rmse_mean": float(np.mean(vals)),
                        "rmse_sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                        "a": float(np.mean([row["a"] for row in by[key]])),
                        "b": float(np.mean([row["b"] for row in by[key]])),
                        "train_listeners": ""})
    return EvaluationReport(last.params, rmse_rows=pooled_rows, curve_rows=last.curve_rows,
                            protocol_rows=runs + summary, predictions=last.predictions)


def correlation_rows(per_listener: dict[str, dict[str, float]], pairs) -> list[dict]:
    """Pearson r and p for named (quantity, covariate) pairs across listeners.

    ``per_listener`` maps listener -> {name: value}; listeners missing a
    value are skipped for that pair.
    """
    rows = []
    for qty, cov in pairs:
        ls = sorted(l for l, v in per_listener.items()
                    if qty in v and cov in v and math.isfinite(v[qty]) and math.isfinite(v[cov]))
        x = [per_listener[l][qty] for l in ls]
        y = [per_listener[l][cov] for l in ls]
        try:
            r, p = pearson(x, y)
        except DataError:
            r, p = float("nan"), float("nan")
        rows.append({"quantity": qty, "covariate": cov, "n": len(ls), "r": r, "p": p})
    return rows


def read_scored_table(path, delimiter: str = ",") -> list[ScoredItem]:
    """Load rows with both ``d`` and ``si`` from a prediction table."""
    try:
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    items = []
    for row in csv.DictReader(lines, delimiter=delimiter):
        if not row.get("d") or not row.get("si"):
            continue
        try:
            items.append(ScoredItem(row.get("listener", ""), row.get("condition", ""),
                                    float(row.get("snr_db") or "nan"), float(row["d"]),
                                    float(row["si"]), row.get("word", "")))
        except ValueError as exc:
            raise DataError(f"bad numeric value in {path}: {exc}") from exc
    return items

"""Write evaluation tables (delimiter-separated) and figures to a directory."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from . import plotting
from .errors import DataError
from .evaluate import EvaluationReport
from .stats import mean_ci95


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def write_table(path, rows: list[dict], columns=None, config: dict | None = None,
                delimiter: str = ",") -> Path:
    """Write ``rows`` with a header; an optional ``# config`` line comes first."""
    path = Path(path)
    columns = list(columns or (rows[0].keys() if rows else []))
    try:
        with open(path, "w", newline="") as fh:
            if config is not None:
                fh.write("# config " + json.dumps(config, sort_keys=True, separators=(",", ":")) + "\n")
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(r.get(c, "")) for c in columns])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    return path


def rmse_bar_rows(report: EvaluationReport) -> list[dict]:
    out = []
    for (cond, label), vals in sorted(report.rmse_by_label().items()):
        m, ci = mean_ci95(vals)
        out.append({"condition": cond, "label": label, "n": len(vals), "mean": m, "ci95": ci})
    return out


def write_report(report: EvaluationReport, out_dir, fmt: str = "svg") -> list[Path]:
    """Emit every table of ``report`` plus the SI-vs-SNR and RMSE figures."""
    if not report.rmse_rows and not report.curve_rows:
        raise DataError("nothing to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {out}: {exc}") from exc
    cfg = dict(report.config, sigmoid={"a": report.params.a, "b": report.params.b,
                                       "i_max": report.params.i_max})
    files = [
        write_table(out / "rmse.csv", report.rmse_rows, config=cfg),
        write_table(out / "curves.csv", report.curve_rows, config=cfg),
    ]
    bars = rmse_bar_rows(report)
    files.append(write_table(out / "rmse_summary.csv", bars, config=cfg))
    if report.correlation_rows:
        files.append(write_table(out / "correlations.csv", report.correlation_rows, config=cfg))
    if report.protocol_rows:
        files.append(write_table(out / "protocol.csv", report.protocol_rows,
                                 columns=["run", "condition", "label", "rmse_mean", "rmse_sd",
                                          "a", "b", "train_listeners"], config=cfg))
    if report.predictions:
        rows = [{"listener": it.listener, "condition": it.condition, "snr_db": it.snr_db,
                 "word": it.word, "d": it.d, "si": it.si, "predicted": pred}
                for it, pred in report.predictions]
        files.append(write_table(out / "predicted_si.csv", rows, config=cfg))

    figs = [("si_vs_snr", plotting.si_vs_snr(report.curve_rows))]
    if report.predictions:
        figs.append(("si_vs_snr_by_listener", plotting.si_vs_snr_by_listener(report.predictions)))
    if bars:
        figs.append(("rmse", plotting.rmse_bars(bars)))
    for name, fig in figs:
        path = out / f"{name}.{fmt}"
        plotting.save(fig, path)
        files.append(path)
    return files

"""Static figures for evaluation reports (SVG by default)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib import rcParams  # noqa: E402

import numpy as np  # noqa: E402

rcParams.update({
    "font.size": 10,
    "axes.linewidth": 0.8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 5,
    "legend.frameon": False,
    "svg.hashsalt": "gesi",      # stable element ids across runs
    "svg.fonttype": "none",
})
_METADATA = {"svg": {"Date": None}, "pdf": {"CreationDate": None}}


def save(fig, path) -> None:
    fmt = str(path).rsplit(".", 1)[-1].lower()
    fig.savefig(path, metadata=_METADATA.get(fmt), bbox_inches="tight")
    plt.close(fig)


def si_vs_snr(curve_rows, title: str = ""):
    """Mean subjective (markers) and predicted (lines) SI against SNR per condition.

    Error bars show 95% intervals when a point averages two or more listeners.
    """
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    conds = sorted({r["condition"] for r in curve_rows})
    for k, cond in enumerate(conds):
        rows = sorted((r for r in curve_rows if r["condition"] == cond), key=lambda r: r["snr_db"])
        snr = np.array([r["snr_db"] for r in rows], dtype=float)
        color = f"C{k % 10}"
        many = any(r["n_listeners"] >= 2 for r in rows)
        ax.errorbar(snr, [r["subjective_mean"] for r in rows],
                    yerr=[r["subjective_ci95"] for r in rows] if many else None,
                    fmt="o", color=color, capsize=3, label=f"{cond or 'all'} (subj.)")
        ax.errorbar(snr, [r["predicted_mean"] for r in rows],
                    yerr=[r["predicted_ci95"] for r in rows] if many else None,
                    fmt="--", color=color, capsize=3, label=f"{cond or 'all'} (pred.)")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Word correct (%)")
    ax.set_ylim(0, 100)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    return fig


def si_vs_snr_by_listener(pairs, max_cols: int = 5):
    """One panel per listener with subjective and predicted SI against SNR."""
    listeners = sorted({p[0].listener for p in pairs})
    n = max(len(listeners), 1)
    cols = min(n, max_cols)
    rows = int(np.ceil(n / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(2.6 * cols, 2.2 * rows), squeeze=False,
                             sharex=True, sharey=True)
    conds = sorted({p[0].condition for p in pairs})
    for ax, lst in zip(axes.flat, listeners):
        for k, cond in enumerate(conds):
            sel = [p for p in pairs if p[0].listener == lst and p[0].condition == cond]
            snrs = sorted({p[0].snr_db for p in sel})
            subj = [np.mean([p[0].si for p in sel if p[0].snr_db == s]) for s in snrs]
            pred = [np.mean([p[1] for p in sel if p[0].snr_db == s]) for s in snrs]
            ax.plot(snrs, subj, "o", color=f"C{k % 10}", label=cond or "all")
            ax.plot(snrs, pred, "--", color=f"C{k % 10}")
        ax.set_title(lst or "listener", fontsize=8)
        ax.set_ylim(0, 100)
    for ax in axes.flat[len(listeners):]:
        ax.set_visible(False)
    axes.flat[0].legend(fontsize=6)
    fig.supxlabel("SNR (dB)")
    fig.supylabel("Word correct (%)")
    return fig


def rmse_bars(bar_rows):
    """Mean RMSE per condition/label with 95% interval whiskers.

    ``bar_rows`` carry ``condition``, ``label``, ``mean`` and ``ci95``.
    """
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    names = [f"{r['condition'] or 'all'}\n({r['label']})" for r in bar_rows]
    x = np.arange(len(bar_rows))
    ax.bar(x, [r["mean"] for r in bar_rows], yerr=[r["ci95"] for r in bar_rows],
           capsize=4, color=["C0" if r["label"] == "closed" else "C1" for r in bar_rows])
    ax.set_xticks(x, names, fontsize=7)
    ax.set_ylabel("RMSE (%)")
    ax.grid(axis="x", visible=False)
    return fig

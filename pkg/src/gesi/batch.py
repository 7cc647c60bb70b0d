"""Manifest-driven batch prediction."""
from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import DataError, GesiError
from .pipeline import GesiConfig, PredictionRecord, predict
from .profiles import ListenerProfile, Manifest, ManifestRecord, load_profile
from .report import write_table
from .wavio import read_wav

log = logging.getLogger(__name__)

EXTRA_COLUMNS = ["si", "error"]


class ProfileResolver:
    """Finds the profile for a manifest row.

    Order: the row's ``profile`` column, ``<profile_dir>/<listener>.json``,
    the default profile, normal hearing.
    """

    def __init__(self, manifest: Manifest, profile_dir=None,
                 default: ListenerProfile | None = None, alpha: float | None = None):
        self.manifest = manifest
        self.profile_dir = Path(profile_dir) if profile_dir else None
        self.default = default
        self.alpha = alpha
        self._cache: dict[Path, ListenerProfile] = {}
        self._lock = threading.Lock()

    def _load(self, path: Path) -> ListenerProfile:
        with self._lock:
            if path not in self._cache:
                self._cache[path] = load_profile(path)
            return self._cache[path]

    def __call__(self, rec: ManifestRecord) -> ListenerProfile | None:
        prof = self.default
        if rec.profile:
            prof = self._load(self.manifest.resolve(rec.profile))
        elif self.profile_dir is not None and rec.listener:
            cand = self.profile_dir / f"{rec.listener}.json"
            if cand.exists():
                prof = self._load(cand)
        if prof is not None and self.alpha is not None:
            prof = ListenerProfile(prof.audiogram, prof.tmtf, self.alpha,
                                   prof.listener_id, prof.kind)
        return prof


def predict_row(manifest: Manifest, rec: ManifestRecord, resolver, config: GesiConfig):
    ref = read_wav(manifest.resolve(rec.ref))
    test = read_wav(manifest.resolve(rec.test))
    if ref.rate != test.rate:
        raise DataError(f"sample rates differ: {ref.rate} vs {test.rate}")
    prof = resolver(rec)
    out = predict(ref.samples, test.samples, ref.rate, prof, config, ref_id=rec.ref,
                  test_id=rec.test, condition=rec.condition, snr_db=rec.snr_db)
    if rec.listener:
        out.listener = rec.listener
    return out


def batch_predict(manifest: Manifest, config: GesiConfig = GesiConfig(), resolver=None,
                  jobs: int = 1) -> list[tuple[ManifestRecord, PredictionRecord | None, str]]:
    """Predict every manifest row; results keep manifest order.

    A failing row yields ``(row, None, message)`` and the run continues.
    """
    resolver = resolver or ProfileResolver(manifest)

    def work(rec):
        try:
            return rec, predict_row(manifest, rec, resolver, config), ""
        except (GesiError, ValueError, ArithmeticError) as exc:
            log.warning("row %s/%s failed: %s", rec.ref, rec.test, exc)
            return rec, None, f"{type(exc).__name__}: {exc}"

    if jobs <= 1:
        return [work(r) for r in manifest.records]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(work, manifest.records))


def results_rows(results) -> list[dict]:
    rows = []
    for rec, pred, err in results:
        if pred is not None:
            row = dict(zip(PredictionRecord.columns(), pred.to_row()))
        else:
            row = {c: "" for c in PredictionRecord.columns()}
            row.update(ref_id=rec.ref, test_id=rec.test, listener=rec.listener,
                       condition=rec.condition,
                       snr_db="" if math.isnan(rec.snr_db) else repr(float(rec.snr_db)))
        row["si"] = "" if rec.si is None else repr(float(rec.si))
        row["error"] = err
        rows.append(row)
    return rows


def write_predictions(results, path, config: GesiConfig, delimiter: str = ","):
    return write_table(path, results_rows(results), PredictionRecord.columns() + EXTRA_COLUMNS,
                       config=config.to_dict(), delimiter=delimiter)

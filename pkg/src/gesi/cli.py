"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .batch import ProfileResolver, batch_predict, write_predictions
from .errors import DataError, NumericError
from .evaluate import (correlation_rows, fit_and_evaluate, read_scored_table,
                       subsample_protocol)
from .hlsim import SimConfig, synthesize_hl
from .metric import fit_sigmoid
from .pipeline import GesiConfig, PredictionRecord, predict
from .profiles import (OA7_PROFILE, ListenerProfile, Manifest, ManifestRecord, load_profile,
                       pta4, read_manifest, write_manifest)
from .report import write_report
from .stimuli import (StftConfig, apply_rir, babble, ideal_ratio_mask, scale_noise,
                      synthetic_word)
from .wavio import read_wav, write_wav

log = logging.getLogger("gesi")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _sigmoid_pair(text: str):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected a,b (e.g. -23.3,13.5)")
    return a, b


def _metric_args(p):
    g = p.add_argument_group("metric")
    g.add_argument("--config", help="JSON file with shared configuration")
    g.add_argument("--rho", type=float)
    g.add_argument("--eta", type=float)
    g.add_argument("--hmax", type=float)
    g.add_argument("--imax", type=float)
    g.add_argument("--sigmoid", type=_sigmoid_pair, metavar="A,B")
    g.add_argument("--tma-ms", type=float)
    g.add_argument("--mode", choices=["literal", "channel_sum"])
    g.add_argument("--no-tmtf", action="store_true", help="disable TMTF peak gains")
    g.add_argument("--unit-weights", action="store_true",
                   help="set every channel weight to 1 (diagnostic)")


def resolve_config(args) -> GesiConfig:
    """Configuration file first, then explicit flags."""
    cfg = GesiConfig()
    if getattr(args, "config", None):
        try:
            cfg = GesiConfig.from_dict(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
            raise DataError(f"bad config file {args.config}: {exc}") from exc
    upd = {}
    for flag, key in (("rho", "rho"), ("eta", "eta"), ("hmax", "h_max"),
                      ("tma_ms", "t_ma_ms"), ("mode", "mode")):
        v = getattr(args, flag, None)
        if v is not None:
            upd[key] = v
    sp = cfg.sigmoid
    if getattr(args, "sigmoid", None):
        sp = replace(sp, a=args.sigmoid[0], b=args.sigmoid[1])
    if getattr(args, "imax", None) is not None:
        sp = replace(sp, i_max=args.imax)
    upd["sigmoid"] = sp
    if getattr(args, "no_tmtf", False):
        upd["use_tmtf"] = False
    if getattr(args, "unit_weights", False):
        upd["weighting"] = "unit"
    try:
        return replace(cfg, **upd)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _profile(args) -> ListenerProfile | None:
    prof = None
    if getattr(args, "profile", None):
        prof = OA7_PROFILE if args.profile == "OA7" else load_profile(Path(args.profile))
    if getattr(args, "alpha", None) is not None:
        if not 0.0 <= args.alpha <= 1.0:
            raise UsageError("--alpha must lie in [0, 1]")
        prof = prof or ListenerProfile.normal()
        prof = replace(prof, alpha=args.alpha)
    return prof


def _out_stream(path):
    return open(path, "w", newline="") if path and path != "-" else sys.stdout


# --- subcommands --------------------------------------------------------------

def cmd_predict(args):
    cfg = resolve_config(args)
    ref, test = read_wav(args.ref), read_wav(args.test)
    if ref.rate != test.rate:
        raise DataError(f"sample rates differ: {ref.rate} vs {test.rate}")
    rec = predict(ref.samples, test.samples, ref.rate, _profile(args), cfg,
                  ref_id=str(args.ref), test_id=str(args.test),
                  condition=args.condition or "",
                  snr_db=args.snr if args.snr is not None else float("nan"))
    fh = _out_stream(args.out)
    try:
        fh.write("# config " + cfg.dumps() + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PredictionRecord.columns())
        w.writerow(rec.to_row())
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_batch(args):
    cfg = resolve_config(args)
    manifest = read_manifest(args.manifest)
    resolver = ProfileResolver(manifest, args.profile_dir, _profile(args), None)
    results = batch_predict(manifest, cfg, resolver, jobs=args.jobs)
    write_predictions(results, args.out, cfg)
    n_err = sum(1 for _, p, _ in results if p is None)
    log.info("%d rows, %d failed -> %s", len(results), n_err, args.out)


def cmd_fit(args):
    items = read_scored_table(args.table)
    if args.condition:
        items = [it for it in items if it.condition in args.condition]
    if args.listeners:
        items = [it for it in items if it.listener in args.listeners]
    imax = args.imax if args.imax is not None else 85.0
    p = fit_sigmoid([it.d for it in items], [it.si for it in items], imax)
    doc = {"a": p.a, "b": p.b, "i_max": p.i_max, "n": len(items)}
    fh = _out_stream(args.out)
    try:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_simulate(args):
    prof = _profile(args)
    if prof is None:
        raise UsageError("simulate needs --profile")
    audio = read_wav(getattr(args, "in"))
    y, traj = synthesize_hl(audio.samples, audio.rate, prof,
                            SimConfig(smooth_ms=args.smooth_ms), return_gains=True)
    write_wav(args.out, y, audio.rate, audio.sample_format)
    if args.dump_gains:
        np.save(args.dump_gains, traj.gains_db)


def cmd_mix(args):
    speech, noise = read_wav(args.speech), read_wav(args.noise)
    if speech.rate != noise.rate:
        raise DataError("speech and noise sample rates differ")
    n = noise.samples
    if n.size > speech.samples.size:
        start = int(np.random.default_rng(args.seed).integers(0, n.size - speech.samples.size + 1))
        n = n[start:start + speech.samples.size]
    mixed = speech.samples + scale_noise(speech.samples, n, args.snr)
    write_wav(args.out, mixed, speech.rate, speech.sample_format)


def cmd_irm(args):
    clean, noise = read_wav(args.clean), read_wav(args.noise)
    if clean.rate != noise.rate:
        raise DataError("clean and noise sample rates differ")
    n = scale_noise(clean.samples, noise.samples, args.snr) if args.snr is not None \
        else noise.samples[: clean.samples.size]
    if n.size != clean.samples.size:
        raise DataError("noise shorter than clean speech")
    cfg = StftConfig(window_ms=args.window_ms, hop_ms=args.hop_ms)
    y = ideal_ratio_mask(clean.samples, n, clean.rate, cfg, args.exponent)
    write_wav(args.out, y, clean.rate, clean.sample_format)


def cmd_reverb(args):
    x, rir = read_wav(getattr(args, "in")), read_wav(args.rir)
    if x.rate != rir.rate:
        raise DataError("signal and RIR sample rates differ")
    y = apply_rir(x.samples, rir.samples)
    if args.keep_length:
        y = y[: x.samples.size]
    write_wav(args.out, y, x.rate, "float32" if x.sample_format.startswith("pcm")
              else x.sample_format)


def cmd_report(args):
    items = read_scored_table(args.table)
    if not items:
        raise DataError("table has no rows with both d and si")
    imax = args.imax if args.imax is not None else 85.0
    train_conds = args.train_condition or None
    listeners = sorted({it.listener for it in items})
    if args.repeats > 0 and len(listeners) >= args.train_listeners:
        rep = subsample_protocol(items, args.train_listeners, args.repeats, args.seed,
                                 train_conds, imax)
    else:
        train = [it for it in items if train_conds is None or it.condition in train_conds]
        rep = fit_and_evaluate(train, items, imax)
    if args.profile_dir:
        rep.correlation_rows = _correlations(items, rep, Path(args.profile_dir))
    rep.config = {"table": str(args.table), "seed": args.seed, "repeats": args.repeats,
                  "train_listeners": args.train_listeners, "i_max": imax}
    for f in write_report(rep, args.out, args.format):
        log.info("wrote %s", f)


def _correlations(items, rep, profile_dir: Path):
    per = {}
    for lst in sorted({it.listener for it in items}):
        path = profile_dir / f"{lst}.json"
        if not path.exists():
            continue
        prof = load_profile(path)
        v = {"pta4": pta4(prof.audiogram), "lps": prof.tmtf.lps_db}
        for cond in sorted({it.condition for it in items}):
            sel = [(it, pr) for it, pr in rep.predictions
                   if it.listener == lst and it.condition == cond]
            if sel:
                v[f"si_mean:{cond}"] = float(np.mean([it.si for it, _ in sel]))
                v[f"diff_mean:{cond}"] = float(np.mean([pr - it.si for it, pr in sel]))
        per[lst] = v
    conds = sorted({it.condition for it in items})
    pairs = [(f"{q}:{c}", cov) for q in ("si_mean", "diff_mean") for c in conds
             for cov in ("pta4", "lps")]
    return correlation_rows(per, pairs)


def cmd_synth(args):
    """Write a small synthetic corpus and manifest for trying the pipeline."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fs = args.rate
    rng = np.random.default_rng(args.seed)
    records = []
    for w in range(args.words):
        word = synthetic_word(fs, seed=int(rng.integers(1 << 30)), duration=args.duration)
        ref = out / f"word{w:02d}_clean.wav"
        write_wav(ref, word, fs)
        for snr in args.snrs:
            noise = babble(fs, word.size, seed=int(rng.integers(1 << 30)))
            mix = word + scale_noise(word, noise, snr)
            test = out / f"word{w:02d}_snr{snr:+.0f}.wav"
            write_wav(test, mix, fs)
            records.append(ManifestRecord(ref.name, test.name, "Unpro", float(snr),
                                          args.listener, None, "", f"word{w:02d}"))
    write_manifest(Manifest(records, out), out / "manifest.csv")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gesi", description="Speech intelligibility prediction and "
                "hearing-loss simulation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("predict", help="predict SI for one reference/test pair")
    s.add_argument("--ref", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--profile", help="profile JSON (or OA7); default normal hearing")
    s.add_argument("--alpha", type=float, help="override the profile's compression health")
    s.add_argument("--snr", type=float)
    s.add_argument("--condition")
    s.add_argument("--out", help="output CSV (default stdout)")
    _metric_args(s)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("batch", help="predict every row of a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--profile", help="default profile for rows without one")
    s.add_argument("--profile-dir", help="directory of <listener>.json profiles")
    s.add_argument("--alpha", type=float)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    _metric_args(s)
    s.set_defaults(func=cmd_batch)

    s = sub.add_parser("fit", help="fit sigmoid parameters to (d, si) rows")
    s.add_argument("--table", required=True)
    s.add_argument("--imax", type=float)
    s.add_argument("--condition", nargs="*")
    s.add_argument("--listeners", nargs="*")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="render simulated hearing loss")
    s.add_argument("--in", required=True)
    s.add_argument("--profile", required=True)
    s.add_argument("--alpha", type=float)
    s.add_argument("--smooth-ms", type=float, default=2.0)
    s.add_argument("--dump-gains", help="save channel x frame gains (dB) as .npy")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("mix", help="add noise at a given SNR")
    s.add_argument("--speech", required=True)
    s.add_argument("--noise", required=True)
    s.add_argument("--snr", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mix)

    s = sub.add_parser("irm", help="ideal-ratio-mask enhancement of clean + noise")
    s.add_argument("--clean", required=True)
    s.add_argument("--noise", required=True)
    s.add_argument("--snr", type=float, help="rescale the noise to this SNR first")
    s.add_argument("--window-ms", type=float, default=32.0)
    s.add_argument("--hop-ms", type=float, default=8.0)
    s.add_argument("--exponent", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_irm)

    s = sub.add_parser("reverb", help="convolve with a room impulse response")
    s.add_argument("--in", required=True)
    s.add_argument("--rir", required=True)
    s.add_argument("--keep-length", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_reverb)

    s = sub.add_parser("report", help="calibrate, evaluate and plot a scored table")
    s.add_argument("--table", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--imax", type=float)
    s.add_argument("--train-condition", nargs="*")
    s.add_argument("--train-listeners", type=int, default=5)
    s.add_argument("--repeats", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--profile-dir")
    s.add_argument("--format", default="svg", choices=["svg", "pdf", "png"])
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("synth", help="write a synthetic word/noise corpus and manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--words", type=int, default=2)
    s.add_argument("--snrs", type=float, nargs="*", default=[-6, 0, 6, 12])
    s.add_argument("--rate", type=int, default=16000)
    s.add_argument("--duration", type=float, default=0.8)
    s.add_argument("--listener", default="NH")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def _join_sigmoid(argv):
    # "--sigmoid -23.3,13.5" would otherwise be read as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--sigmoid":
            out.append("--sigmoid=" + next(it, ""))
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_sigmoid(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"gesi: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"gesi: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError, ArithmeticError) as exc:
        print(f"gesi: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line frontend: synth, prep, epoch, psd, train, crossval,
audit-params, report.

Every command is deterministic given its full flag set; training commands
require an explicit seed so nondeterminism can never slip in silently. The
``NSTATE_MONTAGE`` environment variable supplies a default montage path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import data as D
from . import dsp
from . import metrics as M
from . import montage as MG
from . import models
from . import training

MONTAGE_ENV = "NSTATE_MONTAGE"


class CliError(Exception):
    pass


def _parse_channels(value: str):
    try:
        return int(value)
    except ValueError:
        return MG.load_montage(value)


def _parse_artifacts(value: str | None):
    if not value:
        return []
    specs = []
    for item in value.split(","):
        parts = item.strip().split(":")
        if len(parts) != 3:
            raise CliError(f"artifact {item!r} must look like SUBJECT:CHANNEL:KIND")
        try:
            subject = int(parts[0])
        except ValueError:
            raise CliError(f"artifact subject {parts[0]!r} must be an integer") from None
        specs.append(D.ArtifactSpec(subject, parts[1], parts[2]))
    return specs


def cmd_synth(args) -> int:
    channels = _parse_channels(args.channels)
    artifacts = _parse_artifacts(args.artifacts)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    montage = channels if isinstance(channels, MG.Montage) \
        else MG.fibonacci_montage(channels)
    montage_path = out_dir / "montage.csv"
    MG.write_montage(montage, montage_path)
    entries = []
    for rec in D.iter_synth_cohort(args.subjects, montage, delta=args.delta,
                                   artifacts=artifacts, seed=args.seed,
                                   duration=args.duration):
        fname = f"{rec.subject_id}_{rec.condition}.nseeg"
        D.write_container(out_dir / fname, rec)
        entries.append({"file": fname, "subject_id": rec.subject_id,
                        "condition": rec.condition})
        print(f"wrote {fname} ({rec.condition}, {rec.duration:.0f}s, "
              f"{len(rec.channel_names)} channels)")
    manifest = {"montage": "montage.csv", "subjects": entries,
                "params": {"subjects": args.subjects, "delta": args.delta,
                           "seed": args.seed, "duration": args.duration,
                           "channels": args.channels, "artifacts": args.artifacts}}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"manifest: {out_dir / 'manifest.json'}")
    return 0


def _input_recordings(in_dir: Path) -> list[Path]:
    manifest = in_dir / "manifest.json"
    if manifest.exists():
        entries = json.loads(manifest.read_text())["subjects"]
        return [in_dir / e["file"] for e in entries]
    paths = sorted(in_dir.glob("*.nseeg"))
    if not paths:
        raise CliError(f"no .nseeg containers in {in_dir}")
    return paths


def _resolve_montage(args, in_dir: Path | None) -> MG.Montage:
    path = getattr(args, "montage", None) or os.environ.get(MONTAGE_ENV)
    if path is None and in_dir is not None and (in_dir / "montage.csv").exists():
        path = in_dir / "montage.csv"
    if path is None:
        raise CliError(f"no montage given (use --montage or ${MONTAGE_ENV})")
    return MG.load_montage(path)


def _resolve_subset(args) -> list[str] | None:
    if getattr(args, "subset_file", None):
        names = [line.strip() for line in Path(args.subset_file).read_text().splitlines()
                 if line.strip()]
        if not names:
            raise CliError(f"subset file {args.subset_file} is empty")
        return names
    subset = getattr(args, "subset", "full")
    if subset == "full":
        return None
    if subset == "cogn26":
        return list(MG.COGN26_CHANNELS)
    raise CliError(f"unknown subset {subset!r}")


def cmd_prep(args) -> int:
    in_dir = Path(args.in_dir)
    montage = _resolve_montage(args, in_dir)
    subset = _resolve_subset(args)
    fir = dsp.design_bandpass(args.low, args.high)
    ransac = MG.RansacParams(seed=args.seed)
    sets = []
    for path in _input_recordings(in_dir):
        rec = D.read_container(path)
        if not isinstance(rec, D.Recording):
            raise CliError(f"{path}: expected a continuous recording container")
        bad = MG.ransac_bad_channels(rec, montage, ransac)
        print(f"{rec.subject_id}: flagged {sorted(bad) if bad else 'none'}")
        cleaned = MG.interpolate_recording(rec, montage, bad)
        prov = dict(rec.provenance)
        prov["interpolated_channels"] = sorted(bad)
        rec = D.Recording(cleaned, rec.fs, rec.channel_names, rec.subject_id,
                          rec.condition, prov)
        filtered = dsp.filtfilt(rec.data, fir)
        rec = D.Recording(filtered, rec.fs, rec.channel_names, rec.subject_id,
                          rec.condition, {**rec.provenance,
                                          "bandpass_hz": [args.low, args.high]})
        sets.append(D.epoch(D.crop(rec, args.start, args.end)))
    merged = D.merge_epoch_sets(sets)
    if subset is not None:
        merged = D.select_channels(merged, subset)
    D.write_container(args.out, merged)
    print(f"wrote {args.out}: {len(merged)} epochs x {len(merged.channel_names)} "
          f"channels x {merged.epochs.shape[2]} samples")
    return 0


def cmd_epoch(args) -> int:
    in_dir = Path(args.in_dir)
    sets = []
    for path in _input_recordings(in_dir):
        rec = D.read_container(path)
        if not isinstance(rec, D.Recording):
            raise CliError(f"{path}: expected a continuous recording container")
        if args.start is not None or args.end is not None:
            if args.start is None or args.end is None:
                raise CliError("--start and --end must be given together")
            rec = D.crop(rec, args.start, args.end)
        sets.append(D.epoch(rec, args.seconds))
    merged = D.merge_epoch_sets(sets)
    D.write_container(args.out, merged)
    print(f"wrote {args.out}: {len(merged)} epochs")
    return 0


def cmd_psd(args) -> int:
    payload = D.read_container(args.input)
    if isinstance(payload, D.Recording):
        est = dsp.welch_psd(payload.data, fs=payload.fs)
        names = payload.channel_names
    else:
        est = dsp.epochs_psd(payload.epochs, fs=payload.fs)
        names = payload.channel_names
    lines = ["channel,band,power_uv2"]
    for i, name in enumerate(names):
        for band in dsp.BANDS:
            power = dsp.band_power(est, band)[i]
            lines.append(f"{name},{band.name},{power:.6g}")
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    return 0


def _load_epochs(path, subset) -> D.EpochSet:
    payload = D.read_container(path)
    if not isinstance(payload, D.EpochSet):
        raise CliError(f"{path}: expected an epoch-set container")
    if subset is not None:
        payload = D.select_channels(payload, subset)
    return payload


def _dataset_name(eset: D.EpochSet, subset) -> str:
    if subset is not None and list(subset) == list(MG.COGN26_CHANNELS):
        return "COGN-26"
    return f"FULL-{len(eset.channel_names)}"


def cmd_train(args) -> int:
    subset = _resolve_subset(args)
    train_set = _load_epochs(args.data, subset)
    val_set = _load_epochs(args.val, subset) if args.val else None
    model = models.build_model(args.model, len(train_set.channel_names),
                               train_set.epochs.shape[2], seed=args.seed)
    print(model.audit().render())
    history = training.train(model, train_set, val_set, epochs=args.epochs,
                             batch_size=args.batch_size, seed=args.seed, lr=args.lr)
    last = history.records[-1] if history.records else None
    if last is not None:
        msg = f"epoch {last.epoch}: train_loss {last.train_loss:.4f} " \
              f"train_acc {last.train_acc:.4f}"
        if last.val_loss is not None:
            msg += f" val_loss {last.val_loss:.4f} val_acc {last.val_acc:.4f}"
        print(msg)
    if args.out_model:
        model.save_weights(args.out_model)
        print(f"wrote {args.out_model}")
    if args.history:
        Path(args.history).write_text(history.to_ndjson())
        print(f"wrote {args.history}")
    return 0


def cmd_crossval(args) -> int:
    subset = _resolve_subset(args)
    eset = _load_epochs(args.data, subset)
    audit = models.build_model(args.model, len(eset.channel_names),
                               eset.epochs.shape[2], seed=args.seed).audit()
    print(audit.render())
    result = training.cross_validate(eset, args.model, k=args.folds, seed=args.seed,
                                     epochs=args.epochs, batch_size=args.batch_size,
                                     lr=args.lr,
                                     dataset_name=_dataset_name(eset, subset),
                                     timesteps=eset.epochs.shape[2])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(result.report.to_json())
    (out_dir / "report.md").write_text(M.render_report(result.report, "markdown"))
    (out_dir / "folds.json").write_text(result.plan.to_json())
    for fold in result.folds:
        (out_dir / f"history_fold{fold.fold}.ndjson").write_text(
            fold.history.to_ndjson())
    print(M.render_report(result.report, "markdown"))
    print(f"wrote {out_dir}/report.json, report.md, folds.json and fold histories")
    return 0


def cmd_audit_params(args) -> int:
    model = models.build_model(args.model, args.channels, args.timesteps)
    print(model.audit().render())
    return 0


def cmd_report(args) -> int:
    report = M.CvReport.from_json(Path(args.input).read_text())
    text = M.render_report(report, args.format)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    return 0


def _add_subset_flags(parser) -> None:
    parser.add_argument("--subset", default="full", choices=("full", "cogn26"),
                        help="named channel subset to keep")
    parser.add_argument("--subset-file",
                        help="file with one channel name per line (overrides --subset)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nstate",
                                     description="EEG relaxation-vs-workload "
                                                 "classification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic two-condition cohort")
    p.add_argument("--subjects", type=int, required=True,
                   help="even number of subjects (half per condition)")
    p.add_argument("--delta", type=float, default=1.0,
                   help="condition separation: oscillation amplitude in units "
                        "of the baseline RMS")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", default="32",
                   help="channel count for a synthetic montage, or a montage CSV path")
    p.add_argument("--artifacts", default=None,
                   help="comma-separated SUBJECT:CHANNEL:KIND injections "
                        "(kind: flat or noisy)")
    p.add_argument("--duration", type=float, default=1200.0,
                   help="seconds per recording")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prep", help="bad-channel repair, band-pass, crop, epoch")
    p.add_argument("--in-dir", required=True, help="directory of recording containers")
    p.add_argument("--montage", default=None,
                   help=f"montage CSV (default: ${MONTAGE_ENV} or in-dir/montage.csv)")
    p.add_argument("--out", required=True, help="output epoch-set container")
    _add_subset_flags(p)
    p.add_argument("--low", type=float, default=1.0)
    p.add_argument("--high", type=float, default=45.0)
    p.add_argument("--start", type=float, default=600.0, help="crop start (s)")
    p.add_argument("--end", type=float, default=720.0, help="crop end (s)")
    p.add_argument("--seed", type=int, default=0, help="bad-channel detection seed")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("epoch", help="split recordings into fixed-length epochs")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seconds", type=float, default=1.0)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--end", type=float, default=None)
    p.set_defaults(func=cmd_epoch)

    p = sub.add_parser("psd", help="per-channel band powers as CSV")
    p.add_argument("--input", required=True, help="recording or epoch-set container")
    p.add_argument("--out", default="-", help="CSV path, or - for stdout")
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("train", help="train one model on an epoch set")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=models.MODEL_NAMES)
    p.add_argument("--val", default=None, help="validation epoch-set container")
    _add_subset_flags(p)
    p.add_argument("--epochs", type=int, default=training.DEFAULT_EPOCHS)
    p.add_argument("--batch-size", type=int, default=training.DEFAULT_BATCH_SIZE)
    p.add_argument("--lr", type=float, default=None,
                   help="override the architecture's learning rate")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-model", default=None, help="weights file to write")
    p.add_argument("--history", default=None, help="ndjson history file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", help="grouped stratified k-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=models.MODEL_NAMES)
    _add_subset_flags(p)
    p.add_argument("--folds", type=int, default=6)
    p.add_argument("--epochs", type=int, default=training.DEFAULT_EPOCHS)
    p.add_argument("--batch-size", type=int, default=training.DEFAULT_BATCH_SIZE)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("audit-params", help="layer-by-layer parameter audit")
    p.add_argument("--model", required=True, choices=models.MODEL_NAMES)
    p.add_argument("--channels", type=int, required=True)
    p.add_argument("--timesteps", type=int, default=250)
    p.set_defaults(func=cmd_audit_params)

    p = sub.add_parser("report", help="render a cross-validation report")
    p.add_argument("--input", required=True, help="report.json path")
    p.add_argument("--format", default="markdown", choices=("markdown", "csv"))
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, training.TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

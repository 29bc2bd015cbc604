"""Command-line interface: ``geofer {synth,train,classify,eval,regions}``.

Every option may also be given in a JSON file passed with ``--config``;
command-line flags take precedence over the file, which takes precedence
over built-in defaults. Exit status is 0 on success, 1 on a runtime failure
and 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import sklearn

from . import __version__
from .boosting import row_percentages, select_binary_features, weak_prediction_matrix, weak_vote_counts
from .data import DEFAULT_CLASS_NAMES, DomainError, GeoferError, enumerate_pool, load_dataset, save_dataset
from .dtw import DtwConfig
from .evaluation import (
    ConfusionMatrix,
    RegionMap,
    default_region_map,
    format_table,
    region_analysis,
    region_csv,
    run_cv,
    write_cv_report,
    _matrix_csv,
)
from .normalization import (
    DEFAULT_TRAIN_FRAMES,
    compute_neutral_reference,
    normalize_dataset,
    resample_sequence,
)
from .pipeline import PIPELINES, Model, PipelineConfig, fit_pipeline
from .prototypes import prototypes_from_features, training_features
from .synthgen import SynthSpec, generate

log = logging.getLogger("geofer")

DEFAULTS = {
    "seed": 0,
    "threads": None,
    "pipeline": "adaboost-dtw",
    "rounds": 50,
    "folds": 5,
    "window": None,
    "scale_a": 1.0,
    "scale_b": 1.0,
    "train_frames": DEFAULT_TRAIN_FRAMES,
    "use_abs": False,
}


class ConfigError(GeoferError):
    pass


def _add_common(p, dtw=True):
    p.add_argument("--config", type=Path, help="JSON file with option overrides")
    p.add_argument("--seed", type=int, help="seed for every random substream (default 0)")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    if dtw:
        p.add_argument("--window", type=int, help="DTW band half-width (default: unconstrained)")
        p.add_argument("--scale-a", type=float, help="DTW scale of the first element component")
        p.add_argument("--scale-b", type=float, help="DTW scale of the second element component")


def _add_training(p):
    p.add_argument("--class-names", help="comma-separated class names in label order (default: the six basic expressions)")
    p.add_argument("--pipeline", choices=PIPELINES, help="recognition pipeline (default adaboost-dtw)")
    p.add_argument("--rounds", type=int, help="boosting rounds M (default 50)")
    p.add_argument("--train-frames", type=int, help="training resample length (default 16)")
    p.add_argument("--use-abs", action="store_const", const=True,
                   help="compact features use max |value| instead of max value")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geofer", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"geofer {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic trajectory dataset")
    p.add_argument("--spec", type=Path, help="JSON synth spec (default: 6-class benchmark)")
    _add_common(p, dtw=False)

    p = sub.add_parser("train", help="fit a model on a whole dataset")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--save-prototypes", action="store_true",
                   help="also write the full-pool prototype set")
    _add_common(p)
    _add_training(p)

    p = sub.add_parser("classify", help="predict labels with a trained model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    _add_common(p, dtw=False)

    p = sub.add_parser("eval", help="cross-validate, or score a trained model")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--model", type=Path, help="score this model instead of cross-validating")
    p.add_argument("--folds", type=int, help="number of CV folds (default 5)")
    p.add_argument("--regions", nargs="?", const="default", metavar="MAP",
                   help="add a region report; MAP is a landmark,region CSV (default: contiguous blocks)")
    p.add_argument("--confusion-scores", action="store_true",
                   help="add weak-classifier vote percentages per class")
    _add_common(p)
    _add_training(p)

    p = sub.add_parser("regions", help="per-class one-vs-all feature selection by facial region")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--region-map", type=Path, help="landmark,region CSV (default: contiguous blocks)")
    _add_common(p)
    _add_training(p)
    return parser


def resolve(args) -> dict:
    """Merge flags over the optional config file over defaults."""
    file_cfg = {}
    if getattr(args, "config", None) is not None:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"config file {args.config} must hold a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
    cfg = dict(DEFAULTS)
    cfg.update(file_cfg)
    explicit = set(file_cfg)
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
            explicit.add(k)
    cfg["_explicit"] = explicit
    if cfg["threads"] is None:
        cfg["threads"] = os.cpu_count() or 1
    if cfg["threads"] < 1:
        raise ConfigError("--threads must be >= 1")
    if cfg["rounds"] < 1:
        raise ConfigError("--rounds must be >= 1")
    if cfg["folds"] < 2:
        raise ConfigError("--folds must be >= 2")
    if cfg["pipeline"] not in PIPELINES:
        raise ConfigError(f"unknown pipeline {cfg['pipeline']!r}")
    return cfg


def _dtw_config(cfg) -> DtwConfig:
    return DtwConfig(cfg["window"], (cfg["scale_a"], cfg["scale_b"]))


def _pipeline_config(cfg) -> PipelineConfig:
    return PipelineConfig(
        kind=cfg["pipeline"],
        rounds=cfg["rounds"],
        dtw=_dtw_config(cfg),
        train_frames=cfg["train_frames"],
        use_abs=bool(cfg["use_abs"]),
        seed=cfg["seed"],
        threads=cfg["threads"],
    )


def _require_file(path, what):
    if path is None or not Path(path).is_file():
        raise ConfigError(f"{what} not found: {path}")


def _write_metadata(out: Path, command: str, cfg: dict):
    # threads and the output directory do not affect results and stay out of the hash
    settings = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(cfg.items())
                if k not in ("threads", "out", "verbose", "command") and not k.startswith("_")}
    blob = json.dumps(settings, sort_keys=True).encode()
    meta = {
        "command": command,
        "geofer": __version__,
        "numpy": np.__version__,
        "scikit-learn": sklearn.__version__,
        "python": sys.version.split()[0],
        "seed": cfg["seed"],
        "config": settings,
        "config_hash": hashlib.sha256(blob).hexdigest(),
    }
    (out / "run.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def cmd_synth(cfg) -> None:
    if cfg.get("spec") is not None:
        _require_file(cfg["spec"], "synth spec")
        try:
            obj = json.loads(Path(cfg["spec"]).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid synth spec {cfg['spec']}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError(f"synth spec {cfg['spec']} must hold a JSON object")
    else:
        obj = {}
    if "seed" in cfg["_explicit"] or "seed" not in obj:
        obj["seed"] = cfg["seed"]
    try:
        spec = SynthSpec.from_json(obj)
    except DomainError as exc:
        raise ConfigError(f"invalid synth spec: {exc}") from None
    out = Path(cfg["out"])
    ds = generate(spec)
    save_dataset(ds, out)
    (out / "spec.json").write_text(json.dumps(spec.to_json(), indent=1) + "\n", encoding="utf-8")
    cfg = dict(cfg, seed=spec.seed)
    _write_metadata(out, "synth", cfg)
    log.info("wrote %d sequences to %s", len(ds), out)


def _class_names(cfg):
    names = cfg.get("class_names")
    if names is None:
        return DEFAULT_CLASS_NAMES
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",")]
    if len(names) < 2 or len(set(names)) != len(names) or not all(isinstance(n, str) and n for n in names):
        raise ConfigError("class names must be at least two distinct non-empty strings")
    return tuple(names)


def _load(cfg, class_names=None):
    _require_file(cfg["manifest"], "manifest")
    return load_dataset(cfg["manifest"], _class_names(cfg) if class_names is None else class_names)


def cmd_train(cfg) -> None:
    ds = _load(cfg)
    model = fit_pipeline(ds, _pipeline_config(cfg))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(model.dumps(), encoding="utf-8")
    (out / "trace.csv").write_text(model.trace.to_csv(), encoding="utf-8")
    if cfg.get("save_prototypes"):
        (out / "prototypes.json").write_text(json.dumps(model.prototypes.to_json()) + "\n", encoding="utf-8")
    _write_metadata(out, "train", cfg)
    log.info("selected %d features (%s)", len(model.features), model.trace.stop_reason)


def _load_model(cfg) -> Model:
    _require_file(cfg["model"], "model file")
    return Model.load(cfg["model"])


def cmd_classify(cfg) -> None:
    model = _load_model(cfg)
    ds = _load(cfg, model.class_names)
    preds = model.predict(ds)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "subject_id", "actual", "predicted"])
    for k, (seq, p) in enumerate(zip(ds, preds)):
        actual = "" if seq.label is None else model.class_names[seq.label]
        w.writerow([k, seq.subject_id or "", actual, model.class_names[p]])
    (out / "predictions.csv").write_text(buf.getvalue(), encoding="utf-8")
    _write_metadata(out, "classify", cfg)


def _region_map(spec, L) -> RegionMap:
    if spec is None or spec == "default":
        return default_region_map(L)
    if not Path(spec).is_file():
        raise ConfigError(
            f"region map {spec} not found; pass a CSV with header 'landmark,region' "
            "or use --regions without a value for the default contiguous map"
        )
    regions = RegionMap.load(spec)
    if len(regions) != L:
        raise ConfigError(f"region map covers {len(regions)} landmarks, dataset has {L}")
    return regions


def cmd_eval(cfg) -> None:
    model = _load_model(cfg) if cfg.get("model") is not None else None
    ds = _load(cfg, None if model is None else model.class_names)
    regions = _region_map(cfg["regions"], ds.num_landmarks) if cfg.get("regions") else None
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if model is not None:
        preds = model.predict(ds)
        cm = ConfusionMatrix.from_predictions(ds.labels, preds, model.class_names)
        (out / "counts.csv").write_text(cm.counts_csv(), encoding="utf-8")
        (out / "percent.csv").write_text(cm.percent_csv(), encoding="utf-8")
        text = [cm.text_table(f"accuracy {100 * cm.accuracy:.2f}%")]
        if cfg.get("confusion_scores"):
            pct = row_percentages(weak_vote_counts(model.strong, normalize_dataset(ds, model.reference), model.dtw))
            (out / "confusion_scores.csv").write_text(
                _matrix_csv([[repr(float(v)) for v in r] for r in pct], model.class_names), encoding="utf-8")
            text.append(format_table(pct, model.class_names, "weak-classifier confusion scores (%)"))
        if regions is not None:
            (out / "regions.csv").write_text(region_csv(region_analysis(model.features, regions)), encoding="utf-8")
            (out / "region_map.csv").write_text(regions.to_csv(), encoding="utf-8")
        (out / "report.txt").write_text("\n".join(text), encoding="utf-8")
    else:
        result = run_cv(ds, cfg["folds"], _pipeline_config(cfg), cfg["seed"],
                        confusion_scores=bool(cfg.get("confusion_scores")))
        write_cv_report(result, out, regions)
        log.info("mean accuracy %.4f", result.mean_accuracy)
    _write_metadata(out, "eval", cfg)


def cmd_regions(cfg) -> None:
    ds = _load(cfg)
    ds.require_trainable()
    regions = _region_map(cfg.get("region_map"), ds.num_landmarks)
    pcfg = _pipeline_config(cfg)
    ref = compute_neutral_reference(ds)
    train = [resample_sequence(s, pcfg.train_frames) for s in normalize_dataset(ds, ref)]
    pool = enumerate_pool(ds.num_landmarks)
    feats = training_features(train, pool)
    protos = prototypes_from_features(feats, ds.labels, pool, ds.class_names)
    preds = weak_prediction_matrix(list(feats), protos.table, pcfg.dtw, pcfg.threads)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    parts, selections = [], []
    for c, name in enumerate(ds.class_names):
        selected, _ = select_binary_features(train, pool, protos, c, pcfg.rounds, pcfg.dtw, predictions=preds)
        fids = [f for f, _ in selected]
        selections.append([name] + [str(f) for f in fids])
        text = region_csv(region_analysis(fids, regions), label=name)
        parts.append(text if not parts else text.split("\n", 1)[1])
    (out / "regions.csv").write_text("".join(parts), encoding="utf-8")
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(selections)
    (out / "selected_features.csv").write_text(buf.getvalue(), encoding="utf-8")
    (out / "region_map.csv").write_text(regions.to_csv(), encoding="utf-8")
    _write_metadata(out, "regions", cfg)


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "classify": cmd_classify,
    "eval": cmd_eval,
    "regions": cmd_regions,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        COMMANDS[args.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"geofer {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (GeoferError, OSError, ValueError) as exc:
        print(f"geofer {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

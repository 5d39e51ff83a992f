"""Command-line interface.

Verbs: synth, features, train, evaluate, cv, ablate.  Global flags
--seed, --config, --threads, --out work on every verb; flags override
config-file values.  Exit codes: 0 success, 2 usage or config error,
3 data error, 4 internal assertion (e.g. patient leakage).
"""

import argparse
import sys
from collections import Counter
from pathlib import Path

from lesionfuse.config import (
    PRESETS,
    active_groups,
    resolve_config,
)
from lesionfuse.core import LABELS, read_manifest
from lesionfuse.errors import ConfigError, DataError, LeakageError
from lesionfuse.experiments import (
    ENSEMBLE_KEY,
    ablation_csv,
    evaluate_bundle,
    format_ablation_table,
    format_models_table,
    run_ablation,
    run_cv,
    train_bundle,
    write_report,
)
from lesionfuse.extract import extract_from_manifest
from lesionfuse.fusion import GROUP_DIMS
from lesionfuse.store import (
    load_bundle,
    read_feature_store,
    save_bundle,
    write_feature_store,
)
from lesionfuse.synth import SynthConfig, generate_cohort


def _parse_images(text):
    """'3..5' -> (3, 5); '4' -> (4, 4)."""
    parts = text.split("..")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ConfigError(
            f"--images expects N or MIN..MAX, got {text!r}"
        ) from None
    return lo, hi


def _parse_priors(text):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError("--priors expects 4 comma-separated numbers") \
            from None
    return values


def _parse_size(text):
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"--size expects HxW, got {text!r}") from None
    return h, w


def _groups_arg(text):
    return [g.strip() for g in text.split(",") if g.strip()]


def _need_out(args, what):
    if not args.out:
        raise ConfigError(f"--out is required: {what}")
    return Path(args.out)


def _config(args, **extra):
    overrides = {"seed": args.seed, "threads": args.threads}
    overrides.update(extra)
    return resolve_config(args.config, **overrides)


def cmd_synth(args) -> int:
    out = _need_out(args, "directory for the generated cohort")
    seed = args.seed
    if seed is None:
        seed = _config(args)["seed"] if args.config else 0
    signals = {}
    for name in ("deep", "spectral", "texture", "demographic"):
        flag = getattr(args, f"{name}_signal")
        if flag is not None:
            signals[f"{name}_signal"] = flag
        elif args.signals is not None:
            signals[f"{name}_signal"] = args.signals
    images = _parse_images(args.images)
    height, width = _parse_size(args.size)
    cfg = SynthConfig(
        patients=args.patients,
        images_min=images[0],
        images_max=images[1],
        priors=_parse_priors(args.priors),
        height=height,
        width=width,
        patient_effect=(
            args.patient_effect if args.patient_effect is not None
            else SynthConfig.patient_effect
        ),
        noise=args.noise if args.noise is not None else SynthConfig.noise,
        seed=seed,
        **signals,
    )
    manifest = generate_cohort(cfg, out)
    dataset = read_manifest(manifest)
    patient_class = {}
    for s in dataset.samples:
        patient_class[s.patient_id] = s.label
    counts = Counter(patient_class.values())
    print(f"manifest: {manifest}")
    print(
        "patients per class: "
        + "  ".join(f"{LABELS[c]} {counts.get(c, 0)}" for c in range(4))
    )
    print(f"samples: {len(dataset.samples)}")
    return 0


def cmd_features(args) -> int:
    out = _need_out(args, "path for the feature store")
    cfg = _config(args, groups=_groups_arg(args.groups) if args.groups else None)
    groups = active_groups(cfg)
    store = extract_from_manifest(
        args.manifest, groups=groups, threads=cfg["threads"]
    )
    write_feature_store(out, store)
    dims = "  ".join(f"{g} {GROUP_DIMS[g]}" for g in store.groups)
    print(f"store: {out}")
    print(f"modalities: {dims}")
    print(f"samples: {len(store)}  total dims: "
          f"{sum(GROUP_DIMS[g] for g in store.groups)}")
    return 0


def cmd_train(args) -> int:
    out = _need_out(args, "path for the model bundle")
    cfg = _config(args, preset=args.preset)
    store = read_feature_store(args.store)
    model, extra = train_bundle(store, cfg)
    save_bundle(out, model, extra)
    print(f"bundle: {out}")
    print(f"groups: {','.join(extra['groups'])}  samples: {len(store)}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    store = read_feature_store(args.store)
    model, _ = load_bundle(args.model)
    report = evaluate_bundle(model, store, cfg)
    print(format_models_table(report["models"]))
    if args.out:
        write_report(args.out, report)
        print(f"report: {args.out}")
    return 0


def cmd_cv(args) -> int:
    cfg = _config(args)
    store = read_feature_store(args.store)
    report = run_cv(store, cfg)
    for entry in report["folds"]:
        print(f"fold {entry['fold']} ({entry['n_samples']} samples)")
        print(format_models_table(entry["models"]))
    print(f"holdout ({report['holdout']['n_samples']} samples)")
    print(format_models_table(report["holdout"]["models"]))
    if args.out:
        write_report(args.out, report)
        print(f"report: {args.out}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _config(args, preset=args.preset)
    store = read_feature_store(args.store)
    presets = [cfg["preset"]] if cfg["preset"] else list(PRESETS)
    report = run_ablation(store, cfg, presets)
    print(format_ablation_table(report))
    if args.out:
        out = Path(args.out)
        write_report(out, report)
        out.with_suffix(".csv").write_text(ablation_csv(report))
        print(f"report: {out}")
        print(f"table: {out.with_suffix('.csv')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="root random seed (overrides config)")
    common.add_argument("--config", default=None,
                        help="JSON config file")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for feature extraction")
    common.add_argument("--out", default=None,
                        help="output path (meaning depends on the verb)")

    parser = argparse.ArgumentParser(
        prog="lesionfuse",
        description="Multimodal oral-lesion classification pipeline.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic cohort")
    p.add_argument("--patients", type=int, default=SynthConfig.patients)
    p.add_argument("--images", default="3..5",
                   help="images per patient: N or MIN..MAX")
    p.add_argument("--priors", default="0.25,0.25,0.25,0.25")
    p.add_argument("--size", default="32x32", help="cube size HxW")
    p.add_argument("--signals", type=float, default=None,
                   help="set all four signal strengths at once")
    for name in ("deep", "spectral", "texture", "demographic"):
        p.add_argument(f"--{name}-signal", type=float, default=None)
    p.add_argument("--patient-effect", type=float, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", parents=[common],
                       help="extract modality features into a store")
    p.add_argument("--manifest", required=True)
    p.add_argument("--groups", default=None,
                   help="comma-separated modality groups")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common],
                       help="train the full ensemble on a store")
    p.add_argument("--store", required=True)
    p.add_argument("--preset", default=None, choices=sorted(PRESETS))
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common],
                       help="score a bundle against a held-out store")
    p.add_argument("--store", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cv", parents=[common],
                       help="holdout plus k-fold development CV")
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("ablate", parents=[common],
                       help="run feature-group ablation presets")
    p.add_argument("--store", required=True)
    p.add_argument("--preset", default=None,
                   help="run a single preset instead of all")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (LeakageError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

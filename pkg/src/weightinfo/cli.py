"""Command-line interface.

Subcommands cover the distance-distribution simulation, MDS embedding
of snapshot files, the four ensemble experiments, and pairwise distance
statistics. Every subcommand accepts --config (a JSON file of
ExperimentConfig overrides) and --out-dir; explicit flags beat the
config file, which beats built-in defaults.

Exit codes: 0 on success, 2 on precondition failure, 1 on any other
error. All outputs are deterministic: rerunning a subcommand with
identical flags produces byte-identical files.
"""

import argparse
import json
import sys
from pathlib import Path

from .core import (
    RunManifest,
    Stage,
    WeightEnsemble,
    load_snapshot,
    pairwise_distances,
)
from .errors import PreconditionFailed, WeightInfoError
from .harness import (
    ExperimentConfig,
    _write_csv,
    _write_json,
    check_nearest_pairing,
    ensemble_distance_stats,
    run_init_ensemble,
    run_label_corruption,
    run_label_fraction,
    run_two_scratch,
)
from .infometrics import fit_normal_mass
from .mds import mds_embed, write_embedding_csv
from .qmcm import simulate_distance_distribution

# CLI dest name -> ExperimentConfig field
_TRAIN_FLAGS = {
    "ensemble_size": "ensemble_size",
    "base_seed": "base_seed",
    "class_count": "class_count",
    "per_class": "per_class",
    "input_dim": "input_dim",
    "spread": "spread",
    "activation": "activation",
    "epochs": "epochs",
    "learning_rate": "learning_rate",
    "batch_size": "batch_size",
    "qmcm_t": "qmcm_t",
    "qmcm_n": "qmcm_n",
    "qmcm_max_resamples": "qmcm_max_resamples",
    "pairing_threshold": "pairing_threshold",
    "embed_dim": "embed_dim",
    "workers": "workers",
    "save_losses": "save_losses",
    "save_snapshots": "save_snapshots",
}


def _add_common(sub):
    sub.add_argument(
        "--config", metavar="JSON",
        help="JSON file whose keys override config defaults",
    )
    sub.add_argument("--out-dir", dest="out_dir", help="output directory")


def _add_train_flags(sub):
    sub.add_argument("--ensemble-size", dest="ensemble_size", type=int)
    sub.add_argument("--base-seed", dest="base_seed", type=int)
    sub.add_argument("--class-count", dest="class_count", type=int)
    sub.add_argument("--per-class", dest="per_class", type=int)
    sub.add_argument("--input-dim", dest="input_dim", type=int)
    sub.add_argument("--spread", type=float)
    sub.add_argument(
        "--hidden", metavar="SIZES",
        help="comma-separated hidden layer sizes, e.g. 16 or 32,16",
    )
    sub.add_argument("--activation", choices=("relu", "tanh"))
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--learning-rate", dest="learning_rate", type=float)
    sub.add_argument("--batch-size", dest="batch_size", type=int)
    sub.add_argument("--qmcm-t", dest="qmcm_t", type=float)
    sub.add_argument("--qmcm-n", dest="qmcm_n", type=int)
    sub.add_argument(
        "--qmcm-max-resamples", dest="qmcm_max_resamples", type=int,
    )
    sub.add_argument(
        "--pairing-threshold", dest="pairing_threshold", type=float,
    )
    sub.add_argument("--embed-dim", dest="embed_dim", type=int)
    sub.add_argument("--workers", type=int)
    sub.add_argument(
        "--save-losses", dest="save_losses",
        action="store_const", const=True, default=None,
    )
    sub.add_argument(
        "--save-snapshots", dest="save_snapshots",
        action="store_const", const=True, default=None,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weightinfo",
        description="Weight-space information estimation experiments.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser(
        "sim-dist",
        help="simulate nearest-distance distributions and their "
             "normal-fit KL divergence",
    )
    p.add_argument("--size", type=int, help="population size")
    p.add_argument("--dim", type=int, help="population dimension")
    p.add_argument(
        "--fraction", action="append", type=float,
        help="subset fraction in (0,1); repeat for a sweep",
    )
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int, help="histogram bin count")
    _add_common(p)

    p = subs.add_parser(
        "mds", help="embed snapshot files with classical MDS",
    )
    p.add_argument(
        "--in", dest="in_paths", nargs="+", required=True,
        metavar="SNAPSHOT", help="snapshot files to embed",
    )
    p.add_argument("--m", type=int, help="target dimension")
    p.add_argument("--out", help="output CSV path")
    p.add_argument(
        "--stage", choices=("Initial", "Final"), default="Final",
        help="stage label written to every row",
    )
    _add_common(p)

    for name, help_text in (
        ("init-ensemble",
         "train an ensemble from distinct seeds and embed both stages"),
        ("two-scratch",
         "train two half-ensembles from two fixed initializations"),
        ("label-fraction",
         "sweep retained label fraction at a fixed step budget"),
        ("label-corruption",
         "sweep label corruption rate at a fixed step budget"),
    ):
        p = subs.add_parser(name, help=help_text)
        _add_train_flags(p)
        if name == "label-fraction":
            p.add_argument(
                "--fraction", action="append", type=float,
                help="label fraction in (0,1]; repeat for a sweep",
            )
        if name == "label-corruption":
            p.add_argument(
                "--rate", action="append", type=float,
                help="corruption rate in [0,1]; repeat for a sweep",
            )
        _add_common(p)

    p = subs.add_parser(
        "stats", help="init-to-final distance statistics of an ensemble",
    )
    p.add_argument(
        "--manifests", nargs="+", metavar="JSON",
        help="run manifest files; snapshot paths resolve relative to "
             "each manifest's directory",
    )
    p.add_argument(
        "--initials", nargs="+", metavar="SNAPSHOT",
        help="initial-stage snapshot files (with --finals)",
    )
    p.add_argument(
        "--finals", nargs="+", metavar="SNAPSHOT",
        help="final-stage snapshot files, index-matched to --initials",
    )
    p.add_argument("--out", help="output CSV path")
    _add_common(p)

    return parser


def _build_config(args, experiment=None):
    """defaults < --config JSON < explicit flags."""
    overrides = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            overrides.update(json.load(fh))
    values = vars(args)
    for dest, field in _TRAIN_FLAGS.items():
        if values.get(dest) is not None:
            overrides[field] = values[dest]
    if values.get("hidden") is not None:
        overrides["hidden_sizes"] = tuple(
            int(part) for part in values["hidden"].split(",") if part
        )
    if args.command == "label-fraction" and values.get("fraction"):
        overrides["label_fractions"] = tuple(values["fraction"])
    if args.command == "label-corruption" and values.get("rate"):
        overrides["corruption_rates"] = tuple(values["rate"])
    if args.command == "sim-dist":
        for dest, field in (
            ("size", "sim_size"), ("dim", "sim_dim"), ("seed", "sim_seed"),
            ("bins", "sim_bins"),
        ):
            if values.get(dest) is not None:
                overrides[field] = values[dest]
        if values.get("fraction"):
            overrides["sim_fractions"] = tuple(values["fraction"])
    if values.get("out_dir") is not None:
        overrides["out_dir"] = values["out_dir"]
    if experiment is not None:
        overrides["experiment"] = experiment
    return ExperimentConfig.from_dict(overrides)


def _require_out_dir(cfg, parser):
    if not cfg.out_dir:
        parser.error("--out-dir is required (or out_dir in --config)")
    return Path(cfg.out_dir)


def cmd_sim_dist(args, parser):
    cfg = _build_config(args, experiment="sim-dist")
    out = _require_out_dir(cfg, parser)
    rows = []
    for fraction in cfg.sim_fractions:
        report, hist, kl = simulate_distance_distribution(
            cfg.sim_size, cfg.sim_dim, fraction, cfg.sim_seed,
            bins=cfg.sim_bins,
        )
        q = fit_normal_mass(hist)
        p_vec = hist.probabilities()
        _write_csv(
            out / f"hist_{fraction:g}.csv",
            ("bin_left", "bin_right", "count", "p", "q"),
            [
                (hist.edges[i], hist.edges[i + 1], int(hist.counts[i]),
                 p_vec[i], q[i])
                for i in range(hist.bins)
            ],
        )
        rows.append({
            "fraction": fraction,
            "kl": kl,
            "mean": report.mean,
            "std": report.std,
            "cv": report.cv,
        })
        print(f"fraction={fraction:g} kl={kl:.6f} mean={report.mean:.6f}")
    if len(rows) > 1:
        _write_csv(
            out / "sweep.csv",
            ("fraction", "kl"),
            [(r["fraction"], r["kl"]) for r in rows],
        )
    _write_json(out / "summary.json", {
        "experiment": "sim-dist",
        "config": cfg.to_dict(),
        "rows": rows,
    })
    return 0


def cmd_mds(args, parser):
    cfg = _build_config(args)
    if args.out:
        out_path = Path(args.out)
    elif cfg.out_dir:
        out_path = Path(cfg.out_dir) / "embedding.csv"
    else:
        parser.error("--out or --out-dir is required")
    vectors = tuple(load_snapshot(path) for path in args.in_paths)
    stage = Stage(args.stage)
    ensemble = WeightEnsemble(
        members=vectors, stage=stage, seeds=tuple(range(len(vectors))),
    )
    m = args.m if args.m is not None else cfg.embed_dim
    embedding = mds_embed(pairwise_distances(ensemble), m)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_embedding_csv(embedding, [stage] * len(vectors), out_path)
    print(f"embedded {len(vectors)} snapshots into dimension {m}: "
          f"{out_path}")
    return 0


def _experiment_command(runner):
    def run(args, parser):
        name = args.command
        cfg = _build_config(args, experiment=name)
        _require_out_dir(cfg, parser)
        result = runner(cfg)
        if name == "init-ensemble":
            print(f"pairing_fraction={result.pairing:.4f}")
            for stage_name, stats in result.radius_stats.items():
                print(
                    f"{stage_name}: embedded radius cv="
                    f"{stats['embedded']['cv']:.4f} "
                    f"weight-space radius cv="
                    f"{stats['weight_space']['cv']:.4f}"
                )
        elif name == "two-scratch":
            print(f"own_cluster_fraction={result.own_fraction:.4f}")
        else:
            label = "fraction" if name == "label-fraction" else "rate"
            for arm in result:
                print(
                    f"{label}={arm.control:g} d_hat={arm.estimate.d_hat:.6f} "
                    f"achieved_cv={arm.estimate.achieved_cv:.4f} "
                    f"pairing={arm.pairing:.4f}"
                )
        return 0

    return run


def cmd_stats(args, parser):
    cfg = _build_config(args)
    if args.manifests:
        if args.initials or args.finals:
            parser.error("--manifests excludes --initials/--finals")
        initials, finals, seeds = [], [], []
        for path in args.manifests:
            path = Path(path)
            manifest = RunManifest.from_json(
                path.read_text(encoding="utf-8")
            )
            base = path.parent
            initials.append(load_snapshot(base / manifest.initial_snapshot))
            finals.append(load_snapshot(base / manifest.final_snapshot))
            seeds.append(manifest.seed)
    elif args.initials and args.finals:
        initials = [load_snapshot(p) for p in args.initials]
        finals = [load_snapshot(p) for p in args.finals]
        seeds = list(range(len(initials)))
    else:
        parser.error("provide --manifests, or --initials and --finals")
    ini = WeightEnsemble(
        members=tuple(initials), stage=Stage.INITIAL, seeds=tuple(seeds),
    )
    fin = WeightEnsemble(
        members=tuple(finals), stage=Stage.FINAL, seeds=tuple(seeds),
    )
    stats = ensemble_distance_stats(ini, fin)
    pairing = check_nearest_pairing(ini, fin)
    print(
        f"mean={stats.mean:.6f} std={stats.std:.6f} "
        f"cv_percent={stats.cv_percent:.4f} pairing={pairing:.4f}"
    )
    if args.out or cfg.out_dir:
        out_path = (
            Path(args.out) if args.out else Path(cfg.out_dir) / "stats.csv"
        )
        _write_csv(
            out_path,
            ("mean", "std", "cv_percent"),
            [(stats.mean, stats.std, stats.cv_percent)],
        )
        _write_json(out_path.parent / "stats_summary.json", {
            "mean": stats.mean,
            "std": stats.std,
            "cv_percent": stats.cv_percent,
            "pairing_fraction": pairing,
            "members": len(initials),
        })
    return 0


_HANDLERS = {
    "sim-dist": cmd_sim_dist,
    "mds": cmd_mds,
    "init-ensemble": _experiment_command(run_init_ensemble),
    "two-scratch": _experiment_command(run_two_scratch),
    "label-fraction": _experiment_command(run_label_fraction),
    "label-corruption": _experiment_command(run_label_corruption),
    "stats": cmd_stats,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args, parser)
    except PreconditionFailed as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 2
    except WeightInfoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

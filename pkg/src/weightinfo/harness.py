"""Experiment drivers: ensembles, label sweeps, statistics, file output.

Each driver trains many independent networks, applies the
nearest-distance estimator, and emits CSV/JSON artifacts. Determinism
contract: identical configuration (including base_seed) produces
bit-identical output tables for any worker count. Per-member seed is
base_seed + member index.
"""

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import qmcm as qmcm_mod
from .core import (
    RunManifest,
    Stage,
    WeightEnsemble,
    WeightVector,
    euclidean_distance,
    pairwise_distances,
    save_snapshot,
)
from .errors import (
    DimMismatch,
    DivergenceError,
    DomainError,
    PairingError,
    PreconditionFailed,
    WeightInfoError,
)
from .mds import mds_embed, write_embedding_csv
from .toytrain import (
    MlpSpec,
    corrupt_labels,
    make_blobs,
    restrict_labels,
    steps_per_epoch,
    train,
)

EXPERIMENTS = (
    "init-ensemble",
    "two-scratch",
    "label-fraction",
    "label-corruption",
    "sim-dist",
)

DEFAULT_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_RATES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
DEFAULT_SIM_FRACTIONS = (0.05, 0.1, 0.2, 0.4, 0.6, 0.9)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a driver needs to reproduce an experiment end to end.

    The trainer defaults are calibrated so that the full-label arm
    reaches high training accuracy within the fixed step budget while
    information-poor arms stay distinguishable; ensemble_size defaults
    to 200 with acceptance tolerances set for that size.
    """

    experiment: str = "init-ensemble"
    ensemble_size: int = 200
    base_seed: int = 0
    class_count: int = 10
    per_class: int = 24
    input_dim: int = 20
    spread: float = 0.3
    hidden_sizes: tuple = (16,)
    activation: str = "relu"
    epochs: int = 36
    learning_rate: float = 0.2
    batch_size: int = 24
    label_fractions: tuple = DEFAULT_FRACTIONS
    corruption_rates: tuple = DEFAULT_RATES
    qmcm_t: float = 0.3
    qmcm_n: int = 200
    qmcm_max_resamples: int = None
    pairing_threshold: float = 0.95
    embed_dim: int = 3
    workers: int = 1
    save_losses: bool = False
    save_snapshots: bool = False
    sim_size: int = 10000
    sim_dim: int = 100
    sim_fractions: tuple = DEFAULT_SIM_FRACTIONS
    sim_bins: int = 64
    sim_seed: int = 0
    out_dir: str = None

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        object.__setattr__(self, "label_fractions", tuple(self.label_fractions))
        object.__setattr__(
            self, "corruption_rates", tuple(self.corruption_rates)
        )
        object.__setattr__(self, "sim_fractions", tuple(self.sim_fractions))
        if self.experiment not in EXPERIMENTS:
            raise DomainError(
                f"experiment must be one of {EXPERIMENTS}, "
                f"got {self.experiment!r}"
            )
        if self.ensemble_size < 2:
            raise DomainError("ensemble_size must be at least 2")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")
        if not 0.0 <= self.pairing_threshold <= 1.0:
            raise DomainError("pairing_threshold must lie in [0, 1]")

    @property
    def layer_sizes(self):
        return (self.input_dim, *self.hidden_sizes, self.class_count)

    def to_dict(self):
        data = asdict(self)
        for key in ("hidden_sizes", "label_fractions", "corruption_rates",
                    "sim_fractions"):
            data[key] = list(data[key])
        return data

    def override(self, **kwargs):
        """Copy with the given fields replaced; unknown names rejected."""
        names = set(self.__dataclass_fields__)
        unknown = set(kwargs) - names
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **kwargs)

    @classmethod
    def from_dict(cls, data):
        base = cls()
        return base.override(**dict(data))


@dataclass(frozen=True)
class MemberRun:
    """One trained ensemble member."""

    index: int
    seed: int
    initial: WeightVector
    final: WeightVector
    losses: tuple


@dataclass(frozen=True)
class DistanceStats:
    """Per-index init-to-final distance statistics."""

    mean: float
    std: float
    cv_percent: float


@dataclass(frozen=True)
class ArmResult:
    """One sweep arm: its control value and the resulting estimate."""

    control: float
    estimate: qmcm_mod.QmcmEstimate
    pairing: float
    epochs: int
    skipped: tuple


@dataclass(frozen=True)
class InitEnsembleResult:
    embedding_initial: object
    embedding_final: object
    radius_stats: dict
    pairing: float
    distance_stats: DistanceStats
    members: tuple


@dataclass(frozen=True)
class TwoScratchResult:
    embedding: object
    own_fraction: float
    assignments: tuple
    init_a: WeightVector
    init_b: WeightVector
    finals: WeightEnsemble


def _train_task(task):
    """Worker-pool entry: train one member, return plain arrays."""
    (ds, layer_sizes, activation, spec_seed, epochs, learning_rate,
     batch_size, order_seed, index) = task
    spec = MlpSpec(
        layer_sizes=layer_sizes, activation=activation, seed=spec_seed
    )
    try:
        initial, final, losses = train(
            spec, ds, epochs, learning_rate, batch_size, order_seed
        )
    except DivergenceError as exc:
        return (index, None, None, None, exc.step)
    return (index, initial.values, final.values, tuple(losses), None)


def _run_members(ds, cfg, epochs_arm, indices, spec_seed_of=None):
    """Train the given member indices, in parallel when configured.

    Returns (runs sorted by index, skipped (index, step) pairs).
    Members whose training diverges are skipped and logged; more than
    10 percent skipped fails the experiment.
    """
    layer_sizes = (ds.feature_dim, *cfg.hidden_sizes, ds.class_count)
    if spec_seed_of is None:
        spec_seed_of = lambda i: cfg.base_seed + i
    tasks = [
        (
            ds,
            layer_sizes,
            cfg.activation,
            spec_seed_of(i),
            epochs_arm,
            cfg.learning_rate,
            cfg.batch_size,
            cfg.base_seed + i,
            i,
        )
        for i in indices
    ]
    if cfg.workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (cfg.workers * 4))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            raw = list(pool.map(_train_task, tasks, chunksize=chunk))
    else:
        raw = [_train_task(t) for t in tasks]
    raw.sort(key=lambda r: r[0])
    runs = []
    skipped = []
    for index, init_vals, final_vals, losses, step in raw:
        if step is not None:
            skipped.append((index, step))
            print(
                f"warning: member {index} diverged at step {step}; skipped",
                file=sys.stderr,
            )
            continue
        runs.append(
            MemberRun(
                index=index,
                seed=cfg.base_seed + index,
                initial=WeightVector(init_vals),
                final=WeightVector(final_vals),
                losses=losses,
            )
        )
    if skipped and len(skipped) > 0.1 * len(tasks):
        raise WeightInfoError(
            f"{len(skipped)} of {len(tasks)} members diverged"
        )
    return runs, tuple(skipped)


def _ensembles_from_runs(runs):
    initials = WeightEnsemble(
        members=tuple(r.initial for r in runs),
        stage=Stage.INITIAL,
        seeds=tuple(r.seed for r in runs),
    )
    finals = WeightEnsemble(
        members=tuple(r.final for r in runs),
        stage=Stage.FINAL,
        seeds=tuple(r.seed for r in runs),
    )
    return initials, finals


def check_nearest_pairing(initials, finals):
    """Fraction of indices whose own final is the nearest final.

    For each initial weight vector, its paired final must be at least
    as close as every other final (ties count for the own index). This
    is the estimator's applicability precondition; sweep drivers refuse
    to run the estimator when the fraction falls below the configured
    threshold.
    """
    if len(initials) != len(finals):
        raise PairingError(
            f"{len(initials)} initials vs {len(finals)} finals"
        )
    if len(initials) == 0:
        raise PairingError("cannot pair empty ensembles")
    if initials.dim != finals.dim:
        raise DimMismatch(
            f"dims differ: {initials.dim} vs {finals.dim}"
        )
    from . import _kernels

    d2 = _kernels.cross_sq(initials.as_matrix(), finals.as_matrix())
    own = np.diagonal(d2).copy()
    np.fill_diagonal(d2, np.inf)
    others = d2.min(axis=1)
    return float(np.mean(own <= others))


def ensemble_distance_stats(initials, finals):
    """Mean, std, and percent cv of per-index init-to-final distances."""
    if len(initials) != len(finals):
        raise PairingError(
            f"{len(initials)} initials vs {len(finals)} finals"
        )
    if len(initials) == 0:
        raise PairingError("cannot compute stats over empty ensembles")
    distances = np.array([
        euclidean_distance(a, b)
        for a, b in zip(initials.members, finals.members)
    ])
    mean = float(distances.mean())
    std = float(distances.std(ddof=1)) if distances.size > 1 else 0.0
    cv_percent = 0.0 if std == 0.0 else 100.0 * std / mean
    return DistanceStats(mean=mean, std=std, cv_percent=cv_percent)


def _radius_stats(points):
    """Mean/std/cv of each row's distance from the centroid."""
    pts = np.asarray(points, dtype=np.float64)
    radii = np.linalg.norm(pts - pts.mean(axis=0), axis=1)
    mean = float(radii.mean())
    std = float(radii.std(ddof=1)) if radii.size > 1 else 0.0
    cv = 0.0 if std == 0.0 else std / mean
    return {"mean": mean, "std": std, "cv": cv}


def _pair_stream(runs, train_extra, start_index):
    """Yield cached member pairs, then lazily trained extras."""
    for r in runs:
        yield r.initial, r.final
    i = start_index
    while True:
        pair = train_extra(i)
        i += 1
        if pair is None:
            continue
        yield pair


def _make_train_extra(ds, cfg, epochs_arm, spec_seed_of=None):
    if spec_seed_of is None:
        spec_seed_of = lambda i: cfg.base_seed + i

    def train_extra(i):
        spec = MlpSpec(
            layer_sizes=(ds.feature_dim, *cfg.hidden_sizes, ds.class_count),
            activation=cfg.activation,
            seed=spec_seed_of(i),
        )
        try:
            initial, final, _ = train(
                spec, ds, epochs_arm, cfg.learning_rate, cfg.batch_size,
                cfg.base_seed + i,
            )
        except DivergenceError as exc:
            print(
                f"warning: resample member {i} diverged at step {exc.step}; "
                "skipped",
                file=sys.stderr,
            )
            return None
        return initial, final

    return train_extra


def _fixed_step_budget(cfg, n_full):
    return cfg.epochs * steps_per_epoch(n_full, cfg.batch_size)


def _arm_epochs(budget, n_arm, batch_size):
    spe = steps_per_epoch(n_arm, batch_size)
    if budget % spe != 0:
        raise PreconditionFailed(
            f"step budget {budget} is not a whole number of epochs for "
            f"{n_arm} samples at batch size {batch_size} "
            f"({spe} steps per epoch); adjust epochs or batch_size"
        )
    return budget // spe


# ---------------------------------------------------------------------------
# file emission


def _fmt(value):
    # shortest decimal that round-trips to the same double
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_losses(out_dir, runs, subdir="losses"):
    base = Path(out_dir) / subdir
    for r in runs:
        rows = [(step, loss) for step, loss in enumerate(r.losses)]
        _write_csv(base / f"member_{r.index:05d}.csv", ("step", "loss"), rows)


def _dataset_recipe(cfg):
    return {
        "class_count": cfg.class_count,
        "samples_per_class": cfg.per_class,
        "input_dim": cfg.input_dim,
        "spread": cfg.spread,
    }


def _write_member_artifacts(out_dir, cfg, runs, label_fraction=1.0,
                            corruption_rate=0.0, epochs=None):
    """Snapshots plus one RunManifest per member, paths relative to the
    manifest's directory."""
    out = Path(out_dir)
    snap_dir = out / "snapshots"
    man_dir = out / "manifests"
    snap_dir.mkdir(parents=True, exist_ok=True)
    man_dir.mkdir(parents=True, exist_ok=True)
    for r in runs:
        init_name = f"member_{r.index:05d}_initial.wodo"
        final_name = f"member_{r.index:05d}_final.wodo"
        save_snapshot(r.initial, snap_dir / init_name)
        save_snapshot(r.final, snap_dir / final_name)
        manifest = RunManifest(
            run_id=f"member_{r.index:05d}",
            seed=r.seed,
            label_fraction=label_fraction,
            corruption_rate=corruption_rate,
            epochs=cfg.epochs if epochs is None else epochs,
            learning_rate=cfg.learning_rate,
            batch_size=cfg.batch_size,
            dataset_recipe=_dataset_recipe(cfg),
            initial_snapshot=f"../snapshots/{init_name}",
            final_snapshot=f"../snapshots/{final_name}",
        )
        (man_dir / f"member_{r.index:05d}.json").write_text(
            manifest.to_json(), encoding="utf-8"
        )


# ---------------------------------------------------------------------------
# experiment drivers


def run_init_ensemble(cfg, out_dir=None):
    """Train an ensemble from distinct seeds and embed both stages.

    Each stage (initial and final weights) is embedded separately with
    classical MDS, and the radius of every embedded point from its
    centroid is summarized. Weight-space radii are reported alongside:
    a low-dimensional embedding of a high-dimensional isotropic cloud
    concentrates its radius spread far less than the original space
    does, so the evenness property lives in weight space while the
    embedding serves the visual analysis.
    """
    out_dir = out_dir or cfg.out_dir
    ds = make_blobs(
        cfg.class_count, cfg.per_class, cfg.input_dim, cfg.spread,
        cfg.base_seed,
    )
    runs, skipped = _run_members(
        ds, cfg, cfg.epochs, range(cfg.ensemble_size)
    )
    initials, finals = _ensembles_from_runs(runs)
    emb_initial = mds_embed(pairwise_distances(initials), cfg.embed_dim)
    emb_final = mds_embed(pairwise_distances(finals), cfg.embed_dim)
    radius_stats = {
        "initial": {
            "embedded": _radius_stats(emb_initial.points),
            "weight_space": _radius_stats(initials.as_matrix()),
        },
        "final": {
            "embedded": _radius_stats(emb_final.points),
            "weight_space": _radius_stats(finals.as_matrix()),
        },
    }
    pairing = check_nearest_pairing(initials, finals)
    stats = ensemble_distance_stats(initials, finals)
    result = InitEnsembleResult(
        embedding_initial=emb_initial,
        embedding_final=emb_final,
        radius_stats=radius_stats,
        pairing=pairing,
        distance_stats=stats,
        members=tuple(runs),
    )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_embedding_csv(
            emb_initial, [Stage.INITIAL] * len(runs),
            out / "embedding_initial.csv",
        )
        write_embedding_csv(
            emb_final, [Stage.FINAL] * len(runs),
            out / "embedding_final.csv",
        )
        _write_json(out / "radius_stats.json", radius_stats)
        _write_json(out / "summary.json", {
            "experiment": "init-ensemble",
            "config": cfg.to_dict(),
            "members_trained": len(runs),
            "skipped": [list(s) for s in skipped],
            "pairing_fraction": pairing,
            "distance_mean": stats.mean,
            "distance_std": stats.std,
            "distance_cv_percent": stats.cv_percent,
        })
        _write_member_artifacts(out, cfg, runs)
        if cfg.save_losses:
            _write_losses(out, runs)
    return result


def run_two_scratch(cfg, out_dir=None):
    """Train half the ensemble from one fixed init, half from another.

    Training randomness comes only from the per-member data order; the
    two init seeds are base_seed and base_seed + 1. Finals plus both
    inits are embedded jointly, and each final is assigned to its
    nearest init in the original weight space.
    """
    out_dir = out_dir or cfg.out_dir
    if cfg.ensemble_size % 2 != 0:
        raise PreconditionFailed(
            "two-scratch needs an even ensemble_size, "
            f"got {cfg.ensemble_size}"
        )
    half = cfg.ensemble_size // 2
    spec_seed_of = lambda i: cfg.base_seed if i < half else cfg.base_seed + 1
    ds = make_blobs(
        cfg.class_count, cfg.per_class, cfg.input_dim, cfg.spread,
        cfg.base_seed,
    )
    runs, skipped = _run_members(
        ds, cfg, cfg.epochs, range(cfg.ensemble_size),
        spec_seed_of=spec_seed_of,
    )
    arms = {r.index: (0 if r.index < half else 1) for r in runs}
    by_arm = {0: [], 1: []}
    for r in runs:
        by_arm[arms[r.index]].append(r)
    if not by_arm[0] or not by_arm[1]:
        raise WeightInfoError("an entire init arm diverged")
    init_a = by_arm[0][0].initial
    init_b = by_arm[1][0].initial
    finals = WeightEnsemble(
        members=tuple(r.final for r in runs),
        stage=Stage.FINAL,
        seeds=tuple(r.seed for r in runs),
    )
    joint = WeightEnsemble(
        members=tuple(r.final for r in runs) + (init_a, init_b),
        stage=Stage.FINAL,
        seeds=tuple(r.seed for r in runs)
        + (cfg.base_seed, cfg.base_seed + 1),
    )
    embedding = mds_embed(pairwise_distances(joint), cfg.embed_dim)
    assignments = []
    own_hits = 0
    for r in runs:
        d_a = euclidean_distance(r.final, init_a)
        d_b = euclidean_distance(r.final, init_b)
        assigned = 0 if d_a <= d_b else 1
        own = assigned == arms[r.index]
        own_hits += own
        assignments.append((r.index, arms[r.index], assigned, int(own)))
    own_fraction = own_hits / len(runs)
    result = TwoScratchResult(
        embedding=embedding,
        own_fraction=own_fraction,
        assignments=tuple(assignments),
        init_a=init_a,
        init_b=init_b,
        finals=finals,
    )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stages = [Stage.FINAL] * len(runs) + [Stage.INITIAL] * 2
        write_embedding_csv(embedding, stages, out / "embedding.csv")
        _write_csv(
            out / "assignments.csv",
            ("index", "arm", "assigned", "own"),
            assignments,
        )
        _write_json(out / "summary.json", {
            "experiment": "two-scratch",
            "config": cfg.to_dict(),
            "members_trained": len(runs),
            "skipped": [list(s) for s in skipped],
            "own_cluster_fraction": own_fraction,
        })
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        save_snapshot(init_a, snap_dir / "init_a.wodo")
        save_snapshot(init_b, snap_dir / "init_b.wodo")
        for r in runs:
            save_snapshot(
                r.final, snap_dir / f"member_{r.index:05d}_final.wodo"
            )
        if cfg.save_losses:
            _write_losses(out, runs)
    return result


def _run_sweep(cfg, controls, dataset_of, control_name, out_dir):
    """Common sweep driver for label-fraction and label-corruption."""
    out_dir = out_dir or cfg.out_dir
    ds_full = make_blobs(
        cfg.class_count, cfg.per_class, cfg.input_dim, cfg.spread,
        cfg.base_seed,
    )
    budget = _fixed_step_budget(cfg, len(ds_full))
    arm_results = []
    for control in sorted(controls):
        ds_arm = dataset_of(ds_full, control)
        epochs_arm = _arm_epochs(budget, len(ds_arm), cfg.batch_size)
        runs, skipped = _run_members(
            ds_arm, cfg, epochs_arm, range(cfg.ensemble_size)
        )
        initials, finals = _ensembles_from_runs(runs)
        pairing = check_nearest_pairing(initials, finals)
        if pairing < cfg.pairing_threshold:
            raise PreconditionFailed(
                f"nearest pairing {pairing:.4f} below threshold "
                f"{cfg.pairing_threshold} at {control_name}={control:g}; "
                "the estimator's applicability precondition failed"
            )
        stream = _pair_stream(
            runs,
            _make_train_extra(ds_arm, cfg, epochs_arm),
            cfg.ensemble_size,
        )
        estimate = qmcm_mod.qmcm_estimate(
            stream, t=cfg.qmcm_t, n=cfg.qmcm_n,
            max_resamples=cfg.qmcm_max_resamples,
        )
        arm_results.append(ArmResult(
            control=float(control),
            estimate=estimate,
            pairing=pairing,
            epochs=epochs_arm,
            skipped=skipped,
        ))
        if out_dir and cfg.save_losses:
            _write_losses(
                Path(out_dir), runs, subdir=f"losses/{control_name}_{control:g}"
            )
        if out_dir and cfg.save_snapshots:
            _write_member_artifacts(
                Path(out_dir) / f"{control_name}_{control:g}", cfg, runs,
                label_fraction=(control if control_name == "fraction" else 1.0),
                corruption_rate=(control if control_name == "rate" else 0.0),
                epochs=epochs_arm,
            )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(
            out / "results.csv",
            (control_name, "d_hat", "achieved_cv"),
            [(a.control, a.estimate.d_hat, a.estimate.achieved_cv)
             for a in arm_results],
        )
        _write_json(out / "experiment.json", {
            "experiment": cfg.experiment,
            "config": cfg.to_dict(),
            "arms": [
                {
                    control_name: a.control,
                    "d_hat": a.estimate.d_hat,
                    "achieved_cv": a.estimate.achieved_cv,
                    "converged": a.estimate.converged,
                    "resample_count": a.estimate.resample_count,
                    "samples_used": a.estimate.samples_used,
                    "pairing_fraction": a.pairing,
                    "epochs": a.epochs,
                    "skipped": [list(s) for s in a.skipped],
                }
                for a in arm_results
            ],
        })
    return arm_results


def run_label_fraction(cfg, out_dir=None):
    """Sweep the retained-class fraction at a fixed step budget.

    Every arm trains for the same total number of SGD updates as the
    full dataset would, then the estimator summarizes the ensemble's
    init-to-final distances. The pairing precondition is checked before
    each estimate. Returns ArmResult rows sorted by fraction.
    """
    cfg = cfg.override(experiment="label-fraction")
    for fraction in cfg.label_fractions:
        if not 0.0 < fraction <= 1.0:
            raise DomainError(
                f"label fraction must lie in (0, 1], got {fraction}"
            )
    return _run_sweep(
        cfg,
        cfg.label_fractions,
        lambda ds, fraction: restrict_labels(ds, fraction),
        "fraction",
        out_dir,
    )


def run_label_corruption(cfg, out_dir=None):
    """Sweep the label corruption rate at a fixed step budget.

    The corrupted dataset is built once per arm (corruption seed =
    base_seed), so rate 0.0 reproduces the clean run bit-exactly.
    Returns ArmResult rows sorted by rate.
    """
    cfg = cfg.override(experiment="label-corruption")
    for rate in cfg.corruption_rates:
        if not 0.0 <= rate <= 1.0:
            raise DomainError(
                f"corruption rate must lie in [0, 1], got {rate}"
            )
    return _run_sweep(
        cfg,
        cfg.corruption_rates,
        lambda ds, rate: corrupt_labels(ds, rate, cfg.base_seed),
        "rate",
        out_dir,
    )

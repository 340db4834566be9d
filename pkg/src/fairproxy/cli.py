"""Command-line front end.

Subcommands wire the library into reproducible experiments:

  gen-synth     synthesize a biased dataset (embeddings, manifest, scores)
  proxy         cluster samples into pseudo groups; report partition quality
  train         fit the classifier with loss-balanced or uniform sampling
  eval          score a trained model: accuracy, fairness, group table
  simulate-ari  calibrate a label-corruption rate to a target agreement level
  sweep         run the ARI / cluster-count / update-period sweeps

Every run writes a run.json manifest into the output directory: the
command, the resolved parameters, the content digest of each input file,
and the relative paths of the outputs. Runs are deterministic: the same
flags and input bytes produce byte-identical outputs. To keep that true
the manifest stores input files by basename and digest, never by path,
and records no timestamps.

Exit codes: 0 success, 1 runtime or data error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import build_pseudo_groups, kmeans, single_cluster_grouping
from .data import (
    Dataset,
    EmbeddingMatrix,
    bind_dataset,
    load_embeddings,
    load_manifest,
    write_embeddings,
    write_manifest,
)
from .errors import ConfigError, DataError, FairproxyError
from .metrics import (
    adjusted_rand_index,
    attribute_target_correlation,
    fairness_summary,
    group_accuracies,
    representation_std,
)
from .rng import derive_seed, substream
from .similarity import ScoreMatrix, ensemble_scores, load_prompt_set, similarity_matrix
from .synthlab import (
    SynthConfig,
    calibrate_ari,
    corrupt_partition,
    default_joint,
    format_sweep_table,
    gen_synthetic,
    measure_corruption_ari,
    run_ari_sweep,
    run_cluster_sweep,
    run_theta_sweep,
    write_sweep_csv,
)
from .training import TrainConfig, load_model, predict, save_history, save_model, train

PROG = "fairproxy"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_run_manifest(out_dir: Path, command: str, params: dict, seed: int, inputs, outputs) -> None:
    """inputs: iterable of (role, path); outputs: relative paths inside out_dir."""
    payload = {
        "command": command,
        "parameters": params,
        "seed": seed,
        "inputs": {
            role: {"file": Path(p).name, "sha256": _sha256(Path(p))} for role, p in inputs
        },
        "outputs": sorted(str(p) for p in outputs),
    }
    with open(out_dir / "run.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(embeddings_path, manifest_path) -> Dataset:
    return bind_dataset(load_embeddings(embeddings_path), load_manifest(manifest_path))


def _comma_list(cast, flag: str):
    def parse(text: str):
        try:
            values = [cast(part.strip()) for part in text.split(",") if part.strip() != ""]
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag}: expected comma-separated values, got {text!r}")
        if not values:
            raise argparse.ArgumentTypeError(f"{flag}: empty list")
        return values

    return parse


# ---------------------------------------------------------------------------
# gen-synth


def _synth_config_from(args) -> SynthConfig:
    joint = default_joint(args.targets, args.groups, args.minority_cell)
    return SynthConfig(
        n=args.n,
        dim=args.dim,
        targets=args.targets,
        groups=args.groups,
        joint=joint,
        separation=args.separation,
        group_signal=args.group_signal,
        score_noise_sigma=args.score_noise_sigma,
        seed=args.seed,
    )


def cmd_gen_synth(args) -> int:
    out = _out_dir(args)
    cfg = _synth_config_from(args)
    ds, scores = gen_synthetic(cfg)
    write_embeddings(ds.embeddings, out / "embeddings.femb")
    write_manifest(ds.manifest, out / "manifest.csv")
    write_embeddings(EmbeddingMatrix(scores.values), out / "scores.femb")
    params = {
        "n": cfg.n, "dim": cfg.dim, "targets": cfg.targets, "groups": cfg.groups,
        "minority_cell": args.minority_cell, "separation": cfg.separation,
        "group_signal": cfg.group_signal, "score_noise_sigma": cfg.score_noise_sigma,
    }
    _write_run_manifest(out, "gen-synth", params, cfg.seed, [],
                        ["embeddings.femb", "manifest.csv", "scores.femb"])
    print(f"wrote {cfg.n} samples (dim {cfg.dim}, {cfg.targets} classes, {cfg.groups} groups) to {out}")
    return 0


# ---------------------------------------------------------------------------
# proxy


def _report_ari(labels: np.ndarray, truth: np.ndarray) -> float:
    return adjusted_rand_index(truth, labels)


def cmd_proxy(args) -> int:
    out = _out_dir(args)
    man = load_manifest(args.manifest)
    inputs = [("manifest", args.manifest)]

    pset = None
    if args.prompt_set:
        pset = load_prompt_set(args.prompt_set)
        inputs.append(("prompt_set", args.prompt_set))

    if args.scores:
        scores = ScoreMatrix(load_embeddings(args.scores).values)
        inputs.append(("scores", args.scores))
    else:
        if not (args.embeddings and args.prompt_embeddings):
            raise ConfigError("proxy needs either --scores or both --embeddings and --prompt-embeddings")
        images = load_embeddings(args.embeddings)
        texts = load_embeddings(args.prompt_embeddings)
        scores = similarity_matrix(texts, images)
        inputs += [("embeddings", args.embeddings), ("prompt_embeddings", args.prompt_embeddings)]
    if scores.samples != len(man):
        raise DataError(f"score matrix covers {scores.samples} samples but the manifest has {len(man)}")

    n_attr = args.attribute_classes
    if n_attr is None:
        n_attr = pset.n_attribute_classes if pset is not None else scores.prompts
    n_targets = man.n_classes
    k_total = args.k if args.k is not None else n_attr * n_targets

    # Grouping clusters score columns, so the score matrix doubles as the
    # feature matrix; image embeddings are not needed here.
    ds = Dataset(embeddings=EmbeddingMatrix(scores.values.T), manifest=man)
    grouping = build_pseudo_groups(ds, scores, k_total, seed=derive_seed(args.seed, "grouping"))

    lines = [f"{len(man)} samples, {n_targets} target classes, {n_attr} attribute classes, K={k_total}"]
    attrs = man.attributes()
    have_attrs = bool(np.all(attrs >= 0))
    prompt_names = list(pset.prompts) if pset is not None else [f"prompt {i}" for i in range(scores.prompts)]
    if have_attrs:
        lines.append("agreement with true attribute groups (adjusted Rand index):")
        for i, name in enumerate(prompt_names):
            column = scores.values[i].astype(np.float64)[:, None]
            result = kmeans(column, n_attr, seed=derive_seed(args.seed, "report", i))
            lines.append(f"  {name:<40s} {_report_ari(result.assignments, attrs):7.4f}")
        joint = kmeans(scores.values.T.astype(np.float64), n_attr, seed=derive_seed(args.seed, "report", "joint"))
        lines.append(f"  {'all prompts jointly':<40s} {_report_ari(joint.assignments, attrs):7.4f}")
        mean_row = ensemble_scores(scores).values[0].astype(np.float64)[:, None]
        ens = kmeans(mean_row, n_attr, seed=derive_seed(args.seed, "report", "ensemble"))
        lines.append(f"  {'ensemble (mean of prompt rows)':<40s} {_report_ari(ens.assignments, attrs):7.4f}")
    else:
        lines.append("agreement with true attribute groups: unavailable (manifest lacks attribute labels)")
    report = "\n".join(lines) + "\n"

    cluster_of = {int(s): int(c) for s, c in zip(grouping.sample_indices, grouping.assignments)}
    with open(out / "clusters.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("id,target,cluster\n")
        for row, sample in enumerate(man.samples):
            fh.write(f"{sample.id},{sample.target},{cluster_of[row]}\n")
    with open(out / "report.txt", "w", encoding="utf-8") as fh:
        fh.write(report)
    params = {"k": k_total, "attribute_classes": n_attr}
    _write_run_manifest(out, "proxy", params, args.seed, inputs, ["clusters.csv", "report.txt"])
    print(report, end="")
    return 0


# ---------------------------------------------------------------------------
# train


def _train_config_from(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        alpha=args.alpha,
        theta=args.theta,
        model=args.model,
        hidden_dim=args.hidden_dim,
        jitter_sigma=args.jitter_sigma,
        debias=args.debias,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    out = _out_dir(args)
    ds = _load_dataset(args.embeddings, args.manifest)
    inputs = [("embeddings", args.embeddings), ("manifest", args.manifest)]
    train_idx = ds.manifest.split_indices("train")

    if args.scores:
        scores = ScoreMatrix(load_embeddings(args.scores).values)
        inputs.append(("scores", args.scores))
        if scores.samples != len(ds.manifest):
            raise DataError(f"score matrix covers {scores.samples} samples but the manifest has {len(ds.manifest)}")
        k_total = args.k if args.k is not None else scores.prompts * ds.manifest.n_classes
        grouping = build_pseudo_groups(
            ds, scores, k_total, seed=derive_seed(args.seed, "grouping"), indices=train_idx
        )
    elif args.debias:
        raise ConfigError("--debias requires --scores to build pseudo groups (or pass --no-debias)")
    else:
        grouping = single_cluster_grouping(train_idx)

    cfg = _train_config_from(args)
    model = train(ds, grouping, cfg)
    save_model(model, out / "model")
    save_history(model.history, out / "history.csv")

    params = {
        "epochs": cfg.epochs, "batch_size": cfg.batch_size, "lr": cfg.lr,
        "alpha": cfg.alpha, "theta": cfg.theta, "model": cfg.model,
        "hidden_dim": cfg.hidden_dim, "jitter_sigma": cfg.jitter_sigma,
        "debias": cfg.debias, "k": grouping.n_clusters,
    }
    outputs = ["history.csv", "model/header.json"]
    outputs += sorted(str(p.relative_to(out)) for p in (out / "model").glob("*.femb"))
    _write_run_manifest(out, "train", params, cfg.seed, inputs, outputs)

    last = model.history[-1]
    mode = "loss-balanced" if cfg.debias else "uniform"
    print(f"trained {cfg.model} model, {mode} sampling, {grouping.n_clusters} clusters")
    print(f"final train loss {last.train_loss:.6f}, best epoch {model.best_epoch}")
    if last.val_accuracy is not None:
        best = model.history[model.best_epoch]
        note = f"val accuracy {best.val_accuracy:.4f}"
        if best.val_unbiased is not None:
            note += f", val unbiased accuracy {best.val_unbiased:.4f}"
        print(f"checkpoint: {note}")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    out = _out_dir(args)
    model = load_model(args.model)
    ds = _load_dataset(args.embeddings, args.manifest)
    man = ds.manifest
    idx = man.split_indices(args.split)
    if len(idx) == 0:
        raise DataError(f"split '{args.split}' has no samples")

    preds = predict(model, ds.embeddings)
    overall = float((preds[idx] == man.targets()[idx]).mean())
    table = group_accuracies(preds, man, args.split)
    summary = fairness_summary(table)

    lines = [
        f"split: {args.split} ({len(idx)} samples)",
        f"accuracy:             {overall:.4f}",
        f"unbiased accuracy:    {summary.unbiased_acc:.4f}",
        f"worst-group accuracy: {summary.worst_group_acc:.4f}",
        f"group accuracy std:   {summary.group_std:.4f}",
        "",
        f"{'target':>6} {'group':>6} {'n':>7} {'accuracy':>9}",
    ]
    for (target, group), cell in sorted(table.entries.items()):
        lines.append(f"{target:>6} {group:>6} {cell.total:>7} {cell.accuracy:>9.4f}")
    corr = attribute_target_correlation(man, args.split)
    lines.append("")
    lines.append(f"attribute-target correlation (mean |r|): {corr.mean_abs_r:.4f}")
    lines.append(f"attribute representation std: {representation_std(man, args.split):.4f}")
    report = "\n".join(lines) + "\n"

    with open(out / "eval.txt", "w", encoding="utf-8") as fh:
        fh.write(report)
    model_dir = Path(args.model)
    inputs = [("embeddings", args.embeddings), ("manifest", args.manifest),
              ("model_header", model_dir / "header.json")]
    inputs += [(f"model_{p.stem}", p) for p in sorted(model_dir.glob("*.femb"))]
    _write_run_manifest(out, "eval", {"split": args.split}, 0, inputs, ["eval.txt"])
    print(report, end="")
    return 0


# ---------------------------------------------------------------------------
# simulate-ari


def cmd_simulate_ari(args) -> int:
    out = _out_dir(args)
    inputs = []
    if args.manifest:
        man = load_manifest(args.manifest)
        inputs.append(("manifest", args.manifest))
        truth = man.attributes()
        if np.any(truth < 0):
            raise DataError("simulate-ari: manifest is missing attribute labels")
        ids = [s.id for s in man.samples]
    elif args.n is not None:
        rng = substream(args.seed, "truth")
        truth = rng.integers(0, args.groups, size=args.n)
        ids = [f"i{i:06d}" for i in range(args.n)]
    else:
        raise ConfigError("simulate-ari needs --manifest or --n")

    rate = calibrate_ari(truth, args.target_ari, args.tol, seed=args.seed, draws=args.draws)
    achieved = measure_corruption_ari(truth, rate, derive_seed(args.seed, "verify"), draws=args.draws)
    labels = corrupt_partition(truth, rate, derive_seed(args.seed, "final"))

    with open(out / "partition.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("id,truth,label\n")
        for sid, t, lab in zip(ids, truth, labels):
            fh.write(f"{sid},{int(t)},{int(lab)}\n")
    report = (
        f"target adjusted Rand index: {args.target_ari:.4f} (tolerance {args.tol})\n"
        f"calibrated corruption rate: {rate:.6f}\n"
        f"measured index at that rate ({args.draws} draws): {achieved:.4f}\n"
        f"emitted partition index: {adjusted_rand_index(truth, labels):.4f}\n"
    )
    with open(out / "calibration.txt", "w", encoding="utf-8") as fh:
        fh.write(report)
    params = {"target_ari": args.target_ari, "tol": args.tol, "draws": args.draws,
              "n": None if args.manifest else args.n,
              "groups": None if args.manifest else args.groups}
    _write_run_manifest(out, "simulate-ari", params, args.seed, inputs,
                        ["calibration.txt", "partition.csv"])
    print(report, end="")
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    cfg = _synth_config_from(args)
    train_cfg = _train_config_from(args)
    if args.kind == "ari":
        result = run_ari_sweep(cfg, args.ari_grid, args.seeds, train_cfg,
                               calibration_tol=args.calibration_tol)
    elif args.kind == "cluster":
        result = run_cluster_sweep(cfg, args.ks, args.seeds, train_cfg)
    else:
        result = run_theta_sweep(cfg, args.thetas, args.seeds, train_cfg)

    write_sweep_csv(result, out / "sweep.csv")
    table = format_sweep_table(result)
    with open(out / "table.txt", "w", encoding="utf-8") as fh:
        fh.write(table + "\n")
    params = {
        "kind": args.kind, "seeds": list(args.seeds),
        "n": cfg.n, "dim": cfg.dim, "targets": cfg.targets, "groups": cfg.groups,
        "minority_cell": args.minority_cell, "separation": cfg.separation,
        "group_signal": cfg.group_signal, "score_noise_sigma": cfg.score_noise_sigma,
        "epochs": train_cfg.epochs, "batch_size": train_cfg.batch_size,
        "lr": train_cfg.lr, "alpha": train_cfg.alpha, "theta": train_cfg.theta,
        "model": train_cfg.model, "jitter_sigma": train_cfg.jitter_sigma,
    }
    if args.kind == "ari":
        params["ari_grid"] = list(args.ari_grid)
        params["calibration_tol"] = args.calibration_tol
    elif args.kind == "cluster":
        params["ks"] = list(args.ks)
    else:
        params["thetas"] = list(args.thetas)
    _write_run_manifest(out, "sweep", params, cfg.seed, [], ["sweep.csv", "table.txt"])
    print(table)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_synth_flags(p: argparse.ArgumentParser, n_required: bool) -> None:
    if n_required:
        p.add_argument("--n", type=int, required=True, help="sample count")
    else:
        p.add_argument("--n", type=int, default=20000, help="sample count")
    p.add_argument("--dim", type=int, default=16, help="embedding dimension")
    p.add_argument("--targets", type=int, default=2, help="target class count")
    p.add_argument("--groups", type=int, default=2, help="attribute group count")
    p.add_argument("--minority-cell", type=float, default=0.05,
                   help="probability mass of each off-pattern (target, group) cell")
    p.add_argument("--separation", type=float, default=3.6, help="target blob separation")
    p.add_argument("--group-signal", type=float, default=2.5, help="group blob separation")
    p.add_argument("--score-noise-sigma", type=float, default=0.37, help="score channel noise")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--alpha", type=float, default=0.3, help="probability update momentum")
    p.add_argument("--theta", type=int, default=5, help="epochs between probability updates")
    p.add_argument("--jitter-sigma", type=float, default=None,
                   help="train-time embedding noise scale (default 0.01 of mean feature norm)")
    p.add_argument("--debias", action=argparse.BooleanOptionalAction, default=True,
                   help="loss-balanced cluster re-sampling (--no-debias: uniform)")
    p.add_argument("--model", choices=("linear", "mlp"), default="linear")
    p.add_argument("--hidden-dim", type=int, default=None, help="hidden width for --model mlp")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Pseudo-group discovery from prompt similarity scores and loss-balanced fair training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="synthesize a biased dataset")
    _add_synth_flags(p, n_required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("proxy", help="build pseudo groups and report partition quality")
    p.add_argument("--scores", help="score matrix file (prompt rows x sample columns)")
    p.add_argument("--embeddings", help="image embedding file (with --prompt-embeddings)")
    p.add_argument("--prompt-embeddings", help="prompt embedding file (with --embeddings)")
    p.add_argument("--manifest", required=True, help="sample manifest CSV")
    p.add_argument("--prompt-set", help="prompt set JSON (labels report rows, declares group count)")
    p.add_argument("--k", type=int, default=None, help="total clusters (default: groups x classes)")
    p.add_argument("--attribute-classes", type=int, default=None,
                   help="attribute group count (default: prompt set declaration or score rows)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_proxy)

    p = sub.add_parser("train", help="train the embedding classifier")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", help="score matrix for pseudo groups (required with --debias)")
    p.add_argument("--k", type=int, default=None, help="total clusters (default: score rows x classes)")
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--model", required=True, help="model directory from `train`")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate-ari", help="calibrate corruption rate to a target agreement")
    p.add_argument("--target-ari", type=float, required=True)
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--draws", type=int, default=5)
    p.add_argument("--manifest", help="take the true partition from this manifest's attributes")
    p.add_argument("--n", type=int, default=None, help="synthetic truth size (with --groups)")
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_simulate_ari)

    p = sub.add_parser("sweep", help="run a full experiment sweep")
    p.add_argument("--kind", required=True, choices=("ari", "cluster", "theta"))
    p.add_argument("--ari-grid", type=_comma_list(float, "--ari-grid"),
                   default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--ks", type=_comma_list(int, "--ks"), default=[4, 6, 8, 10])
    p.add_argument("--thetas", type=_comma_list(int, "--thetas"), default=[1, 3, 5, 10, 20])
    p.add_argument("--seeds", type=_comma_list(int, "--seeds"), default=[0, 1, 2])
    p.add_argument("--calibration-tol", type=float, default=0.02)
    _add_synth_flags(p, n_required=False)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"{PROG}: config error: {exc}", file=sys.stderr)
        return 2
    except FairproxyError as exc:
        kind = type(exc).__name__
        print(f"{PROG}: {kind}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit codes: 0 success, 1 data or runtime error, 2 usage error. Outputs are
staged in a temporary directory and moved into place only after the whole
command succeeded, each accompanied by ``<output>.manifest.json``.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .augment import AugKind, AugmentationSpec, ContextAugConfig, apply_context, apply_dataset, build_cooccurrence
from .encoder import EmbeddingMatrix, EncoderConfig, embed_dataset, init_encoder
from .evaluation import (
    ProbeConfig,
    affinity_audit,
    knn_accuracy,
    nt_xent,
    probe_cv_accuracy,
    similarity_matrix,
)
from .fidelity import ConvergenceError, fidelity_reports, reports_json
from .graph import GraphDataset
from .io import (
    DataError,
    file_digest,
    load_corpus,
    load_embedding_table,
    load_tu_dataset,
    read_labels,
    read_matrix_csv,
    write_heatmap_pgm,
    write_labels,
    write_matrix_csv,
    write_tu_dataset,
)
from .rng import MASK64, derive_seed


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line diagnostic instead of usage dump
        raise UsageError(f"{self.prog}: error: {message}")


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _ratio(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError("ratio must lie in [0, 1]")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


class Outputs:
    """Stage output files/dirs in a temp dir; move them into place on commit."""

    def __init__(self):
        self.tmp = Path(tempfile.mkdtemp(prefix="graphaudit-"))
        self.staged: list[tuple[Path, Path]] = []

    def stage(self, final) -> Path:
        p = self.tmp / f"{len(self.staged)}"
        self.staged.append((p, Path(final)))
        return p

    def commit(self) -> None:
        for tmp, final in self.staged:
            final.parent.mkdir(parents=True, exist_ok=True)
            if tmp.is_dir() and final.is_dir():
                for f in sorted(tmp.iterdir()):
                    shutil.move(str(f), str(final / f.name))
            else:
                if final.is_dir():
                    shutil.rmtree(final)
                shutil.move(str(tmp), str(final))

    def cleanup(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


class Context:
    def __init__(self, args, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.outputs = Outputs()
        self.inputs: list[str] = []
        self.seeds: dict[str, int] = {}
        self.final_paths: list[str] = []

    @property
    def threads(self) -> int:
        return self.args.threads or (os.cpu_count() or 1)

    def input(self, path) -> Path:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"input not found: {p}")
        self.inputs.append(str(path))
        return p

    def output(self, path) -> Path:
        self.final_paths.append(str(path))
        return self.outputs.stage(path)

    def say(self, msg: str) -> None:
        if not self.args.quiet:
            print(msg)

    def write_manifest(self) -> None:
        if not self.final_paths:
            return
        manifest = {
            "subcommand": self.args.command_path,
            "argv": self.argv,
            "seeds": self.seeds,
            "inputs": {p: file_digest(p) for p in self.inputs},
            "outputs": self.final_paths,
            "version": __version__,
        }
        target = self.final_paths[0] + ".manifest.json"
        _write_json(manifest, self.outputs.stage(target))


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_dataset(ctx: Context, path, name=None) -> GraphDataset:
    return load_tu_dataset(ctx.input(path), name)


def _load_embeddings(ctx: Context, emb_path, labels_path) -> EmbeddingMatrix:
    rows = read_matrix_csv(ctx.input(emb_path))
    labels = read_labels(ctx.input(labels_path))
    if labels.size != rows.shape[0]:
        raise DataError(f"{labels_path}: {labels.size} labels for {rows.shape[0]} embedding rows")
    return EmbeddingMatrix(rows, labels)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_augment(ctx: Context) -> None:
    a = ctx.args
    data = _load_dataset(ctx, a.input, a.name)
    table = load_embedding_table(ctx.input(a.embeddings)) if a.embeddings else None
    spec = AugmentationSpec(AugKind(a.op), a.ratio, a.seed)
    ctx.seeds["seed"] = a.seed
    out = apply_dataset(spec, data, table, ctx.threads)
    write_tu_dataset(out, ctx.output(a.out))
    ctx.say(f"augmented {len(out)} graphs with {a.op} ratio={a.ratio} -> {a.out}")


def cmd_text_build(ctx: Context) -> None:
    a = ctx.args
    docs = load_corpus(ctx.input(a.corpus))
    table = load_embedding_table(ctx.input(a.embeddings))
    graphs = [build_cooccurrence(d, a.window, table) for d in docs]
    classes = sorted({g.graph_label for g in graphs})
    remap = {c: i for i, c in enumerate(classes)}
    for g in graphs:
        g.graph_label = remap[g.graph_label]
    name = a.name or Path(a.corpus).stem
    write_tu_dataset(GraphDataset(graphs, name, max(1, len(classes))), ctx.output(a.out))
    ctx.say(f"built {len(graphs)} co-occurrence graphs (window {a.window}) -> {a.out}")


def cmd_text_augment(ctx: Context) -> None:
    a = ctx.args
    data = _load_dataset(ctx, a.input, a.name)
    table = load_embedding_table(ctx.input(a.embeddings))
    ctx.seeds["seed"] = a.seed
    graphs = []
    for i, g in enumerate(data):
        config = ContextAugConfig.parse(a.config, derive_seed(a.seed, i))
        try:
            graphs.append(apply_context(config, g, table))
        except ValueError as exc:
            raise ValueError(f"graph {i}: {exc}") from exc
    write_tu_dataset(data.with_graphs(graphs), ctx.output(a.out))
    ctx.say(f"augmented {len(graphs)} text graphs ({a.config}) -> {a.out}")


def cmd_fidelity(ctx: Context) -> None:
    a = ctx.args
    da = _load_dataset(ctx, a.a)
    db = _load_dataset(ctx, a.b)
    reports = fidelity_reports(da, db, a.coverage, ctx.threads)
    _write_json(reports_json(reports), ctx.output(a.out))
    scores = [r.spectral.score for r in reports]
    ctx.say(f"{len(reports)} pairs, mean spectral score {np.mean(scores) if scores else float('nan'):.6g} -> {a.out}")


def cmd_embed(ctx: Context) -> None:
    a = ctx.args
    data = _load_dataset(ctx, a.input, a.name)
    config = EncoderConfig(a.layers, a.hidden, a.epsilon, a.seed)
    ctx.seeds["seed"] = a.seed
    emb = embed_dataset(init_encoder(config, data.feature_dim), data, ctx.threads)
    write_matrix_csv(emb.rows, ctx.output(a.out))
    write_labels(emb.labels, ctx.output(a.labels_out))
    ctx.say(f"embedded {len(emb)} graphs -> {a.out} ({emb.rows.shape[1]} dims)")


def _emit(ctx: Context, result: dict, report: Optional[str]) -> None:
    if report:
        _write_json(result, ctx.output(report))
        ctx.say(json.dumps(result, sort_keys=True))
    else:
        print(json.dumps(result, sort_keys=True))


def cmd_eval_knn(ctx: Context) -> None:
    a = ctx.args
    emb = _load_embeddings(ctx, a.emb, a.labels)
    ctx.seeds["seed"] = a.seed
    mean, std = knn_accuracy(emb, a.k, a.folds, a.seed)
    _emit(ctx, {"k": a.k, "folds": a.folds, "accuracy_mean": mean, "accuracy_std": std}, a.report)


def cmd_eval_probe(ctx: Context) -> None:
    a = ctx.args
    emb = _load_embeddings(ctx, a.emb, a.labels)
    ctx.seeds["seed"] = a.seed
    config = ProbeConfig(a.lr, a.epochs, a.l2, a.seed)
    mean, std = probe_cv_accuracy(emb, config, a.folds, a.seed)
    _emit(ctx, {"folds": a.folds, "accuracy_mean": mean, "accuracy_std": std}, a.report)


def cmd_sanity_sim(ctx: Context) -> None:
    a = ctx.args
    emb = _load_embeddings(ctx, a.emb, a.labels)
    rep = similarity_matrix(emb)
    write_heatmap_pgm(rep.matrix, ctx.output(a.out))
    _write_json(rep.summary(), ctx.output(a.report))
    ctx.say(json.dumps(rep.summary(), sort_keys=True))


def cmd_audit_affinity(ctx: Context) -> None:
    a = ctx.args
    data = _load_dataset(ctx, a.input, a.name)
    table = load_embedding_table(ctx.input(a.embeddings)) if a.embeddings else None
    ctx.seeds["seed"] = a.seed
    spec = AugmentationSpec(AugKind(a.op), a.ratio, a.seed)
    rep = affinity_audit(
        data, spec,
        EncoderConfig(a.layers, a.hidden, 0.0, a.seed),
        ProbeConfig(a.lr, a.epochs, a.l2, a.seed),
        table, ctx.threads,
    )
    _write_json(rep.to_dict(), ctx.output(a.report))
    ctx.say(f"affinity {rep.affinity:.4f} (clean {rep.clean_accuracy:.4f}, augmented "
            f"{rep.augmented_accuracy:.4f}); diversity {rep.diversity:.4f}")


def cmd_diag_ntxent(ctx: Context) -> None:
    a = ctx.args
    za = read_matrix_csv(ctx.input(a.emb_a))
    zb = read_matrix_csv(ctx.input(a.emb_b))
    loss = nt_xent(za, zb, a.tau)
    _emit(ctx, {"n": int(za.shape[0]), "tau": a.tau, "nt_xent": loss}, a.report)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=_positive, default=None,
                        help="worker threads (default: all cores)")
    common.add_argument("--quiet", action="store_true")

    parser = _Parser(prog="graphaudit", description="Graph augmentation and representation audits.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    ops = [k.value for k in AugKind]

    def leaf(subparsers, name, func, help_text):
        p = subparsers.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = leaf(sub, "augment", cmd_augment, "augment every graph of a TU dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--name")
    p.add_argument("--op", required=True, choices=ops)
    p.add_argument("--ratio", type=_ratio, default=0.2)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--embeddings", help="word vectors (synonym-replace, random-insert)")
    p.add_argument("--out", required=True)

    text = sub.add_parser("text", help="text co-occurrence graphs").add_subparsers(
        dest="text_command", required=True, parser_class=_Parser)
    p = leaf(text, "build-graph", cmd_text_build, "corpus TSV -> TU dataset")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--window", type=int, default=2, choices=range(2, 65), metavar="W")
    p.add_argument("--name")
    p.add_argument("--out", required=True)
    p = leaf(text, "augment", cmd_text_augment, "context-aware text-graph augmentation")
    p.add_argument("--input", required=True)
    p.add_argument("--name")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--config", default="synonym=0.05,delete=0.10,insert=0.05,swap=0.05")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)

    p = leaf(sub, "fidelity", cmd_fidelity, "spectral and feature similarity of paired datasets")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--coverage", type=float, default=0.9)
    p.add_argument("--out", required=True)

    p = leaf(sub, "embed", cmd_embed, "random-GIN embeddings of a TU dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--name")
    p.add_argument("--layers", type=_positive, default=3)
    p.add_argument("--hidden", type=_positive, default=32)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out", required=True)

    ev = sub.add_parser("eval", help="representation evaluation").add_subparsers(
        dest="eval_command", required=True, parser_class=_Parser)
    p = leaf(ev, "knn", cmd_eval_knn, "stratified k-fold kNN accuracy")
    p.add_argument("--emb", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--k", type=_positive, default=5)
    p.add_argument("--folds", type=_positive, default=10)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--report")
    p = leaf(ev, "probe", cmd_eval_probe, "stratified k-fold linear-probe accuracy")
    p.add_argument("--emb", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--folds", type=_positive, default=10)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=_positive, default=500)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--report")

    sn = sub.add_parser("sanity", help="representation sanity checks").add_subparsers(
        dest="sanity_command", required=True, parser_class=_Parser)
    p = leaf(sn, "sim-matrix", cmd_sanity_sim, "class-sorted cosine similarity heatmap")
    p.add_argument("--emb", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)

    au = sub.add_parser("audit", help="augmentation audits").add_subparsers(
        dest="audit_command", required=True, parser_class=_Parser)
    p = leaf(au, "affinity", cmd_audit_affinity, "affinity and diversity of an augmentation")
    p.add_argument("--input", required=True)
    p.add_argument("--name")
    p.add_argument("--op", required=True, choices=ops)
    p.add_argument("--ratio", type=_ratio, default=0.2)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--embeddings")
    p.add_argument("--layers", type=_positive, default=3)
    p.add_argument("--hidden", type=_positive, default=32)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=_positive, default=500)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--report", required=True)

    dg = sub.add_parser("diag", help="diagnostics").add_subparsers(
        dest="diag_command", required=True, parser_class=_Parser)
    p = leaf(dg, "nt-xent", cmd_diag_ntxent, "NT-XENT of two aligned embedding views")
    p.add_argument("--emb-a", required=True)
    p.add_argument("--emb-b", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--report")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    args.command_path = " ".join(
        x for x in (args.command, *(getattr(args, f"{args.command}_command", None),)) if x
    )
    ctx = Context(args, argv)
    try:
        args.func(ctx)
        ctx.write_manifest()
        ctx.outputs.commit()
    except (DataError, ValueError, OSError, ConvergenceError) as exc:
        print(f"graphaudit: error: {exc}", file=sys.stderr)
        return 1
    finally:
        ctx.outputs.cleanup()
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line pipeline: prepare feature caches, train, evaluate, run
ablations, and inspect attention weights.

Configuration is a plain-text file of `key=value` lines (# comments allowed)
with command-line overrides via repeated --set key=value. Unknown keys are
rejected. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import encoders
from .attention import hga_attention
from .data import CorpusError, load_dataset, split_dataset
from .features import SentimentLexicon
from .hashtag_graph import export_edge_list
from .model import (CheckpointError, ModelConfig, BranchSpec,
                    PAPER_HEAD_SIZES, build_caches, config_digest,
                    load_checkpoint, save_checkpoint)
from .providers import tokenize
from .training import (Checkpoint, TrainConfig, ablate, evaluate, train)


class UsageError(ValueError):
    """Bad flags or configuration keys (exit code 1)."""


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise UsageError(f"expected true/false, got {s!r}")


def _parse_ints(s: str) -> tuple[int, ...]:
    return tuple(int(p) for p in s.split(","))


# key -> (parser, default, help)
DEFAULTS = {
    "corpus": (str, "data/sample_corpus.jsonl", "path to the JSON-lines corpus"),
    "lexicon": (str, "", "sentiment lexicon path (empty = bundled)"),
    "cache_dir": (str, "out/cache", "feature cache directory"),
    "checkpoint": (str, "out/model.ckpt", "checkpoint file path"),
    "out": (str, "out", "output directory for history/metrics/reports"),
    "m": (int, "15", "max caption tokens"),
    "k": (int, "49", "image regions"),
    "l": (int, "60", "max hashtags in attention"),
    "d": (int, "768", "embedding/hidden dimension"),
    "a": (int, "768", "attention units"),
    "n": (int, "512", "raw region feature dimension"),
    "topic_dim": (int, "768", "hashtag topic embedding dimension"),
    "structure_dim": (int, "50", "hashtag graph embedding dimension"),
    "pca_k": (int, "6", "social vector dimension after PCA"),
    "graph_base_dim": (int, "64", "hashtag node base feature dimension"),
    "graph_hops": (int, "2", "graph aggregation rounds"),
    "demographic_mode": (str, "onehot", "demographic encoding: onehot|ordinal"),
    "attention": (str, "hga", "attention variant: hga|sa|na"),
    "dropout": (float, "0.2", "dropout rate"),
    "init_scale": (float, "1.0", "parameter init range half-width"),
    "embed_seed": (int, "0", "embedding provider seed"),
    "use_content": (_parse_bool, "true", "include attended content vector"),
    "use_hashtags": (_parse_bool, "true", "include hashtag branch"),
    "use_social": (_parse_bool, "true", "include social branch"),
    "use_demographics": (_parse_bool, "true", "include demographic branch"),
    "use_sentiment_text": (_parse_bool, "true", "include caption sentiment block"),
    "use_sentiment_hashtags": (_parse_bool, "true", "include hashtag sentiment block"),
    "head_sizes": (str, "paper", "comma-separated head sizes or 'paper'"),
    "social_widths": (_parse_ints, "1,3,3", "social branch conv widths"),
    "social_channels": (_parse_ints, "1,2,4", "social branch conv channels"),
    "demographic_widths": (_parse_ints, "3,3,3", "demographic branch conv widths"),
    "demographic_channels": (_parse_ints, "1,2,4", "demographic branch conv channels"),
    "hashtag_widths": (_parse_ints, "3,5,5", "hashtag branch conv widths"),
    "hashtag_channels": (_parse_ints, "8,16,32", "hashtag branch conv channels"),
    "sentiment_widths": (_parse_ints, "1,1,3", "sentiment branch conv widths"),
    "sentiment_channels": (_parse_ints, "1,2,4", "sentiment branch conv channels"),
    "train_frac": (float, "0.8", "training split fraction"),
    "val_frac": (float, "0.1", "validation split fraction"),
    "test_frac": (float, "0.1", "test split fraction"),
    "split_seed": (int, "0", "dataset split seed"),
    "learning_rate": (float, "0.0001", "Adam learning rate"),
    "batch_size": (int, "20", "mini-batch size"),
    "max_epochs": (int, "30", "maximum training epochs"),
    "patience": (int, "5", "early stopping patience (epochs)"),
    "seed": (int, "0", "training seed (init, shuffling, dropout)"),
}


def parse_config_file(path) -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def resolve_config(config_path=None, overrides=None) -> dict:
    raw = {key: default for key, (_, default, _) in DEFAULTS.items()}
    for source in (parse_config_file(config_path) if config_path else {},
                   overrides or {}):
        for key, value in source.items():
            if key not in DEFAULTS:
                raise UsageError(f"unknown configuration key {key!r}")
            raw[key] = value
    out = {}
    for key, value in raw.items():
        parser = DEFAULTS[key][0]
        try:
            out[key] = parser(value)
        except (ValueError, TypeError) as e:
            raise UsageError(f"bad value for {key}: {value!r} ({e})")
    return out


def model_config_from(rc: dict) -> ModelConfig:
    if rc["head_sizes"] == "paper":
        head = PAPER_HEAD_SIZES
    else:
        head = _parse_ints(rc["head_sizes"])
    specs = {name: BranchSpec(widths=tuple(rc[f"{name}_widths"]),
                              channels=tuple(rc[f"{name}_channels"]))
             for name in ("social", "demographic", "hashtag", "sentiment")}
    return ModelConfig(
        m=rc["m"], k=rc["k"], l=rc["l"], d=rc["d"], a=rc["a"], n=rc["n"],
        topic_dim=rc["topic_dim"], structure_dim=rc["structure_dim"],
        pca_k=rc["pca_k"], demographic_mode=rc["demographic_mode"],
        attention=rc["attention"], dropout_rate=rc["dropout"],
        init_scale=rc["init_scale"], embed_seed=rc["embed_seed"],
        graph_base_dim=rc["graph_base_dim"], graph_hops=rc["graph_hops"],
        use_content=rc["use_content"], use_hashtags=rc["use_hashtags"],
        use_social=rc["use_social"], use_demographics=rc["use_demographics"],
        use_sentiment_text=rc["use_sentiment_text"],
        use_sentiment_hashtags=rc["use_sentiment_hashtags"],
        branch_specs=specs, head_sizes=head,
    )


def train_config_from(rc: dict) -> TrainConfig:
    return TrainConfig(learning_rate=rc["learning_rate"],
                       batch_size=rc["batch_size"], max_epochs=rc["max_epochs"],
                       patience=rc["patience"], dropout=rc["dropout"],
                       seed=rc["seed"])


def _lexicon(rc: dict) -> SentimentLexicon:
    if rc["lexicon"]:
        return SentimentLexicon.from_file(rc["lexicon"])
    return SentimentLexicon.bundled()


def _load_splits(rc: dict):
    ds, skipped = load_dataset(rc["corpus"])
    if skipped:
        print(f"skipped {skipped} malformed line(s)", file=sys.stderr)
    fractions = (rc["train_frac"], rc["val_frac"], rc["test_frac"])
    return split_dataset(ds, fractions, seed=rc["split_seed"])


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _cache_digest(rc: dict, config: ModelConfig) -> str:
    payload = {
        "config": config_digest(config),
        "corpus": _sha256_file(rc["corpus"]),
        "fractions": [rc["train_frac"], rc["val_frac"], rc["test_frac"]],
        "split_seed": rc["split_seed"],
    }
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _write_rows(path, header, rows):
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _vector_line(vec) -> str:
    return ",".join(repr(float(v)) for v in vec)


def cmd_prepare(rc: dict) -> int:
    """Build and persist the training-split feature caches."""
    config = model_config_from(rc)
    tr, _, _ = _load_splits(rc)
    caches = build_caches(tr.posts, config, lexicon=_lexicon(rc))
    cache_dir = Path(rc["cache_dir"])
    cache_dir.mkdir(parents=True, exist_ok=True)

    export_edge_list(caches.graph, cache_dir / "graph.tsv")
    with (cache_dir / "node_embeddings.tsv").open("w", encoding="utf-8") as fh:
        for tag in sorted(caches.node_emb):
            fh.write(f"{tag}\t{_vector_line(caches.node_emb[tag])}\n")
    with (cache_dir / "pca.tsv").open("w", encoding="utf-8") as fh:
        fh.write("mean\t" + _vector_line(caches.pca.mean) + "\n")
        fh.write("variance\t" + _vector_line(caches.pca.explained_variance) + "\n")
        for row in caches.pca.components:
            fh.write("component\t" + _vector_line(row) + "\n")
    with (cache_dir / "social_stats.tsv").open("w", encoding="utf-8") as fh:
        fh.write("mean\t" + _vector_line(caches.social_stats.mean) + "\n")
        fh.write("std\t" + _vector_line(caches.social_stats.std) + "\n")

    files = ["graph.tsv", "node_embeddings.tsv", "pca.tsv", "social_stats.tsv"]
    manifest = {
        "cache_digest": _cache_digest(rc, config),
        "files": {name: _sha256_file(cache_dir / name) for name in files},
        "train_posts": len(tr),
    }
    (cache_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    print(f"prepared caches for {len(tr)} training posts in {cache_dir}")
    return 0


def _require_caches(rc: dict, config: ModelConfig) -> None:
    manifest_path = Path(rc["cache_dir"]) / "manifest.json"
    if not manifest_path.exists():
        raise CorpusError(
            f"no cache manifest at {manifest_path}; run `postpop prepare` first")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("cache_digest") != _cache_digest(rc, config):
        raise CorpusError(
            "cache digest mismatch: caches were prepared under a different "
            "corpus/config; re-run `postpop prepare`")


def cmd_train(rc: dict) -> int:
    config = model_config_from(rc)
    tc = train_config_from(rc)
    _require_caches(rc, config)
    print(f"run: learning_rate={tc.learning_rate} batch_size={tc.batch_size} "
          f"max_epochs={tc.max_epochs} patience={tc.patience} "
          f"dropout={tc.dropout} seed={tc.seed}")
    tr, va, _ = _load_splits(rc)
    result = train(tr, va, config, tc, lexicon=_lexicon(rc))
    out = Path(rc["out"])
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.checkpoint.params, result.checkpoint.config,
                    result.checkpoint.caches.pca, rc["checkpoint"])
    _write_rows(out / "history.csv", "epoch,train_loss,val_mse", result.history)
    best = min(r[2] for r in result.history)
    print(f"trained {len(result.history)} epoch(s); best val MSE {best!r}")
    print(f"checkpoint: {rc['checkpoint']}")
    return 0


def _rebuild_checkpoint(rc: dict):
    config = model_config_from(rc)
    params, stored_config, _ = load_checkpoint(rc["checkpoint"],
                                               expected_config=config)
    tr, va, te = _load_splits(rc)
    caches = build_caches(tr.posts, stored_config, lexicon=_lexicon(rc))
    return Checkpoint(params=params, config=stored_config, caches=caches), \
        {"train": tr, "val": va, "test": te}


def cmd_evaluate(rc: dict, split: str) -> int:
    checkpoint, splits = _rebuild_checkpoint(rc)
    if split not in splits:
        raise UsageError(f"split must be one of train|val|test, got {split!r}")
    ds = splits[split]
    if len(ds) == 0:
        raise CorpusError(f"{split} split is empty")
    metrics = evaluate(checkpoint, ds)
    print(f"{split} split: n={metrics.n}")
    print(f"  MSE  {metrics.mse:.6f}   (evaluation mean; training objective "
          f"uses the 1/2 factor)")
    print(f"  MAE  {metrics.mae:.6f}")
    print(f"  SRCC {metrics.srcc:.6f}")
    print(f"  PCC  {metrics.pcc:.6f}")
    out = Path(rc["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / f"metrics_{split}.csv", "split,mse,mae,srcc,pcc,n",
                [(split, metrics.mse, metrics.mae, metrics.srcc,
                  metrics.pcc, metrics.n)])
    print(json.dumps({"split": split, **metrics.to_dict()}))
    return 0


def cmd_ablate(rc: dict, variants: list[str], seeds: list[int]) -> int:
    config = model_config_from(rc)
    tc = train_config_from(rc)
    ds, skipped = load_dataset(rc["corpus"])
    if skipped:
        print(f"skipped {skipped} malformed line(s)", file=sys.stderr)
    fractions = (rc["train_frac"], rc["val_frac"], rc["test_frac"])
    print(f"ablation over variants={variants} seeds={seeds}")
    report = ablate(ds, config, tc, variants, seeds, fractions=fractions,
                    lexicon=_lexicon(rc))
    out = Path(rc["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.csv").write_text("\n".join(report.to_csv_lines()) + "\n")
    print(report.to_table())
    print(f"report: {out / 'ablation.csv'}")
    return 0


def cmd_inspect_attention(rc: dict, post_id: str) -> int:
    config = model_config_from(rc)
    params, stored_config, _ = load_checkpoint(rc["checkpoint"],
                                               expected_config=config)
    ds, _ = load_dataset(rc["corpus"])
    matches = [p for p in ds.posts if p.post_id == post_id]
    if not matches:
        raise CorpusError(f"post {post_id!r} not in {rc['corpus']}")
    post = matches[0]
    if stored_config.attention == "na" or not stored_config.use_content:
        raise UsageError("checkpoint has no attention stage to inspect")
    from .providers import (EmbeddingProvider, hashtag_embedding_matrix,
                            image_region_features, text_token_embeddings)
    provider = EmbeddingProvider(kind="deterministic_stub",
                                 seed=stored_config.embed_seed)
    tokens, mask = text_token_embeddings(post.caption, stored_config.m,
                                         stored_config.d, provider)
    text, _ = encoders.lstm_encode(tokens, mask, params)
    regions = image_region_features(post.image_ref, stored_config.k,
                                    stored_config.n, provider)
    image = encoders.project_regions(regions, params)
    hmat, hmask = hashtag_embedding_matrix(post.hashtags, stored_config.l,
                                           stored_config.d, provider)
    use_pool = stored_config.attention == "hga"
    out, _ = hga_attention(text, mask, image, hmat, hmask, params,
                           use_hashtag_pool=use_pool)
    words = tokenize(post.caption)[:stored_config.m]
    print(f"post {post.post_id} caption: {post.caption!r}")
    if post.hashtags and use_pool:
        print("hashtag influence: pooled over " + ", ".join(f"#{t}" for t in post.hashtags))
    else:
        print("hashtag influence: none")
    print(f"token attention (sum={out.alpha_text.sum():.6f}):")
    for i, word in enumerate(words):
        print(f"  {i:3d} {word:<20s} {out.alpha_text[i]:.6f}")
    print(f"region attention (sum={out.alpha_image.sum():.6f}):")
    for i in range(stored_config.k):
        print(f"  {i:3d} {out.alpha_image[i]:.6f}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _keys_epilog() -> str:
    lines = ["configuration keys (config file or --set KEY=VALUE):"]
    for key, (_, default, help_text) in DEFAULTS.items():
        lines.append(f"  {key:<24} {help_text} (default: {default!r})")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="postpop",
                     description="Multimodal post-popularity regression pipeline.",
                     epilog=_keys_epilog(),
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (repeatable)")
    parser.add_argument("--corpus", help="shortcut for corpus=PATH")
    parser.add_argument("--checkpoint", help="shortcut for checkpoint=PATH")
    parser.add_argument("--out", help="shortcut for out=DIR")
    parser.add_argument("--seed", type=int, help="shortcut for seed=N")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("prepare", help="build feature caches from the training split")
    sub.add_parser("train", help="train and write a checkpoint")
    p_eval = sub.add_parser("evaluate", help="print metrics for a split")
    p_eval.add_argument("--split", default="test", choices=("train", "val", "test"))
    p_abl = sub.add_parser("ablate", help="train and compare model variants")
    p_abl.add_argument("--variant", action="append", default=[],
                       help="variant name (repeatable); default full,na")
    p_abl.add_argument("--seeds", default="0", help="comma-separated seeds")
    p_insp = sub.add_parser("inspect-attention",
                            help="dump attention weights for one post")
    p_insp.add_argument("--post-id", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {}
    for item in args.set:
        if "=" not in item:
            print(f"postpop: error: --set expects KEY=VALUE, got {item!r}",
                  file=sys.stderr)
            return 1
        key, value = item.split("=", 1)
        overrides[key] = value
    for flag in ("corpus", "checkpoint", "out"):
        if getattr(args, flag) is not None:
            overrides[flag] = getattr(args, flag)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    try:
        rc = resolve_config(args.config, overrides)
        if args.command == "prepare":
            return cmd_prepare(rc)
        if args.command == "train":
            return cmd_train(rc)
        if args.command == "evaluate":
            return cmd_evaluate(rc, args.split)
        if args.command == "ablate":
            variants = args.variant or ["full", "na"]
            seeds = [int(s) for s in args.seeds.split(",")]
            return cmd_ablate(rc, variants, seeds)
        if args.command == "inspect-attention":
            return cmd_inspect_attention(rc, args.post_id)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as e:
        print(f"postpop: error: {e}", file=sys.stderr)
        return 1
    except (CorpusError, CheckpointError, FileNotFoundError, ValueError) as e:
        print(f"postpop: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Adam training loop with early stopping, metrics, correlation analysis,
and the ablation harness.

The training objective keeps the 1/(2n) scaling; reported evaluation MSE
uses the plain 1/n mean, so the two differ by a factor of two on identical
predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, split_dataset
from .features import SentimentLexicon, social_numerics
from .model import (FeatureCaches, ModelConfig, ParamStore, batch_loss_and_grads,
                    build_caches, extract_dataset, forward_bundle,
                    init_model_params)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 20
    max_epochs: int = 30
    patience: int = 5
    dropout: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.max_epochs, self.patience) < 0:
            raise ValueError("training hyperparameters must be positive")
        if self.patience > self.max_epochs:
            raise ValueError(f"patience {self.patience} > max_epochs {self.max_epochs}")


@dataclass
class Metrics:
    mse: float
    mae: float
    srcc: float
    pcc: float
    n: int

    def to_dict(self) -> dict:
        return {"mse": self.mse, "mae": self.mae, "srcc": self.srcc,
                "pcc": self.pcc, "n": self.n}


@dataclass
class Checkpoint:
    """In-memory training artifact: parameters plus the frozen feature state."""

    params: ParamStore
    config: ModelConfig
    caches: FeatureCaches


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def adam_step(params: ParamStore, grads: dict, state: AdamState, lr: float,
              betas=(0.9, 0.999), eps: float = 1e-8) -> AdamState:
    """Standard bias-corrected adaptive-moment update, in place."""
    b1, b2 = betas
    state.step += 1
    t = state.step
    for name, _ in params.items():
        g = grads[name]
        if g.shape != params[name].shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = state.m[name] / (1 - b1 ** t)
        v_hat = state.v[name] / (1 - b2 ** t)
        params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + eps)
    return state


def _predictions(bundles, params, config) -> np.ndarray:
    return np.array([forward_bundle(b, params, config, "infer")[0] for b in bundles])


def _rank_average(x: np.ndarray) -> np.ndarray:
    """Average ranks (1-based); tied values share the mean of their ranks."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Product-moment correlation; NaN when either argument has no variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two equal-length vectors")
    if len(x) < 2:
        raise ValueError("pearson needs length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        return float("nan")
    return float(xc @ yc) / denom


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman needs two equal-length vectors")
    if len(x) < 2:
        raise ValueError("spearman needs length >= 2")
    return pearson(_rank_average(x), _rank_average(y))


def compute_metrics(preds: np.ndarray, targets: np.ndarray) -> Metrics:
    """Evaluation metrics; MSE here is the plain mean of squared errors."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.size == 0:
        raise ValueError("cannot evaluate an empty prediction set")
    err = preds - targets
    mse = float(np.mean(err ** 2))
    mae = float(np.mean(np.abs(err)))
    assert mae ** 2 <= mse + 1e-12  # Jensen
    return Metrics(
        mse=mse,
        mae=mae,
        srcc=spearman(preds, targets) if preds.size >= 2 else float("nan"),
        pcc=pearson(preds, targets) if preds.size >= 2 else float("nan"),
        n=int(preds.size),
    )


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[tuple[int, float, float]]  # (epoch, train_loss, val_mse)


def train(train_ds: Dataset, val_ds: Dataset, model_config: ModelConfig,
          train_config: TrainConfig, caches: FeatureCaches | None = None,
          lexicon: SentimentLexicon | None = None) -> TrainResult:
    """Mini-batch Adam with per-epoch validation and early stopping.

    Keeps the parameters from the best-validation epoch; stops after
    `patience` consecutive epochs without a strict val-MSE improvement.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise ValueError("train and validation splits must be non-empty")
    config = replace(model_config, dropout_rate=train_config.dropout)
    if caches is None:
        caches = build_caches(train_ds.posts, config, lexicon=lexicon)
    train_bundles = extract_dataset(train_ds, caches, config)
    val_bundles = extract_dataset(val_ds, caches, config)
    val_targets = np.array([b.target for b in val_bundles])

    params = init_model_params(config, seed=train_config.seed)
    state = AdamState()
    history: list[tuple[int, float, float]] = []
    best_val = math.inf
    best_params = params.copy()
    stale = 0
    step = 0
    n = len(train_bundles)
    for epoch in range(1, train_config.max_epochs + 1):
        order = np.random.default_rng(
            np.random.SeedSequence([train_config.seed, epoch])).permutation(n)
        epoch_losses = []
        for start in range(0, n, train_config.batch_size):
            batch = [train_bundles[i] for i in order[start:start + train_config.batch_size]]
            rngs = [np.random.default_rng(np.random.SeedSequence(
                [train_config.seed, step, i])) for i in range(len(batch))]
            loss, grads, _ = batch_loss_and_grads(batch, params, config, "train", rngs)
            adam_step(params, grads, state, train_config.learning_rate)
            epoch_losses.append(loss)
            step += 1
        val_preds = _predictions(val_bundles, params, config)
        val_mse = float(np.mean((val_preds - val_targets) ** 2))
        history.append((epoch, float(np.mean(epoch_losses)), val_mse))
        if val_mse < best_val:
            best_val = val_mse
            best_params = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= train_config.patience:
                break
    return TrainResult(
        checkpoint=Checkpoint(params=best_params, config=config, caches=caches),
        history=history,
    )


def evaluate(checkpoint: Checkpoint, ds: Dataset) -> Metrics:
    """Inference-mode metrics over a dataset."""
    if len(ds) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    bundles = extract_dataset(ds, checkpoint.caches, checkpoint.config)
    preds = _predictions(bundles, checkpoint.params, checkpoint.config)
    return compute_metrics(preds, ds.popularity())


# ---------------------------------------------------------------------------
# feature correlation analysis

SCALAR_FEATURES = ("user_id_hash", "avg_views", "group_count", "avg_member_count",
                   "tag_count", "title_length", "description_length",
                   "tagged_people", "comment_count", "post_day", "post_month",
                   "post_hour", "post_duration_days")


def correlate_features(ds: Dataset, caches: FeatureCaches | None = None,
                       config: ModelConfig | None = None) -> list[tuple[str, float]]:
    """Spearman correlation of each feature with popularity.

    Scalar metadata features enter directly; the vector features (hashtag,
    sentiment, demographic) are summarized by their Euclidean norm.
    Constant features get NaN.
    """
    config = config or ModelConfig()
    if caches is None:
        caches = build_caches(ds.posts, config)
    y = ds.popularity()
    columns: dict[str, np.ndarray] = {}
    numerics = np.array([social_numerics(p) for p in ds.posts])
    for i, name in enumerate(SCALAR_FEATURES[:9]):
        columns[name] = numerics[:, i]
    meta = [(p.metadata.post_day, p.metadata.post_month, p.metadata.post_hour,
             p.metadata.post_duration_days) for p in ds.posts]
    meta = np.array(meta, dtype=np.float64)
    for j, name in enumerate(SCALAR_FEATURES[9:]):
        columns[name] = meta[:, j]
    bundles = extract_dataset(ds, caches, config)
    columns["hashtag_feature"] = np.array([np.linalg.norm(b.f_hashtag) for b in bundles])
    columns["sentiment_feature"] = np.array(
        [np.linalg.norm(np.concatenate([b.f_sentiment_text, b.f_sentiment_hashtags]))
         for b in bundles])
    columns["demographic_feature"] = np.array(
        [np.linalg.norm(b.f_demographic) for b in bundles])
    out = []
    for name, col in columns.items():
        if np.all(col == col[0]) or np.all(y == y[0]):
            out.append((name, float("nan")))
        else:
            out.append((name, spearman(col, y)))
    return out


# ---------------------------------------------------------------------------
# ablation harness

VARIANTS = {
    "full": lambda c: c,
    "hga": lambda c: replace(c, attention="hga"),
    "sa": lambda c: replace(c, attention="sa"),
    "na": lambda c: replace(c, attention="na"),
    "no_content": lambda c: replace(c, use_content=False),
    "no_hashtags": lambda c: replace(c, use_hashtags=False),
    "no_social": lambda c: replace(c, use_social=False),
    "no_demographics": lambda c: replace(c, use_demographics=False),
    "no_sentiment_text": lambda c: replace(c, use_sentiment_text=False),
    "no_sentiment_hashtags": lambda c: replace(c, use_sentiment_hashtags=False),
}


@dataclass
class AblationRow:
    variant: str
    seed: int
    val_mse: float
    val_mae: float
    test_mse: float
    test_mae: float


@dataclass
class AblationReport:
    rows: list[AblationRow]

    def median(self, variant: str, column: str = "val_mse") -> float:
        vals = [getattr(r, column) for r in self.rows if r.variant == variant]
        return float(np.median(vals))

    def to_csv_lines(self) -> list[str]:
        lines = ["variant,seed,val_mse,val_mae,test_mse,test_mae"]
        for r in self.rows:
            lines.append(f"{r.variant},{r.seed},{r.val_mse!r},{r.val_mae!r},"
                         f"{r.test_mse!r},{r.test_mae!r}")
        return lines

    def to_table(self) -> str:
        width = max(len(r.variant) for r in self.rows) + 2
        out = [f"{'variant':<{width}}{'seed':>6}{'val MSE':>12}{'val MAE':>12}"
               f"{'test MSE':>12}{'test MAE':>12}"]
        for r in self.rows:
            out.append(f"{r.variant:<{width}}{r.seed:>6}{r.val_mse:>12.4f}"
                       f"{r.val_mae:>12.4f}{r.test_mse:>12.4f}{r.test_mae:>12.4f}")
        return "\n".join(out)


def apply_variant(config: ModelConfig, variant: str) -> ModelConfig:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; known: {sorted(VARIANTS)}")
    return VARIANTS[variant](config)


def ablate(ds: Dataset, base_config: ModelConfig, train_config: TrainConfig,
           variants: list[str], seeds: list[int],
           fractions=(0.8, 0.1, 0.1),
           lexicon: SentimentLexicon | None = None) -> AblationReport:
    """Train and evaluate each variant under identical seeds and splits."""
    rows = []
    for variant in variants:
        config = apply_variant(base_config, variant)
        for seed in seeds:
            tr, va, te = split_dataset(ds, fractions, seed=seed)
            result = train(tr, va, config,
                           replace(train_config, seed=seed), lexicon=lexicon)
            val_m = evaluate(result.checkpoint, va)
            test_m = evaluate(result.checkpoint, te)
            rows.append(AblationRow(variant=variant, seed=seed,
                                    val_mse=val_m.mse, val_mae=val_m.mae,
                                    test_mse=test_m.mse, test_mae=test_m.mae))
    return AblationReport(rows=rows)

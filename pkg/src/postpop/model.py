"""Model configuration, per-modality conv branches, regression head, and the
full forward/backward pass.

The merge order is fixed: social, demographic, hashtag, sentiment branch
outputs, then the attended content vector. Disabled features contribute
nothing. At the default (paper-scale) configuration the merged vector is
27104 long and the head follows the published halving size ladder.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

from . import attention as att
from . import encoders
from .data import Dataset, Post
from .features import (DEMOGRAPHIC_DIM, PCAModel, SentimentLexicon, SocialStats,
                       apply_pca, demographic_vector, fit_social_pca,
                       sentiment_feature, social_vector)
from .hashtag_graph import (build_cooccurrence_graph, hashtag_feature,
                            node_embeddings)
from .numeric import (ParamStore, ShapeError, conv1d_backward, conv1d_forward,
                      dense_backward, dense_forward, dropout, dropout_backward,
                      relu, relu_backward)
from .providers import (EmbeddingProvider, hashtag_embedding_matrix,
                        image_region_features, text_token_embeddings)

BRANCH_ORDER = ("social", "demographic", "hashtag", "sentiment")

# Published head ladder; the 27104 -> 13552 first layer halves the merged
# vector and subsequent sizes follow the reported sequence down to the
# single output unit.
PAPER_HEAD_SIZES = (13552, 6776, 3388, 1694, 847, 424, 212, 106, 53, 27, 13, 1)


@dataclass(frozen=True)
class BranchSpec:
    """Three valid conv1d layers: per-layer widths and output channels."""

    widths: tuple[int, int, int]
    channels: tuple[int, int, int]

    def output_length(self, input_length: int) -> int:
        length = input_length
        for w in self.widths:
            if w < 1:
                raise ValueError(f"conv width must be >= 1, got {w}")
            if w > length:
                raise ShapeError(
                    f"branch input of length {input_length} too short for widths {self.widths}")
            length = length - w + 1
        return length * self.channels[-1]


# Chosen so the default configuration merges to exactly 27104 dims.
PAPER_BRANCH_SPECS = {
    "social": BranchSpec(widths=(1, 3, 3), channels=(1, 2, 4)),
    "demographic": BranchSpec(widths=(3, 3, 3), channels=(1, 2, 4)),
    "hashtag": BranchSpec(widths=(3, 5, 5), channels=(8, 16, 32)),
    "sentiment": BranchSpec(widths=(1, 1, 3), channels=(1, 2, 4)),
}

TINY_BRANCH_SPEC = BranchSpec(widths=(2, 2, 2), channels=(2, 2, 2))


@dataclass(frozen=True)
class ModelConfig:
    m: int = 15            # max caption tokens
    k: int = 49            # image regions
    l: int = 60            # max hashtags in the attention matrix
    d: int = 768           # embedding / hidden dim
    a: int = 768           # attention units
    n: int = 512           # raw region feature dim
    topic_dim: int = 768
    structure_dim: int = 50
    pca_k: int = 6
    demographic_mode: str = "onehot"
    attention: str = "hga"
    dropout_rate: float = 0.2
    init_scale: float = 1.0
    embed_seed: int = 0
    graph_base_dim: int = 64
    graph_hops: int = 2
    use_content: bool = True
    use_hashtags: bool = True
    use_social: bool = True
    use_demographics: bool = True
    use_sentiment_text: bool = True
    use_sentiment_hashtags: bool = True
    branch_specs: dict = field(default_factory=lambda: dict(PAPER_BRANCH_SPECS))
    head_sizes: tuple[int, ...] = PAPER_HEAD_SIZES

    def __post_init__(self):
        if self.attention not in ("hga", "sa", "na"):
            raise ValueError(f"attention must be hga|sa|na, got {self.attention!r}")
        if self.demographic_mode not in ("onehot", "ordinal"):
            raise ValueError(f"unknown demographic mode {self.demographic_mode!r}")
        if not any([self.use_content, self.use_hashtags, self.use_social,
                    self.use_demographics, self.use_sentiment_text,
                    self.use_sentiment_hashtags]):
            raise ValueError("at least one feature must be enabled")
        if len(self.head_sizes) < 3:
            raise ValueError(f"head needs >= 3 layers, got {len(self.head_sizes)}")
        if self.head_sizes[-1] != 1:
            raise ValueError(f"final head layer must have size 1, got {self.head_sizes[-1]}")

    @property
    def demographic_dim(self) -> int:
        return DEMOGRAPHIC_DIM if self.demographic_mode == "onehot" else 4

    @property
    def hashtag_dim(self) -> int:
        return self.topic_dim + self.structure_dim

    @property
    def sentiment_dim(self) -> int:
        return 5 * (int(self.use_sentiment_text) + int(self.use_sentiment_hashtags))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["branch_specs"] = {
            name: {"widths": list(spec.widths), "channels": list(spec.channels)}
            for name, spec in self.branch_specs.items()}
        out["head_sizes"] = list(self.head_sizes)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["branch_specs"] = {
            name: BranchSpec(widths=tuple(v["widths"]), channels=tuple(v["channels"]))
            for name, v in d["branch_specs"].items()}
        d["head_sizes"] = tuple(d["head_sizes"])
        return cls(**d)


def config_digest(config: ModelConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def halving_sizes(first: int, count: int) -> tuple[int, ...]:
    """Size ladder for test-scale heads: halve (ceiling) and end at 1."""
    sizes = [max(1, first)]
    for _ in range(count - 2):
        sizes.append(max(1, -(-sizes[-1] // 2)))
    sizes.append(1)
    return tuple(sizes)


def enabled_branches(config: ModelConfig) -> list[str]:
    out = []
    if config.use_social:
        out.append("social")
    if config.use_demographics:
        out.append("demographic")
    if config.use_hashtags:
        out.append("hashtag")
    if config.use_sentiment_text or config.use_sentiment_hashtags:
        out.append("sentiment")
    return out


def branch_input_dim(config: ModelConfig, name: str) -> int:
    return {
        "social": config.pca_k,
        "demographic": config.demographic_dim,
        "hashtag": config.hashtag_dim,
        "sentiment": config.sentiment_dim,
    }[name]


def merged_length(config: ModelConfig) -> int:
    """Length of the merged feature vector; a pure function of the config."""
    total = 0
    for name in enabled_branches(config):
        spec = config.branch_specs[name]
        total += spec.output_length(branch_input_dim(config, name))
    if config.use_content:
        total += config.d
    return total


def init_model_params(config: ModelConfig, seed: int = 0,
                      dtype=np.float64) -> ParamStore:
    """All trainable parameters, uniform in [-init_scale, init_scale]."""
    rng = np.random.default_rng(seed)
    store = ParamStore()
    s = config.init_scale
    if config.use_content:
        encoders.init_lstm_params(store, rng, config.d, config.d, s, dtype=dtype)
        encoders.init_projection_params(store, rng, config.n, config.d, s,
                                        dtype=dtype)
        if config.attention in ("hga", "sa"):
            att.init_attention_params(store, rng, config.d, config.a, s, dtype)
    for name in enabled_branches(config):
        spec = config.branch_specs[name]
        ch_in = 1
        for i, (w, ch_out) in enumerate(zip(spec.widths, spec.channels)):
            store.add(f"branch.{name}.conv{i}.filters", (ch_out, w, ch_in),
                      rng, s, dtype)
            store.add(f"branch.{name}.conv{i}.bias", (ch_out,), rng, s, dtype)
            ch_in = ch_out
    in_dim = merged_length(config)
    for i, out_dim in enumerate(config.head_sizes):
        store.add(f"head.dense{i}.W", (in_dim, out_dim), rng, s, dtype)
        store.add(f"head.dense{i}.b", (out_dim,), rng, s, dtype)
        in_dim = out_dim
    return store


# ---------------------------------------------------------------------------
# feature caches and per-post bundles

@dataclass
class FeatureCaches:
    """Training-split-derived state needed to featurize any post."""

    provider: EmbeddingProvider
    lexicon: SentimentLexicon
    graph: object
    node_emb: dict[str, np.ndarray]
    social_stats: SocialStats
    pca: PCAModel


def build_caches(train_posts, config: ModelConfig,
                 lexicon: SentimentLexicon | None = None,
                 provider: EmbeddingProvider | None = None) -> FeatureCaches:
    """Fit all frozen feature state (graph, embeddings, stats, PCA) on the
    training split only."""
    provider = provider or EmbeddingProvider(kind="deterministic_stub",
                                             seed=config.embed_seed)
    lexicon = lexicon or SentimentLexicon.bundled()
    graph = build_cooccurrence_graph(train_posts, provider,
                                     base_dim=config.graph_base_dim)
    emb = node_embeddings(graph, dim=config.structure_dim, hops=config.graph_hops)
    stats = SocialStats.fit(train_posts)
    pca = fit_social_pca(train_posts, stats, k=config.pca_k)
    return FeatureCaches(provider=provider, lexicon=lexicon, graph=graph,
                         node_emb=emb, social_stats=stats, pca=pca)


@dataclass
class FeatureBundle:
    """Per-post tensors consumed by the model forward pass."""

    post_id: str
    tokens: np.ndarray
    token_mask: np.ndarray
    regions: np.ndarray
    hashtag_mat: np.ndarray
    hashtag_mask: np.ndarray
    f_social: np.ndarray
    f_demographic: np.ndarray
    f_hashtag: np.ndarray
    f_sentiment_text: np.ndarray
    f_sentiment_hashtags: np.ndarray
    target: float


def extract_features(post: Post, caches: FeatureCaches,
                     config: ModelConfig) -> FeatureBundle:
    tokens, token_mask = text_token_embeddings(post.caption, config.m, config.d,
                                               caches.provider)
    regions = image_region_features(post.image_ref, config.k, config.n,
                                    caches.provider)
    hmat, hmask = hashtag_embedding_matrix(post.hashtags, config.l, config.d,
                                           caches.provider)
    hf = hashtag_feature(post, caches.node_emb, caches.provider,
                         topic_dim=config.topic_dim,
                         structure_dim=config.structure_dim)
    sent = sentiment_feature(post, caches.lexicon)
    raw_social = social_vector(post, caches.social_stats)
    return FeatureBundle(
        post_id=post.post_id,
        tokens=tokens,
        token_mask=token_mask,
        regions=regions,
        hashtag_mat=hmat,
        hashtag_mask=hmask,
        f_social=apply_pca(caches.pca, raw_social),
        f_demographic=demographic_vector(post.faces, mode=config.demographic_mode),
        f_hashtag=hf.combined,
        f_sentiment_text=sent.caption_dist,
        f_sentiment_hashtags=sent.hashtag_dist,
        target=post.popularity,
    )


def extract_dataset(ds: Dataset, caches: FeatureCaches,
                    config: ModelConfig) -> list[FeatureBundle]:
    return [extract_features(p, caches, config) for p in ds.posts]


def branch_inputs(bundle: FeatureBundle, config: ModelConfig) -> dict[str, np.ndarray]:
    out = {}
    if config.use_social:
        out["social"] = bundle.f_social
    if config.use_demographics:
        out["demographic"] = bundle.f_demographic
    if config.use_hashtags:
        out["hashtag"] = bundle.f_hashtag
    if config.use_sentiment_text or config.use_sentiment_hashtags:
        blocks = []
        if config.use_sentiment_text:
            blocks.append(bundle.f_sentiment_text)
        if config.use_sentiment_hashtags:
            blocks.append(bundle.f_sentiment_hashtags)
        out["sentiment"] = np.concatenate(blocks)
    return out


# ---------------------------------------------------------------------------
# branch / head forward-backward

def branch_forward(f: np.ndarray, params: ParamStore, name: str,
                   n_layers: int = 3) -> tuple[np.ndarray, list]:
    """Run a feature vector through conv-relu layers and flatten."""
    x = np.asarray(f, dtype=np.float64).reshape(-1, 1)
    layer_cache = []
    for i in range(n_layers):
        filters = params[f"branch.{name}.conv{i}.filters"]
        bias = params[f"branch.{name}.conv{i}.bias"]
        pre = conv1d_forward(x, filters, bias)
        layer_cache.append((x, pre))
        x = relu(pre)
    return x.reshape(-1), layer_cache


def branch_backward(d_flat: np.ndarray, layer_cache: list, params: ParamStore,
                    name: str) -> dict[str, np.ndarray]:
    grads = {}
    x_last, pre_last = layer_cache[-1]
    d = d_flat.reshape(pre_last.shape)
    for i in reversed(range(len(layer_cache))):
        x_in, pre = layer_cache[i]
        d = relu_backward(pre, d)
        d_x, d_f, d_b = conv1d_backward(x_in, params[f"branch.{name}.conv{i}.filters"], d)
        grads[f"branch.{name}.conv{i}.filters"] = d_f
        grads[f"branch.{name}.conv{i}.bias"] = d_b
        d = d_x
    return grads


def merge(branch_outputs: dict[str, np.ndarray], content: np.ndarray | None,
          config: ModelConfig) -> np.ndarray:
    """Concatenate branch outputs and the content vector in fixed order."""
    parts = [branch_outputs[name] for name in BRANCH_ORDER if name in branch_outputs]
    if content is not None:
        parts.append(content)
    if not parts:
        raise ValueError("nothing to merge")
    return np.concatenate(parts)


def head_forward(x: np.ndarray, params: ParamStore, config: ModelConfig,
                 mode: str = "infer",
                 rng: np.random.Generator | None = None) -> tuple[float, list]:
    """Dense-relu-dropout stack with a final linear unit."""
    cache = []
    n = len(config.head_sizes)
    for i in range(n):
        w, b = params[f"head.dense{i}.W"], params[f"head.dense{i}.b"]
        pre = dense_forward(x, w, b)
        if i < n - 1:
            act = relu(pre)
            out, keep = dropout(act, config.dropout_rate, mode, rng)
        else:
            out, keep = pre, None
        cache.append((x, pre, keep))
        x = out
    return float(x[0]), cache


def head_backward(d_y: float, cache: list, params: ParamStore,
                  config: ModelConfig) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    grads = {}
    n = len(cache)
    d = np.array([d_y])
    for i in reversed(range(n)):
        x_in, pre, keep = cache[i]
        if i < n - 1:
            d = dropout_backward(d, keep, config.dropout_rate)
            d = relu_backward(pre, d)
        d_x, d_w, d_b = dense_backward(x_in, params[f"head.dense{i}.W"], d)
        grads[f"head.dense{i}.W"] = d_w
        grads[f"head.dense{i}.b"] = d_b
        d = d_x
    return d, grads


# ---------------------------------------------------------------------------
# full model

@dataclass
class ForwardCache:
    bundle: FeatureBundle
    lstm_cache: object | None
    att_cache: object | None
    branch_caches: dict
    head_cache: list
    inputs: dict


def forward_bundle(bundle: FeatureBundle, params: ParamStore, config: ModelConfig,
                   mode: str = "infer",
                   rng: np.random.Generator | None = None) -> tuple[float, ForwardCache]:
    lstm_cache = att_cache = None
    content = None
    if config.use_content:
        text, lstm_cache = encoders.lstm_encode(bundle.tokens, bundle.token_mask, params)
        image = encoders.project_regions(bundle.regions, params)
        if config.attention == "hga":
            out, att_cache = att.hga_attention(text, bundle.token_mask, image,
                                               bundle.hashtag_mat,
                                               bundle.hashtag_mask, params)
            content = out.content
        elif config.attention == "sa":
            out, att_cache = att.sa_attention(text, bundle.token_mask, image, params)
            content = out.content
        else:
            content = att.na_content(text, bundle.token_mask, image)
            att_cache = (text.shape[0], image.shape[0])
    inputs = branch_inputs(bundle, config)
    branch_out = {}
    branch_caches = {}
    for name in inputs:
        branch_out[name], branch_caches[name] = branch_forward(inputs[name], params, name)
    merged = merge(branch_out, content, config)
    y_hat, head_cache = head_forward(merged, params, config, mode, rng)
    return y_hat, ForwardCache(bundle=bundle, lstm_cache=lstm_cache,
                               att_cache=att_cache, branch_caches=branch_caches,
                               head_cache=head_cache, inputs=inputs)


def backward_bundle(d_y: float, fcache: ForwardCache, params: ParamStore,
                    config: ModelConfig) -> dict[str, np.ndarray]:
    """Gradient of d_y * y_hat w.r.t. every parameter, for one post."""
    d_merged, grads = head_backward(d_y, fcache.head_cache, params, config)
    offset = 0
    for name in BRANCH_ORDER:
        if name not in fcache.branch_caches:
            continue
        out_len = config.branch_specs[name].output_length(
            fcache.inputs[name].shape[0])
        seg = d_merged[offset:offset + out_len]
        grads.update(branch_backward(seg, fcache.branch_caches[name], params, name))
        offset += out_len
    if config.use_content:
        d_content = d_merged[offset:offset + config.d]
        if config.attention in ("hga", "sa"):
            att_grads, d_text, d_image = att.hga_backward(d_content,
                                                          fcache.att_cache, params)
            grads.update(att_grads)
        else:
            m, k = fcache.att_cache
            d_text, d_image = att.na_backward(d_content,
                                              fcache.bundle.token_mask, m, k)
        grads.update(encoders.lstm_backward(d_text, fcache.lstm_cache, params))
        grads.update(encoders.project_regions_backward(fcache.bundle.regions, d_image))
    return grads


def model_forward(post: Post, caches: FeatureCaches, params: ParamStore,
                  config: ModelConfig, mode: str = "infer",
                  rng: np.random.Generator | None = None) -> float:
    bundle = extract_features(post, caches, config)
    y_hat, _ = forward_bundle(bundle, params, config, mode, rng)
    return y_hat


def loss_mse(preds: np.ndarray, targets: np.ndarray) -> float:
    """Training objective: squared residuals scaled by 1/(2n)."""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {targets.shape}")
    if preds.size == 0:
        raise ValueError("loss over an empty batch")
    return float(np.sum((preds - targets) ** 2) / (2.0 * preds.size))


def batch_loss(bundles: list[FeatureBundle], params: ParamStore,
               config: ModelConfig, mode: str = "infer",
               rngs: list | None = None) -> float:
    """Forward-only batch objective; used by the finite-difference oracle."""
    preds = np.zeros(len(bundles))
    for i, bundle in enumerate(bundles):
        rng = rngs[i] if rngs is not None else None
        preds[i], _ = forward_bundle(bundle, params, config, mode, rng)
    return loss_mse(preds, np.array([b.target for b in bundles]))


def batch_loss_and_grads(bundles: list[FeatureBundle], params: ParamStore,
                         config: ModelConfig, mode: str = "train",
                         rngs: list | None = None):
    """Loss over a batch plus accumulated parameter gradients.

    The gradient of the 1/(2n) objective w.r.t. each prediction is
    (pred - target) / n; per-post gradients are scaled by that and summed.
    """
    n = len(bundles)
    if n == 0:
        raise ValueError("empty batch")
    preds = np.zeros(n)
    total = {name: np.zeros_like(arr) for name, arr in params.items()}
    fcaches = []
    for i, bundle in enumerate(bundles):
        rng = rngs[i] if rngs is not None else None
        preds[i], fc = forward_bundle(bundle, params, config, mode, rng)
        fcaches.append(fc)
    targets = np.array([b.target for b in bundles])
    for i in range(n):
        d_y = (preds[i] - targets[i]) / n
        grads = backward_bundle(d_y, fcaches[i], params, config)
        for name, g in grads.items():
            total[name] += g
    return loss_mse(preds, targets), total, preds


def model_backward(bundles: list[FeatureBundle], params: ParamStore,
                   config: ModelConfig, rngs: list | None = None) -> dict[str, np.ndarray]:
    """Gradient store for the batch loss (train-mode forward)."""
    _, grads, _ = batch_loss_and_grads(bundles, params, config, "train", rngs)
    return grads


# ---------------------------------------------------------------------------
# checkpoint serialization

_CKPT_MAGIC = b"PPCKPT1\n"
_CKPT_VERSION = 1
_DTYPES = {8: np.float64, 4: np.float32}


class CheckpointError(ValueError):
    """Corrupt, wrong-version, or incompatible checkpoint file."""


def _write_array(fh, arr: np.ndarray):
    arr = np.ascontiguousarray(arr)
    code = 8 if arr.dtype == np.float64 else 4
    fh.write(struct.pack("<BB", code, arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}i", *arr.shape))
    fh.write(arr.astype(f"<f{code}").tobytes())


def _read_array(fh) -> np.ndarray:
    code, ndim = struct.unpack("<BB", fh.read(2))
    shape = struct.unpack(f"<{ndim}i", fh.read(4 * ndim))
    count = int(np.prod(shape))
    arr = np.frombuffer(fh.read(code * count), dtype=f"<f{code}").astype(_DTYPES[code])
    return arr.reshape(shape)


def save_checkpoint(params: ParamStore, config: ModelConfig,
                    pca: PCAModel | None, path) -> None:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<i", _CKPT_VERSION))
        fh.write(struct.pack("<i", len(blob)))
        fh.write(blob)
        fh.write(hashlib.sha256(blob).digest())
        fh.write(struct.pack("<B", 1 if pca is not None else 0))
        if pca is not None:
            _write_array(fh, pca.mean)
            _write_array(fh, pca.components)
            _write_array(fh, pca.explained_variance)
        fh.write(struct.pack("<i", len(params)))
        for name, arr in params.items():
            nb = name.encode("utf-8")
            fh.write(struct.pack("<i", len(nb)))
            fh.write(nb)
            _write_array(fh, arr)


def load_checkpoint(path, expected_config: ModelConfig | None = None):
    """Read (params, config, pca); optionally verify config compatibility."""
    with open(path, "rb") as fh:
        if fh.read(len(_CKPT_MAGIC)) != _CKPT_MAGIC:
            raise CheckpointError(f"not a checkpoint file: {path}")
        (version,) = struct.unpack("<i", fh.read(4))
        if version != _CKPT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (blen,) = struct.unpack("<i", fh.read(4))
        blob = fh.read(blen)
        digest = fh.read(32)
        if hashlib.sha256(blob).digest() != digest:
            raise CheckpointError(f"checkpoint config digest mismatch (corrupt file): {path}")
        config = ModelConfig.from_dict(json.loads(blob.decode("utf-8")))
        if expected_config is not None and config_digest(expected_config) != config_digest(config):
            raise CheckpointError(
                "checkpoint was trained under a different configuration; "
                "re-train or pass the matching config")
        (has_pca,) = struct.unpack("<B", fh.read(1))
        pca = None
        if has_pca:
            mean = _read_array(fh)
            components = _read_array(fh)
            variance = _read_array(fh)
            pca = PCAModel(mean=mean, components=components,
                           explained_variance=variance)
        (count,) = struct.unpack("<i", fh.read(4))
        params = ParamStore()
        for _ in range(count):
            (nlen,) = struct.unpack("<i", fh.read(4))
            name = fh.read(nlen).decode("utf-8")
            params.add_array(name, _read_array(fh))
    return params, config, pca

"""Hashtag co-occurrence graph and the topic/structure hashtag feature.

The graph is built from the training split only. Node embeddings come from
an untrained, deterministic mean-aggregator over the weighted neighborhood;
the per-post hashtag feature concatenates a pooled topic embedding with the
averaged node embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, Post
from .providers import EmbeddingProvider

TOPIC_DIM = 768
STRUCTURE_DIM = 50


@dataclass
class HashtagGraph:
    """Weighted undirected co-occurrence graph over hashtags.

    Edge keys are (a, b) with a < b lexically; the weight counts posts in
    which both tags appear.
    """

    nodes: set[str] = field(default_factory=set)
    edges: dict[tuple[str, str], int] = field(default_factory=dict)
    node_features: dict[str, np.ndarray] = field(default_factory=dict)
    base_dim: int = 64

    def weight(self, a: str, b: str) -> int:
        key = (a, b) if a < b else (b, a)
        return self.edges.get(key, 0)

    def neighbors(self, tag: str) -> list[tuple[str, int]]:
        out = []
        for (a, b), w in self.edges.items():
            if a == tag:
                out.append((b, w))
            elif b == tag:
                out.append((a, w))
        return out


def build_cooccurrence_graph(posts: Dataset | list[Post],
                             provider: EmbeddingProvider,
                             base_dim: int = 64) -> HashtagGraph:
    """Count unordered co-occurring tag pairs per post (tags deduplicated)."""
    g = HashtagGraph(base_dim=base_dim)
    for post in posts:
        tags = sorted(set(post.hashtags))
        for tag in tags:
            if tag not in g.nodes:
                g.nodes.add(tag)
                g.node_features[tag] = provider.vector(tag, base_dim)
        for i in range(len(tags)):
            for j in range(i + 1, len(tags)):
                key = (tags[i], tags[j])
                g.edges[key] = g.edges.get(key, 0) + 1
    return g


def initial_node_states(g: HashtagGraph, dim: int) -> dict[str, np.ndarray]:
    """Base node features mapped to `dim` by a fixed random projection."""
    proj_rng = np.random.default_rng(np.random.SeedSequence([g.base_dim, dim]))
    projection = proj_rng.uniform(-1.0, 1.0, size=(g.base_dim, dim)) / np.sqrt(g.base_dim)
    return {t: g.node_features[t] @ projection for t in sorted(g.nodes)}


def node_embeddings(g: HashtagGraph, dim: int = STRUCTURE_DIM,
                    hops: int = 2) -> dict[str, np.ndarray]:
    """Deterministic structural embeddings via iterated weighted-mean pooling.

    Each node starts from its projected base feature. For `hops` rounds,
    nodes with neighbors update to tanh of the edge-weighted mean of their
    own and neighboring states (self-weight 1); isolated nodes keep their
    projection. Final vectors are scaled to unit norm when nonzero.
    """
    if dim < 1 or hops < 1:
        raise ValueError(f"dim and hops must be >= 1, got dim={dim}, hops={hops}")
    tags = sorted(g.nodes)
    if not tags:
        return {}
    state = initial_node_states(g, dim)
    neigh = {t: g.neighbors(t) for t in tags}
    for _ in range(hops):
        nxt = {}
        for t in tags:
            if not neigh[t]:
                nxt[t] = state[t]
                continue
            acc = state[t].copy()  # self-weight 1
            total = 1.0
            for other, w in neigh[t]:
                acc += w * state[other]
                total += w
            nxt[t] = np.tanh(acc / total)
        state = nxt
    out = {}
    for t in tags:
        norm = np.linalg.norm(state[t])
        out[t] = state[t] / norm if norm > 0 else state[t]
    return out


def structural_embedding(post: Post, emb: dict[str, np.ndarray],
                         dim: int = STRUCTURE_DIM) -> np.ndarray:
    """Mean node embedding over the post's hashtags; zero when none are known."""
    known = [emb[t] for t in post.hashtags if t in emb]
    if not known:
        return np.zeros(dim, dtype=np.float64)
    return np.mean(known, axis=0)


def topic_embedding(post: Post, provider: EmbeddingProvider,
                    dim: int = TOPIC_DIM) -> np.ndarray:
    """Mean of per-hashtag embeddings; zero vector for hashtag-free posts."""
    if not post.hashtags:
        return np.zeros(dim, dtype=np.float64)
    vecs = [provider.vector(t, dim) for t in post.hashtags]
    return np.mean(vecs, axis=0)


@dataclass(frozen=True)
class HashtagFeature:
    topic: np.ndarray
    structure: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return np.concatenate([self.topic, self.structure])


def hashtag_feature(post: Post, emb: dict[str, np.ndarray],
                    provider: EmbeddingProvider,
                    topic_dim: int = TOPIC_DIM,
                    structure_dim: int = STRUCTURE_DIM) -> HashtagFeature:
    """Topic embedding concatenated with the structural embedding (768 + 50)."""
    return HashtagFeature(
        topic=topic_embedding(post, provider, topic_dim),
        structure=structural_embedding(post, emb, structure_dim),
    )


def export_edge_list(g: HashtagGraph, path) -> None:
    """Write edges as `tag_a<TAB>tag_b<TAB>weight`, sorted lexically."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for (a, b) in sorted(g.edges):
            fh.write(f"{a}\t{b}\t{g.edges[(a, b)]}\n")

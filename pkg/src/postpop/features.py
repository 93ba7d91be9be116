"""Demographic, sentiment, and social/temporal feature encoders, plus PCA.

Block layout of the demographic one-hot vector (116 dims):
gender [0:2) + age [2:103) + emotion [103:110) + race [110:116).
The social vector is 9 z-scored numerics + day(7) + month(12) + time
segment(4) one-hots + raw duration = 33 dims, reduced to 6 by PCA.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .data import EMOTIONS, GENDERS, RACES, Post
from .providers import tokenize

DEMOGRAPHIC_DIM = 2 + 101 + 7 + 6  # 116
SOCIAL_RAW_DIM = 9 + 7 + 12 + 4 + 1  # 33
SENTIMENT_CLASSES = 5

TIME_SEGMENTS = ("night", "morning", "afternoon", "evening")  # 6-hour blocks from midnight


def demographic_vector(faces, mode: str = "onehot") -> np.ndarray:
    """Encode face annotations; multiple faces are averaged, none gives zeros.

    mode 'onehot' produces the 116-dim concatenation of one-hot blocks;
    mode 'ordinal' produces the 4-dim (gender, age, emotion, race) indices.
    """
    if mode not in ("onehot", "ordinal"):
        raise ValueError(f"unknown demographic mode {mode!r}")
    dim = DEMOGRAPHIC_DIM if mode == "onehot" else 4
    faces = list(faces)
    if not faces:
        return np.zeros(dim, dtype=np.float64)
    rows = []
    for face in faces:
        if mode == "ordinal":
            rows.append([GENDERS.index(face.gender), float(face.age),
                         EMOTIONS.index(face.emotion), RACES.index(face.race)])
            continue
        v = np.zeros(DEMOGRAPHIC_DIM, dtype=np.float64)
        v[GENDERS.index(face.gender)] = 1.0
        v[2 + face.age] = 1.0
        v[103 + EMOTIONS.index(face.emotion)] = 1.0
        v[110 + RACES.index(face.race)] = 1.0
        rows.append(v)
    return np.mean(np.asarray(rows, dtype=np.float64), axis=0)


class SentimentLexicon:
    """Word -> class (0..4) lookup, loaded from `word<TAB>class` lines."""

    def __init__(self, table: dict[str, int]):
        for word, cls in table.items():
            if not 0 <= cls <= 4:
                raise ValueError(f"class {cls} for {word!r} outside 0..4")
        self.table = dict(table)

    @classmethod
    def from_file(cls, path) -> "SentimentLexicon":
        table = {}
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                word, c = line.split("\t")
                table[word] = int(c)
        return cls(table)

    @classmethod
    def bundled(cls) -> "SentimentLexicon":
        ref = resources.files("postpop").joinpath("assets/sentiment_lexicon.tsv")
        with resources.as_file(ref) as path:
            return cls.from_file(path)

    def __len__(self):
        return len(self.table)


def sentiment_scores(text: str, lexicon: SentimentLexicon) -> np.ndarray:
    """5-bin class distribution of lexicon hits with add-one smoothing.

    No hits (or empty text) gives the uniform distribution.
    """
    counts = np.zeros(SENTIMENT_CLASSES, dtype=np.float64)
    for tok in tokenize(text):
        cls = lexicon.table.get(tok)
        if cls is not None:
            counts[cls] += 1.0
    counts += 1.0
    return counts / counts.sum()


@dataclass(frozen=True)
class SentimentVector:
    caption_dist: np.ndarray
    hashtag_dist: np.ndarray

    @property
    def combined(self) -> np.ndarray:
        return np.concatenate([self.caption_dist, self.hashtag_dist])


def sentiment_feature(post: Post, lexicon: SentimentLexicon) -> SentimentVector:
    """Caption distribution + hashtags-as-a-sentence distribution (10 dims)."""
    return SentimentVector(
        caption_dist=sentiment_scores(post.caption, lexicon),
        hashtag_dist=sentiment_scores(" ".join(post.hashtags), lexicon),
    )


def _hash_unit(s: str) -> float:
    digest = hashlib.blake2b(s.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") / 2.0 ** 64


def social_numerics(post: Post) -> np.ndarray:
    """The 9 raw numeric social features in fixed order."""
    m = post.metadata
    return np.array([
        _hash_unit(post.user_id),
        m.avg_views,
        m.group_count,
        m.avg_member_count,
        m.tag_count,
        m.title_length,
        m.description_length,
        m.tagged_people,
        m.comment_count,
    ], dtype=np.float64)


@dataclass(frozen=True)
class SocialStats:
    """Training-split mean/std for z-scoring the numeric social features.

    Index 9 holds the post-duration statistics; the duration is z-scored
    alongside the other numerics so no single raw scale dominates the PCA.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, posts) -> "SocialStats":
        rows = np.array([np.append(social_numerics(p), p.metadata.post_duration_days)
                         for p in posts])
        std = rows.std(axis=0)
        std = np.where(std > 0, std, 1.0)  # constant features contribute 0 after centering
        return cls(mean=rows.mean(axis=0), std=std)


def time_segment(hour: int) -> int:
    """Four 6-hour blocks from midnight: 0-5, 6-11, 12-17, 18-23."""
    if not 0 <= hour <= 23:
        raise ValueError(f"hour {hour} outside 0..23")
    return hour // 6


def social_vector(post: Post, stats: SocialStats) -> np.ndarray:
    """33-dim raw social vector: z-scored numerics, calendar one-hots, duration."""
    m = post.metadata
    z = (np.append(social_numerics(post), m.post_duration_days)
         - stats.mean) / stats.std
    day = np.zeros(7)
    day[m.post_day] = 1.0
    month = np.zeros(12)
    month[m.post_month] = 1.0
    seg = np.zeros(4)
    seg[time_segment(m.post_hour)] = 1.0
    return np.concatenate([z[:9], day, month, seg, z[9:]])


@dataclass(frozen=True)
class PCAModel:
    """Mean, orthonormal components (k x d), and per-component variances."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def k(self) -> int:
        return self.components.shape[0]


def fit_pca(rows: np.ndarray, k: int) -> PCAModel:
    """Top-k principal axes of mean-centered rows via SVD.

    Explained variances are the sample variances (ddof=1) of the projected
    training rows, sorted descending.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
    n, d = rows.shape
    if n < 2:
        raise ValueError(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k={k} outside [1, min(n-1, d)] = [1, {min(n - 1, d)}]")
    mean = rows.mean(axis=0)
    centered = rows - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variance = s ** 2 / (n - 1)
    return PCAModel(mean=mean, components=vt[:k], explained_variance=variance[:k])


def apply_pca(model: PCAModel, v: np.ndarray) -> np.ndarray:
    """Project a vector onto the principal axes: components @ (v - mean)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != model.mean.shape:
        raise ValueError(f"vector shape {v.shape} != model dim {model.mean.shape}")
    return model.components @ (v - model.mean)


def reconstruct_pca(model: PCAModel, coords: np.ndarray) -> np.ndarray:
    """Inverse map from component coordinates back to the data space."""
    return model.mean + coords @ model.components


def fit_social_pca(posts, stats: SocialStats, k: int = 6) -> PCAModel:
    rows = np.array([social_vector(p, stats) for p in posts])
    return fit_pca(rows, k)

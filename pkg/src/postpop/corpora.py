"""Synthetic corpus builders for demos, tests, and the bundled sample data.

The hashtag-signal corpus realizes a planted-signal experiment: each post's
popularity is the projection of one caption token's embedding onto a fixed
direction, and that token is named by the post's single hashtag, so an
attention mechanism that reads hashtags can isolate the signal while plain
mean pooling cannot.
"""

from __future__ import annotations

import numpy as np

from .data import (EMOTIONS, GENDERS, RACES, Dataset, FaceAnnotation, Post,
                   PostMetadata)
from .providers import EmbeddingProvider

_CAPTION_WORDS = (
    "sunset beach waves summer city lights night skyline coffee morning "
    "mountains hiking trail forest snow winter lake reflection food dinner "
    "homemade recipe friends weekend concert stage crowd festival colors "
    "garden flowers spring rain street market vintage camera portrait smile "
    "amazing beautiful boring tired happy lovely awful wonderful quiet calm"
).split()

_TAG_GROUPS = (
    ("sunset", "beach", "summer", "ocean"),
    ("food", "dinner", "homemade", "yum"),
    ("travel", "city", "skyline", "wander"),
    ("music", "concert", "live", "band"),
    ("nature", "hiking", "mountains", "trail"),
    ("art", "portrait", "vintage", "camera"),
)


def _random_face(rng) -> FaceAnnotation:
    return FaceAnnotation(
        gender=GENDERS[rng.integers(len(GENDERS))],
        age=int(rng.integers(0, 101)),
        emotion=EMOTIONS[rng.integers(len(EMOTIONS))],
        race=RACES[rng.integers(len(RACES))],
    )


def _metadata(rng, n_tags: int, comment_count: int | None = None) -> PostMetadata:
    return PostMetadata(
        avg_views=float(np.round(rng.uniform(0, 5000), 2)),
        group_count=int(rng.integers(0, 40)),
        avg_member_count=float(np.round(rng.uniform(0, 800), 2)),
        tag_count=n_tags,
        title_length=int(rng.integers(1, 18)),
        description_length=int(rng.integers(0, 300)),
        tagged_people=int(rng.integers(0, 2)),
        comment_count=int(rng.integers(0, 120)) if comment_count is None else comment_count,
        post_day=int(rng.integers(0, 7)),
        post_month=int(rng.integers(0, 12)),
        post_hour=int(rng.integers(0, 24)),
        post_duration_days=float(np.round(rng.uniform(1, 400), 2)),
    )


def make_sample_corpus(n: int = 60, seed: int = 7) -> Dataset:
    """Plausible mixed corpus with co-occurring hashtag groups and faces."""
    rng = np.random.default_rng(seed)
    posts = []
    for i in range(n):
        caption = " ".join(rng.choice(_CAPTION_WORDS, size=rng.integers(3, 10)))
        group = _TAG_GROUPS[rng.integers(len(_TAG_GROUPS))]
        n_tags = int(rng.integers(0, 5))
        tags = tuple(rng.choice(group, size=min(n_tags, len(group)), replace=False))
        meta = _metadata(rng, len(tags))
        faces = tuple(_random_face(rng) for _ in range(rng.integers(0, 3)))
        popularity = float(np.round(
            0.9 * np.log1p(meta.avg_views) / 8.0
            + 0.15 * len(tags)
            + 0.08 * len(faces)
            + 0.3 * np.log1p(meta.comment_count) / 5.0
            + rng.normal(0, 0.25), 6))
        posts.append(Post(
            post_id=f"sample{i:04d}",
            user_id=f"user{int(rng.integers(0, max(4, n // 6))):03d}",
            caption=caption,
            hashtags=tags,
            image_ref=f"img{i:04d}",
            faces=faces,
            metadata=meta,
            popularity=popularity,
        ))
    return Dataset(posts=tuple(posts), name="sample")


def make_hashtag_signal_corpus(n: int = 400, n_targets: int = 24,
                               caption_tokens: int = 5,
                               d: int = 8, embed_seed: int = 0,
                               seed: int = 0) -> Dataset:
    """Corpus where popularity is a projection of one hashtag-named token.

    Every caption draws `caption_tokens` distinct words from one shared
    vocabulary; the post's single hashtag repeats one of them (at a random
    position) and popularity = <embedding(that word), w> for a fixed unit
    direction w at embedding dim `d`. Since distractors come from the same
    vocabulary, only the hashtag identifies which token carries the signal.
    """
    if n_targets <= caption_tokens:
        raise ValueError("need more vocabulary words than caption slots")
    rng = np.random.default_rng(seed)
    provider = EmbeddingProvider(kind="deterministic_stub", seed=embed_seed)
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    targets = [f"topic{i:03d}" for i in range(n_targets)]
    posts = []
    for i in range(n):
        target = targets[rng.integers(n_targets)]
        others = [t for t in targets if t != target]
        words = list(rng.choice(others, size=caption_tokens - 1, replace=False))
        words.insert(int(rng.integers(caption_tokens)), target)
        meta = _metadata(rng, 1)
        popularity = float(provider.vector(target, d) @ direction)
        posts.append(Post(
            post_id=f"sig{i:05d}",
            user_id=f"user{int(rng.integers(0, 12)):03d}",
            caption=" ".join(words),
            hashtags=(target,),
            image_ref="shared-image",
            faces=(),
            metadata=meta,
            popularity=popularity,
        ))
    return Dataset(posts=tuple(posts), name="hashtag-signal")


def make_linear_social_corpus(n: int = 120, seed: int = 3,
                              slope: float = 0.05, intercept: float = -1.0) -> Dataset:
    """Popularity is an exact linear function of the comment count."""
    rng = np.random.default_rng(seed)
    posts = []
    for i in range(n):
        comments = int(rng.integers(0, 100))
        group = _TAG_GROUPS[rng.integers(len(_TAG_GROUPS))]
        tags = tuple(rng.choice(group, size=rng.integers(0, 3), replace=False))
        meta = _metadata(rng, len(tags), comment_count=comments)
        posts.append(Post(
            post_id=f"lin{i:04d}",
            user_id=f"user{int(rng.integers(0, 10)):03d}",
            caption=" ".join(rng.choice(_CAPTION_WORDS, size=rng.integers(2, 6))),
            hashtags=tags,
            image_ref=f"img{i:04d}",
            faces=(),
            metadata=meta,
            popularity=slope * comments + intercept,
        ))
    return Dataset(posts=tuple(posts), name="linear-social")

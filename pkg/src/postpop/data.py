"""Post records, JSON-lines corpus ingestion, and deterministic splitting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

GENDERS = ("male", "female")
EMOTIONS = ("fear", "sadness", "happiness", "anger", "disgust", "surprise", "neutral")
RACES = ("black", "white", "asian", "middle_eastern", "indian", "latino")


class CorpusError(ValueError):
    """Unrecoverable corpus problem (missing file, duplicate ids, nothing valid)."""


@dataclass(frozen=True)
class FaceAnnotation:
    gender: str
    age: int
    emotion: str
    race: str

    def validate(self):
        if self.gender not in GENDERS:
            raise ValueError(f"unknown gender {self.gender!r}")
        if not 0 <= self.age <= 100:
            raise ValueError(f"age {self.age} outside [0, 100]")
        if self.emotion not in EMOTIONS:
            raise ValueError(f"unknown emotion {self.emotion!r}")
        if self.race not in RACES:
            raise ValueError(f"unknown race {self.race!r}")


@dataclass(frozen=True)
class PostMetadata:
    avg_views: float = 0.0
    group_count: int = 0
    avg_member_count: float = 0.0
    tag_count: int = 0
    title_length: int = 0
    description_length: int = 0
    tagged_people: int = 0
    comment_count: int = 0
    post_day: int = 0
    post_month: int = 0
    post_hour: int = 0
    post_duration_days: float = 0.0

    def validate(self):
        for name in ("avg_views", "group_count", "avg_member_count", "tag_count",
                     "title_length", "description_length", "comment_count",
                     "post_duration_days"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.tagged_people not in (0, 1):
            raise ValueError("tagged_people must be 0 or 1")
        if not 0 <= self.post_day <= 6:
            raise ValueError("post_day outside 0..6")
        if not 0 <= self.post_month <= 11:
            raise ValueError("post_month outside 0..11")
        if not 0 <= self.post_hour <= 23:
            raise ValueError("post_hour outside 0..23")


@dataclass(frozen=True)
class Post:
    post_id: str
    user_id: str
    caption: str
    hashtags: tuple[str, ...]
    image_ref: str
    faces: tuple[FaceAnnotation, ...]
    metadata: PostMetadata
    popularity: float

    def validate(self):
        for tag in self.hashtags:
            if not tag or any(c.isspace() for c in tag):
                raise ValueError(f"hashtag {tag!r} is empty or contains whitespace")
        if not math.isfinite(self.popularity):
            raise ValueError("popularity must be finite")
        if self.metadata.tag_count != len(self.hashtags):
            raise ValueError(
                f"tag_count {self.metadata.tag_count} != {len(self.hashtags)} hashtags")
        for face in self.faces:
            face.validate()
        self.metadata.validate()


@dataclass(frozen=True)
class Dataset:
    posts: tuple[Post, ...]
    name: str = "corpus"

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)

    def popularity(self) -> np.ndarray:
        return np.array([p.popularity for p in self.posts], dtype=np.float64)


def _normalize_hashtags(raw) -> tuple[str, ...]:
    tags = []
    for tag in raw:
        tag = str(tag).lstrip("#").lower()
        tags.append(tag)
    return tuple(tags)


def _post_from_record(rec: dict) -> Post:
    faces = tuple(
        FaceAnnotation(gender=f["gender"], age=int(f["age"]),
                       emotion=f["emotion"], race=f["race"])
        for f in rec.get("faces", []))
    meta = PostMetadata(**{k: rec["metadata"][k] for k in rec["metadata"]})
    post = Post(
        post_id=str(rec["post_id"]),
        user_id=str(rec["user_id"]),
        caption=str(rec["caption"]),
        hashtags=_normalize_hashtags(rec["hashtags"]),
        image_ref=str(rec["image_ref"]),
        faces=faces,
        metadata=meta,
        popularity=float(rec["popularity"]),
    )
    post.validate()
    return post


def load_dataset(path, name: str | None = None) -> tuple[Dataset, int]:
    """Load a JSON-lines corpus.

    Returns (dataset, skipped) where `skipped` counts malformed lines.
    Raises CorpusError for a missing file, duplicate post ids, or a file
    with no valid records.
    """
    p = Path(path)
    if not p.exists():
        raise CorpusError(f"corpus file not found: {p}")
    posts: list[Post] = []
    seen: set[str] = set()
    skipped = 0
    with p.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                post = _post_from_record(rec)
            except (ValueError, KeyError, TypeError):
                skipped += 1
                continue
            if post.post_id in seen:
                raise CorpusError(f"duplicate post_id {post.post_id!r} in {p}")
            seen.add(post.post_id)
            posts.append(post)
    if not posts:
        raise CorpusError(f"no valid records in {p}")
    return Dataset(posts=tuple(posts), name=name or p.stem), skipped


def save_dataset(ds: Dataset, path) -> None:
    """Write a corpus back out as JSON lines; floats round-trip exactly."""
    p = Path(path)
    with p.open("w", encoding="utf-8") as fh:
        for post in ds.posts:
            rec = asdict(post)
            rec["hashtags"] = list(post.hashtags)
            rec["faces"] = [asdict(f) for f in post.faces]
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def split_dataset(ds: Dataset, fractions=(0.8, 0.1, 0.1),
                  seed: int = 0) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic train/val/test partition.

    Posts are sorted by post_id, shuffled under `seed`, then cut at the
    floors of the cumulative fraction boundaries, so the partition depends
    only on (contents, fractions, seed) and not on storage order.
    """
    if len(fractions) != 3:
        raise ValueError("fractions must be (train, val, test)")
    if any(f <= 0 for f in fractions):
        raise ValueError(f"all fractions must be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    ordered = sorted(ds.posts, key=lambda p: p.post_id)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    shuffled = [ordered[i] for i in perm]
    n = len(shuffled)
    cut1 = math.floor(n * fractions[0])
    cut2 = math.floor(n * (fractions[0] + fractions[1]))
    return (
        Dataset(tuple(shuffled[:cut1]), name=f"{ds.name}-train"),
        Dataset(tuple(shuffled[cut1:cut2]), name=f"{ds.name}-val"),
        Dataset(tuple(shuffled[cut2:]), name=f"{ds.name}-test"),
    )

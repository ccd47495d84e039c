"""Probabilistic viewing model for video chunks at a base station.

Combines three factors into a per-chunk request popularity: how likely the
station's users are to pick a video category, how likely a given video is
chosen inside its category (Zipf-ranked), and how likely a viewer is still
watching at the chunk's position (three-parameter Weibull drop model fitted
per category).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "WeibullParams",
    "CategoryTable",
    "DEFAULT_CATEGORIES",
    "VideoMeta",
    "PopularityTable",
    "zipf_weights",
    "zipf_popularity",
    "category_request_prob",
    "video_in_category_prob",
    "drop_pdf",
    "watch_prob",
    "chunk_popularity",
    "build_popularity_table",
    "redistribute_preferences",
    "validate_preferences",
]


@dataclass(frozen=True)
class WeibullParams:
    """Shape / scale / location coefficients of a category's drop-position PDF."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not math.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite, got {self.gamma}")


class CategoryTable:
    """Ordered set of video categories with their drop-model coefficients."""

    def __init__(self, records: Iterable[tuple[str, WeibullParams]]):
        records = list(records)
        if not records:
            raise ValueError("category table must not be empty")
        names = [name for name, _ in records]
        if len(set(names)) != len(names):
            raise ValueError("duplicate category names")
        self.names: tuple[str, ...] = tuple(names)
        self.params: tuple[WeibullParams, ...] = tuple(p for _, p in records)

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, category: int) -> WeibullParams:
        return self.params[category]

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "CategoryTable":
        """Build from config records with keys name, alpha, beta, gamma."""
        return cls(
            (
                str(r["name"]),
                WeibullParams(float(r["alpha"]), float(r["beta"]), float(r["gamma"])),
            )
            for r in records
        )

    def to_records(self) -> list[dict]:
        return [
            {"name": n, "alpha": p.alpha, "beta": p.beta, "gamma": p.gamma}
            for n, p in zip(self.names, self.params)
        ]


# Drop-position fit coefficients for the 14 stock YouTube-style categories.
DEFAULT_CATEGORIES = CategoryTable(
    [
        ("People", WeibullParams(2.39, 0.56, 0.0023)),
        ("Gaming", WeibullParams(1.98, 0.45, 0.0146)),
        ("Entertainment", WeibullParams(2.41, 0.56, -0.0064)),
        ("News", WeibullParams(4.70, 0.95, -0.298)),
        ("Music", WeibullParams(2.45, 0.51, 0.0178)),
        ("Sports", WeibullParams(4.34, 0.92, -0.267)),
        ("Film", WeibullParams(2.32, 0.62, 0.0205)),
        ("Howto", WeibullParams(2.74, 0.52, 0.0153)),
        ("Comedy", WeibullParams(2.89, 0.65, -0.0250)),
        ("Education", WeibullParams(2.40, 0.54, -0.0104)),
        ("Science", WeibullParams(2.53, 0.53, 0.013)),
        ("Autos", WeibullParams(2.68, 0.58, 0.0016)),
        ("Activism", WeibullParams(2.50, 0.59, -0.0228)),
        ("Pets", WeibullParams(3.089, 0.69, -0.066)),
    ]
)


@dataclass(frozen=True)
class VideoMeta:
    """Static library metadata for one video."""

    video_id: int
    category: int
    chunk_count: int
    zipf_rank: int
    popularity: float

    def __post_init__(self):
        if self.chunk_count < 1:
            raise ValueError("chunk_count must be >= 1")
        if self.zipf_rank < 1:
            raise ValueError("zipf_rank must be >= 1")
        if not (0.0 < self.popularity <= 1.0):
            raise ValueError("popularity must be in (0, 1]")


def zipf_weights(library_size: int, alpha: float) -> np.ndarray:
    """Normalized Zipf mass over ranks 1..library_size."""
    if library_size < 1:
        raise ValueError("library_size must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    ranks = np.arange(1, library_size + 1, dtype=np.float64)
    weights = ranks ** (-float(alpha))
    return weights / weights.sum()


def zipf_popularity(rank: int, library_size: int, alpha: float) -> float:
    """Probability mass of the video at `rank` under a Zipf(alpha) library.

    rank^(-alpha) normalized by the sum over all ranks; values over the whole
    library sum to 1.
    """
    if not 1 <= rank <= library_size:
        raise ValueError(f"rank {rank} out of range [1, {library_size}]")
    return float(zipf_weights(library_size, alpha)[rank - 1])


def validate_preferences(prefs: np.ndarray, tol: float = 1e-9) -> None:
    """Check each row is a probability vector over categories."""
    prefs = np.asarray(prefs, dtype=np.float64)
    if prefs.ndim != 2 or prefs.shape[0] == 0:
        raise ValueError("preference matrix must be non-empty and 2-D")
    if (prefs < -tol).any():
        raise ValueError("preference vectors must be non-negative")
    sums = prefs.sum(axis=1)
    if not np.allclose(sums, 1.0, atol=tol, rtol=0.0):
        raise ValueError("preference vectors must sum to 1")


def category_request_prob(bs_prefs: np.ndarray, category: int) -> float:
    """Probability that a request at this station targets `category`.

    Every user is equally likely to be the requester, so this is the mean of
    the per-user preference masses for the category.
    """
    prefs = np.asarray(bs_prefs, dtype=np.float64)
    if prefs.ndim != 2 or prefs.shape[0] == 0:
        raise ValueError("station must have at least one user preference vector")
    return float(prefs[:, category].mean())


def video_in_category_prob(
    video: VideoMeta, category: int, library: Sequence[VideoMeta]
) -> float:
    """Probability of choosing `video` among the videos of `category`.

    Zero when the video is not in the category; otherwise its library
    popularity normalized over the category members. A category with no
    member videos yields 0 for every video, and callers must treat it as
    unrequestable.
    """
    if not library:
        raise ValueError("library must not be empty")
    if video.category != category:
        return 0.0
    mass = sum(v.popularity for v in library if v.category == category)
    if mass <= 0.0:
        return 0.0
    return video.popularity / mass


def drop_pdf(position: float, params: WeibullParams) -> float:
    """Density of a viewer dropping out at `position` (normalized to [0, 1]).

    Three-parameter Weibull; zero at or below the location parameter, where
    the distribution has no support.
    """
    if position <= params.gamma:
        return 0.0
    z = (position - params.gamma) / params.beta
    a = params.alpha
    return (a / params.beta) * z ** (a - 1.0) * math.exp(-(z**a))


def watch_prob(chunk_position: float, params: WeibullParams) -> float:
    """Probability that a viewer is still watching at `chunk_position` in [0, 1].

    Closed-form survival of the drop density from the position to the end of
    the video. Positions below the location parameter are clamped onto its
    support so the result stays real; output is clamped into [0, 1].
    """
    if not 0.0 <= chunk_position <= 1.0:
        raise ValueError("chunk_position must be in [0, 1]")
    a, b, g = params.alpha, params.beta, params.gamma
    start = max(chunk_position - g, 0.0)
    p = math.exp(-((start / b) ** a)) - math.exp(-(((1.0 - g) / b) ** a))
    return min(max(p, 0.0), 1.0)


def chunk_popularity(
    bs_prefs: np.ndarray,
    video: VideoMeta,
    chunk_index: int,
    library: Sequence[VideoMeta],
    coeffs: CategoryTable,
) -> float:
    """Request popularity of one chunk at one station.

    Product of the station's category-request probability, the video's
    within-category choice probability, and the watch probability at the
    chunk's start position (index / chunk_count).
    """
    if not 0 <= chunk_index < video.chunk_count:
        raise ValueError(
            f"chunk_index {chunk_index} out of range [0, {video.chunk_count})"
        )
    p_cat = category_request_prob(bs_prefs, video.category)
    p_vid = video_in_category_prob(video, video.category, library)
    p_watch = watch_prob(chunk_index / video.chunk_count, coeffs[video.category])
    return p_cat * p_vid * p_watch


class PopularityTable:
    """Per-station map from (video_id, chunk_index) to request popularity.

    Immutable after construction; `entries` is a read-only view. The engine
    keeps a reference to the underlying dict for hot lookups.
    """

    __slots__ = ("bs_id", "_entries", "entries")

    def __init__(self, bs_id: int, entries: dict[tuple[int, int], float]):
        self.bs_id = bs_id
        self._entries = entries
        self.entries = MappingProxyType(entries)

    def get(self, video_id: int, chunk_index: int) -> float:
        return self._entries[(video_id, chunk_index)]

    def __len__(self) -> int:
        return len(self._entries)

    def raw(self) -> dict[tuple[int, int], float]:
        """Internal dict for hot-path lookups; treat as read-only."""
        return self._entries


def build_popularity_table(
    bs_id: int,
    bs_prefs: np.ndarray,
    library: Sequence[VideoMeta],
    coeffs: CategoryTable,
) -> PopularityTable:
    """Evaluate the chunk-popularity product for every (video, chunk) pair."""
    prefs = np.asarray(bs_prefs, dtype=np.float64)
    if prefs.ndim != 2 or prefs.shape[0] == 0:
        raise ValueError("station must have at least one user preference vector")
    p_cat = prefs.mean(axis=0)
    cat_mass = np.zeros(len(coeffs))
    for v in library:
        cat_mass[v.category] += v.popularity
    entries: dict[tuple[int, int], float] = {}
    for v in library:
        mass = cat_mass[v.category]
        base = 0.0 if mass <= 0.0 else p_cat[v.category] * v.popularity / mass
        params = coeffs[v.category]
        c = v.chunk_count
        for i in range(c):
            entries[(v.video_id, i)] = base * watch_prob(i / c, params)
    return PopularityTable(bs_id, entries)


def redistribute_preferences(
    prefs: np.ndarray, library: Sequence[VideoMeta], category_count: int
) -> np.ndarray:
    """Move preference mass off categories that have no videos in the library.

    Each user's mass on empty categories is redistributed proportionally over
    their non-empty-category preferences (uniformly when a user has no mass
    there), so that category choice never lands on an unrequestable category.
    """
    prefs = np.asarray(prefs, dtype=np.float64)
    non_empty = np.zeros(category_count, dtype=bool)
    for v in library:
        non_empty[v.category] = True
    if not non_empty.any():
        raise ValueError("library populates no category")
    if non_empty.all():
        return prefs.copy()
    out = np.where(non_empty[None, :], prefs, 0.0)
    kept = out.sum(axis=1)
    uniform = non_empty.astype(np.float64) / non_empty.sum()
    zero_rows = kept <= 0.0
    out[zero_rows] = uniform
    out[~zero_rows] /= kept[~zero_rows, None]
    return out

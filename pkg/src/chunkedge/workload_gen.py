"""Seedable per-station request-stream generation.

Users at each station alternate exponentially sized active/idle sessions.
Playback initiations arrive as a Poisson process; each one is assigned to a
currently active user, who picks a category by preference, a video inside the
category by library popularity, a bitrate level uniformly, and a drop
position from the category's Weibull model. Chunks are then requested
sequentially from the start of the video up to the drop chunk, one chunk
duration apart.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .popularity_model import CategoryTable, VideoMeta, WeibullParams, zipf_weights

__all__ = [
    "BitrateLadder",
    "ArrivalParams",
    "VideoChoice",
    "SessionPlan",
    "RequestEvent",
    "generate_users",
    "generate_library",
    "generate_requests",
    "generate_bs_stream",
    "sample_drop_positions",
    "drop_chunk_index",
]


@dataclass(frozen=True)
class BitrateLadder:
    """The ordered bitrate versions every video is available in.

    Levels are 1-based; level M is the highest bitrate. All chunks of one
    level have the same byte size: bitrate * duration / 8.
    """

    bitrates_mbps: tuple[float, ...]
    chunk_seconds: float = 30.0

    def __post_init__(self):
        if not self.bitrates_mbps:
            raise ValueError("ladder must have at least one level")
        if any(b <= 0 for b in self.bitrates_mbps):
            raise ValueError("bitrates must be positive")
        if any(
            b2 <= b1
            for b1, b2 in zip(self.bitrates_mbps, self.bitrates_mbps[1:])
        ):
            raise ValueError("bitrates must be strictly increasing")
        if self.chunk_seconds <= 0:
            raise ValueError("chunk_seconds must be positive")

    @property
    def levels(self) -> int:
        return len(self.bitrates_mbps)

    def bitrate(self, level: int) -> float:
        return self.bitrates_mbps[level - 1]

    def chunk_bytes(self, level: int) -> int:
        return int(round(self.bitrate(level) * 1e6 * self.chunk_seconds / 8.0))

    def chunk_sizes(self) -> tuple[int, ...]:
        """Byte size per level, 1-based access via [level - 1]."""
        return tuple(self.chunk_bytes(l) for l in range(1, self.levels + 1))

    @classmethod
    def default(cls) -> "BitrateLadder":
        # 0.45/0.55/0.67/0.82 of a 2 Mbps source, 30 s chunks.
        scales = (0.45, 0.55, 0.67, 0.82)
        return cls(tuple(s * 2.0 for s in scales), 30.0)


@dataclass(frozen=True)
class ArrivalParams:
    """Arrival-process knobs for one station's request stream."""

    request_lambda: float = 5.0
    base_interarrival_s: float = 30.0
    session_mean_s: float = 300.0

    def __post_init__(self):
        if self.request_lambda <= 0 or self.base_interarrival_s <= 0:
            raise ValueError("arrival rate parameters must be positive")
        if self.session_mean_s <= 0:
            raise ValueError("session_mean_s must be positive")

    @property
    def playback_gap_s(self) -> float:
        """Mean gap between playback initiations at one station."""
        return self.base_interarrival_s / self.request_lambda


@dataclass(frozen=True)
class VideoChoice:
    """One playback initiation inside a session."""

    time_s: float
    video_id: int
    level: int
    drop_chunk: int


@dataclass
class SessionPlan:
    """One active session of one user, with the playbacks started in it."""

    user_id: int
    bs_id: int
    start_s: float
    end_s: float
    requests: list[VideoChoice] = field(default_factory=list)


@dataclass(frozen=True)
class RequestEvent:
    """One viewer chunk request arriving at a station."""

    time_s: float
    bs_id: int
    video_id: int
    chunk_idx: int
    level: int
    playback_id: int


def generate_users(
    bs_count: int, users_per_bs: int, category_count: int, seed: int
) -> list[np.ndarray]:
    """Per-station user preference matrices, uniform on the category simplex.

    Station j uses the j-th child stream of the seed, so streams are stable
    under changes to bs_count ordering.
    """
    if bs_count < 1 or users_per_bs < 1 or category_count < 1:
        raise ValueError("bs_count, users_per_bs and category_count must be >= 1")
    children = np.random.SeedSequence(seed).spawn(bs_count)
    out = []
    for child in children:
        rng = np.random.default_rng(child)
        out.append(rng.dirichlet(np.ones(category_count), size=users_per_bs))
    return out


def generate_library(
    video_count: int,
    zipf_alpha: float,
    coeffs: CategoryTable,
    max_chunks: int,
    seed: int,
) -> list[VideoMeta]:
    """Synthetic video library: random rank/category/length assignment."""
    if video_count < 1:
        raise ValueError("video_count must be >= 1")
    if max_chunks < 1:
        raise ValueError("max_chunks must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    ranks = rng.permutation(video_count) + 1
    categories = rng.integers(0, len(coeffs), size=video_count)
    chunk_counts = rng.integers(1, max_chunks + 1, size=video_count)
    weights = zipf_weights(video_count, zipf_alpha)
    return [
        VideoMeta(
            video_id=i,
            category=int(categories[i]),
            chunk_count=int(chunk_counts[i]),
            zipf_rank=int(ranks[i]),
            popularity=float(weights[ranks[i] - 1]),
        )
        for i in range(video_count)
    ]


def sample_drop_positions(
    params: WeibullParams, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw drop positions in [0, 1] by rejection from the Weibull model."""
    out = np.empty(n)
    filled = 0
    while filled < n:
        u = rng.random(max(n - filled, 64))
        draws = params.gamma + params.beta * (-np.log(u)) ** (1.0 / params.alpha)
        ok = draws[(draws >= 0.0) & (draws <= 1.0)]
        take = min(len(ok), n - filled)
        out[filled : filled + take] = ok[:take]
        filled += take
    return out


def drop_chunk_index(position: float, chunk_count: int) -> int:
    """Last fully watched chunk for a drop at `position` in [0, 1].

    The viewer watches the chunk they drop in to its end, so the drop chunk
    index is ceil(position * chunks) - 1, clamped into [0, chunks - 1].
    """
    idx = math.ceil(position * chunk_count) - 1
    return min(max(idx, 0), chunk_count - 1)


class _ActiveSet:
    """Uniformly samplable set of active users with O(1) add/remove."""

    def __init__(self):
        self.items: list[int] = []
        self.pos: dict[int, int] = {}

    def add(self, user: int) -> None:
        self.pos[user] = len(self.items)
        self.items.append(user)

    def remove(self, user: int) -> None:
        i = self.pos.pop(user)
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self.pos[last] = i

    def __contains__(self, user: int) -> bool:
        return user in self.pos

    def __len__(self) -> int:
        return len(self.items)

    def pick(self, rng: np.random.Generator) -> int:
        return self.items[int(rng.integers(len(self.items)))]


def generate_bs_stream(
    bs_id: int,
    bs_prefs: np.ndarray,
    library: list[VideoMeta],
    coeffs: CategoryTable,
    ladder: BitrateLadder,
    total_requests: int,
    arrival: ArrivalParams,
    seed_seq: np.random.SeedSequence,
) -> tuple[list[RequestEvent], list[SessionPlan]]:
    """One station's time-ordered chunk requests plus the session plans behind them."""
    rng = np.random.default_rng(seed_seq)
    if total_requests <= 0:
        return [], []

    prefs = np.asarray(bs_prefs, dtype=np.float64)
    users = prefs.shape[0]
    user_cdf = np.cumsum(prefs, axis=1)

    # Per-category choice machinery (videos sorted by id; popularity cumsum).
    cat_count = len(coeffs)
    cat_videos: list[list[VideoMeta]] = [[] for _ in range(cat_count)]
    for v in library:
        cat_videos[v.category].append(v)
    cat_cdf = []
    for vids in cat_videos:
        if vids:
            w = np.array([v.popularity for v in vids])
            cat_cdf.append(np.cumsum(w) / w.sum())
        else:
            cat_cdf.append(None)

    # Alternating active/idle user sessions; half the users start active.
    active = _ActiveSet()
    toggles: list[tuple[float, int]] = []
    session_start = {}
    start_active = rng.random(users) < 0.5
    first_toggle = rng.exponential(arrival.session_mean_s, size=users)
    for u in range(users):
        if start_active[u]:
            active.add(u)
            session_start[u] = 0.0
        heapq.heappush(toggles, (float(first_toggle[u]), u))

    sessions: list[SessionPlan] = []
    open_session: dict[int, SessionPlan] = {}

    def close_session(user: int, end: float) -> None:
        plan = open_session.pop(user, None)
        if plan is None:
            plan = SessionPlan(user, bs_id, session_start[user], end)
        else:
            plan.end_s = end
        sessions.append(plan)

    events_t: list[float] = []
    events_v: list[int] = []
    events_c: list[int] = []
    events_l: list[int] = []
    events_p: list[int] = []

    t = 0.0
    playback_id = 0
    emitted = 0
    while emitted < total_requests:
        t += float(rng.exponential(arrival.playback_gap_s))
        while toggles and toggles[0][0] <= t:
            when, u = heapq.heappop(toggles)
            if u in active:
                active.remove(u)
                close_session(u, when)
            else:
                active.add(u)
                session_start[u] = when
            heapq.heappush(
                toggles, (when + float(rng.exponential(arrival.session_mean_s)), u)
            )
        if len(active):
            user = active.pick(rng)
        else:
            user = int(rng.integers(users))

        cat = int(np.searchsorted(user_cdf[user], rng.random(), side="right"))
        cat = min(cat, cat_count - 1)
        cdf = cat_cdf[cat]
        if cdf is None:
            raise ValueError(
                f"category {cat} has preference mass but no videos; "
                "redistribute preferences before generating requests"
            )
        video = cat_videos[cat][
            min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)
        ]
        level = int(rng.integers(1, ladder.levels + 1))

        params = coeffs[cat]
        while True:
            draw = params.gamma + params.beta * (
                (-math.log(rng.random())) ** (1.0 / params.alpha)
            )
            if 0.0 <= draw <= 1.0:
                break
        drop = drop_chunk_index(draw, video.chunk_count)

        choice = VideoChoice(t, video.video_id, level, drop)
        if user in active:
            plan = open_session.get(user)
            if plan is None:
                plan = SessionPlan(user, bs_id, session_start[user], t)
                open_session[user] = plan
            plan.requests.append(choice)

        n_chunks = drop + 1
        dt = ladder.chunk_seconds
        for i in range(n_chunks):
            events_t.append(t + i * dt)
            events_v.append(video.video_id)
            events_c.append(i)
            events_l.append(level)
            events_p.append(playback_id)
        playback_id += 1
        emitted += n_chunks

    for u in list(open_session):
        close_session(u, t)

    order = np.lexsort(
        (np.asarray(events_c), np.asarray(events_p), np.asarray(events_t))
    )[:total_requests]
    events = [
        RequestEvent(
            events_t[i], bs_id, events_v[i], events_c[i], events_l[i], events_p[i]
        )
        for i in order.tolist()
    ]
    return events, sessions


def generate_requests(
    bs_prefs: list[np.ndarray],
    library: list[VideoMeta],
    coeffs: CategoryTable,
    ladder: BitrateLadder,
    total_requests: int,
    arrival: ArrivalParams,
    seed: int,
) -> list[list[RequestEvent]]:
    """Time-ordered chunk-request streams, one list per station.

    Station streams use independent child seeds of `seed`, so they can be
    generated in any order (or in parallel) with identical results.
    """
    if total_requests < 0:
        raise ValueError("total_requests must be >= 0")
    children = np.random.SeedSequence(seed).spawn(len(bs_prefs))
    streams = []
    for bs_id, (prefs, child) in enumerate(zip(bs_prefs, children)):
        events, _ = generate_bs_stream(
            bs_id, prefs, library, coeffs, ladder, total_requests, arrival, child
        )
        streams.append(events)
    return streams

"""Caching policies: popularity-aware pre-load and replacement, plus LRU.

The popularity-aware pair works on chunk popularities from the station's own
table. Pre-load fills each cache with its most popular chunks at the top
bitrate, stepping down one level whenever a full pass fits. The replacement
policy admits unconditionally while space is free; on a full cache it ranks
the incoming chunk against the least popular cached chunk (LPC) and evicts
replicas before unique chunks, never keeping a duplicate the cluster does
not need. LRU backs the reconstructed baseline systems.

Ties anywhere resolve by the ascending total order
(popularity, video, chunk, level); "most popular first" is its reverse.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cache_core import (
    ChunkVersion,
    evict,
    insert,
    peek_lpc,
    peek_min,
    pop_min,
    touch,
)

__all__ = [
    "POLICY_KINDS",
    "PolicyConfig",
    "CACHED",
    "RELAYED",
    "TOUCHED",
    "lpc",
    "crp_admit",
    "lru_admit",
    "pcp_preload",
]

POLICY_KINDS = ("PCCP", "CachePro", "CoCache", "JCCP")

# Admission outcomes.
CACHED = "cached"
RELAYED = "relayed"
TOUCHED = "touched"


@dataclass(frozen=True)
class PolicyConfig:
    """Caching/routing policy selection for a run."""

    kind: str = "PCCP"
    popularity_threshold: float = 0.001
    prefetch_window: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; "
                             f"expected one of {POLICY_KINDS}")
        if self.popularity_threshold < 0:
            raise ValueError("popularity_threshold must be >= 0")
        if self.prefetch_window < 0:
            raise ValueError("prefetch_window must be >= 0")


def lpc(node, ctg):
    """Least popular cached chunk: (ChunkVersion, popularity).

    An empty cache reports the 0 popularity sentinel, under which any
    incoming chunk admits, consistent with the free-space branch.
    """
    item = peek_lpc(node, ctg)
    if item is None:
        return None, 0.0
    pop, video, chunk, level = item
    return ChunkVersion(video, chunk, level), pop


def _has_same_or_higher(ctg, video, chunk, level):
    levels = ctg.groups.get((video, chunk))
    if not levels:
        return False
    for h, holders in levels.items():
        if h >= level and holders:
            return True
    return False


def _evict_global_min(node, ctg, evicted):
    """Evict the node's overall least popular chunk; returns its popularity."""
    a = peek_min(node, ctg, True)
    b = peek_min(node, ctg, False)
    if a is None and b is None:
        return None
    if b is None or (a is not None and a < b):
        item = pop_min(node, ctg, True)
    else:
        item = pop_min(node, ctg, False)
    cv = ChunkVersion(item[1], item[2], item[3])
    evict(node, ctg, cv)
    evicted.append(cv)
    return item[0]


def _removal_routine(node, ctg, size, evicted):
    """Free `size` bytes, taking unpopular replicas before unique chunks."""
    while node.free_bytes < size:
        item = pop_min(node, ctg, True)
        if item is None:
            item = pop_min(node, ctg, False)
        if item is None:
            return False
        cv = ChunkVersion(item[1], item[2], item[3])
        evict(node, ctg, cv)
        evicted.append(cv)
    return True


def crp_admit(node, ctg, cv, now, threshold=0.001):
    """Popularity-aware admission of a chunk just served at this node.

    Returns (outcome, evicted chunk versions). A version already cached here
    only has its access time refreshed. With free space everything admits.
    On a full cache:

    * incoming replica (a same-or-higher version exists in the cluster):
      admitted only if strictly more popular than the LPC, after freeing
      space via the replica-first removal routine; otherwise relayed to the
      viewer without caching.
    * incoming unique chunk less popular than the LPC: chunks whose
      popularity is within `threshold` above the LPC are evicted, in
      ascending popularity, until the chunk fits; if the eligible candidates
      run out first, the evictions stand and the chunk is relayed uncached.
    * incoming unique chunk at least as popular as the LPC: the removal
      routine frees space and the chunk is admitted.

    A chunk bigger than the whole cache is always relayed.
    """
    if cv in node.cached:
        touch(ctg, cv, node.node_id, now)
        return TOUCHED, []
    size = node.size_of(cv.level)
    if size > node.capacity:
        return RELAYED, []
    if node.free_bytes >= size:
        insert(node, ctg, cv, now)
        return CACHED, []

    evicted = []
    lpc_item = peek_lpc(node, ctg)
    lpc_pop = lpc_item[0] if lpc_item is not None else 0.0
    pop = node.popularity_of(cv.video, cv.chunk)

    if _has_same_or_higher(ctg, cv.video, cv.chunk, cv.level):
        if lpc_pop < pop:
            _removal_routine(node, ctg, size, evicted)
            insert(node, ctg, cv, now)
            return CACHED, evicted
        return RELAYED, evicted

    if lpc_pop > pop:
        while node.free_bytes < size:
            a = peek_min(node, ctg, True)
            b = peek_min(node, ctg, False)
            if b is None or (a is not None and a < b):
                item = a
            else:
                item = b
            if item is None or item[0] - lpc_pop >= threshold:
                return RELAYED, evicted
            _evict_global_min(node, ctg, evicted)
        insert(node, ctg, cv, now)
        return CACHED, evicted

    _removal_routine(node, ctg, size, evicted)
    insert(node, ctg, cv, now)
    return CACHED, evicted


def lru_admit(node, ctg, cv, now):
    """Always-admit with least-recently-accessed eviction."""
    if cv in node.cached:
        touch(ctg, cv, node.node_id, now)
        return TOUCHED, []
    size = node.size_of(cv.level)
    if size > node.capacity:
        return RELAYED, []
    evicted = []
    while node.free_bytes < size:
        oldest = next(iter(node.lru))
        evict(node, ctg, oldest)
        evicted.append(oldest)
    insert(node, ctg, cv, now)
    return CACHED, evicted


def pcp_preload(nodes, tables, ladder, ctg):
    """Fill empty caches with each station's most popular chunks.

    Chunks are inserted in descending popularity at the top level until the
    next one no longer fits; if a whole pass fits, the level decrements and
    the pass repeats. Every node ranks by its own station's table, so the
    pre-load may create cluster replicas; flags are set accordingly.

    Returns {node_id: (chunks_inserted, bytes_inserted)} for the one-time
    fetch cost accounting.
    """
    report = {}
    for node, table in zip(nodes, tables):
        if node.cached:
            raise ValueError(f"node {node.node_id} not empty before pre-load")
        order = sorted(
            table.raw().items(),
            key=lambda kv: (kv[1], kv[0][0], kv[0][1]),
            reverse=True,
        )
        count = 0
        total = 0
        if order:
            level = ladder.levels
            idx = 0
            while level >= 1 and node.free_bytes >= node.size_of(level):
                (video, chunk), _pop = order[idx]
                insert(node, ctg, ChunkVersion(video, chunk, level), 0.0)
                total += node.size_of(level)
                count += 1
                idx += 1
                if idx == len(order):
                    level -= 1
                    idx = 0
        report[node.node_id] = (count, total)
    return report

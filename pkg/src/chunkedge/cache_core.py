"""Per-node cache state and the cluster-wide synchronized chunk catalogue.

All mutation goes through insert/evict/touch so the catalogue always mirrors
the union of the node caches (synchronization is atomic in simulation).
A cached chunk version is a replica when a same-or-higher bitrate version of
the same (video, chunk) exists on another entry in the cluster; flags are
recomputed for the whole (video, chunk) group on every insert and evict, so
they are exact at all times.

Per-node min-popularity heaps (one for replicas, one for unique chunks) back
the replacement policy; stale heap items are discarded lazily on pop.
"""

from __future__ import annotations

import heapq
from collections import OrderedDict
from typing import NamedTuple

__all__ = [
    "ChunkVersion",
    "CatalogEntry",
    "NodeState",
    "Catalogue",
    "lookup_exact",
    "lookup_higher",
    "insert",
    "evict",
    "touch",
    "reserve_transcode",
    "release_transcode",
    "peek_lpc",
    "peek_min",
    "pop_min",
    "dump_catalogue",
    "verify_coherence",
]


class ChunkVersion(NamedTuple):
    video: int
    chunk: int
    level: int


class CatalogEntry:
    """Cluster-wide metadata for one cached chunk version at one node."""

    __slots__ = ("video", "chunk", "level", "node", "replica", "popularity",
                 "last_access")

    def __init__(self, video, chunk, level, node, replica, popularity,
                 last_access):
        self.video = video
        self.chunk = chunk
        self.level = level
        self.node = node
        self.replica = replica
        self.popularity = popularity
        self.last_access = last_access

    def __repr__(self):
        return (f"CatalogEntry(v={self.video}, c={self.chunk}, l={self.level}, "
                f"node={self.node}, replica={self.replica}, "
                f"pop={self.popularity:.3e}, t={self.last_access:.3f})")


class NodeState:
    """One MEC server: cache bytes, transcoding budget, cached chunk set.

    Transcoding budget is tracked in integer units (millibit-per-second
    throughput or scaled instance counts) so reserve/release arithmetic is
    exact.
    """

    __slots__ = ("node_id", "capacity", "free_bytes", "proc_capacity",
                 "free_proc", "chunk_sizes", "pop_table", "cached", "lru",
                 "heap_replica", "heap_unique")

    def __init__(self, node_id, capacity_bytes, proc_units, chunk_sizes,
                 pop_table):
        self.node_id = node_id
        self.capacity = capacity_bytes
        self.free_bytes = capacity_bytes
        self.proc_capacity = proc_units
        self.free_proc = proc_units
        self.chunk_sizes = tuple(chunk_sizes)
        self.pop_table = pop_table
        self.cached = {}
        self.lru = OrderedDict()
        self.heap_replica = []
        self.heap_unique = []

    def size_of(self, level):
        return self.chunk_sizes[level - 1]

    def popularity_of(self, video, chunk):
        return self.pop_table.get((video, chunk), 0.0)

    def used_bytes(self):
        return sum(self.cached.values())


class Catalogue:
    """Synchronized index over every cached chunk version in the cluster."""

    __slots__ = ("entries", "groups", "nodes")

    def __init__(self):
        # (video, chunk, level, node) -> CatalogEntry
        self.entries = {}
        # (video, chunk) -> {level -> {node_id: True}}
        self.groups = {}
        # node_id -> NodeState, registered at cluster setup
        self.nodes = {}

    def register_node(self, node):
        self.nodes[node.node_id] = node

    def entry(self, cv, node_id):
        return self.entries.get((cv.video, cv.chunk, cv.level, node_id))


def lookup_exact(ctg, cv):
    """Node ids holding exactly this chunk version."""
    levels = ctg.groups.get((cv.video, cv.chunk))
    if not levels:
        return set()
    holders = levels.get(cv.level)
    return set(holders) if holders else set()


def lookup_higher(ctg, video, chunk, level):
    """(node, higher_level) candidates ordered by lowest sufficient level, then node."""
    levels = ctg.groups.get((video, chunk))
    if not levels:
        return []
    out = []
    for h in sorted(levels):
        if h > level and levels[h]:
            out.extend((n, h) for n in sorted(levels[h]))
    return out


def _witness_exists(levels, level, node_id):
    """True if a same-or-higher version exists on an entry other than (level, node)."""
    for h, holders in levels.items():
        if h > level and holders:
            return True
        if h == level and (len(holders) > 1 or node_id not in holders):
            return True
    return False


def _push_heap_item(node, entry):
    item = (entry.popularity, entry.video, entry.chunk, entry.level)
    if entry.replica:
        heapq.heappush(node.heap_replica, item)
    else:
        heapq.heappush(node.heap_unique, item)


def _revalidate_group(ctg, video, chunk):
    """Recompute replica flags for every entry of (video, chunk); re-heap changes."""
    levels = ctg.groups.get((video, chunk))
    if not levels:
        return
    entries = ctg.entries
    for level, holders in levels.items():
        for node_id in holders:
            entry = entries[(video, chunk, level, node_id)]
            flag = 1 if _witness_exists(levels, level, node_id) else 0
            if flag != entry.replica:
                entry.replica = flag
                _push_heap_item(ctg.nodes[node_id], entry)


def insert(node, ctg, cv, now):
    """Commit a chunk version into a node's cache and the catalogue.

    Caller must have freed space: inserting beyond capacity, or a version
    already cached at the node, is a contract violation.
    """
    if cv in node.cached:
        raise ValueError(f"{cv} already cached at node {node.node_id}")
    size = node.size_of(cv.level)
    if node.free_bytes < size:
        raise ValueError(
            f"insert of {cv} ({size} B) exceeds free space "
            f"({node.free_bytes} B) at node {node.node_id}"
        )
    node.cached[cv] = size
    node.free_bytes -= size
    node.lru[cv] = None
    pop = node.pop_table.get((cv.video, cv.chunk), 0.0)
    entry = CatalogEntry(cv.video, cv.chunk, cv.level, node.node_id, -1, pop, now)
    ctg.entries[(cv.video, cv.chunk, cv.level, node.node_id)] = entry
    group = ctg.groups.get((cv.video, cv.chunk))
    if group is None:
        group = {}
        ctg.groups[(cv.video, cv.chunk)] = group
    holders = group.get(cv.level)
    if holders is None:
        holders = {}
        group[cv.level] = holders
    holders[node.node_id] = True
    # New entry starts with sentinel flag -1 so revalidation always heaps it.
    _revalidate_group(ctg, cv.video, cv.chunk)
    return entry


def evict(node, ctg, cv):
    """Drop a cached chunk version; revalidates the surviving group flags."""
    size = node.cached.pop(cv, None)
    if size is None:
        raise ValueError(f"{cv} not cached at node {node.node_id}")
    node.free_bytes += size
    del node.lru[cv]
    del ctg.entries[(cv.video, cv.chunk, cv.level, node.node_id)]
    group = ctg.groups[(cv.video, cv.chunk)]
    holders = group[cv.level]
    del holders[node.node_id]
    if not holders:
        del group[cv.level]
    if not group:
        del ctg.groups[(cv.video, cv.chunk)]
    else:
        _revalidate_group(ctg, cv.video, cv.chunk)


def touch(ctg, cv, node_id, now):
    """Refresh the access time of a cached chunk version."""
    entry = ctg.entries.get((cv.video, cv.chunk, cv.level, node_id))
    if entry is None:
        raise ValueError(f"{cv} has no catalogue entry at node {node_id}")
    entry.last_access = now
    ctg.nodes[node_id].lru.move_to_end(cv)


def reserve_transcode(node, cost_units):
    """Grab transcoding budget for one chunk; refusal is a normal outcome."""
    if node.free_proc >= cost_units and cost_units > 0:
        node.free_proc -= cost_units
        return True
    return False


def release_transcode(node, cost_units):
    node.free_proc += cost_units
    if node.free_proc > node.proc_capacity:
        raise ValueError(f"transcode release overflows node {node.node_id}")


def _valid_top(node, ctg, heap, want_replica):
    """Discard stale heap items; return the current minimum or None."""
    entries = ctg.entries
    node_id = node.node_id
    while heap:
        pop, video, chunk, level = heap[0]
        entry = entries.get((video, chunk, level, node_id))
        if (entry is not None and entry.replica == want_replica
                and entry.popularity == pop):
            return heap[0]
        heapq.heappop(heap)
    return None


def peek_min(node, ctg, replica):
    """Least-popular cached chunk of one kind, or None. Does not evict."""
    heap = node.heap_replica if replica else node.heap_unique
    return _valid_top(node, ctg, heap, 1 if replica else 0)


def pop_min(node, ctg, replica):
    """Remove and return the least-popular heap item of one kind, or None."""
    heap = node.heap_replica if replica else node.heap_unique
    top = _valid_top(node, ctg, heap, 1 if replica else 0)
    if top is not None:
        heapq.heappop(heap)
    return top


def peek_lpc(node, ctg):
    """The node's least popular cached chunk as a (pop, video, chunk, level) item.

    Ties resolve by the ascending (popularity, video, chunk, level) order.
    Returns None when the cache is empty.
    """
    a = peek_min(node, ctg, True)
    b = peek_min(node, ctg, False)
    if a is None:
        return b
    if b is None:
        return a
    return a if a < b else b


def dump_catalogue(ctg, stream):
    """Line-oriented debug dump: node video chunk level replica popularity last_access."""
    for key in sorted(ctg.entries, key=lambda k: (k[3], k[0], k[1], k[2])):
        e = ctg.entries[key]
        stream.write(
            f"{e.node} {e.video} {e.chunk} {e.level} {e.replica} "
            f"{e.popularity!r} {e.last_access!r}\n"
        )


def verify_coherence(ctg):
    """Full-state consistency check; raises AssertionError on any violation."""
    seen = set()
    for node in ctg.nodes.values():
        used = 0
        for cv, size in node.cached.items():
            key = (cv.video, cv.chunk, cv.level, node.node_id)
            assert key in ctg.entries, f"{cv} cached at {node.node_id} missing from catalogue"
            assert size == node.size_of(cv.level)
            used += size
            seen.add(key)
        assert used + node.free_bytes == node.capacity, (
            f"byte accounting broken at node {node.node_id}"
        )
        assert used <= node.capacity, f"capacity exceeded at node {node.node_id}"
        assert set(node.lru) == set(node.cached)
        assert 0 <= node.free_proc <= node.proc_capacity, (
            f"transcode budget out of range at node {node.node_id}"
        )
    assert seen == set(ctg.entries), "catalogue lists entries no node caches"
    for (video, chunk), levels in ctg.groups.items():
        for level, holders in levels.items():
            for node_id in holders:
                key = (video, chunk, level, node_id)
                assert key in ctg.entries, "group index out of sync"
                entry = ctg.entries[key]
                expect = 1 if _witness_exists(levels, level, node_id) else 0
                assert entry.replica == expect, (
                    f"stale replica flag on {key}: {entry.replica} != {expect}"
                )

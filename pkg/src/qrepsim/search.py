"""k-random-walk query and Hello discovery on top of the walk kernels.

One query (or hello sweep) is one logical message: all k walkers share a
message id, and every node they touch remembers, per message, which
neighbors are already involved (both directions of a used edge). A walker
arriving where all neighbors are down or already used simply halts.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels


@dataclass
class WalkMessage:
    """Protocol-level view of one walker message."""
    message_id: int
    kind: str                      # "query" | "hello"
    origin: int
    target_key: Optional[int]
    ttl_remaining: int


@dataclass(frozen=True)
class QueryOutcome:
    success: bool
    provider: Optional[int]
    path: tuple                    # origin ... provider for the winning walker
    hops_used: int
    probes: int                    # distinct nodes visited, origin included


class WalkContext:
    """Per-run scratch state for every walk: stamps, buffers, RNG stream."""

    def __init__(self, overlay, seed, max_k, max_ttl):
        n = overlay.node_count
        self.overlay = overlay
        self.edge_stamp = np.zeros(len(overlay.indices), dtype=np.int64)
        self.visit_stamp = np.zeros(n, dtype=np.int64)
        self.rng_state = kernels.seed_state(seed)
        self.serial = 0
        self.max_k = max_k
        self.max_ttl = max_ttl
        self.visited = np.empty(max_k * max_ttl + 1, dtype=np.int64)
        self.paths = np.empty((max_k, max_ttl + 1), dtype=np.int64)
        self.path_lens = np.empty(max_k, dtype=np.int64)
        self._no_target = np.zeros(n, dtype=np.bool_)

    def next_serial(self):
        self.serial += 1
        return self.serial


def new_message(ctx, kind, origin, target_key, ttl):
    return WalkMessage(ctx.next_serial(), kind, origin, target_key, ttl)


def forward_walker(net, ctx, node, msg):
    """One forwarding decision at `node` for `msg`.

    Picks uniformly among up neighbors not yet involved with this message at
    this node, records the choice (both edge directions), and charges one
    hop. Returns the next node id, or None when the walker halts.
    """
    if msg.ttl_remaining <= 0:
        return None
    ov = ctx.overlay
    nxt = kernels.choose_next_hop(ov.indptr, ov.indices, ov.edge_rev, net.up,
                                  ctx.edge_stamp, msg.message_id, node,
                                  ctx.rng_state)
    if nxt < 0:
        return None
    msg.ttl_remaining -= 1
    return int(nxt)


def run_query(net, ctx, origin, key, k, ttl):
    """Run one query; returns (QueryOutcome, visited-view).

    The visited array is a view into context scratch, valid until the next
    walk; callers that need it later must copy.
    """
    if not net.up[origin]:
        return QueryOutcome(False, None, (), 0, 0), ctx.visited[:0]
    serial = ctx.next_serial()
    ov = ctx.overlay
    found, provider, hops, winner, n_visited = kernels.run_walk(
        ov.indptr, ov.indices, ov.edge_rev, net.up, net.holds[key], True,
        origin, k, ttl, serial, ctx.edge_stamp, ctx.visit_stamp,
        ctx.rng_state, ctx.visited, ctx.paths, ctx.path_lens)
    visited = ctx.visited[:n_visited]
    if found:
        path = tuple(int(x) for x in ctx.paths[winner, :ctx.path_lens[winner]])
        return QueryOutcome(True, int(provider), path, int(hops), int(n_visited)), visited
    return QueryOutcome(False, None, (), 0, int(n_visited)), visited


def start_query(net, ctx, origin, key, k, ttl):
    """k-random-walk lookup of `key` from `origin`; outcome only, no coverage."""
    outcome, _ = run_query(net, ctx, origin, key, k, ttl)
    return outcome


def hello_sweep(net, ctx, origin, k, ttl):
    """Discover peers within ttl hops via k walkers.

    Every distinct up node visited responds once with its current
    (bandwidth, available storage); the origin is excluded. Response order
    is first-visit order, which is deterministic for a fixed stream state.
    """
    if not net.up[origin]:
        return []
    serial = ctx.next_serial()
    ov = ctx.overlay
    _, _, _, _, n_visited = kernels.run_walk(
        ov.indptr, ov.indices, ov.edge_rev, net.up, ctx._no_target, False,
        origin, k, ttl, serial, ctx.edge_stamp, ctx.visit_stamp,
        ctx.rng_state, ctx.visited, ctx.paths, ctx.path_lens)
    return [(int(v), float(net.bandwidth[v]), float(net.free[v]))
            for v in ctx.visited[1:n_visited]]

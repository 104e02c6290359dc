"""Hot inner loops: the k-random-walk and per-visit counter updates.

Everything here operates on plain numpy arrays and is compiled with numba
unless ``QREPSIM_NO_NUMBA`` is set (see :mod:`qrepsim._jit`). Both backends
run this exact source, and the only randomness is a MINSTD linear
congruential stream on an int64 cell whose intermediates stay below 2**63,
so results are bit-identical whichever backend is active.

Per-message state uses stamping instead of clearing: ``edge_stamp[j]``
records the id of the last message forwarded along directed edge j, and
``visit_stamp[v]`` the last message that visited node v. A slot belongs to
the current message iff its stamp equals the message serial, so no O(E)
reset is needed between walks.
"""

import numpy as np

from ._jit import njit

MINSTD_M = 2147483647  # 2**31 - 1
MINSTD_A = 48271


def seed_state(seed):
    """Int64 state cell for the in-kernel stream, derived from any int seed."""
    s = (int(seed) * 2654435761 + 88172645463325281) % (MINSTD_M - 1) + 1
    return np.array([s], dtype=np.int64)


@njit(cache=True)
def rng_next(state):
    """Advance the MINSTD stream; returns the new raw value in [1, M-1]."""
    s = (MINSTD_A * state[0]) % MINSTD_M
    state[0] = s
    return s


@njit(cache=True)
def rng_below(state, n):
    """Uniform draw in [0, n). Modulo bias is O(n/2**31), negligible here."""
    return (rng_next(state) - 1) % n


@njit(cache=True)
def choose_next_hop(indptr, indices, edge_rev, up, edge_stamp, serial, node, state):
    """Pick the next hop for a walker of message `serial` sitting at `node`.

    Eligible neighbors are up and not yet involved with this message at this
    node (edge unstamped). The chosen slot and its reverse edge are stamped,
    so the message is never pushed back to its sender and no two walkers
    reuse a directed edge. Returns -1 when nothing is eligible.
    """
    lo = indptr[node]
    hi = indptr[node + 1]
    n_eligible = 0
    for j in range(lo, hi):
        if up[indices[j]] and edge_stamp[j] != serial:
            n_eligible += 1
    if n_eligible == 0:
        return -1
    pick = rng_below(state, n_eligible)
    for j in range(lo, hi):
        if up[indices[j]] and edge_stamp[j] != serial:
            if pick == 0:
                edge_stamp[j] = serial
                edge_stamp[edge_rev[j]] = serial
                return indices[j]
            pick -= 1
    return -1


@njit(cache=True)
def run_walk(indptr, indices, edge_rev, up, holds_row, has_target, origin,
             k, ttl, serial, edge_stamp, visit_stamp, state,
             visited, paths, path_lens):
    """k-random-walk from `origin`; all k walkers share one message id.

    Walkers advance one hop per round, round-robin in walker-index order
    (the launch is round one, which lands walkers on distinct neighbors
    because edges are stamped as they are taken). With has_target, the first
    walker to arrive at a node whose holds_row entry is set wins and the
    rest halt; without it the walk just charts coverage (hello sweep).

    Returns (found, provider, hops, winner, n_visited). `visited` collects
    distinct nodes in first-visit order, origin first; row w of `paths`
    holds walker w's node sequence of length path_lens[w].
    """
    visit_stamp[origin] = serial
    visited[0] = origin
    n_visited = 1
    if has_target and holds_row[origin]:
        paths[0, 0] = origin
        path_lens[0] = 1
        return 1, origin, 0, 0, n_visited

    cur = np.empty(k, dtype=np.int64)
    alive = np.empty(k, dtype=np.bool_)
    for w in range(k):
        cur[w] = origin
        paths[w, 0] = origin
        path_lens[w] = 1
        alive[w] = True

    for hop in range(1, ttl + 1):
        moved = False
        for w in range(k):
            if not alive[w]:
                continue
            nxt = choose_next_hop(indptr, indices, edge_rev, up,
                                  edge_stamp, serial, cur[w], state)
            if nxt < 0:
                alive[w] = False
                continue
            moved = True
            cur[w] = nxt
            paths[w, path_lens[w]] = nxt
            path_lens[w] += 1
            if visit_stamp[nxt] != serial:
                visit_stamp[nxt] = serial
                visited[n_visited] = nxt
                n_visited += 1
            if has_target and holds_row[nxt]:
                return 1, nxt, hop, w, n_visited
        if not moved:
            break
    return 0, -1, 0, -1, n_visited


@njit(cache=True)
def record_visits(visited, n_visited, holds_row, n_q, since_update, rq_row):
    """Bump per-node request counters for one query's visited set."""
    for i in range(n_visited):
        v = visited[i]
        n_q[v] += 1
        since_update[v] += 1
        if holds_row[v]:
            rq_row[v] += 1


@njit(cache=True)
def refresh_due(visited, n_visited, since_update, every, out):
    """Collect visited nodes whose popularity refresh is due; returns count."""
    n = 0
    for i in range(n_visited):
        v = visited[i]
        if since_update[v] >= every:
            out[n] = v
            n += 1
    return n

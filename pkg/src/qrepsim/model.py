"""Overlay topology, node attributes, and the array-backed network state.

The simulator keeps all per-node and per-object state in flat numpy arrays
(object-major matrices of shape (n_objects, n_nodes)) so the walk kernels
can work on contiguous rows. The record types (NodeState, StoredObject,
...) are materialized on demand as read-only snapshot views for tests and
inspection.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, PlacementError


@dataclass(frozen=True)
class StoredObject:
    """One original or replica in a node's shared store."""
    object_id: int
    size: float
    inserted_at_ms: int
    is_original: bool


@dataclass(frozen=True)
class PopularityEntry:
    object_id: int
    popularity: float
    rank: int            # 1 = most popular object on this node
    replicated: bool
    window_requests: int


@dataclass(frozen=True)
class QTableEntry:
    peer_id: int
    q_value: float


@dataclass(frozen=True)
class NodeState:
    """Snapshot of one peer, assembled from the network arrays."""
    id: int
    up: bool
    bandwidth: float
    storage_capacity: float
    storage_available: float
    degree: int
    store: dict
    popularity_table: dict
    q_table: dict
    replication_list: set
    requests_total: int
    requests_since_update: int


class Overlay:
    """Static undirected graph in CSR form with precomputed reverse edges.

    `indices[indptr[u]:indptr[u+1]]` are u's neighbors in ascending order;
    `edge_rev[j]` is the index of the opposite direction of edge j, needed
    by the walk memo (a message is never pushed back to its sender).
    """

    __slots__ = ("node_count", "indptr", "indices", "edge_rev", "seed")

    def __init__(self, node_count, indptr, indices, seed=0):
        self.node_count = int(node_count)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.seed = seed
        self.edge_rev = _reverse_edges(self.indptr, self.indices)

    @classmethod
    def from_adjacency(cls, adjacency, seed=0):
        """Build from {node: iterable-of-neighbors}; symmetrizes the input."""
        n = len(adjacency)
        sets = [set() for _ in range(n)]
        for u, nbrs in adjacency.items():
            for v in nbrs:
                if u == v:
                    raise ConfigurationError(f"self-loop on node {u}")
                sets[u].add(v)
                sets[v].add(u)
        indptr = np.zeros(n + 1, dtype=np.int64)
        chunks = []
        for u in range(n):
            nbrs = np.array(sorted(sets[u]), dtype=np.int64)
            chunks.append(nbrs)
            indptr[u + 1] = indptr[u] + len(nbrs)
        indices = np.concatenate(chunks) if chunks else np.zeros(0, np.int64)
        return cls(n, indptr, indices, seed)

    def neighbors(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u):
        return int(self.indptr[u + 1] - self.indptr[u])

    def degrees(self):
        return np.diff(self.indptr)

    def adjacency_sets(self):
        return [set(self.neighbors(u).tolist()) for u in range(self.node_count)]


def _reverse_edges(indptr, indices):
    rev = np.empty(len(indices), dtype=np.int64)
    for u in range(len(indptr) - 1):
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            row = indices[indptr[v]:indptr[v + 1]]
            rev[j] = indptr[v] + int(np.searchsorted(row, u))
    return rev


def _component_labels(sets, n):
    labels = np.full(n, -1, dtype=np.int64)
    comp = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = comp
        while stack:
            u = stack.pop()
            for v in sets[u]:
                if labels[v] < 0:
                    labels[v] = comp
                    stack.append(v)
        comp += 1
    return labels, comp


# a draw is patchable when its giant component already covers this fraction
_GIANT_FRACTION = 0.9


def generate_topology(n, avg_degree, seed, max_retries=64):
    """Connected Erdos-Renyi G(n, p) overlay with p = avg_degree/(n-1).

    A draw that comes out connected is returned as-is. A draw whose giant
    component covers at least 90% of the nodes gets each minor component
    bridged into the giant with one random edge (at moderate densities pure
    retries essentially never connect, and the handful of bridge edges moves
    the mean degree by well under 1%). Sparser draws are retried with a
    fresh derived seed and the whole thing fails with a configuration error
    once retries run out. Deterministic for fixed (n, avg_degree, seed).
    """
    if n < 2:
        raise ConfigurationError(f"node count must be >= 2, got {n}")
    if avg_degree < 2:
        raise ConfigurationError(
            f"expected average degree must be >= 2, got {avg_degree}")
    p = min(1.0, avg_degree / (n - 1))
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    for child in base.spawn(max_retries):
        rng = np.random.default_rng(child)
        sets = [set() for _ in range(n)]
        for u in range(n):        # sample the upper triangle row by row
            hits = np.nonzero(rng.random(n - u - 1) < p)[0] + u + 1
            for v in hits.tolist():
                sets[u].add(v)
                sets[v].add(u)
        labels, n_comp = _component_labels(sets, n)
        if n_comp > 1:
            sizes = np.bincount(labels, minlength=n_comp)
            giant = int(np.argmax(sizes))
            if sizes[giant] < _GIANT_FRACTION * n:
                continue
            giant_nodes = np.nonzero(labels == giant)[0]
            for comp in range(n_comp):
                if comp == giant:
                    continue
                members = np.nonzero(labels == comp)[0]
                a = int(members[rng.integers(0, len(members))])
                b = int(giant_nodes[rng.integers(0, len(giant_nodes))])
                sets[a].add(b)
                sets[b].add(a)
        indptr = np.zeros(n + 1, dtype=np.int64)
        rows = []
        for u in range(n):
            row = np.array(sorted(sets[u]), dtype=np.int64)
            rows.append(row)
            indptr[u + 1] = indptr[u] + len(row)
        indices = np.concatenate(rows) if indptr[-1] else np.zeros(0, np.int64)
        return Overlay(n, indptr, indices, seed)
    raise ConfigurationError(
        f"could not generate a connected graph (n={n}, avg_degree={avg_degree}) "
        f"after {max_retries} attempts; raise the density or the retry limit")


@dataclass(frozen=True)
class AttributeProfile:
    """Distributions for per-node bandwidth and storage capacity.

    bandwidth_values/weights give a discrete class mix; storage capacity is
    an integer drawn uniformly from [storage_min, storage_max].
    """
    bandwidth_values: tuple = (56.0, 1000.0)
    bandwidth_weights: tuple = (0.2, 0.8)
    storage_min: float = 20.0
    storage_max: float = 100.0

    def validate(self):
        if len(self.bandwidth_values) != len(self.bandwidth_weights) or not self.bandwidth_values:
            raise ConfigurationError("bandwidth profile needs matching nonempty values/weights")
        if any(v <= 0 for v in self.bandwidth_values):
            raise ConfigurationError("bandwidth values must be positive")
        if any(w < 0 for w in self.bandwidth_weights) or abs(sum(self.bandwidth_weights) - 1.0) > 1e-9:
            raise ConfigurationError("bandwidth weights must be nonnegative and sum to 1")
        if self.storage_min <= 0 or self.storage_max < self.storage_min:
            raise ConfigurationError(
                f"storage bounds must satisfy 0 < min <= max, got "
                f"[{self.storage_min}, {self.storage_max}]")


def sample_node_attributes(profile, n, seed):
    """Per-node (bandwidth, storage_capacity) arrays, deterministic per seed."""
    profile.validate()
    rng = np.random.default_rng(seed)
    bandwidth = rng.choice(np.array(profile.bandwidth_values, dtype=np.float64),
                           size=n, p=np.array(profile.bandwidth_weights))
    capacity = rng.integers(int(profile.storage_min), int(profile.storage_max) + 1,
                            size=n).astype(np.float64)
    return bandwidth, capacity


class Network:
    """Full mutable simulation state: one overlay plus all per-node tables.

    Store membership, originals, popularity, per-object request counters and
    insertion times are (n_objects, n_nodes) matrices; Q-tables and
    replication lists are small per-node dicts touched only during
    replication rounds.
    """

    def __init__(self, overlay, bandwidth, capacity, up, obj_size):
        n = overlay.node_count
        m = len(obj_size)
        self.overlay = overlay
        self.n_nodes = n
        self.n_objects = m
        self.bandwidth = np.asarray(bandwidth, dtype=np.float64)
        self.capacity = np.asarray(capacity, dtype=np.float64)
        self.free = self.capacity.copy()
        self.up = np.asarray(up, dtype=np.bool_).copy()
        self.degree = overlay.degrees().astype(np.int64)
        self.obj_size = np.asarray(obj_size, dtype=np.float64)
        if np.any(self.obj_size <= 0):
            raise ConfigurationError("object sizes must be positive")

        self.holds = np.zeros((m, n), dtype=np.bool_)
        self.original = np.zeros((m, n), dtype=np.bool_)
        self.inserted_at = np.zeros((m, n), dtype=np.int64)
        self.pf = np.zeros((m, n), dtype=np.float64)
        self.rq = np.zeros((m, n), dtype=np.int64)
        self.replicated = np.zeros((m, n), dtype=np.bool_)

        self.n_q = np.zeros(n, dtype=np.int64)
        self.since_update = np.zeros(n, dtype=np.int64)
        self.q_tables = [dict() for _ in range(n)]
        self.q_built_at = np.full(n, -1, dtype=np.int64)
        # object -> (reserving source, expiry ms)
        self.reservations = [dict() for _ in range(n)]

    # -- store bookkeeping -------------------------------------------------

    def store_object(self, node, obj, now_ms, original=False):
        """Insert a copy; storage accounting stays exact by construction."""
        if self.holds[obj, node]:
            raise PlacementError(f"node {node} already stores object {obj}")
        size = self.obj_size[obj]
        if self.free[node] < size:
            raise PlacementError(
                f"node {node} lacks space for object {obj} ({self.free[node]} < {size})")
        self.holds[obj, node] = True
        self.original[obj, node] = original
        self.inserted_at[obj, node] = now_ms
        self.pf[obj, node] = 0.0
        self.rq[obj, node] = 0
        self.replicated[obj, node] = False
        self.free[node] -= size

    def remove_object(self, node, obj):
        if not self.holds[obj, node]:
            raise PlacementError(f"node {node} does not store object {obj}")
        self.holds[obj, node] = False
        self.original[obj, node] = False
        self.inserted_at[obj, node] = 0
        self.pf[obj, node] = 0.0
        self.rq[obj, node] = 0
        self.replicated[obj, node] = False
        self.free[node] += self.obj_size[obj]

    def stored_objects(self, node):
        return np.nonzero(self.holds[:, node])[0]

    def stored_size(self, node):
        return float(self.obj_size @ self.holds[:, node])

    def replica_counts(self):
        """Per-object replica counts (originals excluded)."""
        return (self.holds & ~self.original).sum(axis=1)

    # -- snapshot views ------------------------------------------------------

    def node_state(self, node):
        objs = self.stored_objects(node)
        store = {int(o): StoredObject(int(o), float(self.obj_size[o]),
                                      int(self.inserted_at[o, node]),
                                      bool(self.original[o, node]))
                 for o in objs}
        order = sorted(objs, key=lambda o: (-self.pf[o, node], int(o)))
        rank = {int(o): i + 1 for i, o in enumerate(order)}
        pops = {int(o): PopularityEntry(int(o), float(self.pf[o, node]), rank[int(o)],
                                        bool(self.replicated[o, node]),
                                        int(self.rq[o, node]))
                for o in objs}
        qtab = {peer: QTableEntry(peer, q) for peer, q in self.q_tables[node].items()}
        return NodeState(
            id=node,
            up=bool(self.up[node]),
            bandwidth=float(self.bandwidth[node]),
            storage_capacity=float(self.capacity[node]),
            storage_available=float(self.free[node]),
            degree=int(self.degree[node]),
            store=store,
            popularity_table=pops,
            q_table=qtab,
            replication_list=set(self.reservations[node].keys()),
            requests_total=int(self.n_q[node]),
            requests_since_update=int(self.since_update[node]),
        )

    def serialize(self):
        """Stable text form of the generated state (golden determinism tests).

        One line per node in id order: status, attributes, sorted adjacency,
        and sorted store entries as object:size:original triples.
        """
        lines = [f"nodes={self.n_nodes} objects={self.n_objects}"]
        for v in range(self.n_nodes):
            adj = ",".join(str(int(x)) for x in self.overlay.neighbors(v))
            store = ";".join(
                f"{int(o)}:{self.obj_size[o]:.6f}:{int(self.original[o, v])}"
                for o in self.stored_objects(v))
            lines.append(
                f"node {v} up={int(self.up[v])} bw={self.bandwidth[v]:.6f} "
                f"cap={self.capacity[v]:.6f} free={self.free[v]:.6f} "
                f"adj=[{adj}] store=[{store}]")
        return "\n".join(lines) + "\n"


def place_initial_objects(net, seed):
    """Assign each object to one uniformly chosen up node with space.

    Marks the copy as the original and charges the host's storage. Returns
    {object_id: host}.
    """
    if net.n_objects == 0:
        raise PlacementError("object catalog is empty")
    rng = np.random.default_rng(seed)
    hosts = {}
    for obj in range(net.n_objects):
        eligible = np.nonzero(net.up & (net.free >= net.obj_size[obj]))[0]
        if len(eligible) == 0:
            raise PlacementError(
                f"no up node has {net.obj_size[obj]} free units for object {obj}")
        host = int(eligible[rng.integers(0, len(eligible))])
        net.store_object(host, obj, now_ms=0, original=True)
        hosts[obj] = host
    return hosts

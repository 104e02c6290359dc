"""Deterministic discrete-event driver: workload, churn, metrics windows.

A run is fully determined by (config, seed): the event schedule is built up
front (query events plus periodic replication-scan events), timestamps are
integer milliseconds, ties break by schedule sequence number, and every
random stream is derived from the run seed (numpy PCG64 outside the walk
kernels, the in-kernel MINSTD stream inside).
"""

from dataclasses import dataclass

import numpy as np

from . import baselines, qrep
from .errors import ConfigurationError
from .model import AttributeProfile, Network, generate_topology, \
    place_initial_objects, sample_node_attributes
from .kernels import record_visits, refresh_due
from .qrep import QRepParams
from .search import WalkContext, run_query


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 1000
    queries_per_node: int = 100
    mean_query_interval_s: float = 20.0
    initial_up_fraction: float = 0.8
    churn_every_queries: int = 50000
    churn_flip_fraction: float = 0.5
    ttl: int = 6
    walkers_k: int = 6
    strategy: str = "qrep"
    object_count: int = 100
    query_popularity: str = "uniform"    # "uniform" or "zipf:<theta>"
    seed: int = 1
    metrics_window_queries: int = 5000
    count_down_origin_as_failure: bool = False
    requester_copy: bool = False

    def validate(self):
        positive = ("node_count", "queries_per_node", "ttl", "walkers_k",
                    "object_count", "metrics_window_queries")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.mean_query_interval_s <= 0:
            raise ConfigurationError("mean_query_interval_s must be positive")
        for name in ("initial_up_fraction", "churn_flip_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must be in [0,1], got {getattr(self, name)}")
        if self.churn_every_queries < 0:
            raise ConfigurationError("churn_every_queries must be >= 0 (0 disables churn)")
        if self.strategy not in baselines.STRATEGIES:
            raise ConfigurationError(
                f"unknown strategy {self.strategy!r}; choose one of {baselines.STRATEGIES}")
        self.popularity_profile()

    def popularity_profile(self):
        """Parse query_popularity into ('uniform', None) or ('zipf', theta)."""
        raw = self.query_popularity.strip().lower()
        if raw == "uniform":
            return "uniform", None
        if raw.startswith("zipf:"):
            try:
                theta = float(raw.split(":", 1)[1])
            except ValueError:
                theta = -1.0
            if theta <= 0:
                raise ConfigurationError(
                    f"zipf exponent must be a positive number, got {self.query_popularity!r}")
            return "zipf", theta
        raise ConfigurationError(
            f"query_popularity must be 'uniform' or 'zipf:<theta>', got {self.query_popularity!r}")


@dataclass(frozen=True)
class TopologyConfig:
    avg_degree: float = 4.0
    bandwidth_classes: str = "56:0.2,1000:0.8"
    storage_min: float = 20.0
    storage_max: float = 100.0
    object_size: float = 1.0
    max_retries: int = 64

    def validate(self):
        if self.object_size <= 0:
            raise ConfigurationError("object_size must be positive")
        if self.max_retries < 1:
            raise ConfigurationError("max_retries must be >= 1")
        self.attribute_profile()

    def attribute_profile(self):
        values, weights = [], []
        for part in self.bandwidth_classes.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                value, weight = part.split(":")
                values.append(float(value))
                weights.append(float(weight))
            except ValueError:
                raise ConfigurationError(
                    f"bandwidth_classes entries must look like 'value:weight', got {part!r}")
        profile = AttributeProfile(tuple(values), tuple(weights),
                                   self.storage_min, self.storage_max)
        profile.validate()
        return profile


@dataclass(frozen=True)
class MetricsRow:
    window_index: int
    queries_issued: int
    queries_succeeded: int
    success_rate: float
    total_replicas: int
    replicas_per_object: dict
    mean_hops_on_success: float
    up_node_count: int


def collect_metrics(net, window_index, issued, succeeded, hops_total):
    """Close one window: scan the stores and aggregate the window counters."""
    counts = net.replica_counts()
    return MetricsRow(
        window_index=window_index,
        queries_issued=issued,
        queries_succeeded=succeeded,
        success_rate=succeeded / issued if issued else 0.0,
        total_replicas=int(counts.sum()),
        replicas_per_object={int(o): int(c) for o, c in enumerate(counts)},
        mean_hops_on_success=hops_total / succeeded if succeeded else 0.0,
        up_node_count=int(net.up.sum()),
    )


def schedule_workload(config, net, rng):
    """Build the full query schedule: (times_ms, origins, targets), sorted.

    Every node that is up at schedule time gets queries_per_node events with
    exponential inter-arrival gaps after a uniformly random start offset;
    per-node timestamps are strictly increasing. Targets follow the
    configured popularity. Ties across nodes keep schedule order.
    """
    kind, theta = config.popularity_profile()
    m = config.object_count
    if kind == "zipf":
        weights = 1.0 / np.arange(1, m + 1, dtype=np.float64) ** theta
        probs = weights / weights.sum()
    mean_ms = config.mean_query_interval_s * 1000.0
    times, origins, targets = [], [], []
    for node in range(net.n_nodes):
        if not net.up[node]:
            continue
        offset = int(rng.integers(0, max(1, int(round(mean_ms)))))
        gaps = np.round(rng.exponential(config.mean_query_interval_s,
                                        config.queries_per_node) * 1000.0).astype(np.int64)
        t = offset + np.cumsum(gaps)
        for i in range(1, len(t)):       # strict increase survives ms rounding
            if t[i] <= t[i - 1]:
                t[i] = t[i - 1] + 1
        if kind == "uniform":
            objs = rng.integers(0, m, size=config.queries_per_node)
        else:
            objs = rng.choice(m, size=config.queries_per_node, p=probs)
        times.append(t)
        origins.append(np.full(config.queries_per_node, node, dtype=np.int64))
        targets.append(objs.astype(np.int64))
    if not times:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    times = np.concatenate(times)
    origins = np.concatenate(origins)
    targets = np.concatenate(targets)
    order = np.argsort(times, kind="stable")
    return times[order], origins[order], targets[order]


def apply_churn(net, config, rng):
    """Flip churn_flip_fraction of the down set up and as many up nodes down.

    Both samples come from the pre-churn sets, so the up-node count is
    invariant. Stores, Q-tables and reservations survive the outage.
    """
    down = np.nonzero(~net.up)[0]
    up = np.nonzero(net.up)[0]
    n_flip = int(np.ceil(config.churn_flip_fraction * len(down)))
    n_flip = min(n_flip, len(up))
    if n_flip == 0:
        return 0
    to_up = rng.choice(down, size=n_flip, replace=False)
    to_down = rng.choice(up, size=n_flip, replace=False)
    net.up[to_up] = True
    net.up[to_down] = False
    return n_flip


class InvariantChecker:
    """Optional per-event verifier; records violations instead of raising."""

    def __init__(self, net, max_reports=20):
        self.net = net
        self.violations = []
        self.max_reports = max_reports
        self.events_checked = 0

    def _report(self, message):
        if len(self.violations) < self.max_reports:
            self.violations.append(message)

    def after_event(self, now_ms):
        net = self.net
        self.events_checked += 1
        stored = net.obj_size @ net.holds
        if not np.allclose(stored + net.free, net.capacity, atol=1e-9):
            bad = int(np.argmax(np.abs(stored + net.free - net.capacity)))
            self._report(f"t={now_ms}: storage accounting off at node {bad}")
        if net.pf.min() < 0:
            self._report(f"t={now_ms}: negative popularity")
        if net.free.min() < -1e-9:
            self._report(f"t={now_ms}: negative free storage")
        for v in range(net.n_nodes):
            res = net.reservations[v]
            if not res:
                continue
            for obj, (_src, expiry) in res.items():
                if expiry > now_ms and net.holds[obj, v]:
                    self._report(
                        f"t={now_ms}: node {v} holds object {obj} while it is reserved")

    def after_round(self, source, now_ms):
        for peer, q in self.net.q_tables[source].items():
            if q < 0:
                self._report(f"t={now_ms}: negative q for peer {peer} at node {source}")

    def check_churn(self, before, after, now_ms):
        if before != after:
            self._report(f"t={now_ms}: churn changed up count {before} -> {after}")


class Simulation:
    """One deterministic run of the configured strategy."""

    def __init__(self, config, params=None, topology=None, *,
                 network=None, check_invariants=False):
        config.validate()
        params = params if params is not None else QRepParams()
        params.validate()
        topology = topology if topology is not None else TopologyConfig()
        topology.validate()
        self.config = config
        self.params = params
        self.topology = topology

        ss = np.random.SeedSequence(config.seed)
        (s_topo, s_attr, s_updown, s_place, s_work,
         s_churn, s_walk, s_pick) = ss.spawn(8)
        if network is None:
            overlay = generate_topology(config.node_count, topology.avg_degree,
                                        s_topo, topology.max_retries)
            bandwidth, capacity = sample_node_attributes(
                topology.attribute_profile(), config.node_count, s_attr)
            up = np.zeros(config.node_count, dtype=np.bool_)
            n_up = int(round(config.initial_up_fraction * config.node_count))
            rng_updown = np.random.default_rng(s_updown)
            up[rng_updown.choice(config.node_count, size=n_up, replace=False)] = True
            obj_size = np.full(config.object_count, topology.object_size)
            network = Network(overlay, bandwidth, capacity, up, obj_size)
            place_initial_objects(network, s_place)
        self.net = network

        self.rng_work = np.random.default_rng(s_work)
        self.rng_churn = np.random.default_rng(s_churn)
        self.rng_pick = np.random.default_rng(s_pick)
        walk_seed = int(s_walk.generate_state(1)[0])
        max_k = max(config.walkers_k, params.hello_walkers)
        max_ttl = max(config.ttl, params.hello_ttl)
        self.ctx = WalkContext(self.net.overlay, walk_seed, max_k, max_ttl)

        self.checker = InvariantChecker(self.net) if check_invariants else None
        self._refresh_buf = np.empty(self.net.n_nodes, dtype=np.int64)

    # -- event handlers ------------------------------------------------------

    def _scan_event(self, now_ms):
        for source in np.nonzero(self.net.up)[0]:
            placed = qrep.run_replication_round(self.net, self.ctx, int(source),
                                                self.params, now_ms)
            if placed and self.checker:
                self.checker.after_round(int(source), now_ms)

    def _query_event(self, now_ms, origin, obj):
        """Returns (issued, success, hops)."""
        cfg = self.config
        net = self.net
        if not net.up[origin]:
            if cfg.count_down_origin_as_failure:
                return True, False, 0
            return False, False, 0
        outcome, visited = run_query(net, self.ctx, origin, obj,
                                     cfg.walkers_k, cfg.ttl)
        record_visits(visited, len(visited), net.holds[obj],
                      net.n_q, net.since_update, net.rq[obj])
        n_due = refresh_due(visited, len(visited), net.since_update,
                            self.params.update_every, self._refresh_buf)
        for i in range(n_due):
            qrep.update_popularities(net, int(self._refresh_buf[i]), self.params)
        if outcome.success:
            if cfg.strategy == "owner":
                baselines.owner_replicate(net, outcome, obj, now_ms)
            elif cfg.strategy == "path":
                baselines.path_replicate(net, outcome, obj, now_ms)
            elif cfg.strategy == "random":
                baselines.random_replicate(net, outcome, obj, visited,
                                           self.rng_pick, now_ms)
            elif cfg.strategy == "qrep" and cfg.requester_copy:
                baselines.owner_replicate(net, outcome, obj, now_ms)
        return True, outcome.success, outcome.hops_used

    # -- driver ---------------------------------------------------------------

    def run(self):
        cfg = self.config
        times, origins, targets = schedule_workload(cfg, self.net, self.rng_work)

        scan_times = []
        if cfg.strategy == "qrep" and len(times):
            delta_ms = int(round(self.params.delta * 1000))
            scan_times = list(range(delta_ms, int(times[-1]) + 1, delta_ms))
            for v in np.nonzero(self.net.up)[0]:
                qrep.build_q_table(self.net, self.ctx, int(v), self.params, 0)

        rows = []
        issued_total = 0
        win_issued = win_succeeded = 0
        win_hops = 0
        next_scan = 0

        for i in range(len(times)):
            now = int(times[i])
            while next_scan < len(scan_times) and scan_times[next_scan] <= now:
                self._scan_event(scan_times[next_scan])
                if self.checker:
                    self.checker.after_event(scan_times[next_scan])
                next_scan += 1
            issued, success, hops = self._query_event(now, int(origins[i]),
                                                      int(targets[i]))
            if issued:
                issued_total += 1
                win_issued += 1
                if success:
                    win_succeeded += 1
                    win_hops += hops
                if win_issued == cfg.metrics_window_queries:
                    rows.append(collect_metrics(self.net, len(rows), win_issued,
                                                win_succeeded, win_hops))
                    win_issued = win_succeeded = win_hops = 0
                if cfg.churn_every_queries and issued_total % cfg.churn_every_queries == 0:
                    before = int(self.net.up.sum())
                    apply_churn(self.net, cfg, self.rng_churn)
                    if self.checker:
                        self.checker.check_churn(before, int(self.net.up.sum()), now)
            if self.checker:
                self.checker.after_event(now)

        if win_issued or not rows:
            rows.append(collect_metrics(self.net, len(rows), win_issued,
                                        win_succeeded, win_hops))
        return rows


def run(config, params=None, topology=None, **kwargs):
    """Convenience wrapper: build a Simulation and run it."""
    return Simulation(config, params, topology, **kwargs).run()

"""The replication engine: popularity accounting, Q-table lifecycle, site
selection, transfer with eviction, rewards, and Q-value updates.

Replication rounds are atomic within one scan event: a source refreshes its
Q-table at most once per scan period, selects target sites above the mean
Q-value, reserves them, transfers, then applies the learning update from
the returned reinforcement signals.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, EvictionError, SelectionError
from .search import hello_sweep


@dataclass(frozen=True)
class QRepParams:
    eta: float = 0.5               # popularity learning constant, in (0,1)
    alpha: float = 0.5             # Q learning rate, in (0,1)
    w1: float = 0.4                # degree weight
    w2: float = 0.2                # bandwidth weight (strictly smallest)
    w3: float = 0.4                # storage weight
    b_min: float = 56.0            # system minimum bandwidth unit
    s_min: float = 1.0             # system minimum storage unit
    d_min: float = 2.0             # system minimum degree threshold
    p_th: float = 5.0              # popularity threshold for replication
    delta: float = 1000.0          # seconds between replication scans
    update_every: int = 50         # requests between popularity refreshes
    hello_ttl: int = 2             # hop limit for candidate discovery
    hello_walkers: int = 6
    reservation_timeout: Optional[float] = None   # seconds; None -> delta
    reward_floor: bool = False     # floor each reward term before summing
    rereplicate_on_threshold: bool = False

    def validate(self):
        if not 0 < self.eta < 1:
            raise ConfigurationError(f"eta must be in (0,1), got {self.eta}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must be in (0,1), got {self.alpha}")
        for name in ("w1", "w2", "w3"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if abs(self.w1 + self.w2 + self.w3 - 1.0) > 1e-9:
            raise ConfigurationError(
                f"weights must sum to 1 (w1+w2+w3 = {self.w1 + self.w2 + self.w3})")
        if not (self.w2 < self.w1 and self.w2 < self.w3):
            raise ConfigurationError(
                f"w2 must be strictly smaller than w1 and w3, got "
                f"({self.w1}, {self.w2}, {self.w3})")
        for name in ("b_min", "s_min", "d_min", "delta"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.p_th < 0:
            raise ConfigurationError(f"p_th must be nonnegative, got {self.p_th}")
        if self.update_every < 1 or self.hello_ttl < 1 or self.hello_walkers < 1:
            raise ConfigurationError("update_every, hello_ttl and hello_walkers must be >= 1")
        if self.reservation_timeout is not None and self.reservation_timeout <= 0:
            raise ConfigurationError("reservation_timeout must be positive when set")

    @property
    def reservation_timeout_s(self):
        return self.delta if self.reservation_timeout is None else self.reservation_timeout


@dataclass(frozen=True)
class ReinforcementSignal:
    """Attributes a target reports after storing a replica."""
    from_peer: int
    degree: int
    bandwidth: float
    storage_available: float


# -- popularity ------------------------------------------------------------

def record_request(net, node, object_key):
    """Count one incoming request at `node` (scalar form of the hot kernel)."""
    net.n_q[node] += 1
    net.since_update[node] += 1
    if net.holds[object_key, node]:
        net.rq[object_key, node] += 1


def update_popularities(net, node, params):
    """Refresh every stored object's popularity from the window counters.

    popularity += eta * (object requests / node requests) * 100, then the
    window counters reset. With no requests in the window nothing changes.
    """
    nq = int(net.n_q[node])
    if nq == 0:
        return
    stored = net.stored_objects(node)
    if len(stored):
        net.pf[stored, node] += params.eta * (net.rq[stored, node] / nq) * 100.0
    net.rq[:, node] = 0
    net.n_q[node] = 0
    net.since_update[node] = 0


def scan_for_replication(net, node, params):
    """Objects whose popularity reached the threshold and still need copies.

    Returned most-popular first (ties by object id)."""
    col = net.holds[:, node] & (net.pf[:, node] >= params.p_th)
    if not params.rereplicate_on_threshold:
        col &= ~net.replicated[:, node]
    objs = np.nonzero(col)[0]
    return sorted((int(o) for o in objs), key=lambda o: (-net.pf[o, node], o))


# -- Q-table ---------------------------------------------------------------

def init_q_value(bandwidth, storage_available, params):
    """Initial rank of a freshly discovered peer from its reported resources."""
    return (bandwidth / params.b_min + storage_available / params.s_min) * 100.0


def build_q_table(net, ctx, node, params, now_ms):
    """Hello-sweep the neighborhood and merge responders into the Q-table.

    New peers enter with the initial Q-value; peers already known keep their
    learned value. Known peers that missed this sweep are retained."""
    table = net.q_tables[node]
    for peer, bw, savbl in hello_sweep(net, ctx, node, params.hello_walkers,
                                       params.hello_ttl):
        if peer not in table:
            table[peer] = init_q_value(bw, savbl, params)
    net.q_built_at[node] = now_ms
    return table


# -- selection and transfer --------------------------------------------------

def select_target_sites(net, node, object_key, params, now_ms):
    """Pick replication targets: Q-value >= table mean, then probe each.

    Candidates are probed best-first; a candidate is left out when it is
    down, already holds the object, or has it reserved by someone else.
    Survivors get the object reserved in their replication list. Returns
    (targets, probes) where probes is [(peer, status)] with status in
    selected/down/holds_copy/reserved, in probe order.
    """
    table = net.q_tables[node]
    if not table:
        raise SelectionError(f"node {node} has an empty Q-table")
    avg_q = sum(table.values()) / len(table)
    candidates = sorted(((p, q) for p, q in table.items() if q >= avg_q),
                        key=lambda item: (-item[1], item[0]))
    expiry = now_ms + int(round(params.reservation_timeout_s * 1000))
    targets = []
    probes = []
    for peer, _q in candidates:
        if not net.up[peer]:
            probes.append((peer, "down"))
            continue
        if net.holds[object_key, peer]:
            probes.append((peer, "holds_copy"))
            continue
        held = net.reservations[peer].get(object_key)
        if held is not None:
            if held[1] > now_ms:
                probes.append((peer, "reserved"))
                continue
            del net.reservations[peer][object_key]
        net.reservations[peer][object_key] = (node, expiry)
        targets.append(peer)
        probes.append((peer, "selected"))
    return targets, probes


def evict_for_space(net, node, needed, now_ms):
    """Free at least `needed` units by dropping replicas, never originals.

    Victims go in ascending popularity, ties oldest insertion first. Raises
    EvictionError (leaving the store untouched) when even evicting every
    replica would not make room."""
    if needed > net.capacity[node]:
        raise EvictionError(
            f"object needs {needed} units but node {node} capacity is {net.capacity[node]}")
    if net.free[node] >= needed:
        return []
    col = net.holds[:, node] & ~net.original[:, node]
    evictable = np.nonzero(col)[0]
    if net.free[node] + net.obj_size[evictable].sum() < needed:
        raise EvictionError(
            f"node {node} cannot free {needed} units even after full eviction")
    order = sorted((int(o) for o in evictable),
                   key=lambda o: (net.pf[o, node], net.inserted_at[o, node], o))
    removed = []
    for obj in order:
        if net.free[node] >= needed:
            break
        net.remove_object(node, obj)
        removed.append(obj)
    return removed


def replicate_object(net, source, object_key, targets, params, now_ms):
    """Transfer the object to each reserved target; collect their signals.

    Targets that went down since selection contribute nothing (their
    reservation expires on its own); targets that cannot make space are
    skipped likewise. A successful store clears the reservation, charges
    storage, and reports (degree, bandwidth, available storage) measured
    after the store. The source's copy is flagged replicated once at least
    one placement lands."""
    size = net.obj_size[object_key]
    signals = []
    for target in targets:
        if not net.up[target]:
            continue
        if net.free[target] < size:
            try:
                evict_for_space(net, target, size, now_ms)
            except EvictionError:
                continue
        net.reservations[target].pop(object_key, None)
        net.store_object(target, object_key, now_ms)
        signals.append(ReinforcementSignal(
            from_peer=target,
            degree=int(net.degree[target]),
            bandwidth=float(net.bandwidth[target]),
            storage_available=float(net.free[target]),
        ))
    if signals:
        net.replicated[object_key, source] = True
    return signals


# -- learning ----------------------------------------------------------------

def compute_reward(degree, bandwidth, storage_available, params):
    """Reinforcement from a target's post-store attributes.

    Terms are degree/(d_min*w1), bandwidth/(b_min*w2), storage/(s_min*w3),
    summed and scaled by 100; w2 being smallest makes bandwidth dominate.
    The bracketed terms read as grouping; reward_floor switches to the
    floor-each-term reading for sensitivity runs."""
    t1 = degree / (params.d_min * params.w1)
    t2 = bandwidth / (params.b_min * params.w2)
    t3 = storage_available / (params.s_min * params.w3)
    if params.reward_floor:
        return float(math.floor(t1) + math.floor(t2) + math.floor(t3)) * 100.0
    return (t1 + t2 + t3) * 100.0


def update_q(q, outcome, reward, alpha):
    """One Q-value update for a probed peer.

    placed      -> q + alpha * (reward - q)
    holds_copy  -> q (value retained)
    down        -> q * (1 - alpha) (heavy punishment, zero reward)
    """
    if outcome == "placed":
        return q + alpha * (reward - q)
    if outcome == "holds_copy":
        return q
    if outcome == "down":
        return q * (1.0 - alpha)
    raise ValueError(f"unknown update outcome: {outcome}")


def apply_round_updates(net, source, probes, signals, params):
    """Apply learning results of one round to the source's Q-table.

    Placed peers learn from their reward, down peers are punished, copy
    holders keep their value, everyone else (reserved elsewhere, skipped,
    below the mean) is untouched."""
    table = net.q_tables[source]
    placed = {sig.from_peer: sig for sig in signals}
    for peer, status in probes:
        if status == "down":
            table[peer] = update_q(table[peer], "down", 0.0, params.alpha)
        elif status == "selected" and peer in placed:
            sig = placed[peer]
            rho = compute_reward(sig.degree, sig.bandwidth,
                                 sig.storage_available, params)
            table[peer] = update_q(table[peer], "placed", rho, params.alpha)


def run_replication_round(net, ctx, source, params, now_ms):
    """Full round for one node: scan, refresh table if stale, replicate.

    Returns the number of replicas placed."""
    selected = scan_for_replication(net, source, params)
    if not selected:
        return 0
    delta_ms = int(round(params.delta * 1000))
    if net.q_built_at[source] < 0 or now_ms - net.q_built_at[source] >= delta_ms:
        build_q_table(net, ctx, source, params, now_ms)
    placed = 0
    for obj in selected:
        try:
            targets, probes = select_target_sites(net, source, obj, params, now_ms)
        except SelectionError:
            break   # empty table: nothing can be replicated this round
        signals = replicate_object(net, source, obj, targets, params, now_ms)
        apply_round_updates(net, source, probes, signals, params)
        placed += len(signals)
    return placed

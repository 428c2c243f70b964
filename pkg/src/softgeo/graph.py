"""Soft random geometric graphs: realisation, connectivity and exact small-N oracles.

Edge randomness is counter based: the uniform deciding pair ``(i, j)`` is a
hash of ``(key, i, j)``, so the realised edge set does not depend on the order
in which pairs are visited.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .channel import ChannelModel, connect_prob
from .geometry import GRAZE_TOL, Domain, NodeSet, obstacle_arrays, visible

# pairs with H below 1e-14 never get a Bernoulli draw
LOG_H_CUTOFF = -math.log(1e-14)
PROBE_INDEX = 0xFFFFFFFF
MAX_EXACT_NODES = 5

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_EDGE_SALT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True)
def _pair_uniform(key, i, j):
    h = _mix64(key ^ _mix64((np.uint64(i) << _S32) | np.uint64(j)))
    return (float(h >> _S11) + 0.5) * _TWO53


@numba.njit(cache=True)
def _trial_key(master, trial):
    return _mix64(_mix64(np.uint64(master)) + _GOLDEN * np.uint64(trial + 1))


@numba.njit(cache=True)
def _edge_key(seed):
    return _mix64(np.uint64(seed) ^ _EDGE_SALT)


def trial_seed(master: int, trial: int) -> int:
    """Per-trial seed derived by hashing ``(master, trial)``; never a shared stream."""
    return int(_trial_key(np.uint64(master), np.int64(trial)))


def edge_key(seed: int) -> np.uint64:
    return np.uint64(int(_edge_key(np.uint64(seed))))


def pair_uniform(seed: int, i: int, j: int) -> float:
    """The uniform variate that decides edge ``(i, j)`` of a graph sampled with ``seed``."""
    return float(_pair_uniform(edge_key(seed), np.int64(i), np.int64(j)))


@numba.njit(cache=True)
def _blocked(pos_i, pos_j, centers, radii):
    d = pos_i.shape[0]
    for k in range(radii.shape[0]):
        seg2 = 0.0
        dot = 0.0
        for c in range(d):
            s = pos_j[c] - pos_i[c]
            seg2 += s * s
            dot += (centers[k, c] - pos_i[c]) * s
        t = dot / seg2 if seg2 > 0 else 0.0
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        dist2 = 0.0
        for c in range(d):
            q = pos_i[c] + t * (pos_j[c] - pos_i[c]) - centers[k, c]
            dist2 += q * q
        lim = radii[k] - GRAZE_TOL
        if lim > 0 and dist2 < lim * lim:
            return True
    return False


@numba.njit(cache=True, fastmath=True)
def _edges(pos, beta, eta, key, centers, radii):
    n = pos.shape[0]
    d = pos.shape[1]
    cap = max(16, 4 * n)
    buf = np.empty((cap, 2), dtype=np.int64)
    m = 0
    for i in range(n):
        for j in range(i + 1, n):
            d2 = 0.0
            for c in range(d):
                q = pos[i, c] - pos[j, c]
                d2 += q * q
            expo = beta * d2 if eta == 2.0 else beta * d2 ** (0.5 * eta)
            if expo > LOG_H_CUTOFF:
                continue
            if _pair_uniform(key, i, j) >= math.exp(-expo):
                continue
            if _blocked(pos[i], pos[j], centers, radii):
                continue
            if m == cap:
                cap *= 2
                grown = np.empty((cap, 2), dtype=np.int64)
                grown[:m] = buf[:m]
                buf = grown
            buf[m, 0] = i
            buf[m, 1] = j
            m += 1
    return buf[:m]


@numba.njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@numba.njit(cache=True)
def _graph_stats(pos, beta, eta, key, centers, radii):
    """(connected, isolated count) of one realisation."""
    n = pos.shape[0]
    edges = _edges(pos, beta, eta, key, centers, radii)
    parent = np.arange(n)
    degree = np.zeros(n, dtype=np.int64)
    components = n
    for k in range(edges.shape[0]):
        i = edges[k, 0]
        j = edges[k, 1]
        degree[i] += 1
        degree[j] += 1
        a = _find(parent, i)
        b = _find(parent, j)
        if a != b:
            parent[a] = b
            components -= 1
    isolated = 0
    for i in range(n):
        if degree[i] == 0:
            isolated += 1
    return components <= 1, isolated


@numba.njit(cache=True, fastmath=True)
def _fixed_trials(pos, beta, eta, master, start, stop, centers, radii):
    """Repeated edge resampling on fixed positions, one derived key per trial."""
    count = stop - start
    connected = np.zeros(count, dtype=np.bool_)
    isolated = np.zeros(count, dtype=np.int64)
    for t in range(count):
        key = _edge_key(_trial_key(master, start + t))
        c, iso = _graph_stats(pos, beta, eta, key, centers, radii)
        connected[t] = c
        isolated[t] = iso
    return connected, isolated


@numba.njit(cache=True, fastmath=True)
def _probe_degree(pos, probe, beta, eta, key, centers, radii):
    deg = 0
    d = pos.shape[1]
    for j in range(pos.shape[0]):
        d2 = 0.0
        for c in range(d):
            q = pos[j, c] - probe[c]
            d2 += q * q
        expo = beta * d2 if eta == 2.0 else beta * d2 ** (0.5 * eta)
        if expo > LOG_H_CUTOFF:
            continue
        if _pair_uniform(key, j, PROBE_INDEX) >= math.exp(-expo):
            continue
        if not _blocked(probe, pos[j], centers, radii):
            deg += 1
    return deg


def _kernel_args(nodes: NodeSet, domain: Domain, channel: ChannelModel):
    centers, radii = obstacle_arrays(domain)
    pos = np.ascontiguousarray(nodes.positions, dtype=np.float64).reshape(-1, centers.shape[1])
    return pos, float(channel.beta), float(channel.eta), np.ascontiguousarray(centers), radii


@dataclass
class GraphSample:
    node_count: int
    edges: np.ndarray
    seed: int
    domain: Domain | None = None

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.node_count)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j"])
        w.writerows(self.edges.tolist())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, node_count: int, seed: int = 0) -> "GraphSample":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        edges = np.array([[int(a), int(b)] for a, b in rows], dtype=np.int64).reshape(-1, 2)
        return cls(node_count, edges, seed)


def sample_graph(nodes: NodeSet, domain: Domain, channel: ChannelModel, seed: int) -> GraphSample:
    """Each pair joins with probability visible(x, y) * H(|x - y|), independently."""
    args = _kernel_args(nodes, domain, channel)
    pos, beta, eta, centers, radii = args
    edges = _edges(pos, beta, eta, edge_key(seed), centers, radii).copy()
    return GraphSample(len(pos), edges, seed, domain)


def graph_stats(nodes: NodeSet, domain: Domain, channel: ChannelModel, seed: int) -> tuple[bool, int]:
    """Same realisation as :func:`sample_graph`, reduced to (connected, isolated count)."""
    pos, beta, eta, centers, radii = _kernel_args(nodes, domain, channel)
    c, iso = _graph_stats(pos, beta, eta, edge_key(seed), centers, radii)
    return bool(c), int(iso)


def probe_degree(nodes: NodeSet, probe, domain: Domain, channel: ChannelModel, seed: int) -> int:
    """Degree of an extra node at ``probe`` added to ``nodes``."""
    pos, beta, eta, centers, radii = _kernel_args(nodes, domain, channel)
    probe = np.asarray(probe, dtype=np.float64)
    return int(_probe_degree(pos, probe, beta, eta, edge_key(seed), centers, radii))


def is_connected(graph: GraphSample) -> bool:
    # the empty graph counts as connected
    n = graph.node_count
    if n <= 1:
        return True
    e = graph.edges
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


def count_isolated(graph: GraphSample) -> int:
    return int(np.count_nonzero(graph.degrees() == 0))


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.components = n

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            self.components -= 1


def pair_probabilities(nodes: NodeSet, domain: Domain, channel: ChannelModel):
    pos = nodes.positions
    pairs = list(itertools.combinations(range(len(pos)), 2))
    probs = [
        connect_prob(channel, float(np.linalg.norm(pos[i] - pos[j]))) if visible(domain, pos[i], pos[j]) else 0.0
        for i, j in pairs
    ]
    return pairs, probs


def _enumerate(nodes, domain, channel, event) -> float:
    n = len(nodes)
    if n > MAX_EXACT_NODES:
        raise ValueError(f"exact enumeration limited to {MAX_EXACT_NODES} nodes, got {n}")
    pairs, probs = pair_probabilities(nodes, domain, channel)
    total = 0.0
    for outcome in itertools.product((False, True), repeat=len(pairs)):
        w = 1.0
        for on, p in zip(outcome, probs):
            w *= p if on else 1.0 - p
        if w == 0.0:
            continue
        chosen = [pr for pr, on in zip(pairs, outcome) if on]
        if event(n, chosen):
            total += w
    return total


def _connected_event(n, edges):
    uf = UnionFind(n)
    for a, b in edges:
        uf.union(a, b)
    return uf.components <= 1


def _no_isolated_event(n, edges):
    touched = {v for e in edges for v in e}
    return len(touched) == n


def exact_connection_prob(nodes: NodeSet, domain: Domain, channel: ChannelModel) -> float:
    """P(connected) by brute force over every edge configuration (N <= 5)."""
    return _enumerate(nodes, domain, channel, _connected_event)


def exact_no_isolated_prob(nodes: NodeSet, domain: Domain, channel: ChannelModel) -> float:
    """P(minimum degree >= 1) by brute force over every edge configuration (N <= 5)."""
    return _enumerate(nodes, domain, channel, _no_isolated_event)

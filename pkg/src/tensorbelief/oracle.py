"""Brute-force ground truth and random polytree generation.

Everything here is exponential in the number of variables and exists to
check the message-passing engine. It deliberately uses plain numpy
broadcasting instead of the :mod:`tensorbelief.tensor` operators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OracleCapError, ZeroMassError
from .model import BeliefNetwork, CheckMode, Evidence, NodeSpec, Variable

DEFAULT_CAP = 2**20
UNIQUE_RTOL = 1e-12


@dataclass(frozen=True)
class JointTable:
    axes: tuple[str, ...]
    data: np.ndarray

    def marginal(self, var: str) -> np.ndarray:
        keep = self.axes.index(var)
        other = tuple(i for i in range(len(self.axes)) if i != keep)
        return self.data.sum(axis=other)


def joint_size(net: BeliefNetwork) -> int:
    return int(np.prod([v.size for v in net.variables.values()], dtype=object))


def enumerate_joint(net: BeliefNetwork, e: Evidence | None = None, cap: int = DEFAULT_CAP) -> JointTable:
    e = e or Evidence()
    size = joint_size(net)
    if size > cap:
        raise OracleCapError(f"joint table has {size} entries, above the cap of {cap}")
    ids = net.ids
    pos = {v: i for i, v in enumerate(ids)}
    shape = tuple(net.variables[v].size for v in ids)
    joint = np.ones(shape)
    for var, node in net.nodes.items():
        # place cpt axes [var, parents...] at their positions in the joint
        order = [var, *node.parents]
        perm = sorted(range(len(order)), key=lambda k: pos[order[k]])
        factor = np.transpose(node.cpt, perm)
        bshape = [1] * len(ids)
        for k in perm:
            bshape[pos[order[k]]] = net.variables[order[k]].size
        joint = joint * factor.reshape(bshape)
    for var in list(e.hard) + list(e.soft):
        vec = e.likelihood(net, var)
        bshape = [1] * len(ids)
        bshape[pos[var]] = len(vec)
        joint = joint * vec.reshape(bshape)
    return JointTable(tuple(ids), joint)


def oracle_marginal(net: BeliefNetwork, e: Evidence | None, var: str, cap: int = DEFAULT_CAP) -> np.ndarray:
    m = enumerate_joint(net, e, cap).marginal(var)
    total = m.sum()
    if total <= 0:
        raise ZeroMassError("evidence has zero probability")
    return m / total


def oracle_mpe(net: BeliefNetwork, e: Evidence | None = None, cap: int = DEFAULT_CAP) -> tuple[dict[str, int], float]:
    table = enumerate_joint(net, e, cap)
    flat = table.data.reshape(-1)
    best = int(np.argmax(flat))
    if flat[best] <= 0:
        raise ZeroMassError("evidence has zero probability")
    states = np.unravel_index(best, table.data.shape)
    return {v: int(s) for v, s in zip(table.axes, states)}, float(flat[best])


def optimum_count(table: JointTable, rtol: float = UNIQUE_RTOL) -> int:
    """Number of joint entries within ``rtol`` (relative) of the maximum."""
    top = table.data.max()
    return int(np.count_nonzero(table.data >= top * (1.0 - rtol)))


# -- random networks -------------------------------------------------------------


def prufer_to_edges(seq, n: int) -> list[tuple[int, int]]:
    """Decode a Prüfer sequence of length ``n - 2`` into the edges of a labelled tree."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(n) if degree[i] == 1]
    edges.append((u, v))
    return edges


def random_polytree(seed: int, n_vars: int, max_card: int = 4, max_parents: int = 3,
                    min_card: int = 2) -> BeliefNetwork:
    """Random STRICT polytree, deterministic in ``seed``.

    The undirected skeleton comes from a uniform random Prüfer sequence. Edges
    are visited breadth-first from a random root; each one points away from
    the root unless a coin flip (and the in-degree limit) lets it point back.
    """
    if n_vars < 1:
        raise ValueError("n_vars must be >= 1")
    if max_parents < 1 and n_vars > 1:
        raise ValueError("max_parents must be >= 1 for networks with edges")
    if not 1 <= min_card <= max_card:
        raise ValueError("need 1 <= min_card <= max_card")
    rng = np.random.default_rng(seed)
    width = len(str(n_vars - 1))
    names = [f"X{i:0{width}d}" for i in range(n_vars)]

    seq = [int(x) for x in rng.integers(0, n_vars, size=max(n_vars - 2, 0))]
    adj: dict[int, list[int]] = {i: [] for i in range(n_vars)}
    for a, b in prufer_to_edges(seq, n_vars):
        adj[a].append(b)
        adj[b].append(a)

    parents: dict[int, list[int]] = {i: [] for i in range(n_vars)}
    root = int(rng.integers(n_vars))
    seen, frontier = {root}, [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in sorted(adj[u]):
                if v in seen:
                    continue
                seen.add(v)
                nxt.append(v)
                if len(parents[u]) < max_parents and rng.random() < 0.5:
                    parents[u].append(v)
                else:
                    parents[v].append(u)
        frontier = nxt

    cards = [int(c) for c in rng.integers(min_card, max_card + 1, size=n_vars)]
    variables = {
        names[i]: Variable(names[i], tuple(f"s{k}" for k in range(cards[i]))) for i in range(n_vars)
    }
    nodes = {}
    for i in range(n_vars):
        shape = (cards[i],) + tuple(cards[p] for p in parents[i])
        raw = rng.uniform(0.05, 1.0, size=shape)
        cpt = raw / raw.sum(axis=0, keepdims=True)
        nodes[names[i]] = NodeSpec(names[i], tuple(names[p] for p in parents[i]), cpt)
    return BeliefNetwork(variables, nodes, CheckMode.STRICT)


def random_hard_evidence(net: BeliefNetwork, seed: int, max_vars: int = 3) -> Evidence:
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, min(max_vars, len(net.variables)) + 1))
    chosen = rng.choice(net.ids, size=k, replace=False) if k else []
    return Evidence({str(v): int(rng.integers(net.variables[str(v)].size)) for v in chosen})

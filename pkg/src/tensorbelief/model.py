"""Belief-network data model, JSON document format and validation."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import EvidenceError, NetworkValidationError, ParseError, SchemaError
from .tensor import Axis, Tensor

COLUMN_SUM_TOL = 1e-9


class CheckMode(enum.Enum):
    STRICT = "strict"
    RELATIVE = "relative"


@dataclass(frozen=True)
class Variable:
    id: str
    states: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def axis(self) -> Axis:
        return Axis(self.id, len(self.states))

    def index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise EvidenceError(f"variable {self.id!r} has no state {label!r}") from None


@dataclass(frozen=True)
class NodeSpec:
    """A variable, its ordered parents and its conditional table.

    ``cpt`` is shaped ``[r(X), r(U1), ..., r(Un)]``. It is kept as a raw array
    so that invalid tables (negative entries) survive loading long enough for
    :func:`validate` to report them.
    """

    var: str
    parents: tuple[str, ...]
    cpt: np.ndarray

    def __post_init__(self):
        self.cpt.setflags(write=False)


@dataclass(frozen=True)
class Violation:
    variable: str | None
    kind: str
    message: str

    def __str__(self):
        return f"{self.variable}: {self.message}" if self.variable else self.message


@dataclass(frozen=True, eq=False)
class BeliefNetwork:
    variables: dict[str, Variable]
    nodes: dict[str, NodeSpec]
    mode: CheckMode = CheckMode.STRICT
    children: dict[str, tuple[str, ...]] = field(init=False)

    def __post_init__(self):
        kids = {v: [] for v in self.variables}
        for node in self.nodes.values():
            for p in node.parents:
                if p in kids:
                    kids[p].append(node.var)
        object.__setattr__(self, "children", {v: tuple(c) for v, c in kids.items()})

    @property
    def ids(self) -> list[str]:
        return sorted(self.variables)

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [(p, n.var) for n in self.nodes.values() for p in n.parents]

    def neighbors(self, var: str) -> list[str]:
        return list(self.nodes[var].parents) + list(self.children[var])

    def factor(self, var: str) -> Tensor:
        """The conditional table of ``var`` as a tensor on ``[X, U1..Un]``."""
        node = self.nodes[var]
        axes = [self.variables[var].axis] + [self.variables[p].axis for p in node.parents]
        return Tensor(axes, node.cpt)

    def scaled(self, var: str, factor: float) -> "BeliefNetwork":
        nodes = dict(self.nodes)
        node = nodes[var]
        nodes[var] = NodeSpec(node.var, node.parents, node.cpt * factor)
        return BeliefNetwork(self.variables, nodes, CheckMode.RELATIVE)

    def __eq__(self, other):
        if not isinstance(other, BeliefNetwork):
            return NotImplemented
        if self.variables != other.variables or self.mode != other.mode:
            return False
        if self.nodes.keys() != other.nodes.keys():
            return False
        return all(
            a.parents == b.parents and np.array_equal(a.cpt, b.cpt)
            for a, b in ((self.nodes[k], other.nodes[k]) for k in self.nodes)
        )


@dataclass(frozen=True)
class Evidence:
    """Hard observations (state indices) and soft likelihood vectors."""

    hard: Mapping[str, int] = field(default_factory=dict)
    soft: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    @classmethod
    def from_labels(cls, net: BeliefNetwork, hard=None, soft=None) -> "Evidence":
        hard = hard or {}
        soft = soft or {}
        for var in list(hard) + list(soft):
            if var not in net.variables:
                raise EvidenceError(f"unknown variable {var!r} in evidence")
        ev = cls(
            {v: net.variables[v].index(label) for v, label in hard.items()},
            {v: tuple(float(x) for x in vec) for v, vec in soft.items()},
        )
        ev.check(net)
        return ev

    def check(self, net: BeliefNetwork) -> None:
        both = set(self.hard) & set(self.soft)
        if both:
            raise EvidenceError(f"variables {sorted(both)} have both hard and soft evidence")
        for var, idx in self.hard.items():
            if var not in net.variables:
                raise EvidenceError(f"unknown variable {var!r} in evidence")
            if not 0 <= idx < net.variables[var].size:
                raise EvidenceError(f"state index {idx} out of range for {var!r}")
        for var, vec in self.soft.items():
            if var not in net.variables:
                raise EvidenceError(f"unknown variable {var!r} in evidence")
            if len(vec) != net.variables[var].size:
                raise EvidenceError(
                    f"likelihood for {var!r} has {len(vec)} entries, expected {net.variables[var].size}"
                )
            arr = np.asarray(vec, dtype=float)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0) or not np.any(arr > 0):
                raise EvidenceError(f"likelihood for {var!r} must be finite, nonnegative and not all zero")

    def likelihood(self, net: BeliefNetwork, var: str) -> np.ndarray | None:
        """Virtual-child likelihood vector for ``var``, or None without evidence."""
        if var in self.hard:
            vec = np.zeros(net.variables[var].size)
            vec[self.hard[var]] = 1.0
            return vec
        if var in self.soft:
            return np.asarray(self.soft[var], dtype=float)
        return None


# -- documents -----------------------------------------------------------------


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    return obj[key]


def parse_network(doc: Mapping) -> BeliefNetwork:
    """Build a network from a decoded document without validating it."""
    if not isinstance(doc, dict):
        raise SchemaError("network document must be an object")
    raw_vars = _require(doc, "variables", "network")
    raw_nodes = _require(doc, "nodes", "network")
    if not isinstance(raw_vars, list) or not isinstance(raw_nodes, list):
        raise SchemaError("'variables' and 'nodes' must be lists")
    try:
        mode = CheckMode(doc.get("mode", "strict"))
    except ValueError:
        raise SchemaError(f"unknown mode {doc.get('mode')!r}") from None

    variables: dict[str, Variable] = {}
    for rv in raw_vars:
        vid = _require(rv, "id", "variable")
        states = _require(rv, "states", f"variable {vid!r}")
        if not isinstance(vid, str) or not isinstance(states, list) or not states:
            raise SchemaError(f"variable {vid!r}: id must be a string and states a non-empty list")
        if not all(isinstance(s, str) for s in states):
            raise SchemaError(f"variable {vid!r}: state labels must be strings")
        if len(set(states)) != len(states):
            raise NetworkValidationError(vid, "duplicate-state", "duplicate state labels")
        if vid in variables:
            raise NetworkValidationError(vid, "duplicate-variable", "variable declared twice")
        variables[vid] = Variable(vid, tuple(states))

    nodes: dict[str, NodeSpec] = {}
    for rn in raw_nodes:
        var = _require(rn, "var", "node")
        parents = _require(rn, "parents", f"node {var!r}")
        cpt = _require(rn, "cpt", f"node {var!r}")
        if var not in variables:
            raise NetworkValidationError(var, "unknown-variable", "node for undeclared variable")
        if var in nodes:
            raise NetworkValidationError(var, "duplicate-node", "node declared twice")
        if not isinstance(parents, list) or not isinstance(cpt, list):
            raise SchemaError(f"node {var!r}: 'parents' and 'cpt' must be lists")
        for p in parents:
            if p not in variables:
                raise NetworkValidationError(var, "unknown-parent", f"parent {p!r} does not resolve")
        if len(set(parents)) != len(parents) or var in parents:
            raise NetworkValidationError(var, "bad-parents", "parents must be distinct and exclude the node")
        try:
            flat = np.array(cpt, dtype=float)
        except (TypeError, ValueError):
            raise SchemaError(f"node {var!r}: cpt must be a flat list of numbers") from None
        if flat.ndim != 1:
            raise SchemaError(f"node {var!r}: cpt must be a flat list of numbers")
        shape = (variables[var].size,) + tuple(variables[p].size for p in parents)
        if flat.size != int(np.prod(shape)):
            raise NetworkValidationError(
                var, "cpt-shape", f"cpt has {flat.size} entries, expected {int(np.prod(shape))}"
            )
        nodes[var] = NodeSpec(var, tuple(parents), flat.reshape(shape))

    missing = [v for v in variables if v not in nodes]
    if missing:
        raise NetworkValidationError(missing[0], "missing-node", "variable has no node entry")
    return BeliefNetwork(variables, nodes, mode)


def load_network(text: str) -> BeliefNetwork:
    """Parse and validate a network document; raises on the first problem."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed network document: {exc}") from None
    net = parse_network(doc)
    report = validate(net, net.mode)
    if report:
        v = report[0]
        raise NetworkValidationError(v.variable, v.kind, v.message)
    return net


def network_to_dict(net: BeliefNetwork) -> dict:
    return {
        "variables": [{"id": v.id, "states": list(v.states)} for v in net.variables.values()],
        "nodes": [
            {"var": n.var, "parents": list(n.parents), "cpt": [float(x) for x in n.cpt.reshape(-1)]}
            for n in net.nodes.values()
        ],
        "mode": net.mode.value,
    }


def render_network(net: BeliefNetwork) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"


def load_evidence(text: str, net: BeliefNetwork) -> Evidence:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EvidenceError(f"malformed evidence document: {exc}") from None
    if not isinstance(doc, dict) or set(doc) - {"hard", "soft"}:
        raise EvidenceError("evidence document must be an object with 'hard' and/or 'soft'")
    hard, soft = doc.get("hard", {}), doc.get("soft", {})
    if not isinstance(hard, dict) or not isinstance(soft, dict):
        raise EvidenceError("'hard' and 'soft' must be objects")
    for var, vec in soft.items():
        if not isinstance(vec, list) or not all(isinstance(x, (int, float)) for x in vec):
            raise EvidenceError(f"likelihood for {var!r} must be a list of numbers")
    return Evidence.from_labels(net, hard, soft)


# -- validation ----------------------------------------------------------------


def _find_directed_cycle(net: BeliefNetwork) -> list[str] | None:
    color = {v: 0 for v in net.variables}
    stack: list[str] = []

    def visit(v):
        color[v] = 1
        stack.append(v)
        for c in sorted(net.children[v]):
            if color[c] == 1:
                return stack[stack.index(c):] + [c]
            if color[c] == 0:
                found = visit(c)
                if found:
                    return found
        stack.pop()
        color[v] = 2
        return None

    for v in sorted(net.variables):
        if color[v] == 0:
            found = visit(v)
            if found:
                return found
    return None


def _find_undirected_cycle(net: BeliefNetwork) -> list[str] | None:
    """Return the vertices of one undirected cycle, or None for a forest."""
    adj: dict[str, list[str]] = {v: [] for v in net.variables}
    for p, c in sorted(net.edges):
        adj[p].append(c)
        adj[c].append(p)
    seen: dict[str, str | None] = {}
    for root in sorted(net.variables):
        if root in seen:
            continue
        seen[root] = None
        stack = [(root, None)]
        while stack:
            v, via = stack.pop()
            skipped_back = False
            for w in adj[v]:
                if w == via and not skipped_back:
                    skipped_back = True
                    continue
                if w in seen:
                    path_v, path_w = [v], [w]
                    while seen[path_v[-1]] is not None:
                        path_v.append(seen[path_v[-1]])
                    while seen[path_w[-1]] is not None:
                        path_w.append(seen[path_w[-1]])
                    common = next(x for x in path_v if x in set(path_w))
                    return path_v[: path_v.index(common) + 1] + path_w[: path_w.index(common)][::-1]
                seen[w] = v
                stack.append((w, v))
    return None


def validate(net: BeliefNetwork, mode: CheckMode | str = CheckMode.STRICT) -> list[Violation]:
    """Return every invariant violation; an empty list means the network is valid."""
    mode = CheckMode(mode)
    report: list[Violation] = []
    for var in sorted(net.nodes):
        node = net.nodes[var]
        for p in node.parents:
            if p not in net.variables:
                report.append(Violation(var, "unknown-parent", f"parent {p!r} does not resolve"))
        expected = (net.variables[var].size,) + tuple(
            net.variables[p].size for p in node.parents if p in net.variables
        )
        if node.cpt.shape != expected:
            report.append(Violation(var, "cpt-shape", f"cpt shape {node.cpt.shape} != {expected}"))
            continue
        if not np.all(np.isfinite(node.cpt)):
            report.append(Violation(var, "non-finite", "cpt has non-finite entries"))
            continue
        if np.any(node.cpt < 0):
            report.append(Violation(var, "negative-entry", "cpt has negative entries"))
        if mode is CheckMode.STRICT:
            sums = node.cpt.sum(axis=0)
            if np.any(np.abs(sums - 1.0) > COLUMN_SUM_TOL):
                report.append(
                    Violation(var, "column-sum", "cpt columns do not sum to 1 for every parent configuration")
                )
    if any(v.kind == "unknown-parent" for v in report):
        return report
    cycle = _find_directed_cycle(net)
    if cycle:
        report.append(Violation(cycle[0], "cycle", "directed cycle " + " -> ".join(cycle)))
        return report
    loop = _find_undirected_cycle(net)
    if loop:
        report.append(
            Violation(
                min(loop), "multiply-connected",
                "network is not singly connected; undirected cycle " + " - ".join(loop + [loop[0]]),
            )
        )
    return report


def joint_probability(net: BeliefNetwork, w: Mapping[str, int]) -> float:
    """Chain-rule product of the CPT entries selected by a complete assignment."""
    score = 1.0
    for var, node in net.nodes.items():
        idx = (w[var],) + tuple(w[p] for p in node.parents)
        score *= float(node.cpt[idx])
    return score


def evidence_factor(net: BeliefNetwork, e: Evidence, w: Mapping[str, int]) -> float:
    """Product of the evidence likelihoods at a complete assignment."""
    factor = 1.0
    for var in list(e.hard) + list(e.soft):
        factor *= float(e.likelihood(net, var)[w[var]])
    return factor


def assignment_labels(net: BeliefNetwork, w: Mapping[str, int]) -> dict[str, str]:
    return {v: net.variables[v].states[w[v]] for v in sorted(w)}


def make_network(
    variables: Mapping[str, Sequence[str]],
    nodes: Sequence[tuple[str, Sequence[str], Sequence[float]]],
    mode: str = "strict",
) -> BeliefNetwork:
    """Convenience constructor: ``nodes`` holds ``(var, parents, flat_cpt)`` triples."""
    doc = {
        "variables": [{"id": k, "states": list(s)} for k, s in variables.items()],
        "nodes": [{"var": v, "parents": list(p), "cpt": list(c)} for v, p, c in nodes],
        "mode": mode,
    }
    return load_network(json.dumps(doc))

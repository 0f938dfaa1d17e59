"""Pearl-style message passing on polytrees, for sums and maxima alike.

Every node combines three ingredients:

* ``Lambda``: term product of the lambda messages from its children, with
  evidence entering as one more (virtual) child;
* ``Pi``: outer product of the pi messages from its parents;
* its conditional table ``P`` on axes ``[X, U1..Un]``.

Beliefs are ``normalize(Lambda * (P . Pi))`` where ``.`` is the sum
contraction for belief updating and the max contraction for belief revision.
Messages to parents contract against a ``Pi`` in which the receiving parent's
slot holds a unit vector; messages to children leave out the receiving child's
lambda. Neither direction divides, so zero entries are harmless.

The same functions serve both modes. :class:`Mode` only selects the combine
operator and the normalization.
"""

from __future__ import annotations

import enum
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .errors import ContradictoryEvidenceError, NetworkValidationError, ZeroMassError
from .model import BeliefNetwork, Evidence, evidence_factor, joint_probability, validate
from .tensor import (
    CombineOp,
    Norm,
    Tensor,
    WitnessTable,
    argmax,
    inner_product,
    normalize,
    outer_product,
    scalar,
    term_product,
    unit_vector,
)

EQUILIBRIUM_TOL = 1e-12


class Mode(enum.Enum):
    SUM = "update"
    MAX = "revise"

    @property
    def op(self) -> CombineOp:
        return CombineOp.SUM if self is Mode.SUM else CombineOp.MAX

    @property
    def norm(self) -> Norm:
        return Norm.SUM_TO_ONE if self is Mode.SUM else Norm.MAX_TO_ONE


@dataclass
class MessageBoard:
    """Current messages, keyed by ``(sender, receiver)``.

    ``pi[(u, x)]`` lives on ``u``'s axis, ``lam[(y, x)]`` on ``x``'s axis and
    ``evidence[x]`` is the virtual-child lambda of ``x``.
    """

    pi: dict[tuple[str, str], Tensor] = field(default_factory=dict)
    lam: dict[tuple[str, str], Tensor] = field(default_factory=dict)
    evidence: dict[str, Tensor] = field(default_factory=dict)


@dataclass(frozen=True)
class LocalKernel:
    node: str
    cpt: Tensor
    parents: tuple[str, ...]
    parent_pis: tuple[Tensor, ...]
    children: tuple[str, ...]
    child_lambdas: tuple[Tensor, ...]
    evidence: Tensor | None

    @property
    def axis(self):
        return self.cpt.axes[0]

    def lambda_product(self, exclude: str | None = None) -> Tensor:
        """Term product of child lambdas (and evidence), optionally leaving one child out."""
        out = unit_vector(self.axis)
        for child, lam in zip(self.children, self.child_lambdas):
            if child != exclude:
                out = term_product(out, lam)
        if self.evidence is not None:
            out = term_product(out, self.evidence)
        return out

    def pi_product(self, unit_for: str | None = None) -> Tensor:
        """Outer product of parent pis; ``unit_for`` gets a unit vector instead."""
        out = scalar(1.0)
        for parent, pi in zip(self.parents, self.parent_pis):
            out = outer_product(out, unit_vector(pi.axes[0]) if parent == unit_for else pi)
        return out

    @property
    def Lambda(self) -> Tensor:
        return self.lambda_product()

    @property
    def Pi(self) -> Tensor:
        return self.pi_product()

    def contraction(self, mode: Mode) -> tuple[Tensor, WitnessTable | None]:
        """``P`` contracted against ``Pi`` over the parent axes."""
        return inner_product(self.cpt, self.Pi, mode.op)


@dataclass(frozen=True)
class NodeResult:
    """Normalized belief of one node.

    ``local_opt`` is the lowest state attaining the maximum belief; in MAX mode
    it is the node's locally optimal value. ``witnesses`` maps each state of
    the node to a best joint parent configuration (MAX mode only).
    """

    bel: Tensor
    local_opt: int
    witnesses: WitnessTable | None = None


@dataclass(frozen=True)
class Commitment:
    assignment: dict[str, int]
    score: float


@dataclass
class Equilibrium:
    mode: Mode
    board: MessageBoard
    results: dict[str, NodeResult]
    emissions: int
    lambda_witnesses: dict[tuple[str, str], WitnessTable] = field(default_factory=dict)


def _normalized(t: Tensor, mode: Mode, node: str) -> Tensor:
    try:
        return normalize(t, mode.norm)
    except ZeroMassError:
        raise ContradictoryEvidenceError(node) from None


# -- kernel --------------------------------------------------------------------


def init_boundaries(net: BeliefNetwork, e: Evidence, mode: Mode) -> MessageBoard:
    """Initial messages: unit vectors everywhere plus evidence as virtual children.

    Roots need no pi message; their conditional table is the prior and enters
    the kernel directly as ``P`` with an empty ``Pi``.
    """
    e.check(net)
    board = MessageBoard()
    for parent, child in net.edges:
        ax = net.variables[parent].axis
        board.pi[(parent, child)] = normalize(unit_vector(ax), mode.norm)
        board.lam[(child, parent)] = normalize(unit_vector(ax), mode.norm)
    for var in list(e.hard) + list(e.soft):
        vec = e.likelihood(net, var)
        board.evidence[var] = normalize(Tensor((net.variables[var].axis,), vec), mode.norm)
    return board


def build_kernel(net: BeliefNetwork, board: MessageBoard, node: str) -> LocalKernel:
    spec = net.nodes[node]
    children = net.children[node]
    return LocalKernel(
        node=node,
        cpt=net.factor(node),
        parents=spec.parents,
        parent_pis=tuple(board.pi[(p, node)] for p in spec.parents),
        children=children,
        child_lambdas=tuple(board.lam[(c, node)] for c in children),
        evidence=board.evidence.get(node),
    )


def compute_bel(kernel: LocalKernel, mode: Mode) -> NodeResult:
    contracted, witnesses = kernel.contraction(mode)
    bel = _normalized(term_product(kernel.Lambda, contracted), mode, kernel.node)
    (x_opt,), _ = argmax(bel)
    return NodeResult(bel, x_opt, witnesses)


def lambda_to_parent(kernel: LocalKernel, parent: str, mode: Mode, normalized: bool = True):
    """Lambda message to ``parent`` together with its witness table (MAX mode)."""
    local = term_product(kernel.cpt, outer_product(kernel.Lambda, kernel.pi_product(unit_for=parent)))
    others = scalar(1.0)
    for ax in local.axes:
        if ax.var_id != parent:
            others = outer_product(others, unit_vector(ax))
    msg, witnesses = inner_product(local, others, mode.op)
    if not np.any(msg.data > 0):
        raise ContradictoryEvidenceError(kernel.node)
    return (_normalized(msg, mode, kernel.node) if normalized else msg), witnesses


def compute_lambda_to_parent(kernel: LocalKernel, parent: str, mode: Mode) -> Tensor:
    return lambda_to_parent(kernel, parent, mode)[0]


def compute_pi_to_child(kernel: LocalKernel, child: str, mode: Mode, normalized: bool = True) -> Tensor:
    contracted, _ = kernel.contraction(mode)
    msg = term_product(kernel.lambda_product(exclude=child), contracted)
    if not np.any(msg.data > 0):
        raise ContradictoryEvidenceError(kernel.node)
    return _normalized(msg, mode, kernel.node) if normalized else msg


# -- scheduling ----------------------------------------------------------------


def _check_polytree(net: BeliefNetwork) -> None:
    for v in validate(net, net.mode):
        if v.kind in ("cycle", "multiply-connected", "unknown-parent"):
            raise NetworkValidationError(v.variable, v.kind, v.message)


def _bfs_from_roots(net: BeliefNetwork) -> list[str]:
    order, seen = [], set()
    for start in [v for v in net.ids if not net.nodes[v].parents] + net.ids:
        if start in seen:
            continue
        seen.add(start)
        queue = deque([start])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(net.neighbors(v)):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    return order


def propagate(
    net: BeliefNetwork,
    e: Evidence,
    mode: Mode,
    *,
    order: str = "bfs",
    seed: int | None = None,
    normalize_messages: bool = True,
    trace: TextIO | Callable[[dict], None] | None = None,
) -> Equilibrium:
    """Run message passing to equilibrium.

    A node sends to a neighbour as soon as it has heard from all its other
    neighbours, so each directed edge carries exactly one message and the run
    ends after ``2 * len(net.edges)`` emissions. ``order`` chooses among the
    ready messages: ``"bfs"`` takes them first-in first-out starting from the
    roots, ``"random"`` picks uniformly with ``random.Random(seed)``.
    """
    _check_polytree(net)
    if order not in ("bfs", "random"):
        raise ValueError(f"unknown order {order!r}")
    board = init_boundaries(net, e, mode)
    rng = random.Random(seed)
    rank = {v: i for i, v in enumerate(_bfs_from_roots(net))}

    received = {v: set() for v in net.variables}
    sent: set[tuple[str, str]] = set()
    ready: list[tuple[str, str]] = []

    def enqueue_ready(v: str):
        nbrs = net.neighbors(v)
        for w in sorted(nbrs, key=rank.__getitem__):
            if (v, w) not in sent and (v, w) not in ready and received[v] >= set(nbrs) - {w}:
                ready.append((v, w))

    for v in sorted(net.variables, key=rank.__getitem__):
        enqueue_ready(v)

    if trace is not None and not callable(trace):
        stream = trace
        trace = lambda rec: stream.write(json.dumps(rec) + "\n")  # noqa: E731

    lambda_witnesses: dict[tuple[str, str], WitnessTable] = {}
    emissions = 0
    while ready:
        idx = rng.randrange(len(ready)) if order == "random" else 0
        sender, receiver = ready.pop(idx)
        kernel = build_kernel(net, board, sender)
        if receiver in net.nodes[sender].parents:
            msg, wit = lambda_to_parent(kernel, receiver, mode, normalize_messages)
            old = board.lam[(sender, receiver)]
            board.lam[(sender, receiver)] = msg
            if wit is not None:
                lambda_witnesses[(sender, receiver)] = wit
            kind = "lambda"
        else:
            msg = compute_pi_to_child(kernel, receiver, mode, normalize_messages)
            old = board.pi[(sender, receiver)]
            board.pi[(sender, receiver)] = msg
            kind = "pi"
        emissions += 1
        sent.add((sender, receiver))
        if trace is not None:
            trace({
                "step": emissions, "from": sender, "to": receiver, "kind": kind,
                "mode": mode.value, "vector": msg.flat.tolist(),
                "change": float(np.max(np.abs(msg.data - old.data))),
            })
        received[receiver].add(sender)
        enqueue_ready(receiver)

    results = {v: compute_bel(build_kernel(net, board, v), mode) for v in net.ids}
    return Equilibrium(mode, board, results, emissions, lambda_witnesses)


def is_settled(net: BeliefNetwork, eq: Equilibrium, tol: float = EQUILIBRIUM_TOL) -> bool:
    """True when recomputing every message from the board changes none by more than ``tol``."""
    for parent, child in net.edges:
        child_kernel = build_kernel(net, eq.board, child)
        parent_kernel = build_kernel(net, eq.board, parent)
        lam = compute_lambda_to_parent(child_kernel, parent, eq.mode)
        pi = compute_pi_to_child(parent_kernel, child, eq.mode)
        old_lam = normalize(eq.board.lam[(child, parent)], eq.mode.norm)
        old_pi = normalize(eq.board.pi[(parent, child)], eq.mode.norm)
        if np.max(np.abs(lam.data - old_lam.data)) > tol or np.max(np.abs(pi.data - old_pi.data)) > tol:
            return False
    return True


# -- commitment ----------------------------------------------------------------


def commit(net: BeliefNetwork, eq: Equilibrium, e: Evidence) -> Commitment:
    """Extract one globally most probable assignment from a MAX-mode equilibrium.

    Each connected component is anchored at its lowest variable id, set to the
    argmax of its belief, and the rest follow the witness tables outward: a
    node's parents come from its own belief witnesses, a child (with the
    child's other parents) from the witnesses of the child's lambda message.
    """
    if eq.mode is not Mode.MAX:
        raise ValueError("commit needs a MAX-mode equilibrium")
    w: dict[str, int] = {}
    for anchor in net.ids:
        if anchor in w:
            continue
        w[anchor] = eq.results[anchor].local_opt
        # nodes whose parents were assigned together with them need no belief lookup
        queue = deque([(anchor, False)])
        while queue:
            v, parents_done = queue.popleft()
            if not parents_done and net.nodes[v].parents:
                pick = eq.results[v].witnesses.at((w[v],))
                for p in net.nodes[v].parents:
                    if p not in w:
                        w[p] = pick[p]
                        queue.append((p, False))
            for c in net.children[v]:
                if c in w:
                    continue
                pick = eq.lambda_witnesses[(c, v)].at((w[v],))
                w[c] = pick[c]
                for p in net.nodes[c].parents:
                    if p != v:
                        w[p] = pick[p]
                        queue.append((p, False))
                queue.append((c, True))
    for var, idx in e.hard.items():
        if w[var] != idx:
            raise AssertionError(f"commitment contradicts hard evidence on {var!r}")
    return Commitment(w, joint_probability(net, w) * evidence_factor(net, e, w))


def update_beliefs(net: BeliefNetwork, e: Evidence | None = None, **kwargs) -> dict[str, Tensor]:
    eq = propagate(net, e or Evidence(), Mode.SUM, **kwargs)
    return {v: r.bel for v, r in eq.results.items()}


def revise_beliefs(net: BeliefNetwork, e: Evidence | None = None, **kwargs) -> tuple[Commitment, Equilibrium]:
    e = e or Evidence()
    eq = propagate(net, e, Mode.MAX, **kwargs)
    return commit(net, eq, e), eq

"""Dense tensors with named axes.

A :class:`Tensor` is a nonnegative numpy array whose axes are labelled by
variable ids. Elementwise operations align operands by id rather than by
position, so tensors built in different axis orders can be mixed freely.

The operators are the ones belief propagation needs:

* ``term_product``  -- elementwise product over identical axis sets
* ``outer_product`` -- product over disjoint axis sets
* ``inner_product`` -- outer product followed by a sum or max over the
  shared axes; the max form also returns argmax witnesses

Ties are always resolved towards the lowest row-major index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import AxisMismatchError, SharedAxisError, TensorError, ZeroMassError

__all__ = [
    "Axis",
    "Tensor",
    "CombineOp",
    "Norm",
    "WitnessTable",
    "term_product",
    "outer_product",
    "inner_product",
    "normalize",
    "argmax",
    "unit_vector",
    "scalar",
]


class CombineOp(enum.Enum):
    SUM = "sum"
    MAX = "max"


class Norm(enum.Enum):
    SUM_TO_ONE = "sum_to_one"
    MAX_TO_ONE = "max_to_one"


@dataclass(frozen=True)
class Axis:
    var_id: Hashable
    size: int

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or self.size < 1:
            raise TensorError(f"axis {self.var_id!r} must have size >= 1, got {self.size!r}")


class Tensor:
    """Immutable nonnegative array with named, ordered axes.

    ``data`` may be given flat (row-major, leftmost axis slowest) or already
    shaped. An empty ``axes`` sequence makes a scalar.
    """

    __slots__ = ("axes", "data")

    def __init__(self, axes: Iterable[Axis], data):
        axes = tuple(axes)
        ids = [ax.var_id for ax in axes]
        if len(set(ids)) != len(ids):
            raise TensorError(f"duplicate axis ids {ids}")
        shape = tuple(int(ax.size) for ax in axes)
        arr = np.array(data, dtype=float)
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise TensorError(f"data has {arr.size} elements, axes {ids} need {int(np.prod(shape))}")
        arr = arr.reshape(shape)
        if not np.all(np.isfinite(arr)):
            raise TensorError("tensor elements must be finite")
        if np.any(arr < 0):
            raise TensorError("tensor elements must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def var_ids(self) -> tuple:
        return tuple(ax.var_id for ax in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def order(self) -> int:
        return len(self.axes)

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def axis(self, var_id) -> Axis:
        for ax in self.axes:
            if ax.var_id == var_id:
                return ax
        raise KeyError(var_id)

    def __getitem__(self, index):
        if not isinstance(index, tuple):
            index = (index,)
        return float(self.data[index])

    def aligned(self, var_ids: Sequence) -> "Tensor":
        """Return the same tensor with axes permuted into ``var_ids`` order."""
        var_ids = list(var_ids)
        if len(var_ids) != self.order or set(var_ids) != set(self.var_ids):
            raise AxisMismatchError(f"cannot align axes {self.var_ids} to {tuple(var_ids)}")
        perm = [self.var_ids.index(v) for v in var_ids]
        return Tensor([self.axes[p] for p in perm], np.transpose(self.data, perm))

    def allclose(self, other: "Tensor", rtol=0.0, atol=1e-12) -> bool:
        if set(self.var_ids) != set(other.var_ids):
            return False
        other = other.aligned(self.var_ids)
        return self.shape == other.shape and bool(np.allclose(self.data, other.data, rtol=rtol, atol=atol))

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.axes == other.axes and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.axes, self.data.tobytes()))

    def __repr__(self):
        axes = ", ".join(f"{ax.var_id}:{ax.size}" for ax in self.axes)
        return f"Tensor([{axes}], {self.data.tolist()!r})"


def scalar(value: float = 1.0) -> Tensor:
    return Tensor((), [value])


def unit_vector(axis: Axis) -> Tensor:
    return Tensor((axis,), np.ones(axis.size))


def _check_same_axes(a: Tensor, b: Tensor):
    if set(a.var_ids) != set(b.var_ids) or len(a.var_ids) != len(b.var_ids):
        raise AxisMismatchError(f"axis sets differ: {a.var_ids} vs {b.var_ids}")
    for ax in a.axes:
        if b.axis(ax.var_id).size != ax.size:
            raise AxisMismatchError(f"axis {ax.var_id!r} has size {ax.size} vs {b.axis(ax.var_id).size}")


def term_product(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; the result keeps ``a``'s axis order."""
    _check_same_axes(a, b)
    return Tensor(a.axes, a.data * b.aligned(a.var_ids).data)


def outer_product(a: Tensor, b: Tensor) -> Tensor:
    shared = set(a.var_ids) & set(b.var_ids)
    if shared:
        raise SharedAxisError(f"outer product operands share axes {sorted(map(str, shared))}")
    data = np.multiply.outer(a.data, b.data)
    return Tensor(a.axes + b.axes, data)


@dataclass(frozen=True)
class WitnessTable:
    """Argmax backpointers of a max contraction.

    ``index`` has the shape of the contraction result; each entry is the
    row-major joint index (over ``contracted``) of one maximizing assignment.
    """

    result_axes: tuple[Axis, ...]
    contracted: tuple[Axis, ...]
    index: np.ndarray

    def at(self, multi_index=()) -> dict:
        if not isinstance(multi_index, tuple):
            multi_index = (multi_index,)
        flat = int(self.index[multi_index])
        sizes = [ax.size for ax in self.contracted]
        states = np.unravel_index(flat, sizes) if sizes else ()
        return {ax.var_id: int(s) for ax, s in zip(self.contracted, states)}


def inner_product(a: Tensor, b: Tensor, op: CombineOp = CombineOp.SUM):
    """Contract ``a`` and ``b`` over their shared axes.

    Returns ``(result, witnesses)``. The result carries ``a``'s free axes
    followed by ``b``'s free axes. ``witnesses`` is a :class:`WitnessTable`
    for ``CombineOp.MAX`` and ``None`` for ``CombineOp.SUM``. With no shared
    axes this is the outer product (and every witness is the empty
    assignment).
    """
    op = CombineOp(op)
    common = [v for v in a.var_ids if v in set(b.var_ids)]
    for v in common:
        if a.axis(v).size != b.axis(v).size:
            raise AxisMismatchError(f"shared axis {v!r} has size {a.axis(v).size} vs {b.axis(v).size}")
    a_free = [ax for ax in a.axes if ax.var_id not in common]
    b_free = [ax for ax in b.axes if ax.var_id not in common]
    contracted = tuple(a.axis(v) for v in common)

    fa = int(np.prod([ax.size for ax in a_free], dtype=np.int64))
    fb = int(np.prod([ax.size for ax in b_free], dtype=np.int64))
    nc = int(np.prod([ax.size for ax in contracted], dtype=np.int64))
    am = a.aligned([ax.var_id for ax in a_free] + common).data.reshape(fa, nc)
    bm = b.aligned(common + [ax.var_id for ax in b_free]).data.reshape(nc, fb)

    result_axes = tuple(a_free) + tuple(b_free)
    shape = tuple(ax.size for ax in result_axes)
    if op is CombineOp.SUM:
        out = (am[:, :, None] * bm[None, :, :]).sum(axis=1)
        return Tensor(result_axes, out.reshape(shape)), None
    prod = am[:, :, None] * bm[None, :, :]
    best = prod.argmax(axis=1)
    out = np.take_along_axis(prod, best[:, None, :], axis=1)[:, 0, :]
    witnesses = WitnessTable(result_axes, contracted, best.reshape(shape))
    return Tensor(result_axes, out.reshape(shape)), witnesses


def normalize(a: Tensor, mode: Norm = Norm.SUM_TO_ONE) -> Tensor:
    mode = Norm(mode)
    top = float(a.data.max()) if a.data.size else 0.0
    if top <= 0.0:
        raise ZeroMassError("cannot normalize a tensor with no positive element")
    denom = float(a.data.sum()) if mode is Norm.SUM_TO_ONE else top
    return Tensor(a.axes, a.data / denom)


def argmax(a: Tensor):
    """Lowest row-major multi-index attaining the maximum, and the maximum."""
    if a.data.size == 0:
        raise TensorError("argmax of an empty tensor")
    flat = int(np.argmax(a.data.reshape(-1)))
    idx = tuple(int(i) for i in np.unravel_index(flat, a.shape)) if a.order else ()
    return idx, float(a.data.reshape(-1)[flat])

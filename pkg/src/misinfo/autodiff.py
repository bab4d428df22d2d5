"""Reverse-mode automatic differentiation over dense float64 arrays.

A :class:`Tensor` wraps a numpy array together with an optional gradient and
a backward closure.  Operations build an implicit tape through parent links;
``Tensor.backward`` walks that tape in reverse topological order and
accumulates gradients into every reachable tensor with ``requires_grad``.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, ShapeMismatchError

__all__ = [
    "Tensor",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "transpose",
    "exp",
    "log",
    "sqrt",
    "relu",
    "tensor_sum",
    "mean",
    "softmax",
    "concat",
    "stack",
    "take_rows",
    "slice_rows",
    "tile_rows",
    "reshape",
    "pairwise_sqdist",
    "cosine_similarity",
]


class Tensor:
    """Dense float64 array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        """Copy of the values with no gradient history."""
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def backward(self, seed=1.0):
        """Accumulate d(self)/d(leaf) into every reachable gradient-tracked tensor.

        ``seed`` is the upstream gradient; a scalar seed is broadcast to the
        tensor's shape (typically ``self`` is a scalar loss and seed is 1.0).
        """
        if not self.requires_grad:
            raise ValueError("backward() called on a tensor that does not require grad")
        g = np.asarray(seed, dtype=np.float64)
        if g.shape != self.data.shape:
            g = np.broadcast_to(g, self.data.shape).copy()
        _accumulate(self, g)

        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Arithmetic sugar; plain numbers and arrays are lifted to constants.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray):
    # Never mutate in place: `g` may alias another tensor's gradient.
    if t.requires_grad:
        t.grad = g if t.grad is None else t.grad + g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum `g` over the axes numpy broadcasting introduced for `shape`."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _from_op(data, parents, make_backward):
    parents = tuple(parents)
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, backward=make_backward())
    return Tensor(data)


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = a.data + b.data

    def make():
        def backward(g):
            _accumulate(a, _unbroadcast(g, a.data.shape))
            _accumulate(b, _unbroadcast(g, b.data.shape))

        return backward

    return _from_op(out, (a, b), make)


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = a.data - b.data

    def make():
        def backward(g):
            _accumulate(a, _unbroadcast(g, a.data.shape))
            _accumulate(b, _unbroadcast(-g, b.data.shape))

        return backward

    return _from_op(out, (a, b), make)


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = a.data * b.data

    def make():
        def backward(g):
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

        return backward

    return _from_op(out, (a, b), make)


def div(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    out = a.data / b.data

    def make():
        def backward(g):
            _accumulate(a, _unbroadcast(g / b.data, a.data.shape))
            _accumulate(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

        return backward

    return _from_op(out, (a, b), make)


def neg(a) -> Tensor:
    a = _lift(a)

    def make():
        def backward(g):
            _accumulate(a, -g)

        return backward

    return _from_op(-a.data, (a,), make)


def matmul(a, b) -> Tensor:
    """Matrix product for the 1D/2D combinations numpy's ``@`` supports."""
    a, b = _lift(a), _lift(b)
    out = a.data @ b.data
    an, bn = a.data.ndim, b.data.ndim
    if an not in (1, 2) or bn not in (1, 2):
        raise ShapeMismatchError(f"matmul supports 1D/2D operands, got {an}D @ {bn}D")

    def make():
        def backward(g):
            if an == 2 and bn == 2:
                _accumulate(a, g @ b.data.T)
                _accumulate(b, a.data.T @ g)
            elif an == 2 and bn == 1:
                _accumulate(a, np.outer(g, b.data))
                _accumulate(b, a.data.T @ g)
            elif an == 1 and bn == 2:
                _accumulate(a, b.data @ g)
                _accumulate(b, np.outer(a.data, g))
            else:  # 1D @ 1D -> scalar
                _accumulate(a, g * b.data)
                _accumulate(b, g * a.data)

        return backward

    return _from_op(out, (a, b), make)


def transpose(a) -> Tensor:
    a = _lift(a)
    if a.data.ndim != 2:
        raise ShapeMismatchError("transpose expects a 2D tensor")

    def make():
        def backward(g):
            _accumulate(a, g.T)

        return backward

    return _from_op(a.data.T, (a,), make)


def exp(a) -> Tensor:
    a = _lift(a)
    out = np.exp(a.data)

    def make():
        def backward(g):
            _accumulate(a, g * out)

        return backward

    return _from_op(out, (a,), make)


def log(a) -> Tensor:
    a = _lift(a)

    def make():
        def backward(g):
            _accumulate(a, g / a.data)

        return backward

    return _from_op(np.log(a.data), (a,), make)


def sqrt(a) -> Tensor:
    a = _lift(a)
    out = np.sqrt(a.data)

    def make():
        def backward(g):
            _accumulate(a, g * 0.5 / out)

        return backward

    return _from_op(out, (a,), make)


def relu(a) -> Tensor:
    a = _lift(a)

    def make():
        def backward(g):
            _accumulate(a, g * (a.data > 0.0))

        return backward

    return _from_op(np.maximum(a.data, 0.0), (a,), make)


def tensor_sum(a, axis=None) -> Tensor:
    a = _lift(a)
    out = a.data.sum(axis=axis)

    def make():
        def backward(g):
            if axis is None:
                _accumulate(a, np.broadcast_to(g, a.data.shape).copy())
            else:
                _accumulate(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

        return backward

    return _from_op(out, (a,), make)


def mean(a, axis=None) -> Tensor:
    a = _lift(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    out = a.data.mean(axis=axis)

    def make():
        def backward(g):
            if axis is None:
                _accumulate(a, np.broadcast_to(g / count, a.data.shape).copy())
            else:
                _accumulate(a, np.broadcast_to(np.expand_dims(g / count, axis), a.data.shape).copy())

        return backward

    return _from_op(out, (a,), make)


def softmax(a, axis=-1, mask=None) -> Tensor:
    """Numerically stabilized softmax along ``axis``.

    ``mask`` is an optional additive constant array (0 where allowed, -inf
    where excluded); every slice must keep at least one allowed entry.
    """
    a = _lift(a)
    if a.data.size == 0:
        raise DegenerateInputError("softmax of empty input")
    z = a.data if mask is None else a.data + mask
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def make():
        def backward(g):
            inner = (g * out).sum(axis=axis, keepdims=True)
            _accumulate(a, out * (g - inner))

        return backward

    return _from_op(out, (a,), make)


def concat(tensors, axis=0) -> Tensor:
    tensors = [_lift(t) for t in tensors]
    if not tensors:
        raise DegenerateInputError("concat of no tensors")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def make():
        def backward(g):
            for t, piece in zip(tensors, np.split(g, cuts, axis=axis)):
                _accumulate(t, piece)

        return backward

    return _from_op(out, tensors, make)


def stack(tensors) -> Tensor:
    """Stack equal-shape tensors along a new leading axis."""
    tensors = [_lift(t) for t in tensors]
    if not tensors:
        raise DegenerateInputError("stack of no tensors")
    out = np.stack([t.data for t in tensors])

    def make():
        def backward(g):
            for i, t in enumerate(tensors):
                _accumulate(t, g[i])

        return backward

    return _from_op(out, tensors, make)


def take_rows(a, indices) -> Tensor:
    """Gather rows by (constant) integer indices."""
    a = _lift(a)
    idx = np.asarray(indices, dtype=np.intp)
    out = a.data[idx]

    def make():
        def backward(g):
            full = np.zeros_like(a.data)
            np.add.at(full, idx, g)
            _accumulate(a, full)

        return backward

    return _from_op(out, (a,), make)


def slice_rows(a, start, stop) -> Tensor:
    a = _lift(a)
    out = a.data[start:stop]

    def make():
        def backward(g):
            full = np.zeros_like(a.data)
            full[start:stop] = g
            _accumulate(a, full)

        return backward

    return _from_op(out, (a,), make)


def tile_rows(a, count) -> Tensor:
    """Repeat a 1D tensor as ``count`` identical rows."""
    a = _lift(a)
    if a.data.ndim != 1:
        raise ShapeMismatchError("tile_rows expects a 1D tensor")
    out = np.tile(a.data, (count, 1))

    def make():
        def backward(g):
            _accumulate(a, g.sum(axis=0))

        return backward

    return _from_op(out, (a,), make)


def reshape(a, shape) -> Tensor:
    a = _lift(a)

    def make():
        def backward(g):
            _accumulate(a, g.reshape(a.data.shape))

        return backward

    return _from_op(a.data.reshape(shape), (a,), make)


def row(a, index) -> Tensor:
    """Single row of a 2D tensor as a 1D tensor."""
    return reshape(slice_rows(a, index, index + 1), (-1,))


def pairwise_sqdist(a) -> Tensor:
    """Matrix D with D[i, j] = squared euclidean distance of rows i and j."""
    a = _lift(a)
    x = a.data
    sq = (x * x).sum(axis=1)
    out = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)

    def make():
        def backward(g):
            s = g + g.T
            _accumulate(a, 2.0 * (s.sum(axis=1)[:, None] * x - s @ x))

        return backward

    return _from_op(out, (a,), make)


_NORM_FLOOR = 1e-150


def cosine_similarity(a, b) -> Tensor:
    """Cosine of the angle between two equal-length vectors, in [-1, 1].

    Differentiable in both arguments; zero-norm inputs raise instead of
    propagating NaN.
    """
    a, b = _lift(a), _lift(b)
    if a.data.ndim != 1 or b.data.ndim != 1 or a.data.shape != b.data.shape:
        raise ShapeMismatchError(
            f"cosine_similarity expects equal-length vectors, got {a.data.shape} and {b.data.shape}"
        )
    if a.data.size < 1:
        raise DegenerateInputError("cosine_similarity of empty vectors")
    if np.linalg.norm(a.data) < _NORM_FLOOR or np.linalg.norm(b.data) < _NORM_FLOOR:
        raise DegenerateInputError("cosine_similarity of a zero-norm vector")
    dot = matmul(a, b)
    norm_a = sqrt(tensor_sum(mul(a, a)))
    norm_b = sqrt(tensor_sum(mul(b, b)))
    return div(dot, mul(norm_a, norm_b))

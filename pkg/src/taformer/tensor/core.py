"""Dense tensor with reverse-mode automatic differentiation.

Storage is a numpy array; every differentiable primitive lives in
:mod:`taformer.tensor.ops` and records a backward closure on its output.
"""

from __future__ import annotations

import contextlib
import threading

import numpy as np

_DTYPES = {"float64": np.float64, "float32": np.float32}


class NumericalError(FloatingPointError):
    """A forward op produced NaN or Inf."""


class GraphError(RuntimeError):
    """Misuse of the autodiff graph (e.g. a second backward pass)."""


class _Context(threading.local):
    def __init__(self):
        self.dtype = np.float64
        self.grad_enabled = True


_ctx = _Context()


def get_dtype():
    return _ctx.dtype


def set_dtype(name: str) -> None:
    """Set the working precision: ``"float64"`` (verification) or ``"float32"`` (training)."""
    if name not in _DTYPES:
        raise ValueError(f"unknown dtype {name!r}; expected one of {sorted(_DTYPES)}")
    _ctx.dtype = _DTYPES[name]


@contextlib.contextmanager
def precision(name: str):
    old = _ctx.dtype
    set_dtype(name)
    try:
        yield
    finally:
        _ctx.dtype = old


@contextlib.contextmanager
def no_grad():
    old = _ctx.grad_enabled
    _ctx.grad_enabled = False
    try:
        yield
    finally:
        _ctx.grad_enabled = old


def grad_enabled() -> bool:
    return _ctx.grad_enabled


class Tensor:
    """n-dimensional array node in an autodiff graph.

    Tensors are immutable after construction; only ``grad`` is written, and
    only by :meth:`backward`.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_op", "_consumed")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.array(data, dtype=dtype or _ctx.dtype, copy=True)
        if arr.ndim == 0:
            arr = arr.reshape(())
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self._op = "leaf"
        self._consumed = False

    @classmethod
    def _wrap(cls, data: np.ndarray, parents, backward, op: str) -> "Tensor":
        """Build an op output, checking finiteness and attaching the graph edge."""
        if not np.all(np.isfinite(data)):
            raise NumericalError(f"{op}: non-finite value in forward output")
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out._op = op
        out._consumed = False
        needs = _ctx.grad_enabled and any(p.requires_grad for p in parents)
        out.requires_grad = needs
        if needs:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    def __len__(self):
        return self.shape[0]

    def backward(self, grad=None) -> None:
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every leaf that requires it.

        The graph is released afterwards; a second call raises GraphError.
        """
        if self._consumed:
            raise GraphError("backward called twice on the same graph; re-run the forward pass")
        if not self.requires_grad:
            raise GraphError("backward on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise GraphError(f"implicit gradient needs a scalar output, got shape {self.shape}")
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=self.data.dtype).reshape(self.shape)

        order = _topo_order(self)
        grads = {id(self): grad}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if node._consumed:
                raise GraphError(f"graph through {node._op} was already released by an earlier backward")
            if node._backward is None:
                if g is not None and node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            if g is not None:
                pgrads = node._backward(g)
                for p, pg in zip(node._parents, pgrads):
                    if pg is None or not p.requires_grad:
                        continue
                    key = id(p)
                    if key in grads:
                        grads[key] = grads[key] + pg
                    else:
                        grads[key] = pg
            node._consumed = True
            node._backward = None
            node._parents = ()

    # operator sugar; implementations live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.slice(self, index)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from . import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    def sum(self, axis=None, keepdims=False):
        from . import ops
        return ops.sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        from . import ops
        return ops.mean(self, axis, keepdims)


def _topo_order(root: Tensor) -> list:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)

"""Reverse-mode automatic differentiation over float64 numpy arrays.

A Tensor wraps an ndarray and remembers how it was made.  Each operation
stores its parents and a closure mapping the output gradient to parent
gradients; ``backward()`` walks the graph once in reverse topological
order and accumulates into ``.grad`` on every tensor that asked for it.

Shapes follow numpy broadcasting.  Whenever an operand was broadcast, its
gradient is summed back down to the original shape, so bias vectors and
batched activations coexist without special cases.  Everything is double
precision; that is what makes the finite-difference checks in
``gradcheck`` meaningful at tolerances far below any training signal.
"""
from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording, e.g. for validation and deployment passes."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to the shape the operand had before broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _swap_last(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


class Tensor:
    """A float64 array plus the bookkeeping for reverse-mode gradients."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- construction helpers ---------------------------------------------

    @staticmethod
    def _lift(value) -> "Tensor":
        return value if isinstance(value, Tensor) else Tensor(value)

    @staticmethod
    def _from_op(data: np.ndarray, parents: tuple["Tensor", ...], backward) -> "Tensor":
        out = Tensor(data)
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = Tensor._lift(other)
        data = self.data + other.data

        def backward(gout, a=self, b=other):
            return _unbroadcast(gout, a.shape), _unbroadcast(gout, b.shape)

        return Tensor._from_op(data, (self, other), backward)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        def backward(gout, a=self):
            return (-gout,)

        return Tensor._from_op(-self.data, (self,), backward)

    def __sub__(self, other) -> "Tensor":
        other = Tensor._lift(other)
        data = self.data - other.data

        def backward(gout, a=self, b=other):
            return _unbroadcast(gout, a.shape), _unbroadcast(-gout, b.shape)

        return Tensor._from_op(data, (self, other), backward)

    def __rsub__(self, other) -> "Tensor":
        return Tensor._lift(other) - self

    def __mul__(self, other) -> "Tensor":
        other = Tensor._lift(other)
        data = self.data * other.data

        def backward(gout, a=self, b=other):
            return (
                _unbroadcast(gout * b.data, a.shape),
                _unbroadcast(gout * a.data, b.shape),
            )

        return Tensor._from_op(data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = Tensor._lift(other)
        data = self.data / other.data

        def backward(gout, a=self, b=other):
            return (
                _unbroadcast(gout / b.data, a.shape),
                _unbroadcast(-gout * a.data / (b.data * b.data), b.shape),
            )

        return Tensor._from_op(data, (self, other), backward)

    def __rtruediv__(self, other) -> "Tensor":
        return Tensor._lift(other) / self

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise TypeError("only scalar exponents are supported")
        data = self.data**exponent

        def backward(gout, a=self, c=float(exponent)):
            return (gout * c * a.data ** (c - 1.0),)

        return Tensor._from_op(data, (self,), backward)

    def __matmul__(self, other) -> "Tensor":
        other = Tensor._lift(other)
        if self.ndim < 2 or other.ndim < 2:
            raise ValueError("matmul operands must have at least two dimensions")
        data = self.data @ other.data

        def backward(gout, a=self, b=other):
            ga = _unbroadcast(gout @ _swap_last(b.data), a.shape)
            gb = _unbroadcast(_swap_last(a.data) @ gout, b.shape)
            return ga, gb

        return Tensor._from_op(data, (self, other), backward)

    # -- pointwise nonlinearities -----------------------------------------

    def exp(self) -> "Tensor":
        data = np.exp(self.data)

        def backward(gout, d=data):
            return (gout * d,)

        return Tensor._from_op(data, (self,), backward)

    def tanh(self) -> "Tensor":
        data = np.tanh(self.data)

        def backward(gout, d=data):
            return (gout * (1.0 - d * d),)

        return Tensor._from_op(data, (self,), backward)

    def sigmoid(self) -> "Tensor":
        data = 1.0 / (1.0 + np.exp(-self.data))

        def backward(gout, d=data):
            return (gout * d * (1.0 - d),)

        return Tensor._from_op(data, (self,), backward)

    def relu(self) -> "Tensor":
        mask = self.data > 0.0

        def backward(gout, m=mask):
            return (gout * m,)

        return Tensor._from_op(self.data * mask, (self,), backward)

    def sqrt(self) -> "Tensor":
        data = np.sqrt(self.data)

        def backward(gout, d=data):
            return (gout * 0.5 / d,)

        return Tensor._from_op(data, (self,), backward)

    # -- reductions --------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(gout, a=self, axis=axis, keepdims=keepdims):
            g = gout
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, a.shape).copy(),)

        return Tensor._from_op(data, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else np.prod([self.data.shape[a] for a in np.atleast_1d(axis)])
        data = self.data.mean(axis=axis, keepdims=keepdims)

        def backward(gout, a=self, axis=axis, keepdims=keepdims, count=float(count)):
            g = gout
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, a.shape).copy() / count,)

        return Tensor._from_op(data, (self,), backward)

    # -- shape manipulation ------------------------------------------------

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        data = self.data.reshape(shape)

        def backward(gout, orig=self.data.shape):
            return (gout.reshape(orig),)

        return Tensor._from_op(data, (self,), backward)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        data = self.data.transpose(axes)
        inverse = tuple(np.argsort(axes))

        def backward(gout, inv=inverse):
            return (gout.transpose(inv),)

        return Tensor._from_op(data, (self,), backward)

    def __getitem__(self, index) -> "Tensor":
        data = self.data[index]

        def backward(gout, a=self, index=index):
            buf = np.zeros_like(a.data)
            buf[index] += gout
            return (buf,)

        return Tensor._from_op(data, (self,), backward)

    def pad_axis(self, axis: int, before: int, after: int) -> "Tensor":
        """Zero-pad along one axis; the backward pass slices the pad away."""
        widths = [(0, 0)] * self.ndim
        widths[axis] = (before, after)
        data = np.pad(self.data, widths)
        window = slice(before, before + self.data.shape[axis])

        def backward(gout, axis=axis, window=window, nd=self.ndim):
            idx = [slice(None)] * nd
            idx[axis] = window
            return (gout[tuple(idx)],)

        return Tensor._from_op(data, (self,), backward)

    # -- engine ------------------------------------------------------------

    def backward(self) -> None:
        """Backpropagate from a scalar through the recorded graph."""
        if self.data.size != 1:
            raise ValueError("backward() starts from a scalar loss")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            grads = node._backward(node.grad)
            for parent, grad in zip(node._parents, grads):
                if not parent.requires_grad or grad is None:
                    continue
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.data)
                parent.grad += grad

"""Minimal reverse-mode automatic differentiation over 2-D float64 arrays.

Every value in the compute graph is a :class:`Tensor2` wrapping a
``numpy`` matrix (vectors are 1 x n). Operations record a backward closure;
:func:`backward` replays them in reverse topological order, accumulating
gradients into ``.grad`` buffers. Leaves created via :func:`param` keep
their accumulated gradient across calls, which is what gradient
accumulation over a batch relies on.

The propagation operator :func:`spmm` multiplies by a constant sparse
matrix (CSR); its transpose is kept alongside so the backward pass is a
second sparse product.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy import sparse

__all__ = [
    "Tensor2",
    "SparseMatrix",
    "param",
    "constant",
    "matmul",
    "add",
    "relu",
    "spmm",
    "mean_rows",
    "concat_cols",
    "row_softmax",
    "gated_pair_sum",
    "dropout",
    "backward",
]


class Tensor2:
    """A 2-D float64 value node with an optional gradient buffer."""

    __slots__ = ("values", "grad", "_parents", "_backward")

    def __init__(
        self,
        values: np.ndarray,
        parents: tuple["Tensor2", ...] = (),
        backward_fn: Callable[[], None] | None = None,
    ):
        v = np.asarray(values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"Tensor2 requires a 2-D array, got shape {v.shape}")
        self.values = v
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._backward = backward_fn

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def accum_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor2(shape={self.values.shape})"


class SparseMatrix:
    """Constant sparse operand for :func:`spmm`; stores the transpose too."""

    __slots__ = ("mat", "mat_t", "shape")

    def __init__(self, mat: sparse.csr_matrix):
        self.mat = sparse.csr_matrix(mat)
        self.mat_t = sparse.csr_matrix(self.mat.T)
        self.shape = self.mat.shape

    def to_dense(self) -> np.ndarray:
        return np.asarray(self.mat.todense(), dtype=np.float64)


def param(values: np.ndarray) -> Tensor2:
    """Leaf tensor holding learnable values (gradient accumulates)."""
    return Tensor2(np.array(values, dtype=np.float64))


def constant(values: np.ndarray) -> Tensor2:
    """Leaf tensor for inputs; receives gradients but they are unused."""
    return Tensor2(np.asarray(values, dtype=np.float64))


def matmul(a: Tensor2, b: Tensor2) -> Tensor2:
    if a.cols != b.rows:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = Tensor2(a.values @ b.values, (a, b))

    def backward_fn() -> None:
        g = out.grad
        a.accum_grad(g @ b.values.T)
        b.accum_grad(a.values.T @ g)

    out._backward = backward_fn
    return out


def add(a: Tensor2, b: Tensor2) -> Tensor2:
    """Elementwise sum; ``b`` may be a 1 x n row broadcast over a's rows."""
    broadcast = b.rows == 1 and a.rows != 1
    if a.cols != b.cols or (not broadcast and a.rows != b.rows):
        raise ValueError(f"add shape mismatch: {a.shape} + {b.shape}")
    out = Tensor2(a.values + b.values, (a, b))

    def backward_fn() -> None:
        g = out.grad
        a.accum_grad(g)
        b.accum_grad(g.sum(axis=0, keepdims=True) if broadcast else g)

    out._backward = backward_fn
    return out


def relu(a: Tensor2) -> Tensor2:
    out = Tensor2(np.maximum(a.values, 0.0), (a,))

    def backward_fn() -> None:
        a.accum_grad(out.grad * (a.values > 0.0))

    out._backward = backward_fn
    return out


def spmm(mat: SparseMatrix, a: Tensor2) -> Tensor2:
    """Sparse @ dense product with a constant left operand."""
    if mat.shape[1] != a.rows:
        raise ValueError(f"spmm shape mismatch: {mat.shape} @ {a.shape}")
    out = Tensor2(mat.mat @ a.values, (a,))

    def backward_fn() -> None:
        a.accum_grad(mat.mat_t @ out.grad)

    out._backward = backward_fn
    return out


def mean_rows(a: Tensor2) -> Tensor2:
    """Column-wise mean over rows, yielding a 1 x cols tensor."""
    if a.rows < 1:
        raise ValueError("mean_rows requires at least one row")
    n = a.rows
    out = Tensor2(a.values.mean(axis=0, keepdims=True), (a,))

    def backward_fn() -> None:
        a.accum_grad(np.repeat(out.grad / n, n, axis=0))

    out._backward = backward_fn
    return out


def concat_cols(a: Tensor2, b: Tensor2) -> Tensor2:
    if a.rows != b.rows:
        raise ValueError(f"concat_cols row mismatch: {a.shape} vs {b.shape}")
    out = Tensor2(np.hstack([a.values, b.values]), (a, b))
    split = a.cols

    def backward_fn() -> None:
        g = out.grad
        a.accum_grad(g[:, :split])
        b.accum_grad(g[:, split:])

    out._backward = backward_fn
    return out


def _softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def row_softmax(a: Tensor2) -> Tensor2:
    p = _softmax(a.values)
    out = Tensor2(p, (a,))

    def backward_fn() -> None:
        g = out.grad
        dot = (g * p).sum(axis=1, keepdims=True)
        a.accum_grad(p * (g - dot))

    out._backward = backward_fn
    return out


def gated_pair_sum(w: Tensor2, a: Tensor2, b: Tensor2) -> Tensor2:
    """Convex combination alpha_1*a + alpha_2*b with alpha = softmax(w).

    ``w`` is a 1 x 2 learnable gate; gradients flow to w, a, and b.
    """
    if w.shape != (1, 2):
        raise ValueError(f"gate must be 1 x 2, got {w.shape}")
    if a.shape != b.shape:
        raise ValueError(f"gated_pair_sum shape mismatch: {a.shape} vs {b.shape}")
    alpha = _softmax(w.values)[0]
    out = Tensor2(alpha[0] * a.values + alpha[1] * b.values, (w, a, b))

    def backward_fn() -> None:
        g = out.grad
        a.accum_grad(alpha[0] * g)
        b.accum_grad(alpha[1] * g)
        dalpha = np.array([(g * a.values).sum(), (g * b.values).sum()])
        dw = alpha * (dalpha - float(dalpha @ alpha))
        w.accum_grad(dw.reshape(1, 2))

    out._backward = backward_fn
    return out


def dropout(a: Tensor2, rate: float, rng: np.random.Generator) -> Tensor2:
    """Inverted-scaling dropout; the mask is drawn from ``rng`` at call time."""
    if not (0.0 <= rate < 1.0):
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return a
    scale = (rng.random(a.shape) >= rate) / (1.0 - rate)
    out = Tensor2(a.values * scale, (a,))

    def backward_fn() -> None:
        a.accum_grad(out.grad * scale)

    out._backward = backward_fn
    return out


def backward(root: Tensor2, seed_grad: np.ndarray) -> None:
    """Reverse-mode sweep from ``root`` seeded with d(loss)/d(root)."""
    seed = np.asarray(seed_grad, dtype=np.float64)
    if seed.shape != root.values.shape:
        raise ValueError(f"seed gradient shape {seed.shape} != value shape {root.values.shape}")
    order: list[Tensor2] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor2, bool]] = [(root, False)]
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
            if id(parent) not in seen:
                stack.append((parent, False))
    root.accum_grad(seed)
    for node in reversed(order):
        if node._backward is not None:
            node._backward()

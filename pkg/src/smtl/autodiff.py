"""Minimal reverse-mode autodiff on float64 numpy arrays.

Exactly the primitives the sequence model needs: affine maps, pointwise
nonlinearities, concat/slice/stack plumbing, embedding lookup, softmax/log
and the NLL pick, plus bias-corrected Adam with global-norm clipping.
No broadcasting: shapes must match exactly per operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np


class ShapeError(ValueError):
    """Raised at graph-construction time when operand shapes do not conform."""

    def __init__(self, op: str, *shapes):
        super().__init__(f"{op}: incompatible shapes {' vs '.join(str(tuple(s)) for s in shapes)}")


class NonFiniteError(RuntimeError):
    """Raised when a gradient or value has gone inf/nan."""


class Tensor:
    """A float64 array with a lazily allocated gradient slot of the same shape."""

    __slots__ = ("values", "grad", "name")

    def __init__(self, values, name: Optional[str] = None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self):
        return self.values.shape

    def accumulate(self, delta: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(delta, dtype=np.float64)  # own copy; delta may be shared
        else:
            self.grad += delta

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape})"


class Node(NamedTuple):
    op: str
    inputs: tuple
    output: Tensor
    backward: Callable[[np.ndarray], None]


class Graph:
    """Tape of operations in construction order; backward replays it reversed.

    Construction order is a topological order by definition, so the reverse
    sweep sees every consumer before its producers.
    """

    def __init__(self):
        self.nodes: list[Node] = []

    def _emit(self, op, inputs, values, backward) -> Tensor:
        out = Tensor(values)
        self.nodes.append(Node(op, tuple(inputs), out, backward))
        return out

    # -- pointwise ---------------------------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError("add", a.shape, b.shape)

        def backward(g):
            a.accumulate(g)
            b.accumulate(g)

        return self._emit("add", (a, b), a.values + b.values, backward)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError("mul", a.shape, b.shape)

        def backward(g):
            a.accumulate(g * b.values)
            b.accumulate(g * a.values)

        return self._emit("mul", (a, b), a.values * b.values, backward)

    def scale(self, a: Tensor, c: float) -> Tensor:
        c = float(c)

        def backward(g):
            a.accumulate(g * c)

        return self._emit("scale", (a,), a.values * c, backward)

    def tanh(self, a: Tensor) -> Tensor:
        y = np.tanh(a.values)

        def backward(g):
            a.accumulate(g * (1.0 - y * y))

        return self._emit("tanh", (a,), y, backward)

    def sigmoid(self, a: Tensor) -> Tensor:
        with np.errstate(over="ignore"):  # exp overflow saturates to 0/1 correctly
            y = 1.0 / (1.0 + np.exp(-a.values))

        def backward(g):
            a.accumulate(g * y * (1.0 - y))

        return self._emit("sigmoid", (a,), y, backward)

    def log(self, a: Tensor) -> Tensor:
        y = np.log(a.values)

        def backward(g):
            a.accumulate(g / a.values)

        return self._emit("log", (a,), y, backward)

    # -- linear algebra ----------------------------------------------------

    def affine(self, w: Tensor, x: Tensor, b: Optional[Tensor] = None) -> Tensor:
        """w @ x (+ b) for a matrix w (m, n) and vector x (n,)."""
        if len(w.shape) != 2 or len(x.shape) != 1 or w.shape[1] != x.shape[0]:
            raise ShapeError("affine", w.shape, x.shape)
        y = w.values @ x.values
        if b is not None:
            if b.shape != (w.shape[0],):
                raise ShapeError("affine(bias)", w.shape, b.shape)
            y = y + b.values

        def backward(g):
            w.accumulate(np.outer(g, x.values))
            x.accumulate(w.values.T @ g)
            if b is not None:
                b.accumulate(g)

        inputs = (w, x) if b is None else (w, x, b)
        return self._emit("affine", inputs, y, backward)

    def matvec_t(self, w: Tensor, x: Tensor) -> Tensor:
        """w.T @ x: weighted combination of the rows of w."""
        if len(w.shape) != 2 or len(x.shape) != 1 or w.shape[0] != x.shape[0]:
            raise ShapeError("matvec_t", w.shape, x.shape)

        def backward(g):
            w.accumulate(np.outer(x.values, g))
            x.accumulate(w.values @ g)

        return self._emit("matvec_t", (w, x), w.values.T @ x.values, backward)

    def dot(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape or len(a.shape) != 1:
            raise ShapeError("dot", a.shape, b.shape)

        def backward(g):
            a.accumulate(g * b.values)
            b.accumulate(g * a.values)

        return self._emit("dot", (a, b), np.asarray(a.values @ b.values), backward)

    # -- structure ---------------------------------------------------------

    def concat(self, parts: list[Tensor]) -> Tensor:
        if not parts or any(len(p.shape) != 1 for p in parts):
            raise ShapeError("concat", *[p.shape for p in parts] or [()])
        sizes = [p.shape[0] for p in parts]
        offsets = np.cumsum([0] + sizes)

        def backward(g):
            for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
                p.accumulate(g[lo:hi])

        return self._emit("concat", tuple(parts), np.concatenate([p.values for p in parts]), backward)

    def slice(self, a: Tensor, lo: int, hi: int) -> Tensor:
        if len(a.shape) != 1 or not (0 <= lo <= hi <= a.shape[0]):
            raise ShapeError("slice", a.shape, (lo, hi))

        def backward(g):
            full = np.zeros_like(a.values)
            full[lo:hi] = g
            a.accumulate(full)

        return self._emit("slice", (a,), a.values[lo:hi].copy(), backward)

    def stack_rows(self, rows: list[Tensor]) -> Tensor:
        if not rows or any(r.shape != rows[0].shape or len(r.shape) != 1 for r in rows):
            raise ShapeError("stack_rows", *[r.shape for r in rows] or [()])

        def backward(g):
            for i, r in enumerate(rows):
                r.accumulate(g[i])

        return self._emit("stack_rows", tuple(rows), np.stack([r.values for r in rows]), backward)

    def lookup(self, table: Tensor, index: int) -> Tensor:
        if len(table.shape) != 2:
            raise ShapeError("lookup", table.shape)
        if not (0 <= index < table.shape[0]):
            raise IndexError(f"lookup: row {index} outside table of {table.shape[0]} rows")

        def backward(g):
            if table.grad is None:
                table.grad = np.zeros_like(table.values)
            table.grad[index] += g

        return self._emit("lookup", (table,), table.values[index].copy(), backward)

    # -- distributions -----------------------------------------------------

    def softmax(self, a: Tensor) -> Tensor:
        if len(a.shape) != 1:
            raise ShapeError("softmax", a.shape)
        z = a.values - a.values.max()
        e = np.exp(z)
        y = e / e.sum()

        def backward(g):
            a.accumulate(y * (g - float(g @ y)))

        return self._emit("softmax", (a,), y, backward)

    def nll_pick(self, logp: Tensor, index: int) -> Tensor:
        """Negative log-likelihood of one entry of a log-probability vector."""
        if len(logp.shape) != 1:
            raise ShapeError("nll_pick", logp.shape)
        if not (0 <= index < logp.shape[0]):
            raise IndexError(f"nll_pick: index {index} outside vector of {logp.shape[0]}")

        def backward(g):
            if logp.grad is None:
                logp.grad = np.zeros_like(logp.values)
            logp.grad[index] -= g

        return self._emit("nll_pick", (logp,), np.asarray(-logp.values[index]), backward)

    # -- backward ----------------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(tensor) into .grad for every reachable tensor."""
        if loss.shape != ():
            raise ShapeError("backward(loss must be scalar)", loss.shape)
        loss.grad = np.ones((), dtype=np.float64)
        for node in reversed(self.nodes):
            if node.output.grad is not None:
                node.backward(node.output.grad)


# -- parameter initialization: uniform Glorot, biases zero -------------------


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int, name: str) -> Tensor:
    """Uniform init in +/- sqrt(6 / (fan_in + fan_out))."""
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_out, fan_in)), name=name)


def zeros(shape, name: str) -> Tensor:
    return Tensor(np.zeros(shape), name=name)


@dataclass
class AdamState:
    """Bias-corrected Adam with a global grad-norm clip applied first."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def grad_global_norm(params: dict[str, Tensor]) -> float:
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    return math.sqrt(total)


def adam_step(params: dict[str, Tensor], state: AdamState) -> None:
    """One Adam update over every parameter that received a gradient.

    Untouched parameters (grad slot never allocated) are left bit-identical;
    their moments do not decay. Grads are zeroed afterwards.
    """
    for name, p in params.items():
        if p.grad is not None and not np.isfinite(p.grad).all():
            raise NonFiniteError(f"non-finite gradient in parameter {name!r}")

    norm = grad_global_norm(params)
    scale = state.clip_norm / norm if (state.clip_norm > 0 and norm > state.clip_norm) else 1.0

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, p in params.items():
        if p.grad is None:
            continue
        g = p.grad if scale == 1.0 else p.grad * scale
        if name not in state.m:
            state.m[name] = np.zeros_like(p.values)
            state.v[name] = np.zeros_like(p.values)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.values -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.zero_grad()

"""Reverse-mode automatic differentiation over dense numpy arrays.

Only the operations the encoders and the three-stage decoder compose are
provided: matmul, concat, elementwise add/mul, tanh, sigmoid, dot,
embedding lookup, masked softmax and softmax cross-entropy, and reductions.
No broadcasting beyond row-bias addition and scalar scaling.

A computation graph is the set of Tensors linked through ``_parents``;
``backward`` walks it once in reverse topological order and accumulates
gradients, so a parameter used several times receives the summed gradient.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

_DTYPE = np.float64


def set_dtype(dtype) -> None:
    """Switch the default float precision (float64 for tests, float32 for speed)."""
    global _DTYPE
    dt = np.dtype(dtype)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ShapeError(f"unsupported dtype {dtype!r}")
    _DTYPE = dt.type


def get_dtype():
    return _DTYPE


class Tensor:
    """A dense array with an optional gradient and parent links.

    ``data`` is row-major; ``grad`` (once populated) always matches its shape.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=_DTYPE)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad += g

    def backward(self) -> None:
        backward(self)


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(data, requires_grad=requires_grad)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=_DTYPE), requires_grad=requires_grad)


def uniform(shape, rng: np.random.Generator, scale: float = 0.08,
            requires_grad: bool = True) -> Tensor:
    """Uniform(-scale, scale) initialization for trainable matrices."""
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=requires_grad)


def _wants_grad(t: Tensor) -> bool:
    return t.requires_grad or bool(t._parents)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if any(_wants_grad(p) for p in parents):
        out._parents = parents
        out._backward = backward_fn
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; also supports matrix + row bias and anything + scalar."""
    if a.data.shape == b.data.shape:
        pass
    elif a.data.ndim == 2 and b.data.ndim == 1 and a.data.shape[1] == b.data.shape[0]:
        pass
    elif b.data.ndim == 0 or a.data.ndim == 0:
        pass
    else:
        raise ShapeError(f"add: incompatible shapes {a.data.shape} and {b.data.shape}")
    out_data = a.data + b.data

    def bwd(g):
        _acc_reduced(a, g)
        _acc_reduced(b, g)

    return _make(out_data, (a, b), bwd)


def _acc_reduced(t: Tensor, g: np.ndarray) -> None:
    """Accumulate g into t, summing over axes that were broadcast."""
    if not _wants_grad(t):
        return
    if t.data.shape == g.shape:
        t._accumulate(g)
    elif t.data.ndim == 0:
        t._accumulate(g.sum())
    elif t.data.ndim == 1 and g.ndim == 2:
        t._accumulate(g.sum(axis=0))
    else:
        raise ShapeError(f"gradient shape {g.shape} does not reduce to {t.data.shape}")


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, scale(b, -1.0))


def scale(a: Tensor, k: float) -> Tensor:
    out_data = a.data * k

    def bwd(g):
        _acc_reduced(a, g * k)

    return _make(out_data, (a,), bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; one operand may be a scalar tensor."""
    if not (a.data.shape == b.data.shape or a.data.ndim == 0 or b.data.ndim == 0):
        raise ShapeError(f"mul: incompatible shapes {a.data.shape} and {b.data.shape}")
    out_data = a.data * b.data

    def bwd(g):
        _acc_reduced(a, g * b.data)
        _acc_reduced(b, g * a.data)

    return _make(out_data, (a, b), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim == 0 or b.data.ndim == 0:
        raise ShapeError("matmul requires 1D or 2D operands")
    try:
        out_data = a.data @ b.data
    except ValueError as e:
        raise ShapeError(str(e)) from e

    def bwd(g):
        ad, bd = a.data, b.data
        if ad.ndim == 1 and bd.ndim == 2:      # (k,) @ (k,m) -> (m,)
            if _wants_grad(a):
                a._accumulate(bd @ g)
            if _wants_grad(b):
                b._accumulate(np.outer(ad, g))
        elif ad.ndim == 2 and bd.ndim == 1:    # (n,k) @ (k,) -> (n,)
            if _wants_grad(a):
                a._accumulate(np.outer(g, bd))
            if _wants_grad(b):
                b._accumulate(ad.T @ g)
        elif ad.ndim == 2 and bd.ndim == 2:
            if _wants_grad(a):
                a._accumulate(g @ bd.T)
            if _wants_grad(b):
                b._accumulate(ad.T @ g)
        else:                                   # (k,) @ (k,) -> ()
            if _wants_grad(a):
                a._accumulate(g * bd)
            if _wants_grad(b):
                b._accumulate(g * ad)

    return _make(out_data, (a, b), bwd)


def dot(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 1 or b.data.ndim != 1 or a.data.shape != b.data.shape:
        raise ShapeError(f"dot: need equal 1D shapes, got {a.data.shape}, {b.data.shape}")
    return matmul(a, b)


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate 1D tensors."""
    if not parts:
        raise ShapeError("concat of zero tensors")
    if any(p.data.ndim != 1 for p in parts):
        raise ShapeError("concat supports 1D tensors only")
    out_data = np.concatenate([p.data for p in parts])
    sizes = [p.data.shape[0] for p in parts]

    def bwd(g):
        off = 0
        for p, n in zip(parts, sizes):
            if _wants_grad(p):
                p._accumulate(g[off:off + n])
            off += n

    return _make(out_data, tuple(parts), bwd)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def bwd(g):
        _acc_reduced(a, g * (1.0 - out_data * out_data))

    return _make(out_data, (a,), bwd)


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def bwd(g):
        _acc_reduced(a, g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), bwd)


def sum_over(parts: list[Tensor]) -> Tensor:
    """Elementwise sum of same-shape tensors (empty-child sums are built by caller)."""
    if not parts:
        raise ShapeError("sum_over of zero tensors")
    shape = parts[0].data.shape
    if any(p.data.shape != shape for p in parts):
        raise ShapeError("sum_over requires identical shapes")
    out_data = parts[0].data.copy()
    for p in parts[1:]:
        out_data += p.data

    def bwd(g):
        for p in parts:
            _acc_reduced(p, g)

    return _make(out_data, tuple(parts), bwd)


def reduce_sum(a: Tensor) -> Tensor:
    out_data = a.data.sum()

    def bwd(g):
        _acc_reduced(a, np.full(a.data.shape, g, dtype=a.data.dtype))

    return _make(np.asarray(out_data), (a,), bwd)


def embedding_lookup(table: Tensor, index: int) -> Tensor:
    if table.data.ndim != 2:
        raise ShapeError("embedding table must be 2D")
    if not 0 <= index < table.data.shape[0]:
        raise ShapeError(f"embedding index {index} out of range {table.data.shape[0]}")
    out_data = table.data[index].copy()

    def bwd(g):
        if _wants_grad(table):
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            table.grad[index] += g

    return _make(out_data, (table,), bwd)


def _masked_softmax(logits: np.ndarray, mask) -> np.ndarray:
    z = logits.astype(logits.dtype, copy=True)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != z.shape:
            raise ShapeError("mask shape must match logits")
        if not mask.any():
            raise ShapeError("softmax with all positions masked")
        z = np.where(mask, z, -np.inf)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def softmax(a: Tensor, mask=None) -> Tensor:
    """Softmax over a 1D tensor; masked-out positions get probability zero."""
    if a.data.ndim != 1:
        raise ShapeError("softmax expects a 1D tensor")
    p = _masked_softmax(a.data, mask)

    def bwd(g):
        inner = (g * p).sum()
        _acc_reduced(a, p * (g - inner))

    return _make(p, (a,), bwd)


def softmax_cross_entropy(logits: Tensor, target: int, mask=None) -> Tensor:
    """Negative log-likelihood of ``target`` under softmax(logits)."""
    if logits.data.ndim != 1:
        raise ShapeError("softmax_cross_entropy expects 1D logits")
    if not 0 <= target < logits.data.shape[0]:
        raise ShapeError(f"target {target} out of range")
    p = _masked_softmax(logits.data, mask)
    if p[target] <= 0.0:
        raise ShapeError("target position is masked out")
    loss = -np.log(p[target])

    def bwd(g):
        d = p.copy()
        d[target] -= 1.0
        _acc_reduced(logits, g * d)

    return _make(np.asarray(loss), (logits,), bwd)


def backward(loss: Tensor) -> None:
    """Populate grads of every reachable tensor with d(loss)/d(tensor).

    Iterative post-order traversal: each node is visited exactly once even
    on diamond-shaped graphs, and repeated uses accumulate.
    """
    if loss.data.ndim != 0:
        raise ShapeError("backward requires a scalar loss")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    loss._accumulate(np.asarray(1.0, dtype=loss.data.dtype))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def clip_grad_norm(params: list[Tensor], max_norm: float) -> float:
    """Scale all grads so their global L2 norm is at most ``max_norm``."""
    sq = 0.0
    for p in params:
        if p.grad is not None:
            sq += float((p.grad * p.grad).sum())
    norm = float(np.sqrt(sq))
    if norm > max_norm > 0.0:
        k = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= k
    return norm


class AdamState:
    """First/second moment estimates and step counter for one parameter set."""

    def __init__(self, params: list[Tensor]):
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0


def adam_step(params: list[Tensor], state: AdamState, lr: float = 1e-3,
              betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> None:
    """One Adam update in place; tensors with requires_grad=False are skipped."""
    b1, b2 = betas
    state.t += 1
    t = state.t
    for i, p in enumerate(params):
        if not p.requires_grad:
            continue
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * (g * g)
        m_hat = state.m[i] / (1 - b1 ** t)
        v_hat = state.v[i] / (1 - b2 ** t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Object wrapper around :func:`adam_step` bound to one parameter list."""

    def __init__(self, params: list[Tensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.state = AdamState(self.params)

    def step(self) -> None:
        adam_step(self.params, self.state, self.lr, self.betas, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

"""Minimal dense-tensor reverse-mode autodiff with GRU, MLP and Adam.

Float64 throughout; single-threaded tape; gradients are validated against
central finite differences in the test suite.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_grad_enabled = True


class no_grad:
    """Context manager disabling tape recording (evaluation fast path)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad back down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- graph construction helpers --

    @staticmethod
    def _make(data, parents, backward):
        track = _grad_enabled and any(p.requires_grad for p in parents)
        if not track:
            return Tensor(data)
        return Tensor(data, requires_grad=True, parents=parents, backward=backward)

    def __add__(self, other):
        other = as_tensor(other)
        out_data = self.data + other.data

        def bwd(g, a=self, b=other):
            if a.requires_grad:
                a._accum(_unbroadcast(g, a.shape))
            if b.requires_grad:
                b._accum(_unbroadcast(g, b.shape))

        return Tensor._make(out_data, (self, other), bwd)

    __radd__ = __add__

    def __neg__(self):
        def bwd(g, a=self):
            if a.requires_grad:
                a._accum(-g)

        return Tensor._make(-self.data, (self,), bwd)

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        out_data = self.data * other.data

        def bwd(g, a=self, b=other):
            if a.requires_grad:
                a._accum(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b._accum(_unbroadcast(g * a.data, b.shape))

        return Tensor._make(out_data, (self, other), bwd)

    __rmul__ = __mul__

    def __matmul__(self, other):
        other = as_tensor(other)
        out_data = self.data @ other.data

        def bwd(g, a=self, b=other):
            if a.requires_grad:
                a._accum(g @ b.data.T)
            if b.requires_grad:
                b._accum(a.data.T @ g)

        return Tensor._make(out_data, (self, other), bwd)

    def __pow__(self, k: float):
        out_data = self.data ** k

        def bwd(g, a=self):
            if a.requires_grad:
                a._accum(g * k * a.data ** (k - 1))

        return Tensor._make(out_data, (self,), bwd)

    def sum(self):
        def bwd(g, a=self):
            if a.requires_grad:
                a._accum(np.full(a.shape, g))

        return Tensor._make(self.data.sum(), (self,), bwd)

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros(self.shape)
        self.grad += g

    def backward(self):
        if self.data.shape != ():
            raise ValueError("backward() requires a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
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
                if p.requires_grad:
                    stack.append((p, False))
        self.grad = np.asarray(1.0)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def sigmoid(x: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-x.data))

    def bwd(g, a=x, o=out_data):
        if a.requires_grad:
            a._accum(g * o * (1.0 - o))

    return Tensor._make(out_data, (x,), bwd)


def tanh(x: Tensor) -> Tensor:
    out_data = np.tanh(x.data)

    def bwd(g, a=x, o=out_data):
        if a.requires_grad:
            a._accum(g * (1.0 - o * o))

    return Tensor._make(out_data, (x,), bwd)


def exp(x: Tensor) -> Tensor:
    out_data = np.exp(x.data)

    def bwd(g, a=x, o=out_data):
        if a.requires_grad:
            a._accum(g * o)

    return Tensor._make(out_data, (x,), bwd)


def log(x: Tensor) -> Tensor:
    out_data = np.log(x.data)

    def bwd(g, a=x):
        if a.requires_grad:
            a._accum(g / a.data)

    return Tensor._make(out_data, (x,), bwd)


def softmax(x: Tensor) -> Tensor:
    """Row-wise softmax over the last axis."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def bwd(g, a=x, o=out_data):
        if a.requires_grad:
            dot = (g * o).sum(axis=-1, keepdims=True)
            a._accum(o * (g - dot))

    return Tensor._make(out_data, (x,), bwd)


def concat(parts: list[Tensor], axis: int = 0) -> Tensor:
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]

    def bwd(g, ps=tuple(parts), sz=tuple(sizes), ax=axis):
        ofs = 0
        for p, s in zip(ps, sz):
            if p.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[ax] = slice(ofs, ofs + s)
                p._accum(g[tuple(sl)])
            ofs += s

    return Tensor._make(out_data, tuple(parts), bwd)


def repeat_rows(x: Tensor, n: int) -> Tensor:
    """Tile a (1, d) row into an (n, d) matrix."""
    out_data = np.repeat(x.data, n, axis=0)

    def bwd(g, a=x):
        if a.requires_grad:
            a._accum(g.sum(axis=0, keepdims=True))

    return Tensor._make(out_data, (x,), bwd)


def take_row(x: Tensor, i: int) -> Tensor:
    """Select row i of a matrix as a (1, d) tensor."""
    out_data = x.data[i : i + 1]

    def bwd(g, a=x, row=i):
        if a.requires_grad:
            full = np.zeros(a.shape)
            full[row : row + 1] = g
            a._accum(full)

    return Tensor._make(out_data, (x,), bwd)


# -- Parameter containers -----------------------------------------------------


@dataclass
class GruParams:
    """Gate/candidate weights for one GRU cell (message, conditioning, bias)."""

    w_z: Tensor
    w_r: Tensor
    w_h: Tensor
    u_z: Tensor
    u_r: Tensor
    u_h: Tensor
    b_z: Tensor
    b_r: Tensor
    b_h: Tensor

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{k}": getattr(self, k) for k in
                ("w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h")}


def init_gru(rng: np.random.Generator, hidden: int, cond: int) -> GruParams:
    def w(rows, cols):
        return _init_tensor(rng, (rows, cols))

    def b(cols):
        return Tensor(np.zeros(cols), requires_grad=True)

    return GruParams(
        w_z=w(hidden, hidden), w_r=w(hidden, hidden), w_h=w(hidden, hidden),
        u_z=w(cond, hidden), u_r=w(cond, hidden), u_h=w(cond, hidden),
        b_z=b(hidden), b_r=b(hidden), b_h=b(hidden),
    )


def gru_step(p: GruParams, m: Tensor, t: Tensor, h_prev: Tensor) -> Tensor:
    """One gated update: z/r gates from (m, t), candidate from (r*h_prev, t)."""
    z = sigmoid(m @ p.w_z + t @ p.u_z + p.b_z)
    r = sigmoid(m @ p.w_r + t @ p.u_r + p.b_r)
    h_tilde = tanh((r * h_prev) @ p.w_h + t @ p.u_h + p.b_h)
    return (1.0 - z) * h_prev + z * h_tilde


@dataclass
class MlpParams:
    """Affine layers with activation tags: tanh | sigmoid | softmax | identity."""

    layers: list[tuple[Tensor, Tensor, str]]

    def named(self, prefix: str) -> dict[str, Tensor]:
        out = {}
        for i, (w, b, _) in enumerate(self.layers):
            out[f"{prefix}.w{i}"] = w
            out[f"{prefix}.b{i}"] = b
        return out


_ACTIVATIONS = {
    "tanh": tanh,
    "sigmoid": sigmoid,
    "softmax": softmax,
    "identity": lambda x: x,
}


def init_mlp(rng: np.random.Generator, dims: list[int], activations: list[str]) -> MlpParams:
    assert len(activations) == len(dims) - 1
    layers = []
    for d_in, d_out, act in zip(dims[:-1], dims[1:], activations):
        if act not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {act!r}")
        layers.append((_init_tensor(rng, (d_in, d_out)),
                       Tensor(np.zeros(d_out), requires_grad=True), act))
    return MlpParams(layers)


def mlp_forward(p: MlpParams, x: Tensor) -> Tensor:
    h = x
    for w, b, act in p.layers:
        if h.shape[-1] != w.shape[0]:
            raise ValueError(f"dimension mismatch: {h.shape} @ {w.shape}")
        h = _ACTIVATIONS[act](h @ w + b)
    return h


def _init_tensor(rng: np.random.Generator, shape: tuple[int, int]) -> Tensor:
    bound = 1.0 / np.sqrt(shape[0])
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


# -- Adam ---------------------------------------------------------------------


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: dict[str, Tensor],
              grads: dict[str, np.ndarray]) -> None:
    """Bias-corrected Adam update, in place on params; deterministic."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        m_hat = m / (1 - state.beta1 ** t)
        v_hat = v / (1 - state.beta2 ** t)
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


# -- Checkpoint I/O -----------------------------------------------------------

CHECKPOINT_FORMAT = "ipcamo-params-v1"


def params_to_json(params: dict[str, Tensor], meta: dict | None = None) -> str:
    """Bit-exact JSON serialization (repr of float64 round-trips)."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "meta": meta or {},
        "params": {
            name: {"shape": list(t.shape), "data": t.data.ravel().tolist()}
            for name, t in sorted(params.items())
        },
    }
    return json.dumps(payload, sort_keys=True)


def params_from_json(text: str) -> tuple[dict[str, np.ndarray], dict]:
    obj = json.loads(text)
    if obj.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {obj.get('format')!r}")
    out = {}
    for name, rec in obj["params"].items():
        out[name] = np.array(rec["data"], dtype=np.float64).reshape(rec["shape"])
    return out, obj.get("meta", {})

"""Minimal dense numeric kernel.

Vectors are 1-D float64 numpy arrays, matrices 2-D row-major float64.
Everything here is a pure function of its inputs; AdamState is passed in
and returned, never mutated in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError, DegenerateVectorError, DimensionError, LabelError, NumericsError

NORM_EPS = 1e-12

Params = dict[str, np.ndarray]


def _as_vec(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1 or a.size < 1:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {a.shape}")
    return a


def _as_mat(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    return a


def affine_apply(x, w, b) -> np.ndarray:
    """y = W x + b."""
    x = _as_vec(x, "x")
    w = _as_mat(w, "W")
    b = _as_vec(b, "b")
    if w.shape[1] != x.size or w.shape[0] != b.size:
        raise DimensionError(f"affine shapes inconsistent: W{w.shape}, x({x.size},), b({b.size},)")
    return w @ x + b


def affine_backward(x, w, grad_y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of an affine layer: (Wᵀ g, g xᵀ, g)."""
    x = _as_vec(x, "x")
    w = _as_mat(w, "W")
    g = _as_vec(grad_y, "grad_y")
    if w.shape[1] != x.size or w.shape[0] != g.size:
        raise DimensionError(f"affine shapes inconsistent: W{w.shape}, x({x.size},), grad_y({g.size},)")
    return w.T @ g, np.outer(g, x), g.copy()


def activation_apply(x, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise relu or tanh; also returns dy/dx elementwise."""
    x = _as_vec(x, "x")
    if kind == "relu":
        y = np.maximum(x, 0.0)
        grad = (x > 0.0).astype(np.float64)
    elif kind == "tanh":
        y = np.tanh(x)
        grad = 1.0 - y * y
    else:
        raise ConfigError(f"unknown activation kind: {kind!r}")
    return y, grad


def softmax_cross_entropy(logits, gold: int) -> tuple[float, np.ndarray]:
    """Negative log softmax at the gold index, with gradient w.r.t. logits.

    Computed with max-subtraction so confident logits stay finite.
    """
    logits = _as_vec(logits, "logits")
    if not 0 <= int(gold) < logits.size:
        raise LabelError(f"gold index {gold} out of range for {logits.size} logits")
    gold = int(gold)
    shifted = logits - logits.max()
    lse = math.log(np.exp(shifted).sum())
    loss = lse - shifted[gold]
    grad = np.exp(shifted - lse)
    grad[gold] -= 1.0
    return float(loss), grad


def cosine_similarity(a, b) -> float:
    """a·b / (‖a‖‖b‖), clamped to [-1, 1]."""
    a = _as_vec(a, "a")
    b = _as_vec(b, "b")
    if a.size != b.size:
        raise DimensionError(f"cosine operands differ in length: {a.size} vs {b.size}")
    na2 = float(a @ a)
    nb2 = float(b @ b)
    if na2 <= NORM_EPS * NORM_EPS or nb2 <= NORM_EPS * NORM_EPS:
        raise DegenerateVectorError("cosine similarity of a (near-)zero vector is undefined")
    denom = math.sqrt(na2 * nb2)
    if not math.isfinite(denom):
        denom = math.sqrt(na2) * math.sqrt(nb2)
    return float(np.clip(float(a @ b) / denom, -1.0, 1.0))


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators, one array per parameter."""

    m: Params
    v: Params
    t: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init_like(cls, params: Mapping[str, np.ndarray], beta1: float = 0.9,
                  beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        zeros = {k: np.zeros_like(np.asarray(p, dtype=np.float64)) for k, p in params.items()}
        return cls(m=zeros, v={k: z.copy() for k, z in zeros.items()},
                   t=0, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray],
              state: AdamState, lr: float) -> tuple[Params, AdamState]:
    """One bias-corrected Adam update over a dict of parameter arrays."""
    if lr <= 0.0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if set(params) != set(grads) or set(params) != set(state.m):
        raise DimensionError("params, grads and Adam state must share the same keys")
    t = state.t + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for key, p in params.items():
        p = np.asarray(p, dtype=np.float64)
        g = np.asarray(grads[key], dtype=np.float64)
        if g.shape != p.shape or state.m[key].shape != p.shape:
            raise DimensionError(f"shape mismatch for parameter {key!r}")
        m = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[key] + (1.0 - state.beta2) * (g * g)
        update = lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_params[key] = p - update
        new_m[key] = m
        new_v[key] = v
    return new_params, AdamState(m=new_m, v=new_v, t=t,
                                 beta1=state.beta1, beta2=state.beta2, eps=state.eps)


def finite_diff_check(f: Callable[[np.ndarray], float], point, analytic_grad,
                      h: float = 1e-5) -> float:
    """Max relative error between central differences of f and analytic_grad.

    Relative error per coordinate is |fd - an| / max(1, |fd|, |an|).
    """
    if h <= 0.0:
        raise ConfigError(f"step size must be positive, got {h}")
    point = _as_vec(point, "point")
    analytic = _as_vec(analytic_grad, "analytic_grad")
    if analytic.size != point.size:
        raise DimensionError("analytic gradient length differs from the point")
    worst = 0.0
    x = point.copy()
    for i in range(point.size):
        orig = x[i]
        x[i] = orig + h
        f_plus = float(f(x))
        x[i] = orig - h
        f_minus = float(f(x))
        x[i] = orig
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise NumericsError(f"objective is non-finite near coordinate {i}")
        fd = (f_plus - f_minus) / (2.0 * h)
        err = abs(fd - analytic[i]) / max(1.0, abs(fd), abs(analytic[i]))
        worst = max(worst, err)
    return worst


def flatten_params(params: Mapping[str, np.ndarray]) -> tuple[np.ndarray, list[tuple[str, tuple[int, ...]]]]:
    """Pack a dict of arrays into one flat vector plus a reconstruction spec."""
    layout = [(k, tuple(np.asarray(params[k]).shape)) for k in params]
    flat = np.concatenate([np.asarray(params[k], dtype=np.float64).ravel() for k, _ in layout])
    return flat, layout


def unflatten_params(flat: np.ndarray, layout: list[tuple[str, tuple[int, ...]]]) -> Params:
    out: Params = {}
    pos = 0
    for key, shape in layout:
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        out[key] = np.asarray(flat[pos:pos + n], dtype=np.float64).reshape(shape)
        pos += n
    if pos != flat.size:
        raise DimensionError("flat vector length does not match the layout")
    return out

"""Token encoder: hashed-word features into a two-layer MLP.

The encoder turns one token into a feature vector made of (a) the hashed
embedding of the token text, (b) the mean embedding over a small context
window, and (c) the page-normalized bounding box. Two affine+activation
layers map that to the hidden vector used for classification, prototype
harvesting and KNN inference. A separate linear head produces per-class
logits during training.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, LabelError
from .gradcore import Params, activation_apply, affine_apply, affine_backward
from .labels import LabelSpace
from .synthdocs import Document

_STREAM_ENCODER_INIT = 3
_STREAM_HEAD_INIT = 4
_STREAM_HEAD_RESET = 5


@dataclass(frozen=True)
class EncoderConfig:
    embed_dim: int = 32
    hidden_dim: int = 64
    context_window: int = 2
    hash_buckets: int = 4096
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.embed_dim, self.hidden_dim, self.hash_buckets) < 1:
            raise ConfigError("embed_dim, hidden_dim and hash_buckets must be >= 1")
        if self.context_window < 0:
            raise ConfigError(f"context_window must be >= 0, got {self.context_window}")
        if self.activation not in ("relu", "tanh"):
            raise ConfigError(f"activation must be relu or tanh, got {self.activation!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def feature_dim(self) -> int:
        return 2 * self.embed_dim + 4


@dataclass
class EncoderState:
    """Embedding table plus the two affine layers."""

    embed: np.ndarray  # (hash_buckets, embed_dim)
    w1: np.ndarray     # (hidden_dim, feature_dim)
    b1: np.ndarray     # (hidden_dim,)
    w2: np.ndarray     # (hidden_dim, hidden_dim)
    b2: np.ndarray     # (hidden_dim,)
    seed: int

    def params(self) -> Params:
        return {"embed": self.embed, "w1": self.w1, "b1": self.b1,
                "w2": self.w2, "b2": self.b2}

    @classmethod
    def from_params(cls, params: Params, seed: int) -> "EncoderState":
        return cls(embed=params["embed"], w1=params["w1"], b1=params["b1"],
                   w2=params["w2"], b2=params["b2"], seed=seed)


def init_encoder(cfg: EncoderConfig) -> EncoderState:
    rng = np.random.default_rng([cfg.seed, _STREAM_ENCODER_INIT])
    f, h = cfg.feature_dim, cfg.hidden_dim
    return EncoderState(
        embed=rng.normal(0.0, 0.5, size=(cfg.hash_buckets, cfg.embed_dim)),
        w1=rng.uniform(-1.0, 1.0, size=(h, f)) / np.sqrt(f),
        b1=np.zeros(h),
        w2=rng.uniform(-1.0, 1.0, size=(h, h)) / np.sqrt(h),
        b2=np.zeros(h),
        seed=cfg.seed,
    )


def token_bucket(text: str, n_buckets: int) -> int:
    """Stable hash bucket of the lowercased token text."""
    digest = hashlib.blake2b(text.lower().encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % n_buckets


@dataclass(frozen=True)
class FeaturePlan:
    """Per-document featurization inputs that do not depend on parameters."""

    buckets: np.ndarray    # (T,) int64 hash bucket per token
    window_lo: np.ndarray  # (T,) inclusive window start
    window_hi: np.ndarray  # (T,) exclusive window end
    bbox_norm: np.ndarray  # (T, 4)


def feature_plan(doc: Document, cfg: EncoderConfig) -> FeaturePlan:
    n = len(doc.tokens)
    buckets = np.array([token_bucket(t.text, cfg.hash_buckets) for t in doc.tokens],
                       dtype=np.int64)
    idx = np.arange(n)
    lo = np.maximum(idx - cfg.context_window, 0)
    hi = np.minimum(idx + cfg.context_window + 1, n)
    bbox = np.array([t.bbox for t in doc.tokens], dtype=np.float64)
    scale = np.array([doc.page_width, doc.page_height, doc.page_width, doc.page_height])
    return FeaturePlan(buckets=buckets, window_lo=lo, window_hi=hi, bbox_norm=bbox / scale)


def featurize_batch(plan: FeaturePlan, enc: EncoderState) -> np.ndarray:
    """Features for every token of a document, shape (T, 2E+4)."""
    own = enc.embed[plan.buckets]
    # windowed mean via cumulative sums over the token axis
    csum = np.vstack([np.zeros((1, own.shape[1])), np.cumsum(own, axis=0)])
    span = (plan.window_hi - plan.window_lo).astype(np.float64)[:, None]
    window_mean = (csum[plan.window_hi] - csum[plan.window_lo]) / span
    return np.hstack([own, window_mean, plan.bbox_norm])


def featurize(doc: Document, i: int, enc: EncoderState, cfg: EncoderConfig) -> np.ndarray:
    """Feature vector of token i: own embedding, window mean, normalized bbox."""
    if not 0 <= i < len(doc.tokens):
        raise IndexError(f"token index {i} out of range for {len(doc.tokens)} tokens")
    plan = feature_plan(doc, cfg)
    own = enc.embed[plan.buckets[i]]
    window = enc.embed[plan.buckets[plan.window_lo[i]:plan.window_hi[i]]].mean(axis=0)
    return np.concatenate([own, window, plan.bbox_norm[i]])


def featurize_backward(plan: FeaturePlan, grad_features: np.ndarray,
                       n_buckets: int, embed_dim: int) -> np.ndarray:
    """Scatter feature gradients back onto the embedding table."""
    grad_embed = np.zeros((n_buckets, embed_dim))
    np.add.at(grad_embed, plan.buckets, grad_features[:, :embed_dim])
    span = (plan.window_hi - plan.window_lo).astype(np.float64)
    for i in range(plan.buckets.size):
        rows = plan.buckets[plan.window_lo[i]:plan.window_hi[i]]
        np.add.at(grad_embed, rows,
                  grad_features[i, embed_dim:2 * embed_dim] / span[i])
    return grad_embed


@dataclass
class EncodeCache:
    """Intermediates retained for the backward pass."""

    features: np.ndarray
    z1_grad: np.ndarray
    a1: np.ndarray
    z2_grad: np.ndarray


def encode(features: np.ndarray, enc: EncoderState, cfg: EncoderConfig) -> tuple[np.ndarray, EncodeCache]:
    """Hidden vector of one token; cache retains intermediates for backward."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (cfg.feature_dim,):
        raise DimensionError(f"expected feature vector of length {cfg.feature_dim}, "
                             f"got shape {features.shape}")
    a1, g1 = activation_apply(affine_apply(features, enc.w1, enc.b1), cfg.activation)
    h, g2 = activation_apply(affine_apply(a1, enc.w2, enc.b2), cfg.activation)
    return h, EncodeCache(features=features, z1_grad=g1, a1=a1, z2_grad=g2)


def encode_backward(cache: EncodeCache, enc: EncoderState,
                    grad_h: np.ndarray) -> tuple[Params, np.ndarray]:
    """Gradients of a scalar loss w.r.t. MLP parameters and the features."""
    dz2 = grad_h * cache.z2_grad
    da1, dw2, db2 = affine_backward(cache.a1, enc.w2, dz2)
    dz1 = da1 * cache.z1_grad
    dfeat, dw1, db1 = affine_backward(cache.features, enc.w1, dz1)
    return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}, dfeat


def encode_batch(features: np.ndarray, enc: EncoderState,
                 cfg: EncoderConfig) -> tuple[np.ndarray, EncodeCache]:
    """Hidden vectors for a (T, 2E+4) feature matrix, shape (T, H)."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != cfg.feature_dim:
        raise DimensionError(f"expected (n, {cfg.feature_dim}) features, got {x.shape}")
    z1 = x @ enc.w1.T + enc.b1
    if cfg.activation == "tanh":
        a1 = np.tanh(z1)
        g1 = 1.0 - a1 * a1
    else:
        a1 = np.maximum(z1, 0.0)
        g1 = (z1 > 0.0).astype(np.float64)
    z2 = a1 @ enc.w2.T + enc.b2
    if cfg.activation == "tanh":
        h = np.tanh(z2)
        g2 = 1.0 - h * h
    else:
        h = np.maximum(z2, 0.0)
        g2 = (z2 > 0.0).astype(np.float64)
    return h, EncodeCache(features=x, z1_grad=g1, a1=a1, z2_grad=g2)


def encode_backward_batch(cache: EncodeCache, enc: EncoderState,
                          grad_h: np.ndarray) -> tuple[Params, np.ndarray]:
    dz2 = grad_h * cache.z2_grad
    dw2 = dz2.T @ cache.a1
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ enc.w2
    dz1 = da1 * cache.z1_grad
    dw1 = dz1.T @ cache.features
    db1 = dz1.sum(axis=0)
    dfeat = dz1 @ enc.w1
    return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}, dfeat


# ---------------------------------------------------------------------------
# classification head

@dataclass
class HeadState:
    """Linear classification layer over the hidden vector."""

    w: np.ndarray  # (C, hidden_dim)
    b: np.ndarray  # (C,)
    classes: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.w.ndim != 2 or self.b.shape != (self.w.shape[0],):
            raise DimensionError(f"inconsistent head shapes: W{self.w.shape}, b{self.b.shape}")
        if len(self.classes) != self.w.shape[0]:
            raise DimensionError("head row count must equal the number of classes")


def head_logits(h: np.ndarray, head: HeadState) -> np.ndarray:
    return affine_apply(h, head.w, head.b)


def head_logits_batch(h: np.ndarray, head: HeadState) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != head.w.shape[1]:
        raise DimensionError(f"expected (n, {head.w.shape[1]}) hidden matrix, got {h.shape}")
    return h @ head.w.T + head.b


def _fresh_head(space: LabelSpace, hidden_dim: int, seed: int, stream: int) -> HeadState:
    rng = np.random.default_rng([seed, stream])
    c = len(space)
    bound = 1.0 / np.sqrt(hidden_dim)
    return HeadState(w=rng.uniform(-bound, bound, size=(c, hidden_dim)),
                     b=rng.uniform(-bound, bound, size=c),
                     classes=space.classes)


def init_head(space: LabelSpace, hidden_dim: int, seed: int) -> HeadState:
    return _fresh_head(space, hidden_dim, seed, _STREAM_HEAD_INIT)


def reset_head(old: HeadState, new_space: LabelSpace, seed: int) -> HeadState:
    """Freshly initialized head sized to the new label space.

    No weights are copied from the old head; retention of old-class knowledge
    is the hybrid loss's job, not the head's.
    """
    missing = (set(old.classes) - {new_space.classes[-1]}) - set(new_space.classes)
    missing -= {"OTHER"}
    if missing:
        raise LabelError(f"new label space drops classes {sorted(missing)}")
    return _fresh_head(new_space, old.w.shape[1], seed, _STREAM_HEAD_RESET)

"""Capacity-bounded per-class stores of hidden vectors, with cosine-KNN.

Each class keeps at most `capacity_per_class` prototypes. Candidates stream
in during the final epoch of a training phase; reservoir sampling keeps a
uniform sample of that stream regardless of its length. Between phases,
`carry_forward` copies the surviving prototypes bit-identically and resets
the stream counters.

Inference is K-nearest-neighbour over every stored prototype by cosine
similarity: majority class among the top k, ties broken first by highest
mean similarity among the tied classes, then by class order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateVectorError,
    DimensionError,
    EmptyPoolError,
    LabelError,
)
from .gradcore import NORM_EPS
from .labels import OTHER, LabelSpace, validate_class_name


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class Prototype:
    """One stored hidden vector, tagged with the phase that harvested it."""

    vector: np.ndarray
    key_class: str
    epoch_tag: int


def _frozen_copy(vec: np.ndarray) -> np.ndarray:
    out = np.array(vec, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass
class PrototypePool:
    """Per-class prototype reservoirs of a fixed hidden dimension."""

    capacity_per_class: int
    dim: int
    slots: dict[str, list[Prototype]] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.capacity_per_class < 1:
            raise ConfigError("capacity_per_class must be >= 1")
        if self.dim < 1:
            raise ConfigError("prototype dimension must be >= 1")

    @classmethod
    def empty(cls, classes: Iterable[str] | LabelSpace, capacity_per_class: int,
              dim: int) -> "PrototypePool":
        names = classes.classes if isinstance(classes, LabelSpace) else tuple(classes)
        for n in names:
            validate_class_name(n)
        return cls(capacity_per_class=capacity_per_class, dim=dim,
                   slots={n: [] for n in names}, counters={n: 0 for n in names})

    @property
    def class_order(self) -> tuple[str, ...]:
        return tuple(self.slots)

    def size(self) -> int:
        return sum(len(v) for v in self.slots.values())

    def _require_class(self, key_class: str) -> list[Prototype]:
        try:
            return self.slots[key_class]
        except KeyError:
            raise LabelError(f"class {key_class!r} not tracked by this pool") from None

    def stacked(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        """All prototypes as (normalized matrix, class-index array, class names)."""
        vectors = []
        class_ids = []
        names = list(self.class_order)
        for ci, name in enumerate(names):
            for proto in self.slots[name]:
                vectors.append(proto.vector)
                class_ids.append(ci)
        if not vectors:
            raise EmptyPoolError("prototype pool is empty")
        mat = np.stack(vectors)
        mat = mat / np.linalg.norm(mat, axis=1, keepdims=True)
        return mat, np.asarray(class_ids, dtype=np.int64), names


def harvest(pool: PrototypePool, key_class: str, h: np.ndarray,
            rng: np.random.Generator) -> PrototypePool:
    """Offer one candidate vector to the class reservoir (mutates the pool).

    The caller is responsible for the harvesting gates: candidates must come
    from the final epoch of a phase and from tokens the model classified
    correctly. With capacity c and n candidates seen, every candidate is
    retained with probability c/n (Algorithm R).
    """
    slot = pool._require_class(key_class)
    vec = np.asarray(h, dtype=np.float64)
    if vec.shape != (pool.dim,):
        raise DimensionError(f"prototype must have shape ({pool.dim},), got {vec.shape}")
    if float(vec @ vec) <= NORM_EPS * NORM_EPS:
        raise DegenerateVectorError("cannot store a (near-)zero prototype vector")
    seen = pool.counters[key_class]
    proto = Prototype(vector=_frozen_copy(vec), key_class=key_class,
                      epoch_tag=_phase_tag(pool, key_class))
    if len(slot) < pool.capacity_per_class:
        slot.append(proto)
    else:
        j = int(rng.integers(0, seen + 1))
        if j < pool.capacity_per_class:
            slot[j] = proto
    pool.counters[key_class] = seen + 1
    return pool


def _phase_tag(pool: PrototypePool, key_class: str) -> int:
    # tags are plumbed through by the trainer; default marker for direct use
    return getattr(pool, "phase_tag", 0)


def class_prototypes(pool: PrototypePool, key_class: str) -> list[np.ndarray]:
    """Stored vectors for one class, in stable insertion order."""
    return [p.vector for p in pool._require_class(key_class)]


def carry_forward(pool: PrototypePool, drop_other: bool) -> PrototypePool:
    """Copy the pool into a fresh phase: counters reset, OTHER optionally dropped.

    Every surviving prototype vector is copied bit-identically.
    """
    out = PrototypePool.empty(pool.class_order, pool.capacity_per_class, pool.dim)
    for name in pool.class_order:
        if drop_other and name == OTHER:
            continue
        out.slots[name] = [Prototype(_frozen_copy(p.vector), p.key_class, p.epoch_tag)
                           for p in pool.slots[name]]
    return out


def aligned_to(pool: PrototypePool, space: LabelSpace) -> PrototypePool:
    """Re-key the pool to a label space's class order, adding empty classes."""
    unknown = set(pool.class_order) - set(space.classes)
    if unknown:
        raise LabelError(f"pool holds classes outside the label space: {sorted(unknown)}")
    out = PrototypePool.empty(space, pool.capacity_per_class, pool.dim)
    for name in pool.class_order:
        out.slots[name] = list(pool.slots[name])
        out.counters[name] = pool.counters[name]
    return out


def knn_classify(pool: PrototypePool, h: np.ndarray,
                 cfg: KnnConfig) -> tuple[str, list[tuple[str, float]]]:
    """Label a hidden vector by cosine-KNN over all stored prototypes.

    Returns the winning class and the (class, similarity) list of the
    k' = min(k, pool size) nearest prototypes, most similar first.
    """
    mat, class_ids, names = pool.stacked()
    q = np.asarray(h, dtype=np.float64)
    if q.shape != (pool.dim,):
        raise DimensionError(f"query must have shape ({pool.dim},), got {q.shape}")
    qn = float(q @ q)
    if qn <= NORM_EPS * NORM_EPS:
        raise DegenerateVectorError("cannot classify a (near-)zero query vector")
    sims = np.clip(mat @ (q / np.sqrt(qn)), -1.0, 1.0)
    k = min(cfg.k, sims.size)
    order = np.argsort(-sims, kind="stable")[:k]
    top_classes = class_ids[order]
    top_sims = sims[order]

    votes = np.bincount(top_classes, minlength=len(names))
    best = votes.max()
    tied = np.flatnonzero(votes == best)
    if tied.size > 1:
        means = np.array([top_sims[top_classes == ci].mean() for ci in tied])
        tied = tied[np.flatnonzero(means == means.max())]
    label = names[int(tied[0])]
    report = [(names[int(ci)], float(s)) for ci, s in zip(top_classes, top_sims)]
    return label, report

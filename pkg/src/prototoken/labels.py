"""Key-class inventory and the ordered label space.

A label space is the ordered list of class names a model knows about.
The catch-all OTHER class is always present and always last, so class
indices of real key classes are stable when new ones are appended.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import LabelError

OTHER = "OTHER"

#: The ten key classes of a purchase-order document, in canonical order.
KEY_CLASSES = (
    "PO_NUMBER",
    "PO_AMOUNT",
    "CUSTOMER_NAME",
    "COUNTRY",
    "CURRENCY",
    "BILL_TO_ADDRESS",
    "BILL_TO_CUSTOMER_NAME",
    "SHIP_TO_ADDRESS",
    "SHIP_TO_CUSTOMER_NAME",
    "LOGO_CUSTOMER_NAME",
)

_KNOWN = frozenset(KEY_CLASSES) | {OTHER}


def validate_class_name(name: str) -> str:
    if name not in _KNOWN:
        raise LabelError(f"unknown class name: {name!r}")
    return name


def canonical_order(names: Iterable[str]) -> tuple[str, ...]:
    """Return the given key-class names sorted into KEY_CLASSES order."""
    wanted = set(names)
    unknown = wanted - _KNOWN
    if unknown:
        raise LabelError(f"unknown class names: {sorted(unknown)}")
    return tuple(c for c in KEY_CLASSES if c in wanted)


@dataclass(frozen=True)
class LabelSpace:
    """Ordered class names (OTHER last) with base/incremental flags."""

    classes: tuple[str, ...]
    base: frozenset[str]
    new: frozenset[str]

    def __post_init__(self) -> None:
        if len(set(self.classes)) != len(self.classes):
            raise LabelError("duplicate class names in label space")
        if self.classes.count(OTHER) != 1 or self.classes[-1] != OTHER:
            raise LabelError("label space must contain OTHER exactly once, in last position")
        for name in self.classes:
            validate_class_name(name)
        non_other = set(self.classes) - {OTHER}
        if not self.base <= non_other or not self.new <= non_other:
            raise LabelError("base/new flags must refer to non-OTHER classes of the space")
        if self.base & self.new:
            raise LabelError("a class cannot be flagged both base and new")

    @classmethod
    def for_base(cls, base_classes: Iterable[str]) -> "LabelSpace":
        """Label space for base training: the given classes plus OTHER."""
        names = _dedupe(base_classes)
        if OTHER in names:
            raise LabelError("OTHER is implicit; do not list it among base classes")
        return cls(classes=names + (OTHER,), base=frozenset(names), new=frozenset())

    def extended(self, new_classes: Iterable[str]) -> "LabelSpace":
        """Append new classes; everything previously known becomes 'base'."""
        added = _dedupe(new_classes)
        if OTHER in added:
            raise LabelError("OTHER is implicit; it cannot be added as a new class")
        overlap = set(added) & set(self.non_other)
        if overlap:
            raise LabelError(f"classes already present: {sorted(overlap)}")
        return LabelSpace(
            classes=self.non_other + added + (OTHER,),
            base=frozenset(self.non_other),
            new=frozenset(added),
        )

    @property
    def non_other(self) -> tuple[str, ...]:
        return self.classes[:-1]

    @cached_property
    def _index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.classes)}

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise LabelError(f"class {name!r} not in label space {list(self.classes)}") from None

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.classes)


def _dedupe(names: Iterable[str]) -> tuple[str, ...]:
    if isinstance(names, (set, frozenset)):
        names = canonical_order(names)
    out: list[str] = []
    for n in names:
        validate_class_name(n)
        if n not in out:
            out.append(n)
    return tuple(out)

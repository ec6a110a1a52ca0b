"""Synthetic purchase-order-like documents with field-level annotations.

Documents are built from a pool of layout templates. A template fixes which
key classes appear and where their fields sit on the page; individual
documents vary the field values. Field annotations cover the *values* of the
keys; the key captions themselves and all free text are OTHER tokens.

All randomness is driven by per-purpose RNG streams derived from the config
seed, so a corpus is a pure function of its GenConfig and per-document
generation is order-independent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AnnotationError, ConfigError, LabelError
from .labels import KEY_CLASSES, OTHER, validate_class_name

PAGE_WIDTH = 612.0
PAGE_HEIGHT = 792.0
CHAR_WIDTH = 6.0
LINE_HEIGHT = 11.0
CAPTION_GAP = 16.0

MAX_SEED = 2**64 - 1

# RNG stream namespaces (second entry of the seed sequence)
_STREAM_DOC = 100
_STREAM_TEMPLATE = 101
_STREAM_VOCAB = 102
_STREAM_SPLIT = 103


@dataclass(frozen=True)
class FieldAnnotation:
    """A field-level annotation: multi-word text, one box, one label."""

    text: str
    bbox: tuple[float, float, float, float]
    label: str

    def __post_init__(self) -> None:
        validate_class_name(self.label)
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise AnnotationError(f"degenerate field bbox: {self.bbox}")


@dataclass(frozen=True)
class Token:
    """A single word with its box and gold key-class label."""

    text: str
    bbox: tuple[float, float, float, float]
    label: str

    def __post_init__(self) -> None:
        if not self.text or any(c.isspace() for c in self.text):
            raise AnnotationError(f"token text must be one non-empty word, got {self.text!r}")
        validate_class_name(self.label)
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise AnnotationError(f"degenerate token bbox: {self.bbox}")


@dataclass(frozen=True)
class Document:
    id: str
    page_width: float
    page_height: float
    template_id: int
    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        if self.page_width <= 0 or self.page_height <= 0:
            raise AnnotationError("page dimensions must be positive")
        if len(self.tokens) < 1:
            raise AnnotationError(f"document {self.id!r} has no tokens")
        prev = None
        for tok in self.tokens:
            x0, y0, x1, y1 = tok.bbox
            if x0 < 0 or y0 < 0 or x1 > self.page_width or y1 > self.page_height:
                raise AnnotationError(f"token bbox {tok.bbox} outside page in {self.id!r}")
            key = (y0, x0)
            if prev is not None and key < prev:
                raise AnnotationError(f"tokens of {self.id!r} not in reading order")
            prev = key


#: Per-class size of the value lexicon; small, repeated vocabularies keep the
#: word-identity signal learnable at desk scale.
DEFAULT_VOCAB_SIZES: dict[str, int] = {
    "PO_NUMBER": 48,
    "PO_AMOUNT": 48,
    "CUSTOMER_NAME": 36,
    "COUNTRY": 18,
    "CURRENCY": 10,
    "BILL_TO_ADDRESS": 48,
    "BILL_TO_CUSTOMER_NAME": 36,
    "SHIP_TO_ADDRESS": 48,
    "SHIP_TO_CUSTOMER_NAME": 36,
    "LOGO_CUSTOMER_NAME": 36,
}


@dataclass(frozen=True)
class GenConfig:
    n_docs: int
    n_templates: int = 12
    seed: int = 0
    distractor_rate: float = 0.5
    value_vocab_sizes: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_docs < 1:
            raise ConfigError(f"n_docs must be >= 1, got {self.n_docs}")
        if self.n_templates < 1:
            raise ConfigError(f"n_templates must be >= 1, got {self.n_templates}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigError("seed must be a 64-bit non-negative integer")
        if not 0.0 <= self.distractor_rate < 1.0:
            raise ConfigError(f"distractor_rate must be in [0, 1), got {self.distractor_rate}")
        for name, size in self.value_vocab_sizes.items():
            validate_class_name(name)
            if name == OTHER or size < 1:
                raise ConfigError(f"bad vocab size for {name!r}: {size}")

    def vocab_size(self, name: str) -> int:
        return int(self.value_vocab_sizes.get(name, DEFAULT_VOCAB_SIZES[name]))


# ---------------------------------------------------------------------------
# lexicon material

_NAME_FIRST = (
    "Acme", "Globex", "Initech", "Vandelay", "Umbrella", "Stark", "Wayne", "Hooli",
    "Aperture", "Cyberdyne", "Tyrell", "Wonka", "Soylent", "Massive", "Pied", "Dunder",
    "Sterling", "Monarch", "Oceanic", "Virtucon", "Zorg", "Gringotts", "Nakatomi", "Wernham",
)
_NAME_SUFFIX = (
    "Corp", "Inc", "LLC", "Ltd", "GmbH", "Industries", "Systems", "Holdings",
    "Group", "Logistics", "Partners", "Trading",
)
_STREETS = (
    "Maple", "Oak", "Cedar", "Elm", "Birch", "Walnut", "Juniper", "Willow",
    "Aspen", "Magnolia", "Sycamore", "Chestnut", "Hawthorn", "Linden", "Poplar", "Spruce",
)
_STREET_TYPES = ("Street", "Avenue", "Road", "Lane", "Drive", "Boulevard")
_CITIES = (
    "Springfield", "Riverton", "Fairview", "Lakeside", "Greenville", "Maplewood",
    "Brookfield", "Hillcrest", "Ashford", "Winslow", "Clearwater", "Norfield",
)
_COUNTRIES = (
    "United States", "Germany", "France", "Japan", "Canada", "Brazil", "India",
    "Australia", "Spain", "Mexico", "Norway", "Poland", "Italy", "Sweden",
    "Netherlands", "Austria", "Portugal", "Ireland",
)
_CURRENCY_CODES = ("USD", "EUR", "GBP", "JPY", "CAD", "AUD", "CHF", "SEK", "INR", "BRL")
_PO_PREFIXES = ("PO-", "P-", "ORD-", "")

_DISTRACTOR_WORDS = (
    "terms", "and", "conditions", "apply", "payment", "due", "net", "days", "thank",
    "you", "for", "your", "order", "confirmation", "page", "of", "delivery", "notes",
    "subject", "to", "approval", "signature", "date", "reference", "subtotal", "tax",
    "quantity", "item", "description", "unit", "price", "line", "total", "remit",
    "invoice", "upon", "receipt", "goods", "services", "rendered", "freight", "carrier",
    "tracking", "contact", "phone", "email", "questions", "regarding", "this", "document",
    "please", "retain", "copy", "records", "authorized", "by", "department", "issued",
    "valid", "until", "further", "notice", "all", "amounts", "shown", "before", "discount",
    "shipping", "handling", "included", "where", "applicable", "standard", "lead", "time",
    "business", "warehouse", "dock", "hours", "monday", "friday", "original", "duplicate",
)

#: Key captions printed next to each value; caption words are OTHER tokens.
CAPTIONS: dict[str, str] = {
    "PO_NUMBER": "PO Number",
    "PO_AMOUNT": "Total Amount",
    "CUSTOMER_NAME": "Customer Name",
    "COUNTRY": "Country",
    "CURRENCY": "Currency",
    "BILL_TO_ADDRESS": "Bill To Address",
    "BILL_TO_CUSTOMER_NAME": "Bill To Customer",
    "SHIP_TO_ADDRESS": "Ship To Address",
    "SHIP_TO_CUSTOMER_NAME": "Ship To Customer",
}


def _pick(rng: np.random.Generator, pool: Sequence[str]) -> str:
    return pool[int(rng.integers(0, len(pool)))]


def _value_entry(rng: np.random.Generator, key_class: str) -> str:
    if key_class == "PO_NUMBER":
        return f"{_pick(rng, _PO_PREFIXES)}{int(rng.integers(10000, 10**7))}"
    if key_class == "PO_AMOUNT":
        return f"{int(rng.integers(100, 100000)):,}.{int(rng.integers(0, 100)):02d}"
    if key_class == "COUNTRY":
        return _pick(rng, _COUNTRIES)
    if key_class == "CURRENCY":
        return _pick(rng, _CURRENCY_CODES)
    if key_class.endswith("ADDRESS"):
        return (f"{int(rng.integers(10, 9900))} {_pick(rng, _STREETS)} "
                f"{_pick(rng, _STREET_TYPES)} {_pick(rng, _CITIES)}")
    # the *_CUSTOMER_NAME family
    name = f"{_pick(rng, _NAME_FIRST)} {_pick(rng, _NAME_SUFFIX)}"
    if rng.random() < 0.3:
        name = f"{_pick(rng, _NAME_FIRST)} {name}"
    return name


def _build_vocabularies(cfg: GenConfig) -> dict[str, tuple[str, ...]]:
    vocabs: dict[str, tuple[str, ...]] = {}
    for ci, key_class in enumerate(KEY_CLASSES):
        rng = np.random.default_rng([cfg.seed, _STREAM_VOCAB, ci])
        entries: list[str] = []
        seen: set[str] = set()
        while len(entries) < cfg.vocab_size(key_class):
            value = _value_entry(rng, key_class)
            if value not in seen:
                seen.add(value)
                entries.append(value)
        vocabs[key_class] = tuple(entries)
    return vocabs


# ---------------------------------------------------------------------------
# templates

@dataclass(frozen=True)
class _Slot:
    key_class: str
    x: float
    y: float
    caption: str | None


@dataclass(frozen=True)
class _Template:
    template_id: int
    slots: tuple[_Slot, ...]
    distractor_slots: tuple[tuple[float, float], ...]

    @property
    def key_classes(self) -> tuple[str, ...]:
        return tuple(s.key_class for s in self.slots)


def _build_template(cfg: GenConfig, template_id: int, forced: frozenset[str]) -> _Template:
    rng = np.random.default_rng([cfg.seed, _STREAM_TEMPLATE, template_id])
    n_present = int(rng.integers(6, 11))
    order = rng.permutation(len(KEY_CLASSES))
    present = [KEY_CLASSES[i] for i in order[:n_present]]
    for name in sorted(forced):
        if name not in present:
            present.append(name)

    slots: list[_Slot] = []
    grid_row = [0, 0]  # next free row per column
    for key_class in present:
        if key_class == "LOGO_CUSTOMER_NAME":
            x = 40.0 + float(rng.integers(0, 60))
            y = 36.0 + float(rng.integers(0, 10))
            slots.append(_Slot(key_class, x, y, caption=None))
            continue
        col = int(rng.integers(0, 2))
        if grid_row[col] >= 5:
            col = 1 - col
        row = grid_row[col]
        grid_row[col] += 1
        x = (46.0 if col == 0 else 330.0) + float(rng.integers(0, 14))
        y = 96.0 + row * 56.0 + float(rng.integers(0, 10))
        slots.append(_Slot(key_class, x, y, caption=CAPTIONS[key_class]))

    distractors = [(352.0 + float(rng.integers(0, 40)), 40.0 + float(rng.integers(0, 8)))]
    base_y = 560.0 + float(rng.integers(0, 24))
    for line in range(4):
        distractors.append((46.0 + float(rng.integers(0, 30)), base_y + line * (LINE_HEIGHT + 6.0)))
    return _Template(template_id, tuple(slots), tuple(distractors))


def _build_templates(cfg: GenConfig) -> list[_Template]:
    templates = [_build_template(cfg, t, frozenset()) for t in range(cfg.n_templates)]
    # guarantee every class appears in a healthy share of templates: rebuild
    # deficient templates with the missing classes forced in
    need = max(1, -(-2 * cfg.n_templates // 5))  # ceil(0.4 * n)
    for key_class in KEY_CLASSES:
        holders = [t for t in range(cfg.n_templates) if key_class in templates[t].key_classes]
        missing = [t for t in range(cfg.n_templates) if key_class not in templates[t].key_classes]
        for t in missing[: max(0, need - len(holders))]:
            forced = frozenset(set(templates[t].key_classes) | {key_class})
            templates[t] = _build_template(cfg, t, forced)
    return templates


# ---------------------------------------------------------------------------
# document assembly

def split_field_to_words(annotation: FieldAnnotation) -> list[Token]:
    """Split a field annotation into word-level tokens.

    The field box is divided horizontally in proportion to word character
    counts, with a one-character-unit gap between adjacent words. Joining the
    token texts with single spaces reproduces the whitespace-normalized field
    text.
    """
    words = annotation.text.split()
    if not words:
        raise AnnotationError("field annotation text is empty")
    x0, y0, x1, y1 = annotation.bbox
    units = sum(len(w) for w in words) + (len(words) - 1)
    unit_w = (x1 - x0) / units
    tokens: list[Token] = []
    pos = x0
    for word in words:
        width = len(word) * unit_w
        tokens.append(Token(word, (pos, y0, pos + width, y1), annotation.label))
        pos += width + unit_w
    return tokens


def _field_bbox(x: float, y: float, text: str) -> tuple[float, float, float, float]:
    return (x, y, x + len(text) * CHAR_WIDTH, y + LINE_HEIGHT)


def _generate_document(cfg: GenConfig, template: _Template,
                       vocabs: Mapping[str, tuple[str, ...]], index: int) -> Document:
    rng = np.random.default_rng([cfg.seed, _STREAM_DOC, index])
    fields: list[FieldAnnotation] = []
    key_words = 0
    caption_words = 0
    for slot in template.slots:
        value = _pick(rng, vocabs[slot.key_class])
        key_words += len(value.split())
        y_value = slot.y
        if slot.caption is not None:
            caption_words += len(slot.caption.split())
            fields.append(FieldAnnotation(slot.caption, _field_bbox(slot.x, slot.y, slot.caption), OTHER))
            y_value = slot.y + CAPTION_GAP
        fields.append(FieldAnnotation(value, _field_bbox(slot.x, y_value, value), slot.key_class))

    rate = cfg.distractor_rate
    target_other = rate / (1.0 - rate) * key_words if rate > 0 else 0.0
    n_free = int(np.clip(round(target_other - caption_words), 2, 30))
    free_words = [_pick(rng, _DISTRACTOR_WORDS) for _ in range(n_free)]
    remaining = list(free_words)
    for x, y in template.distractor_slots:
        if not remaining:
            break
        budget = int((PAGE_WIDTH - 20.0 - x) / CHAR_WIDTH)  # chars that fit on this line
        line: list[str] = []
        used = 0
        while remaining and used + len(remaining[0]) + (1 if line else 0) <= budget:
            word = remaining.pop(0)
            used += len(word) + (1 if line else 0)
            line.append(word)
        if line:
            text = " ".join(line)
            fields.append(FieldAnnotation(text, _field_bbox(x, y, text), OTHER))

    tokens = [tok for f in fields for tok in split_field_to_words(f)]
    tokens.sort(key=lambda t: (t.bbox[1], t.bbox[0]))
    return Document(
        id=f"doc-{index:05d}",
        page_width=PAGE_WIDTH,
        page_height=PAGE_HEIGHT,
        template_id=template.template_id,
        tokens=tuple(tokens),
    )


def generate_corpus(cfg: GenConfig) -> list[Document]:
    """Generate cfg.n_docs documents; a pure function of the config."""
    vocabs = _build_vocabularies(cfg)
    templates = _build_templates(cfg)
    return [_generate_document(cfg, templates[i % len(templates)], vocabs, i)
            for i in range(cfg.n_docs)]


# ---------------------------------------------------------------------------
# corpus transforms

def relabel_to_other(docs: Iterable[Document], keep: Iterable[str]) -> list[Document]:
    """Replace every token label outside `keep` with OTHER.

    OTHER itself is always retained and must not be listed in `keep`.
    """
    keep_set = set(keep)
    for name in keep_set:
        validate_class_name(name)
    if OTHER in keep_set:
        raise LabelError("OTHER is retained implicitly; do not list it in keep")
    out: list[Document] = []
    for doc in docs:
        tokens = tuple(
            tok if tok.label in keep_set else Token(tok.text, tok.bbox, OTHER)
            for tok in doc.tokens
        )
        out.append(Document(doc.id, doc.page_width, doc.page_height, doc.template_id, tokens))
    return out


def split_corpus(docs: Sequence[Document], fractions: tuple[float, float],
                 seed: int) -> tuple[list[Document], list[Document]]:
    """Deterministic disjoint train/test split with floor-sized parts."""
    if not docs:
        raise ConfigError("cannot split an empty corpus")
    f_train, f_test = fractions
    if f_train <= 0 or f_test <= 0 or f_train + f_test > 1.0 + 1e-9:
        raise ConfigError(f"fractions must be positive and sum to <= 1, got {fractions}")
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed must be a 64-bit non-negative integer")
    n = len(docs)
    # the 1e-9 nudge keeps exact products like n * (k/n) from flooring down
    n_train = int(n * f_train + 1e-9)
    n_test = int(n * f_test + 1e-9)
    if n_train == 0 or n_test == 0:
        warnings.warn(f"split of {n} docs with fractions {fractions} leaves an empty part",
                      stacklevel=2)
    perm = np.random.default_rng([seed, _STREAM_SPLIT]).permutation(n)
    train = [docs[int(i)] for i in perm[:n_train]]
    test = [docs[int(i)] for i in perm[n_train:n_train + n_test]]
    return train, test

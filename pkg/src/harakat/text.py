"""Deterministic Arabic text handling.

Diacritics are the combining marks U+064B..U+0652.  Everything here is a pure
function over immutable values: stripping a diacritized string into (base
characters, per-character labels), re-applying labels, word segmentation over
maximal Arabic-letter runs, and validation of raw corpus lines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

FATHATAN = "ً"
DAMMATAN = "ٌ"
KASRATAN = "ٍ"
FATHA = "َ"
DAMMA = "ُ"
KASRA = "ِ"
SHADDA = "ّ"
SUKUN = "ْ"

DIACRITIC_CHARS = frozenset(chr(c) for c in range(0x064B, 0x0653))

# Standard Arabic letters (hamza forms through yeh) plus alef wasla.  Tatweel
# (U+0640) and other marks such as superscript alef pass through as ordinary
# non-letter base characters.
ARABIC_LETTERS = frozenset(
    chr(c) for c in range(0x0621, 0x063B)
) | frozenset(chr(c) for c in range(0x0641, 0x064B)) | {"ٱ"}


class DiacriticLabel(IntEnum):
    """The 15-way per-character label inventory."""

    NONE = 0
    FATHA = 1
    DAMMA = 2
    KASRA = 3
    FATHATAN = 4
    DAMMATAN = 5
    KASRATAN = 6
    SUKUN = 7
    SHADDA = 8
    SHADDA_FATHA = 9
    SHADDA_DAMMA = 10
    SHADDA_KASRA = 11
    SHADDA_FATHATAN = 12
    SHADDA_DAMMATAN = 13
    SHADDA_KASRATAN = 14


# Canonical codepoint rendering per label; shadda always first in combinations.
LABEL_TO_MARKS: dict[DiacriticLabel, str] = {
    DiacriticLabel.NONE: "",
    DiacriticLabel.FATHA: FATHA,
    DiacriticLabel.DAMMA: DAMMA,
    DiacriticLabel.KASRA: KASRA,
    DiacriticLabel.FATHATAN: FATHATAN,
    DiacriticLabel.DAMMATAN: DAMMATAN,
    DiacriticLabel.KASRATAN: KASRATAN,
    DiacriticLabel.SUKUN: SUKUN,
    DiacriticLabel.SHADDA: SHADDA,
    DiacriticLabel.SHADDA_FATHA: SHADDA + FATHA,
    DiacriticLabel.SHADDA_DAMMA: SHADDA + DAMMA,
    DiacriticLabel.SHADDA_KASRA: SHADDA + KASRA,
    DiacriticLabel.SHADDA_FATHATAN: SHADDA + FATHATAN,
    DiacriticLabel.SHADDA_DAMMATAN: SHADDA + DAMMATAN,
    DiacriticLabel.SHADDA_KASRATAN: SHADDA + KASRATAN,
}

# Legal mark sets (order-insensitive) -> label.
MARKS_TO_LABEL: dict[frozenset[str], DiacriticLabel] = {
    frozenset(marks): label for label, marks in LABEL_TO_MARKS.items() if marks
}

N_LABELS = len(DiacriticLabel)


class DiacritizationError(ValueError):
    """Base class for malformed diacritized input."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class DanglingDiacritic(DiacritizationError):
    def __init__(self, position: int):
        super().__init__("diacritic not preceded by an Arabic letter", position)


class IllegalCombination(DiacritizationError):
    def __init__(self, position: int):
        super().__init__("illegal diacritic combination", position)


@dataclass(frozen=True)
class Violation:
    kind: str  # "dangling" or "illegal_combination"
    position: int  # index into the original string


@dataclass(frozen=True)
class LabeledText:
    """Undiacritized base characters with one diacritic label per character.

    ``scorable[i]`` is true iff ``base[i]`` is an Arabic letter; only those
    positions ever carry a non-NONE label and only those count toward DER.
    ``words`` are the [start, end) spans of maximal Arabic-letter runs.
    """

    base: str
    labels: tuple[DiacriticLabel, ...]
    scorable: tuple[bool, ...] = field(default=())
    words: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if len(self.base) != len(self.labels):
            raise ValueError("base and labels must have equal length")
        if not self.scorable and self.base:
            object.__setattr__(self, "scorable", _scorable_flags(self.base))
        if len(self.scorable) != len(self.base):
            raise ValueError("scorable flags must match base length")
        if not self.words and self.base:
            object.__setattr__(self, "words", word_spans(self.base))
        for flag, label in zip(self.scorable, self.labels):
            if not flag and label != DiacriticLabel.NONE:
                raise ValueError("non-Arabic position carries a diacritic label")

    def __len__(self) -> int:
        return len(self.base)


def _scorable_flags(base: str) -> tuple[bool, ...]:
    return tuple(c in ARABIC_LETTERS for c in base)


def word_spans(base: str) -> tuple[tuple[int, int], ...]:
    """Maximal runs of Arabic letters, as [start, end) spans."""
    spans = []
    start = None
    for i, c in enumerate(base):
        if c in ARABIC_LETTERS:
            if start is None:
                start = i
        elif start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(base)))
    return tuple(spans)


def _combine_marks(marks: list[str]) -> DiacriticLabel | None:
    """Normalize a run of marks on one letter to a label.

    Repeated identical marks collapse; shadda+vowel in either order maps to the
    same SHADDA_* label.  Returns None for illegal combinations (two distinct
    vowels, or shadda+sukun).
    """
    return MARKS_TO_LABEL.get(frozenset(marks))


def _scan(s: str):
    """Shared scanner: yields (base, labels, violations).

    On a violation the offending mark is dropped and scanning continues, so
    the validator is total while strip_diacritics can raise on first error.
    """
    base: list[str] = []
    labels: list[DiacriticLabel] = []
    violations: list[Violation] = []
    pending: list[str] = []  # marks attached to base[-1]
    attachable = False  # base[-1] is an Arabic letter

    def flush():
        nonlocal pending
        if pending:
            # Each mark was validated on arrival, so the set is always legal.
            labels[-1] = _combine_marks(pending)
        pending = []

    for i, c in enumerate(s):
        if c in DIACRITIC_CHARS:
            if not attachable:
                violations.append(Violation("dangling", i))
                continue
            trial = _combine_marks(pending + [c])
            if trial is None:
                violations.append(Violation("illegal_combination", i))
                continue
            pending.append(c)
        else:
            flush()
            base.append(c)
            labels.append(DiacriticLabel.NONE)
            attachable = c in ARABIC_LETTERS
    flush()
    return "".join(base), tuple(labels), violations


def strip_diacritics(s: str) -> LabeledText:
    """Split a diacritized string into base characters plus labels.

    Raises DanglingDiacritic / IllegalCombination on malformed input; use
    validate_diacritized for a total check.
    """
    base, labels, violations = _scan(s)
    if violations:
        v = violations[0]
        if v.kind == "dangling":
            raise DanglingDiacritic(v.position)
        raise IllegalCombination(v.position)
    return LabeledText(base=base, labels=labels)


def validate_diacritized(s: str) -> list[Violation]:
    """Total validator: positions and kinds of violations, empty iff clean."""
    _, _, violations = _scan(s)
    return violations


def apply_labels(lt: LabeledText) -> str:
    """Render a LabeledText back into a canonically ordered diacritized string."""
    out = []
    for c, label in zip(lt.base, lt.labels):
        out.append(c)
        out.append(LABEL_TO_MARKS[label])
    return "".join(out)


def case_ending_positions(lt: LabeledText) -> set[int]:
    """Index of the last Arabic letter of each word span."""
    return {end - 1 for _, end in lt.words}


def canonicalize(s: str) -> str:
    """Bit-exact canonical form: strip then re-apply (shadda-first, deduped)."""
    return apply_labels(strip_diacritics(s))

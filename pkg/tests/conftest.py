"""Shared helpers: seeded generators for valid diacritized strings."""

import numpy as np
import pytest

from harakat.text import (
    ARABIC_LETTERS,
    DiacriticLabel,
    LABEL_TO_MARKS,
)

LETTERS = tuple(sorted(ARABIC_LETTERS))
NON_LETTERS = (" ", ".", "0", "a", "ـ")  # space, punct, digit, latin, tatweel
ALL_LABELS = tuple(DiacriticLabel)


def random_valid_diacritized(rng: np.random.Generator, max_len: int = 30) -> str:
    """A random well-formed diacritized string (possibly with shuffled marks).

    Marks on a letter are emitted in random order and sometimes duplicated, so
    the string is valid but not necessarily canonical.
    """
    n = int(rng.integers(0, max_len + 1))
    out = []
    for _ in range(n):
        if rng.random() < 0.25:
            out.append(NON_LETTERS[rng.integers(len(NON_LETTERS))])
            continue
        out.append(LETTERS[rng.integers(len(LETTERS))])
        marks = list(LABEL_TO_MARKS[ALL_LABELS[rng.integers(len(ALL_LABELS))]])
        rng.shuffle(marks)
        if marks and rng.random() < 0.2:
            marks.append(marks[0])  # duplicate a mark; still legal
        out.extend(marks)
    return "".join(out)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

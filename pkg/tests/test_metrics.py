"""DER variants, pooling, and Levenshtein CER/WER."""

import numpy as np
import pytest

from harakat.metrics import (
    BaseMismatch,
    DerEntry,
    cer,
    der,
    der_counts,
    pooled_der,
    wer,
)
from harakat.text import DiacriticLabel, LabeledText, strip_diacritics

F = DiacriticLabel.FATHA
D = DiacriticLabel.DAMMA


def _lt(base, labels):
    return LabeledText(base=base, labels=tuple(labels))


def test_der_hand_fixture():
    # One 3-letter word; error at a non-final position.
    gold = strip_diacritics("كَتَبُ")
    pred = _lt("كتب", (F, D, D))
    r = der(pred, gold)
    assert (r.incl_nodiac_with_ce.errors, r.incl_nodiac_with_ce.total) == (1, 3)
    assert r.incl_nodiac_with_ce.percent == 33.33
    assert (r.incl_nodiac_wo_ce.errors, r.incl_nodiac_wo_ce.total) == (1, 2)
    assert r.incl_nodiac_wo_ce.percent == 50.0


def test_der_excl_nodiac_denominator():
    # Gold has a bare (NONE) letter: it counts for incl_* only.
    gold = _lt("كتب", (F, DiacriticLabel.NONE, D))
    pred = _lt("كتب", (F, F, D))
    r = der(pred, gold)
    assert (r.incl_nodiac_with_ce.errors, r.incl_nodiac_with_ce.total) == (1, 3)
    assert (r.excl_nodiac_with_ce.errors, r.excl_nodiac_with_ce.total) == (0, 2)


def test_der_case_ending_is_last_letter_per_word():
    gold = strip_diacritics("بَا بَا")
    pred = _lt("با با", (F, D, DiacriticLabel.NONE, F, D))
    r = der(pred, gold)
    # Errors only at the two case-ending positions.
    assert (r.incl_nodiac_with_ce.errors, r.incl_nodiac_with_ce.total) == (2, 4)
    assert (r.incl_nodiac_wo_ce.errors, r.incl_nodiac_wo_ce.total) == (0, 2)


def test_der_base_mismatch():
    with pytest.raises(BaseMismatch):
        der(_lt("اب", (F, F)), _lt("ات", (F, F)))


def test_der_undefined_rate():
    gold = _lt("123", (DiacriticLabel.NONE,) * 3)
    r = der(gold, gold)
    assert r.incl_nodiac_with_ce.total == 0
    assert r.incl_nodiac_with_ce.rate is None
    assert r.incl_nodiac_with_ce.percent is None


def test_der_nonscorable_positions_ignored():
    gold = strip_diacritics("بَ, بَ")
    pred_a = _lt("ب, ب", (F, DiacriticLabel.NONE, DiacriticLabel.NONE, F))
    assert der(pred_a, gold).incl_nodiac_with_ce.errors == 0


def test_pooled_der_is_count_pooling():
    # Pooling sums counts: 1/3 and 0/1 pool to 1/4, not mean(33.3%, 0%).
    g1 = strip_diacritics("كَتَبُ")
    p1 = _lt("كتب", (F, D, D))
    g2 = strip_diacritics("بَ")
    r = pooled_der([(p1, g1), (g2, g2)])
    assert (r.incl_nodiac_with_ce.errors, r.incl_nodiac_with_ce.total) == (1, 4)
    assert r.incl_nodiac_with_ce.percent == 25.0


def test_der_counts_order_matches_report():
    gold = strip_diacritics("كَتَبُ")
    pred = _lt("كتب", (F, D, D))
    assert der_counts(pred, gold) == ((1, 3), (1, 2), (1, 3), (1, 2))


def test_cer_hand_fixtures():
    assert cer("", "").rate is None
    assert cer("abc", "abc").distance == 0
    s = cer("kitten", "sitting")
    assert s.distance == 3 and s.reference_length == 7
    assert (s.substitutions, s.insertions, s.deletions) == (2, 0, 1)
    assert cer("", "ab").distance == 2  # two deletions
    assert cer("ab", "").reference_length == 0  # undefined rate
    assert cer("ab", "").rate is None


def test_wer_tokenization():
    s = wer("the cat sat", "the cat sat down")
    assert s.distance == 1 and s.reference_length == 4
    assert wer("  a   b ", "a b").distance == 0  # whitespace-insensitive


def test_edit_symmetry_of_distance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = "".join(rng.choice(list("abc"), size=rng.integers(0, 12)))
        b = "".join(rng.choice(list("abc"), size=rng.integers(0, 12)))
        assert cer(a, b).distance == cer(b, a).distance


def test_edit_triangle_inequality():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a, b, c = (
            "".join(rng.choice(list("abcd"), size=rng.integers(0, 10)))
            for _ in range(3)
        )
        assert cer(a, c).distance <= cer(a, b).distance + cer(b, c).distance


def test_edit_distance_bounds():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = "".join(rng.choice(list("ab"), size=rng.integers(0, 15)))
        b = "".join(rng.choice(list("ab"), size=rng.integers(0, 15)))
        d = cer(a, b).distance
        assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))


def test_der_entry_percent_rounding():
    assert DerEntry(1, 3).percent == 33.33
    assert DerEntry(2, 3).percent == 66.67

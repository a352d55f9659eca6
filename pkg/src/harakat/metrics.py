"""Diacritic Error Rate (four variants) and Levenshtein-based CER/WER.

DER is reported including/excluding the `no diacritic' label and with/without
case-ending positions.  Denominators count Arabic-letter positions of the gold
text only; division by zero is surfaced as an explicit undefined rate (None)
instead of 0 or NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .text import DiacriticLabel, LabeledText, case_ending_positions


class BaseMismatch(ValueError):
    """Prediction and gold disagree on the undiacritized text."""


@dataclass(frozen=True)
class DerEntry:
    errors: int
    total: int

    @property
    def rate(self) -> float | None:
        return self.errors / self.total if self.total > 0 else None

    @property
    def percent(self) -> float | None:
        return None if self.rate is None else round(100.0 * self.rate, 2)

    def as_dict(self) -> dict:
        return {"errors": self.errors, "total": self.total, "percent": self.percent}


@dataclass(frozen=True)
class DerReport:
    incl_nodiac_with_ce: DerEntry
    incl_nodiac_wo_ce: DerEntry
    excl_nodiac_with_ce: DerEntry
    excl_nodiac_wo_ce: DerEntry

    def as_dict(self) -> dict:
        return {
            "der_incl_ce": self.incl_nodiac_with_ce.as_dict(),
            "der_incl_noce": self.incl_nodiac_wo_ce.as_dict(),
            "der_excl_ce": self.excl_nodiac_with_ce.as_dict(),
            "der_excl_noce": self.excl_nodiac_wo_ce.as_dict(),
        }


def der_counts(pred: LabeledText, gold: LabeledText) -> tuple[tuple[int, int], ...]:
    """Raw (errors, total) for the four DER variants, in report field order."""
    if pred.base != gold.base:
        raise BaseMismatch("prediction and gold base strings differ")
    ce = case_ending_positions(gold)
    counts = [[0, 0] for _ in range(4)]  # incl_ce, incl_noce, excl_ce, excl_noce
    for i, flag in enumerate(gold.scorable):
        if not flag:
            continue
        err = pred.labels[i] != gold.labels[i]
        is_ce = i in ce
        has_diac = gold.labels[i] != DiacriticLabel.NONE
        for k, counted in enumerate(
            (True, not is_ce, has_diac, has_diac and not is_ce)
        ):
            if counted:
                counts[k][1] += 1
                counts[k][0] += int(err)
    return tuple((e, t) for e, t in counts)


def der(pred: LabeledText, gold: LabeledText) -> DerReport:
    c = der_counts(pred, gold)
    return DerReport(*(DerEntry(e, t) for e, t in c))


def pooled_der(pairs: Sequence[tuple[LabeledText, LabeledText]]) -> DerReport:
    """Corpus-level DER: pooled error/total counts across (pred, gold) lines."""
    totals = [[0, 0] for _ in range(4)]
    for pred, gold in pairs:
        for k, (e, t) in enumerate(der_counts(pred, gold)):
            totals[k][0] += e
            totals[k][1] += t
    return DerReport(*(DerEntry(e, t) for e, t in totals))


@dataclass(frozen=True)
class EditStats:
    substitutions: int
    insertions: int
    deletions: int
    reference_length: int

    @property
    def distance(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def rate(self) -> float | None:
        if self.reference_length == 0:
            return None
        return self.distance / self.reference_length

    @property
    def percent(self) -> float | None:
        return None if self.rate is None else round(100.0 * self.rate, 2)

    def as_dict(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "reference_length": self.reference_length,
            "percent": self.percent,
        }


_DIAG, _UP, _LEFT = 0, 1, 2


def _edit_stats(hyp: Sequence, ref: Sequence) -> EditStats:
    """Unit-cost Levenshtein alignment with a backtrace.

    Rows follow the reference, columns the hypothesis; ties prefer
    substitution over insert+delete.  Row-vectorized DP: the in-row insertion
    dependency is resolved with a running-minimum scan.
    """
    lr, lh = len(ref), len(hyp)
    if lr == 0:
        return EditStats(0, lh, 0, 0)
    if lh == 0:
        return EditStats(0, 0, lr, lr)

    symbols = {s: i for i, s in enumerate(dict.fromkeys(list(ref) + list(hyp)))}
    r = np.array([symbols[s] for s in ref], dtype=np.int32)
    h = np.array([symbols[s] for s in hyp], dtype=np.int32)

    j = np.arange(lh + 1, dtype=np.int64)
    prev = j.copy()
    cur = np.empty(lh + 1, dtype=np.int64)
    ptr = np.zeros((lr + 1, lh + 1), dtype=np.uint8)
    ptr[0, 1:] = _LEFT
    t = np.empty(lh + 1, dtype=np.int64)
    for i in range(1, lr + 1):
        sub = prev[:-1] + (h != r[i - 1])
        np.minimum(sub, prev[1:] + 1, out=t[1:])
        t[0] = prev[0] + 1
        # cur[j] = min_{k<=j} t[k] + (j - k)
        np.minimum.accumulate(t - j, out=cur)
        cur += j
        ptr[i, 0] = _UP
        row = ptr[i, 1:]
        row[:] = _LEFT
        row[cur[1:] == prev[1:] + 1] = _UP
        row[cur[1:] == sub] = _DIAG
        prev, cur = cur, prev

    s = ins = dels = 0
    i_, j_ = lr, lh
    while i_ > 0 or j_ > 0:
        move = ptr[i_, j_]
        if move == _DIAG:
            if r[i_ - 1] != h[j_ - 1]:
                s += 1
            i_ -= 1
            j_ -= 1
        elif move == _UP:
            dels += 1
            i_ -= 1
        else:
            ins += 1
            j_ -= 1
    return EditStats(s, ins, dels, lr)


def cer(hyp: str, ref: str) -> EditStats:
    """Character-level edit statistics of hyp against ref."""
    return _edit_stats(list(hyp), list(ref))


def wer(hyp: str, ref: str) -> EditStats:
    """Word-level edit statistics over whitespace-delimited tokens."""
    return _edit_stats(hyp.split(), ref.split())

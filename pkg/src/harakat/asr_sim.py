"""Synthetic stand-in for a diacritized ASR model.

Two pieces: a seeded character-level corruptor that turns gold diacritized
text into a noisy "provisional" hypothesis, and a toy corpus generator whose
lexicon contains deliberately ambiguous word forms (two gold diacritizations
for the same undiacritized shape).  The ambiguity puts an analytic floor under
what any text-only predictor can achieve, which is what makes the fusion
model's advantage measurable at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import EditStats, cer
from .text import (
    ARABIC_LETTERS,
    DIACRITIC_CHARS,
    DiacriticLabel,
    LABEL_TO_MARKS,
    _combine_marks,
    strip_diacritics,
)

LETTER_POOL = tuple(sorted(ARABIC_LETTERS))
MARK_POOL = tuple(sorted(DIACRITIC_CHARS))


@dataclass(frozen=True)
class NoiseConfig:
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    class_preserving: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("p_sub", "p_del", "p_ins"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.p_sub + self.p_del > 1.0:
            raise ValueError("p_sub + p_del must not exceed 1")


def _char_class(c: str) -> str:
    if c in DIACRITIC_CHARS:
        return "mark"
    if c in ARABIC_LETTERS:
        return "letter"
    return "other"


def _repair(chars: list[str]) -> str:
    """Drop marks left dangling or forming illegal combinations.

    Run after corruption so downstream consumers always see text that passes
    validate_diacritized.
    """
    out: list[str] = []
    pending: list[str] = []
    attachable = False
    for c in chars:
        if c in DIACRITIC_CHARS:
            if not attachable:
                continue
            if c in pending:
                continue  # collapse duplicates
            if _combine_marks(pending + [c]) is None:
                continue
            pending.append(c)
            out.append(c)
        else:
            pending = []
            out.append(c)
            attachable = c in ARABIC_LETTERS
    return "".join(out)


def corrupt(gold: str, cfg: NoiseConfig) -> tuple[str, EditStats]:
    """Corrupt a gold diacritized string; returns (hypothesis, achieved CER).

    Per character: substitute with p_sub (same character class when
    class_preserving), delete with p_del, and insert a random character after
    with p_ins.  Deterministic given cfg.seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
    out: list[str] = []
    ins_pool = LETTER_POOL + MARK_POOL
    for c in gold:
        u = rng.random()
        if u < cfg.p_sub:
            if cfg.class_preserving:
                cls = _char_class(c)
                pool = {"mark": MARK_POOL, "letter": LETTER_POOL}.get(cls)
                if pool is None:
                    out.append(c)  # punctuation/whitespace left untouched
                else:
                    choices = [x for x in pool if x != c]
                    out.append(choices[rng.integers(len(choices))])
            else:
                choices = [x for x in ins_pool if x != c]
                out.append(choices[rng.integers(len(choices))])
        elif u < cfg.p_sub + cfg.p_del:
            pass
        else:
            out.append(c)
        if rng.random() < cfg.p_ins:
            out.append(ins_pool[rng.integers(len(ins_pool))])
    hyp = _repair(out)
    return hyp, cer(hyp, gold)


@dataclass(frozen=True)
class ToyCorpusConfig:
    lexicon_size: int = 40
    ambiguity_fraction: float = 0.5
    sentence_length: int = 8
    n_train: int = 2000
    n_dev: int = 200
    n_test: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.ambiguity_fraction <= 1.0:
            raise ValueError("ambiguity_fraction must be in [0, 1]")
        for name in ("lexicon_size", "sentence_length", "n_train", "n_dev", "n_test"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class LexiconEntry:
    base: str
    variants: tuple[str, ...]  # 1 or 2 fully diacritized forms

    @property
    def ambiguous(self) -> bool:
        return len(self.variants) > 1


@dataclass(frozen=True)
class ToyCorpus:
    config: ToyCorpusConfig
    lexicon: tuple[LexiconEntry, ...]
    train: tuple[tuple[str, str], ...]  # (raw, gold) pairs
    dev: tuple[tuple[str, str], ...]
    test: tuple[tuple[str, str], ...]


_INNER_LABELS = (
    DiacriticLabel.FATHA,
    DiacriticLabel.DAMMA,
    DiacriticLabel.KASRA,
    DiacriticLabel.SUKUN,
)
_FINAL_LABELS = (
    DiacriticLabel.FATHA,
    DiacriticLabel.DAMMA,
    DiacriticLabel.KASRA,
    DiacriticLabel.FATHATAN,
    DiacriticLabel.DAMMATAN,
    DiacriticLabel.KASRATAN,
)


def _random_labeling(rng, n: int) -> tuple[DiacriticLabel, ...]:
    inner = tuple(_INNER_LABELS[rng.integers(4)] for _ in range(n - 1))
    return inner + (_FINAL_LABELS[rng.integers(6)],)


def _diacritize(base: str, labels: tuple[DiacriticLabel, ...]) -> str:
    return "".join(c + LABEL_TO_MARKS[l] for c, l in zip(base, labels))


def _build_lexicon(cfg: ToyCorpusConfig, rng) -> tuple[LexiconEntry, ...]:
    letters = LETTER_POOL[:20]
    shapes: list[str] = []
    seen: set[str] = set()
    while len(shapes) < cfg.lexicon_size:
        n = int(rng.integers(3, 6))
        shape = "".join(letters[rng.integers(20)] for _ in range(n))
        if shape not in seen:
            seen.add(shape)
            shapes.append(shape)
    n_ambig = round(cfg.ambiguity_fraction * cfg.lexicon_size)
    entries = []
    for k, shape in enumerate(shapes):
        first = _random_labeling(rng, len(shape))
        if k < n_ambig:
            # Second gold reading must differ in at least 2 positions so the
            # text-only error floor is well separated from noise.
            while True:
                second = _random_labeling(rng, len(shape))
                if sum(a != b for a, b in zip(first, second)) >= 2:
                    break
            variants = (_diacritize(shape, first), _diacritize(shape, second))
        else:
            variants = (_diacritize(shape, first),)
        entries.append(LexiconEntry(base=shape, variants=variants))
    return tuple(entries)


def _sample_split(cfg, lexicon, split_id: int, n_lines: int):
    lines = []
    for i in range(n_lines):
        # Per-line substream: output is independent of generation order.
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, split_id, i]))
        words = []
        for _ in range(cfg.sentence_length):
            entry = lexicon[rng.integers(len(lexicon))]
            words.append(entry.variants[rng.integers(len(entry.variants))])
        gold = " ".join(words)
        lines.append((strip_diacritics(gold).base, gold))
    return tuple(lines)


def generate_toy_corpus(cfg: ToyCorpusConfig) -> ToyCorpus:
    """Deterministically generate a (train, dev, test) toy corpus."""
    lex_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    lexicon = _build_lexicon(cfg, lex_rng)
    return ToyCorpus(
        config=cfg,
        lexicon=lexicon,
        train=_sample_split(cfg, lexicon, 1, cfg.n_train),
        dev=_sample_split(cfg, lexicon, 2, cfg.n_dev),
        test=_sample_split(cfg, lexicon, 3, cfg.n_test),
    )


def bayes_floor_der(lexicon: tuple[LexiconEntry, ...]) -> float:
    """Best achievable expected DER (incl. `no diacritic', with case ending)
    for any predictor that sees only the undiacritized text.

    For an ambiguous form the two readings are chosen by a fair coin that is
    independent of everything observable, so the best per-position accuracy at
    a differing position is 1/2.  Words are drawn uniformly from the lexicon.
    """
    exp_errors = 0.0
    exp_letters = 0.0
    for entry in lexicon:
        exp_letters += len(entry.base)
        if entry.ambiguous:
            a = strip_diacritics(entry.variants[0]).labels
            b = strip_diacritics(entry.variants[1]).labels
            diff = sum(x != y for x, y in zip(a, b))
            exp_errors += 0.5 * diff
    return (exp_errors / len(lexicon)) / (exp_letters / len(lexicon))

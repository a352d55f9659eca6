"""Whole-utterance prediction and sliding-window inference.

Long inputs are chunked with a buffer of context on both sides; only the
central window of each chunk is committed, and the ASR hypothesis is cropped
proportionally (ratio r = len(asr) / len(text), floor/ceil slice endpoints).
The chunk plan is a pure function so the coverage laws can be tested without
a model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import EncodedBatch, Model, encode_batch
from .text import ARABIC_LETTERS, DiacriticLabel, LabeledText


class TooLong(ValueError):
    pass


class MissingAsrInput(ValueError):
    pass


class NotMultimodal(ValueError):
    pass


@dataclass(frozen=True)
class InferenceConfig:
    window: int = 50
    buffer: int = 25

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.buffer < 0:
            raise ValueError("buffer must be >= 0")


@dataclass(frozen=True)
class Chunk:
    safe_start: int  # chunk start in text coordinates (includes left buffer)
    chunk_end: int  # chunk end (includes right buffer)
    commit_start: int  # positions whose predictions are kept
    commit_end: int
    asr_start: int
    asr_end: int


def window_plan(
    len_text: int, len_asr: int, window: int, buffer: int
) -> list[Chunk]:
    """Chunk schedule: every position is committed exactly once."""
    r = len_asr / len_text if len_text else 0.0
    chunks = []
    start = 0
    while start < len_text:
        safe_start = max(start - buffer, 0)
        chunk_end = min(start + window + buffer, len_text)
        commit_end = min(start + window, len_text)
        asr_start = min(int(np.floor(safe_start * r)), len_asr)
        asr_end = min(int(np.ceil(chunk_end * r)), len_asr)
        chunks.append(
            Chunk(safe_start, chunk_end, start, commit_end, asr_start, asr_end)
        )
        start = commit_end
    return chunks


def _predict_labels(model: Model, raw: str, asr: str | None) -> np.ndarray:
    batch = encode_batch([(raw, asr, None)], model.vocab, model.cfg)
    probs, _ = model.forward(batch)
    return probs[0, : len(raw)].argmax(axis=-1)


def _finalize(raw: str, label_ids) -> LabeledText:
    labels = tuple(
        DiacriticLabel(int(l)) if c in ARABIC_LETTERS else DiacriticLabel.NONE
        for c, l in zip(raw, label_ids)
    )
    return LabeledText(base=raw, labels=labels)


def _check_asr(model: Model, asr: str | None) -> str | None:
    if not model.cfg.multimodal:
        return None  # text-only models ignore any provided hypothesis
    if asr is None:
        raise MissingAsrInput("multimodal model needs an ASR hypothesis")
    if asr == "":
        warnings.warn("empty ASR hypothesis; substituting a single placeholder")
    return asr


def predict_direct(model: Model, raw: str, asr: str | None = None) -> LabeledText:
    """Single-pass argmax prediction; raw must fit within max_len_text."""
    if len(raw) > model.cfg.max_len_text:
        raise TooLong(
            f"input of length {len(raw)} exceeds max_len_text "
            f"{model.cfg.max_len_text}; use sliding_window_predict"
        )
    if not raw:
        return LabeledText(base="", labels=())
    asr = _check_asr(model, asr)
    return _finalize(raw, _predict_labels(model, raw, asr))


def sliding_window_predict(
    model: Model, raw: str, asr: str | None = None, cfg: InferenceConfig | None = None
) -> LabeledText:
    """Chunked prediction with buffered context, committing window-size spans."""
    cfg = cfg or InferenceConfig()
    if cfg.window + 2 * cfg.buffer > model.cfg.max_len_text:
        raise TooLong("window + 2*buffer exceeds the model's max_len_text")
    if not raw:
        return LabeledText(base="", labels=())
    asr = _check_asr(model, asr)
    label_ids = np.zeros(len(raw), dtype=np.int64)
    for ch in window_plan(len(raw), len(asr) if asr else 0, cfg.window, cfg.buffer):
        piece = raw[ch.safe_start : ch.chunk_end]
        asr_piece = asr[ch.asr_start : ch.asr_end] if asr is not None else None
        ids = _predict_labels(model, piece, asr_piece)
        rel = slice(ch.commit_start - ch.safe_start, ch.commit_end - ch.safe_start)
        label_ids[ch.commit_start : ch.commit_end] = ids[rel]
    return _finalize(raw, label_ids)


def predict_truncated(model: Model, raw: str, asr: str | None = None) -> LabeledText:
    """Ablation mode: predict on the truncated prefix, NONE past max_len_text."""
    n = min(len(raw), model.cfg.max_len_text)
    head = predict_direct(model, raw[:n], None if asr is None else asr)
    labels = head.labels + (DiacriticLabel.NONE,) * (len(raw) - n)
    return _finalize(raw, [int(l) for l in labels])


def export_attention(model: Model, raw: str, asr: str, path) -> np.ndarray:
    """Write cross-attention weights for one utterance; returns the weights.

    Plain-text format: a header (n_heads, Lq, Lk, query chars, key chars)
    followed by Lq x Lk rows per head, 6 significant digits, cropped to the
    true sequence lengths.
    """
    if not model.cfg.multimodal:
        raise NotMultimodal("text-only models have no cross-attention")
    if len(raw) > model.cfg.max_len_text or len(asr) > model.cfg.max_len_asr:
        raise TooLong("input exceeds the direct-prediction length bound")
    batch = encode_batch([(raw, asr, None)], model.vocab, model.cfg)
    _, attn = model.forward(batch)
    weights = attn[0, :, : len(raw), : len(asr)]
    n_heads = weights.shape[0]
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"n_heads {n_heads}\n")
        f.write(f"query_len {len(raw)}\n")
        f.write(f"key_len {len(asr)}\n")
        f.write(f"query_chars {raw}\n")
        f.write(f"key_chars {asr}\n")
        for h in range(n_heads):
            f.write(f"head {h}\n")
            for row in weights[h]:
                f.write(" ".join(f"{x:.6g}" for x in row) + "\n")
    return weights

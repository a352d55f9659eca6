"""Sliding-window planning/prediction laws and attention export."""

import numpy as np
import pytest

from harakat.inference import (
    InferenceConfig,
    MissingAsrInput,
    NotMultimodal,
    TooLong,
    export_attention,
    predict_direct,
    predict_truncated,
    sliding_window_predict,
    window_plan,
)
from harakat.model import Model, ModelConfig, build_vocab
from harakat.text import DiacriticLabel, apply_labels, strip_diacritics

LETTERS = "بتثجحخد"


def _raw(n, seed=0):
    rng = np.random.default_rng(seed)
    return "".join(
        " " if (i % 9 == 8) else LETTERS[rng.integers(len(LETTERS))]
        for i in range(n)
    ).strip()


def _model(multimodal=True, max_len_text=40, backbone="transformer"):
    corpus = [(_raw(30, s), _raw(30, s) if multimodal else None, None) for s in range(3)]
    corpus = [(r, a, None) for r, a, _ in corpus]
    vocab = build_vocab(corpus)
    cfg = ModelConfig(
        backbone=backbone,
        d_model=8,
        n_heads=2,
        n_blocks=1,
        ff_dim=8,
        lstm_layers=1,
        max_len_text=max_len_text,
        max_len_asr=2 * max_len_text,
        multimodal=multimodal,
    )
    return Model(cfg, vocab, seed=0)


def test_window_plan_reference_trace():
    # len=100, window=50, buffer=25: two chunks committing [0,50) and [50,100).
    plan = window_plan(100, 200, 50, 25)
    assert [(c.commit_start, c.commit_end) for c in plan] == [(0, 50), (50, 100)]
    assert (plan[0].safe_start, plan[0].chunk_end) == (0, 75)
    assert (plan[1].safe_start, plan[1].chunk_end) == (25, 100)
    # ASR crops: ratio 2.0, floor/ceil of scaled endpoints.
    assert (plan[0].asr_start, plan[0].asr_end) == (0, 150)
    assert (plan[1].asr_start, plan[1].asr_end) == (50, 200)


def test_window_plan_exact_cover_property():
    rng = np.random.default_rng(0)
    for _ in range(50):
        window = int(rng.integers(1, 80))
        buffer = int(rng.integers(0, 40))
        for n in (1, 2, window - 1 or 1, window, window + 1, 299, 300):
            len_asr = int(rng.integers(0, 3 * n + 1))
            plan = window_plan(n, len_asr, window, buffer)
            covered = np.zeros(n, dtype=int)
            for c in plan:
                assert c.safe_start <= c.commit_start < c.commit_end <= c.chunk_end
                assert c.chunk_end - c.safe_start <= window + 2 * buffer
                assert 0 <= c.asr_start <= c.asr_end <= len_asr
                covered[c.commit_start : c.commit_end] += 1
            assert np.all(covered == 1)  # each position committed exactly once


def test_window_plan_empty():
    assert window_plan(0, 0, 50, 25) == []


def test_inference_config_validation():
    with pytest.raises(ValueError):
        InferenceConfig(window=0)
    with pytest.raises(ValueError):
        InferenceConfig(buffer=-1)


def test_direct_too_long():
    model = _model(max_len_text=10)
    with pytest.raises(TooLong):
        predict_direct(model, _raw(11), _raw(11))


def test_direct_empty_input():
    model = _model()
    lt = predict_direct(model, "", "")
    assert lt.base == "" and lt.labels == ()


def test_multimodal_requires_asr():
    model = _model()
    with pytest.raises(MissingAsrInput):
        predict_direct(model, _raw(5), None)


def test_empty_asr_warns_but_predicts():
    model = _model()
    with pytest.warns(UserWarning):
        lt = predict_direct(model, _raw(5), "")
    assert len(lt) == 5


def test_text_only_ignores_asr():
    model = _model(multimodal=False)
    a = predict_direct(model, _raw(12), None)
    b = predict_direct(model, _raw(12), _raw(20))
    assert a == b


def test_sliding_equals_direct_when_short():
    for backbone in ("transformer", "lstm"):
        model = _model(max_len_text=40, backbone=backbone)
        cfg = InferenceConfig(window=20, buffer=10)
        for n in (1, 7, 19, 20):
            raw, asr = _raw(n), _raw(n, seed=3)
            assert sliding_window_predict(model, raw, asr, cfg) == predict_direct(
                model, raw, asr
            )


def test_sliding_window_handles_long_input():
    model = _model(max_len_text=40)
    cfg = InferenceConfig(window=20, buffer=10)
    raw, asr = _raw(150), _raw(170, seed=5)
    lt = sliding_window_predict(model, raw, asr, cfg)
    assert lt.base == raw
    assert len(lt.labels) == 150
    # Non-Arabic positions carry NONE.
    for c, l in zip(lt.base, lt.labels):
        if c == " ":
            assert l == DiacriticLabel.NONE
    # Output re-parses cleanly.
    assert strip_diacritics(apply_labels(lt)) == lt


def test_sliding_window_deterministic():
    model = _model(max_len_text=40)
    cfg = InferenceConfig(window=20, buffer=10)
    raw, asr = _raw(120), _raw(140, seed=2)
    assert sliding_window_predict(model, raw, asr, cfg) == sliding_window_predict(
        model, raw, asr, cfg
    )


def test_sliding_window_rejects_oversized_chunk():
    model = _model(max_len_text=30)
    with pytest.raises(TooLong):
        sliding_window_predict(model, _raw(50), _raw(50), InferenceConfig(20, 10))


def test_predict_truncated_pads_none():
    model = _model(max_len_text=20)
    raw = _raw(35)
    lt = predict_truncated(model, raw, _raw(35, seed=1))
    assert len(lt) == 35
    assert all(l == DiacriticLabel.NONE for l in lt.labels[20:])


def test_export_attention_format(tmp_path):
    model = _model()
    raw, asr = _raw(9), _raw(13, seed=4)
    out = tmp_path / "attn.txt"
    w = export_attention(model, raw, asr, out)
    assert w.shape == (model.cfg.n_heads, len(raw), len(asr))
    assert np.allclose(w.sum(axis=-1), 1.0, atol=1e-5)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"n_heads {model.cfg.n_heads}"
    assert lines[1] == f"query_len {len(raw)}"
    assert lines[2] == f"key_len {len(asr)}"
    assert lines[3] == f"query_chars {raw}"
    # Each head block: marker + len(raw) rows of len(asr) floats.
    body = lines[5:]
    assert body[0] == "head 0"
    assert len(body) == model.cfg.n_heads * (1 + len(raw))
    first = np.array([float(x) for x in body[1].split()])
    assert first.shape == (len(asr),)
    assert np.allclose(first, w[0, 0], atol=1e-5)


def test_export_attention_text_only_raises(tmp_path):
    model = _model(multimodal=False)
    with pytest.raises(NotMultimodal):
        export_attention(model, _raw(5), _raw(5), tmp_path / "a.txt")


def test_fused_output_length_matches_text_for_asr_1_to_3x():
    # Cross-attention output follows the query (text) length for any key
    # (ASR) length up to 3x.
    model = _model(max_len_text=30)
    model.cfg.max_len_asr = 90
    raw = _raw(10)
    for m in (1, 10, 20, 30):
        lt = predict_direct(model, raw, _raw(m, seed=6))
        assert len(lt.labels) == len(raw)

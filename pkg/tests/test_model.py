"""Vocabulary, batching, forward shapes, training loop, checkpoints."""

import numpy as np
import pytest

from harakat.model import (
    CorruptFile,
    EmptyCorpus,
    LengthMismatch,
    Model,
    ModelConfig,
    ShapeMismatch,
    TrainConfig,
    VersionMismatch,
    Vocabulary,
    build_vocab,
    encode_batch,
    load_checkpoint,
    loss,
    param_shapes,
    save_checkpoint,
    train,
)
from harakat.text import DIACRITIC_CHARS

CORPUS = [
    ("كتب", None, "كَتَبَ"),
    ("ذهب الولد", None, "ذَهَبَ الوَلَدُ"),
]
MM_CORPUS = [
    ("كتب", "كَتِبَ", "كَتَبَ"),
    ("ذهب الولد", "ذَهَبَ الوَلَدِ", "ذَهَبَ الوَلَدُ"),
]

TINY = dict(d_model=8, n_heads=2, n_blocks=1, ff_dim=8, lstm_layers=1,
            max_len_text=16, max_len_asr=32)


def test_build_vocab_properties():
    v = build_vocab(MM_CORPUS)
    assert min(v.text_side.values()) == 2  # 0=pad, 1=unk reserved
    assert set(v.text_side) <= set(v.asr_side)
    assert DIACRITIC_CHARS <= set(v.asr_side)
    ids = list(v.text_side.values())
    assert ids == sorted(ids)  # codepoint-ordered => deterministic
    with pytest.raises(EmptyCorpus):
        build_vocab([])


def test_vocab_digest_stable_and_sensitive():
    v = build_vocab(MM_CORPUS)
    assert v.digest() == build_vocab(MM_CORPUS).digest()
    assert v.digest() != build_vocab([("س", None, "سَ")]).digest()


def test_model_config_defaults():
    cfg = ModelConfig()
    assert cfg.dropout == 0.2 and cfg.max_len_asr == 400
    assert ModelConfig(backbone="lstm").dropout == 0.5
    with pytest.raises(ValueError):
        ModelConfig(d_model=10, n_heads=4)
    with pytest.raises(ValueError):
        ModelConfig(backbone="gru")


def test_encode_batch_shapes_and_padding():
    v = build_vocab(MM_CORPUS)
    cfg = ModelConfig(**TINY)
    b = encode_batch(MM_CORPUS, v, cfg)
    assert b.text_ids.shape == (2, 9)
    assert b.text_mask[0].sum() == 3 and b.text_mask[1].sum() == 9
    assert b.text_ids[0, 3:].tolist() == [0] * 6  # right padding = pad id
    assert np.array_equal(b.loss_mask, b.text_mask)
    assert b.truncated == 0


def test_encode_batch_truncation_counted():
    v = build_vocab(MM_CORPUS)
    cfg = ModelConfig(**{**TINY, "max_len_text": 4, "max_len_asr": 8})
    b = encode_batch(MM_CORPUS, v, cfg)
    assert b.text_ids.shape[1] == 4
    assert b.truncated == 2  # second text row + second asr row


def test_encode_batch_empty_asr_gets_placeholder():
    v = build_vocab(MM_CORPUS)
    cfg = ModelConfig(**TINY)
    b = encode_batch([("كتب", "", None)], v, cfg)
    assert b.asr_ids.shape == (1, 1) and b.asr_ids[0, 0] == 1  # UNK


def test_encode_batch_label_alignment_checked():
    v = build_vocab(MM_CORPUS)
    with pytest.raises(LengthMismatch):
        encode_batch([("كتبب", None, "كَتَبَ")], v, ModelConfig(**TINY))


@pytest.mark.parametrize("backbone", ["transformer", "lstm"])
@pytest.mark.parametrize("multimodal", [True, False])
def test_forward_shapes(backbone, multimodal):
    v = build_vocab(MM_CORPUS)
    cfg = ModelConfig(backbone=backbone, multimodal=multimodal, **TINY)
    model = Model(cfg, v, seed=0)
    b = encode_batch(MM_CORPUS, v, cfg)
    probs, attn = model.forward(b)
    assert probs.shape == (2, 9, 15)
    assert probs.dtype == np.float32
    assert np.allclose(probs.sum(axis=-1), 1.0, atol=1e-5)
    if multimodal:
        assert attn.shape[:2] == (2, cfg.n_heads)
        assert attn.shape[2] == 9  # queries follow the text length
        # Attention over padded ASR keys is exactly zero.
        assert np.all(attn[0, :, :, b.asr_mask[0] == False] == 0)
    else:
        assert attn is None


def test_fuse_concat_changes_head_width_only():
    v = build_vocab(MM_CORPUS)
    cat = param_shapes(ModelConfig(**TINY, fuse_concat=True), v)
    nocat = param_shapes(ModelConfig(**TINY, fuse_concat=False), v)
    assert cat["head.w"][0] == 2 * nocat["head.w"][0]
    assert {k: s for k, s in cat.items() if k != "head.w"} == {
        k: s for k, s in nocat.items() if k != "head.w"
    }


def test_text_only_ignores_asr_input():
    v = build_vocab(MM_CORPUS)
    cfg = ModelConfig(multimodal=False, **TINY)
    model = Model(cfg, v, seed=0)
    a = encode_batch([("كتب", "كَتِبَ", None)], v, cfg)
    b = encode_batch([("كتب", "ذذذ", None)], v, cfg)
    pa, _ = model.forward(a)
    pb, _ = model.forward(b)
    assert np.array_equal(pa, pb)


def test_loss_uniform_is_log_k():
    probs = np.full((2, 3, 15), 1 / 15, dtype=np.float32)
    labels = np.zeros((2, 3), dtype=np.int32)
    mask = np.ones((2, 3), dtype=bool)
    assert float(loss(probs, labels, mask)) == pytest.approx(np.log(15.0), rel=1e-5)


def test_train_lr_zero_is_noop_and_history_shape():
    cfg = ModelConfig(multimodal=False, **TINY)
    model, history = train(
        CORPUS, CORPUS, cfg, TrainConfig(epochs=2, batch_size=2, lr=0.0, seed=0)
    )
    fresh = Model(cfg, build_vocab(CORPUS), seed=0)
    for k in model.params:
        assert np.array_equal(model.params[k], fresh.params[k]), k
    assert [h["epoch"] for h in history] == [0, 1]
    assert all({"epoch", "train_loss", "dev_der_incl_ce"} <= set(h) for h in history)


def test_train_reduces_loss():
    cfg = ModelConfig(multimodal=False, **TINY)
    _, history = train(
        CORPUS * 8, CORPUS, cfg, TrainConfig(epochs=8, batch_size=8, seed=0)
    )
    assert history[-1]["train_loss"] < history[0]["train_loss"]


def test_train_deterministic():
    cfg = ModelConfig(multimodal=False, **TINY)
    tc = TrainConfig(epochs=2, batch_size=2, seed=5)
    m1, h1 = train(CORPUS, CORPUS, cfg, tc)
    m2, h2 = train(CORPUS, CORPUS, cfg, tc)
    assert h1 == h2
    for k in m1.params:
        assert np.array_equal(m1.params[k], m2.params[k])


def _trained_tiny(tmp_path):
    cfg = ModelConfig(**TINY)
    model, _ = train(
        MM_CORPUS, MM_CORPUS, cfg, TrainConfig(epochs=1, batch_size=2, seed=0)
    )
    path = tmp_path / "m.ckpt"
    save_checkpoint(model, path)
    return model, path


def test_checkpoint_round_trip(tmp_path):
    model, path = _trained_tiny(tmp_path)
    loaded = load_checkpoint(path)
    assert loaded.cfg == model.cfg
    assert loaded.vocab == model.vocab
    assert loaded.history == model.history
    for k in model.params:
        assert np.array_equal(loaded.params[k], model.params[k])
    b = encode_batch(MM_CORPUS, model.vocab, model.cfg)
    assert np.array_equal(model.forward(b)[0], loaded.forward(b)[0])


def test_checkpoint_bad_magic(tmp_path):
    p = tmp_path / "x.ckpt"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CorruptFile):
        load_checkpoint(p)


def test_checkpoint_version_mismatch(tmp_path):
    model, path = _trained_tiny(tmp_path)
    blob = bytearray(path.read_bytes())
    blob[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionMismatch):
        load_checkpoint(path)


def test_checkpoint_truncated(tmp_path):
    model, path = _trained_tiny(tmp_path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 10])
    with pytest.raises(CorruptFile):
        load_checkpoint(path)


def test_checkpoint_trailing_bytes(tmp_path):
    model, path = _trained_tiny(tmp_path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(CorruptFile):
        load_checkpoint(path)


def test_checkpoint_shape_mismatch(tmp_path):
    model, path = _trained_tiny(tmp_path)
    blob = path.read_bytes()
    # Corrupt a declared shape in the JSON header (d_model 8 -> header lists
    # an 8-wide array; swap the first "[8" occurrence after params).
    broken = blob.replace(b'["cross.bk", [16]]', b'["cross.bk", [17]]')
    assert broken != blob
    path.write_bytes(broken)
    with pytest.raises((ShapeMismatch, CorruptFile)):
        load_checkpoint(path)


def test_checkpoint_byte_identical_for_same_seed(tmp_path):
    cfg = ModelConfig(multimodal=False, **TINY)
    tc = TrainConfig(epochs=1, batch_size=2, seed=7)
    m1, _ = train(CORPUS, CORPUS, cfg, tc)
    m2, _ = train(CORPUS, CORPUS, cfg, tc)
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(m1, p1)
    save_checkpoint(m2, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_empty_corpus_raises():
    cfg = ModelConfig(multimodal=False, **TINY)
    with pytest.raises(EmptyCorpus):
        train([], CORPUS, cfg, TrainConfig(epochs=1))

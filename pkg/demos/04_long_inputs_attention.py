"""
Sliding windows and attention inspection
========================================

Inputs longer than the model's maximum length are chunked: each chunk adds
a buffer of context on both sides, but only the central window of
predictions is committed.  This script prints the chunk schedule for a
long line, shows that short inputs reduce to a single direct pass, and
dumps the text-to-transcript cross-attention matrix of an untrained model.
"""

import numpy as np

from harakat import (
    InferenceConfig,
    Model,
    ModelConfig,
    build_vocab,
    export_attention,
    predict_direct,
    sliding_window_predict,
    window_plan,
)

# The canonical schedule: 100 characters, window 50, buffer 25, and a
# transcript twice as long as the text.
print("chunk schedule for len=100, window=50, buffer=25, asr 2x:")
for c in window_plan(100, 200, 50, 25):
    print(
        f"  predict text[{c.safe_start}:{c.chunk_end}] "
        f"asr[{c.asr_start}:{c.asr_end}] -> commit [{c.commit_start},{c.commit_end})"
    )

# A tiny untrained model is enough to demonstrate the mechanics.
rng = np.random.default_rng(0)
letters = "بتثجحخد"
raw = "".join(letters[rng.integers(7)] for _ in range(90))
asr = "".join(letters[rng.integers(7)] for _ in range(110))
vocab = build_vocab([(raw, asr, None)])
cfg = ModelConfig(
    d_model=16, n_heads=2, n_blocks=1, ff_dim=16, max_len_text=40, max_len_asr=120
)
model = Model(cfg, vocab, seed=0)

icfg = InferenceConfig(window=20, buffer=10)
lt = sliding_window_predict(model, raw, asr, icfg)
print(f"\npredicted {len(lt)} labels for a 90-char input (max_len_text=40)")

short = raw[:20]
same = sliding_window_predict(model, short, asr[:25], icfg) == predict_direct(
    model, short, asr[:25]
)
print(f"short input: sliding window equals direct prediction -> {same}")

# Cross-attention weights, one matrix per head, cropped to true lengths.
out = "attention_demo.txt"
w = export_attention(model, raw[:12], asr[:15], out)
print(f"\nwrote {out}: {w.shape[0]} heads of {w.shape[1]}x{w.shape[2]} weights")
print("head 0, query 0 attends to keys:", np.round(w[0, 0], 3))

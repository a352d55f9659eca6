"""The learnable core: character vocabularies, batch encoding, the two
encoder backbones (transformer with learned absolute positions, stacked
bi-LSTM), multi-head cross-attention fusion, the classifier head, Adam
training, gradient checking, and checkpoint persistence.

Both the text and ASR encoders share one configuration; the ASR side just has
a larger alphabet (it consumes diacritized text).  Attention projections use a
per-head width equal to the model width, so parameter counts line up with the
reference scale (~0.7M text-only, ~1.5M fused at the 128-dim defaults).
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .metrics import pooled_der
from .text import (
    DIACRITIC_CHARS,
    DiacriticLabel,
    LabeledText,
    N_LABELS,
    strip_diacritics,
)

PAD_ID = 0
UNK_ID = 1


class EmptyCorpus(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class AllMasked(ValueError):
    pass


class ShapeError(ValueError):
    pass


class CorruptFile(ValueError):
    pass


class VersionMismatch(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    text_side: dict[str, int]
    asr_side: dict[str, int]
    label_count: int = N_LABELS

    def encode_text(self, s: str) -> list[int]:
        return [self.text_side.get(c, UNK_ID) for c in s]

    def encode_asr(self, s: str) -> list[int]:
        return [self.asr_side.get(c, UNK_ID) for c in s]

    def to_dict(self) -> dict:
        return {
            "text_side": self.text_side,
            "asr_side": self.asr_side,
            "label_count": self.label_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(
            text_side=dict(d["text_side"]),
            asr_side=dict(d["asr_side"]),
            label_count=int(d["label_count"]),
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def build_vocab(corpus: list[tuple[str, str | None, str]]) -> Vocabulary:
    """Character maps from (raw, asr, gold) lines; ids ordered by codepoint.

    The ASR alphabet always contains the text alphabet plus the 8 diacritic
    marks, so hypotheses from a well-formed diacritizer never hit UNK.
    """
    if not corpus:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    text_chars: set[str] = set()
    asr_chars: set[str] = set()
    for raw, asr, _gold in corpus:
        text_chars.update(raw)
        if asr:
            asr_chars.update(asr)
    asr_chars |= text_chars | DIACRITIC_CHARS
    text_side = {c: i + 2 for i, c in enumerate(sorted(text_chars))}
    asr_side = {c: i + 2 for i, c in enumerate(sorted(asr_chars))}
    return Vocabulary(text_side=text_side, asr_side=asr_side)


@dataclass
class ModelConfig:
    backbone: str = "transformer"  # "transformer" | "lstm"
    d_model: int = 128
    n_heads: int = 4
    n_blocks: int = 2
    ff_dim: int = 128
    dropout: float | None = None  # default 0.2 transformer / 0.5 lstm
    lstm_layers: int = 2
    dense_layers: int = 2
    fuse_concat: bool = True
    multimodal: bool = True
    max_len_text: int = 200
    max_len_asr: int | None = None  # default 2 * max_len_text

    def __post_init__(self):
        if self.backbone not in ("transformer", "lstm"):
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if self.d_model < 1 or self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be positive and divisible by n_heads")
        if self.dropout is None:
            self.dropout = 0.2 if self.backbone == "transformer" else 0.5
        if self.max_len_asr is None:
            self.max_len_asr = 2 * self.max_len_text

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass(frozen=True)
class EncodedBatch:
    text_ids: np.ndarray  # (B, Lt) int32
    text_mask: np.ndarray  # (B, Lt) bool
    asr_ids: np.ndarray  # (B, La) int32
    asr_mask: np.ndarray  # (B, La) bool
    label_ids: np.ndarray  # (B, Lt) int32
    loss_mask: np.ndarray  # (B, Lt) bool
    text_lengths: np.ndarray  # (B,) int
    asr_lengths: np.ndarray  # (B,) int
    truncated: int = 0  # how many sequences lost characters to max lengths


def encode_batch(
    examples: list[tuple[str, str | None, str | None]],
    vocab: Vocabulary,
    cfg: ModelConfig,
) -> EncodedBatch:
    """Right-padded id matrices for (raw, asr, gold) examples.

    gold may be None (prediction time); labels default to NONE then.  An
    absent/empty ASR string becomes a single UNK token so attention always has
    at least one key.
    """
    if not examples:
        raise ValueError("empty batch")
    truncated = 0
    text_rows, asr_rows, label_rows = [], [], []
    for raw, asr, gold in examples:
        if gold is not None:
            lt = strip_diacritics(gold)
            if lt.base != raw:
                raise LengthMismatch(
                    "gold labels do not align with raw text: "
                    f"{lt.base!r} vs {raw!r}"
                )
            labels = [int(l) for l in lt.labels]
        else:
            labels = [int(DiacriticLabel.NONE)] * len(raw)
        ids = vocab.encode_text(raw)
        if len(ids) > cfg.max_len_text:
            ids = ids[: cfg.max_len_text]
            labels = labels[: cfg.max_len_text]
            truncated += 1
        a = vocab.encode_asr(asr) if asr else [UNK_ID]
        if len(a) > cfg.max_len_asr:
            a = a[: cfg.max_len_asr]
            truncated += 1
        text_rows.append(ids)
        asr_rows.append(a)
        label_rows.append(labels)
    B = len(examples)
    Lt = max(len(r) for r in text_rows)
    La = max(len(r) for r in asr_rows)
    text_ids = np.zeros((B, Lt), dtype=np.int32)
    asr_ids = np.zeros((B, La), dtype=np.int32)
    label_ids = np.zeros((B, Lt), dtype=np.int32)
    text_mask = np.zeros((B, Lt), dtype=bool)
    asr_mask = np.zeros((B, La), dtype=bool)
    for i, (tr, ar, lr) in enumerate(zip(text_rows, asr_rows, label_rows)):
        text_ids[i, : len(tr)] = tr
        label_ids[i, : len(lr)] = lr
        text_mask[i, : len(tr)] = True
        asr_ids[i, : len(ar)] = ar
        asr_mask[i, : len(ar)] = True
    return EncodedBatch(
        text_ids=text_ids,
        text_mask=text_mask,
        asr_ids=asr_ids,
        asr_mask=asr_mask,
        label_ids=label_ids,
        loss_mask=text_mask.copy(),
        text_lengths=np.array([len(r) for r in text_rows]),
        asr_lengths=np.array([len(r) for r in asr_rows]),
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# Parameters


def _glorot(rng, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


def param_shapes(cfg: ModelConfig, vocab: Vocabulary) -> dict[str, tuple]:
    """Name -> shape map; single source of truth for init and checkpoints."""
    d, h = cfg.d_model, cfg.n_heads
    dh = d  # per-head width equals model width
    shapes: dict[str, tuple] = {}

    def encoder(prefix: str, vocab_size: int, max_len: int):
        shapes[f"{prefix}.emb"] = (vocab_size, d)
        if cfg.backbone == "transformer":
            shapes[f"{prefix}.pos"] = (max_len, d)
            for k in range(cfg.n_blocks):
                b = f"{prefix}.b{k}"
                for name in ("wq", "wk", "wv"):
                    shapes[f"{b}.attn.{name}"] = (d, h * dh)
                shapes[f"{b}.attn.wo"] = (h * dh, d)
                for name in ("bq", "bk", "bv"):
                    shapes[f"{b}.attn.{name}"] = (h * dh,)
                shapes[f"{b}.attn.bo"] = (d,)
                shapes[f"{b}.ln1.g"] = (d,)
                shapes[f"{b}.ln1.b"] = (d,)
                shapes[f"{b}.ffn.w1"] = (d, cfg.ff_dim)
                shapes[f"{b}.ffn.b1"] = (cfg.ff_dim,)
                shapes[f"{b}.ffn.w2"] = (cfg.ff_dim, d)
                shapes[f"{b}.ffn.b2"] = (d,)
                shapes[f"{b}.ln2.g"] = (d,)
                shapes[f"{b}.ln2.b"] = (d,)
            shapes[f"{prefix}.dense1.w"] = (d, d)
            shapes[f"{prefix}.dense1.b"] = (d,)
        else:
            for k in range(cfg.lstm_layers):
                inp = d if k == 0 else 2 * d
                for direction in ("fw", "bw"):
                    shapes[f"{prefix}.lstm{k}.{direction}.wx"] = (inp, 4 * d)
                    shapes[f"{prefix}.lstm{k}.{direction}.wh"] = (d, 4 * d)
                    shapes[f"{prefix}.lstm{k}.{direction}.b"] = (4 * d,)
            shapes[f"{prefix}.dense1.w"] = (2 * d, d)
            shapes[f"{prefix}.dense1.b"] = (d,)
            shapes[f"{prefix}.dense2.w"] = (d, d)
            shapes[f"{prefix}.dense2.b"] = (d,)

    n_text = max(vocab.text_side.values(), default=1) + 1
    n_asr = max(vocab.asr_side.values(), default=1) + 1
    encoder("text", n_text, cfg.max_len_text)
    if cfg.multimodal:
        encoder("asr", n_asr, cfg.max_len_asr)
        for name in ("wq", "wk", "wv"):
            shapes[f"cross.{name}"] = (d, h * dh)
        shapes["cross.wo"] = (h * dh, d)
        for name in ("bq", "bk", "bv"):
            shapes[f"cross.{name}"] = (h * dh,)
        shapes["cross.bo"] = (d,)
        head_in = 2 * d if cfg.fuse_concat else d
    else:
        head_in = d
    shapes["head.w"] = (head_in, vocab.label_count)
    shapes["head.b"] = (vocab.label_count,)
    return shapes


def init_params(
    cfg: ModelConfig, vocab: Vocabulary, seed: int, dtype=np.float32
) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(cfg, vocab).items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("emb", "pos"):
            params[name] = rng.uniform(-0.05, 0.05, size=shape).astype(dtype)
        elif leaf == "g":
            params[name] = np.ones(shape, dtype=dtype)
        elif len(shape) == 1:
            # Small positive bias into ReLU layers keeps units off exact
            # kinks (zero bias can make whole pre-activations exactly 0).
            relu_fed = name.endswith((".dense1.b", ".dense2.b", ".ffn.b1"))
            params[name] = np.full(shape, 0.01 if relu_fed else 0.0, dtype=dtype)
        else:
            params[name] = _glorot(rng, shape[0], shape[1], dtype)
    return params


# ---------------------------------------------------------------------------
# Forward


def _dense(x: Tensor, w: Tensor, b: Tensor, activation=None) -> Tensor:
    out = ad.add(ad.matmul(x, w), b)
    return activation(out) if activation else out


def _mha(
    q_in: Tensor,
    kv_in: Tensor,
    key_mask: np.ndarray,
    p: dict[str, Tensor],
    prefix: str,
    n_heads: int,
) -> tuple[Tensor, Tensor]:
    """Multi-head attention; returns (output, attention weights (B,h,Lq,Lk))."""
    B, Lq, d = q_in.shape
    Lk = kv_in.shape[1]
    dh = d

    def heads(x, name):
        proj = _dense(x, p[f"{prefix}.{'w'+name}"], p[f"{prefix}.{'b'+name}"])
        return ad.swapaxes(ad.reshape(proj, (B, -1, n_heads, dh)), 1, 2)

    q = heads(q_in, "q")
    k = heads(kv_in, "k")
    v = heads(kv_in, "v")
    scores = ad.scale(ad.matmul(q, ad.swapaxes(k, -1, -2)), 1.0 / np.sqrt(dh))
    attn = ad.masked_softmax(scores, key_mask[:, None, None, :])
    mixed = ad.matmul(attn, v)  # (B, h, Lq, dh)
    mixed = ad.reshape(ad.swapaxes(mixed, 1, 2), (B, Lq, n_heads * dh))
    out = _dense(mixed, p[f"{prefix}.wo"], p[f"{prefix}.bo"])
    return out, attn


def _encode(
    prefix: str,
    ids: np.ndarray,
    mask: np.ndarray,
    lengths: np.ndarray,
    p: dict[str, Tensor],
    cfg: ModelConfig,
    train_mode: bool,
    rng,
) -> Tensor:
    L = ids.shape[1]
    x = ad.embedding(p[f"{prefix}.emb"], ids)
    drop = cfg.dropout if train_mode else 0.0
    if cfg.backbone == "transformer":
        if L > p[f"{prefix}.pos"].shape[0]:
            raise ShapeError(
                f"sequence of length {L} exceeds the {prefix} position table"
            )
        pos = Tensor(p[f"{prefix}.pos"].data[:L], parents=(p[f"{prefix}.pos"],),
                     backward=_pos_slice_backward(p[f"{prefix}.pos"], L))
        x = ad.add(x, pos)
        x = ad.dropout(x, drop, rng)
        for k in range(cfg.n_blocks):
            b = f"{prefix}.b{k}"
            attn_out, _ = _mha(x, x, mask, p, f"{b}.attn", cfg.n_heads)
            x = ad.layer_norm(
                ad.add(x, ad.dropout(attn_out, drop, rng)),
                p[f"{b}.ln1.g"],
                p[f"{b}.ln1.b"],
            )
            ff = _dense(x, p[f"{b}.ffn.w1"], p[f"{b}.ffn.b1"], ad.relu)
            ff = _dense(ff, p[f"{b}.ffn.w2"], p[f"{b}.ffn.b2"])
            x = ad.layer_norm(
                ad.add(x, ad.dropout(ff, drop, rng)),
                p[f"{b}.ln2.g"],
                p[f"{b}.ln2.b"],
            )
        return _dense(x, p[f"{prefix}.dense1.w"], p[f"{prefix}.dense1.b"], ad.relu)
    # bi-LSTM backbone
    for k in range(cfg.lstm_layers):
        fw = ad.lstm(
            x,
            p[f"{prefix}.lstm{k}.fw.wx"],
            p[f"{prefix}.lstm{k}.fw.wh"],
            p[f"{prefix}.lstm{k}.fw.b"],
        )
        x_rev = ad.flip_padded(x, lengths)
        bw_rev = ad.lstm(
            x_rev,
            p[f"{prefix}.lstm{k}.bw.wx"],
            p[f"{prefix}.lstm{k}.bw.wh"],
            p[f"{prefix}.lstm{k}.bw.b"],
        )
        bw = ad.flip_padded(bw_rev, lengths)
        x = ad.concat([fw, bw], axis=-1)
        x = ad.dropout(x, drop, rng)
    x = _dense(x, p[f"{prefix}.dense1.w"], p[f"{prefix}.dense1.b"], ad.relu)
    return _dense(x, p[f"{prefix}.dense2.w"], p[f"{prefix}.dense2.b"], ad.relu)


def _pos_slice_backward(pos: Tensor, L: int):
    def backward(g):
        gp = np.zeros_like(pos.data)
        gp[:L] = g.reshape(-1, L, pos.data.shape[1]).sum(axis=0)
        pos._accum(gp)

    return backward


class Model:
    """An immutable-after-training diacritic classifier."""

    def __init__(
        self,
        cfg: ModelConfig,
        vocab: Vocabulary,
        seed: int = 0,
        dtype=np.float32,
        params: dict[str, np.ndarray] | None = None,
        history: list | None = None,
    ):
        self.cfg = cfg
        self.vocab = vocab
        self.dtype = dtype
        self.params = params if params is not None else init_params(
            cfg, vocab, seed, dtype
        )
        self.history = history or []

    def param_tensors(self) -> dict[str, Tensor]:
        return {k: Tensor(v, requires_grad=True) for k, v in self.params.items()}

    def param_count(self) -> int:
        return sum(v.size for v in self.params.values())

    def forward_graph(
        self,
        batch: EncodedBatch,
        train_mode: bool = False,
        rng=None,
        p: dict[str, Tensor] | None = None,
    ) -> tuple[Tensor, Tensor | None]:
        cfg = self.cfg
        if batch.text_ids.shape[1] > cfg.max_len_text:
            raise ShapeError("batch text length exceeds max_len_text")
        if batch.asr_ids.shape[1] > cfg.max_len_asr:
            raise ShapeError("batch ASR length exceeds max_len_asr")
        if p is None:
            p = self.param_tensors()
        if rng is None:
            rng = np.random.default_rng(0)
        h_text = _encode(
            "text",
            batch.text_ids,
            batch.text_mask,
            batch.text_lengths,
            p,
            cfg,
            train_mode,
            rng,
        )
        attn = None
        if cfg.multimodal:
            h_asr = _encode(
                "asr",
                batch.asr_ids,
                batch.asr_mask,
                batch.asr_lengths,
                p,
                cfg,
                train_mode,
                rng,
            )
            fused, attn = _mha(h_text, h_asr, batch.asr_mask, p, "cross", cfg.n_heads)
            head_in = ad.concat([fused, h_text], axis=-1) if cfg.fuse_concat else fused
        else:
            head_in = h_text
        logits = _dense(head_in, p["head.w"], p["head.b"])
        probs = ad.softmax(logits)
        return probs, attn

    def forward(
        self, batch: EncodedBatch, train_mode: bool = False, rng=None
    ) -> tuple[np.ndarray, np.ndarray | None]:
        probs, attn = self.forward_graph(batch, train_mode=train_mode, rng=rng)
        return probs.data, None if attn is None else attn.data


def loss(probs: Tensor | np.ndarray, label_ids: np.ndarray, loss_mask: np.ndarray):
    """Mean categorical cross-entropy over unmasked positions."""
    if loss_mask.sum() == 0:
        raise AllMasked("no unmasked positions in loss")
    if isinstance(probs, Tensor):
        return ad.masked_nll(probs, label_ids, loss_mask)
    return ad.masked_nll(Tensor(probs), label_ids, loss_mask).data


# ---------------------------------------------------------------------------
# Training


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        c = self.cfg
        self.t += 1
        b1t = 1.0 - c.beta1**self.t
        b2t = 1.0 - c.beta2**self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            params[k] -= c.lr * (m / b1t) / (np.sqrt(v / b2t) + c.eps)


def _dev_der(model: Model, dev: list, vocab: Vocabulary, batch_size: int) -> float:
    """Pooled DER (incl. `no diacritic', with case ending) on (raw, asr, gold)."""
    pairs = []
    for i in range(0, len(dev), batch_size):
        chunk = dev[i : i + batch_size]
        batch = encode_batch(chunk, vocab, model.cfg)
        probs, _ = model.forward(batch)
        pred_ids = probs.argmax(axis=-1)
        for row, (raw, _asr, gold) in enumerate(chunk):
            gold_lt = strip_diacritics(gold)
            n = min(len(raw), model.cfg.max_len_text)
            labels = []
            for j, c in enumerate(raw):
                if j < n and gold_lt.scorable[j]:
                    labels.append(DiacriticLabel(int(pred_ids[row, j])))
                else:
                    labels.append(DiacriticLabel.NONE)
            # Non-scorable positions forced to NONE so the LabeledText is valid.
            labels = [
                l if s else DiacriticLabel.NONE
                for l, s in zip(labels, gold_lt.scorable)
            ]
            pairs.append((LabeledText(base=raw, labels=tuple(labels)), gold_lt))
    entry = pooled_der(pairs).incl_nodiac_with_ce
    return entry.rate if entry.rate is not None else 0.0


def train(
    train_set: list[tuple[str, str | None, str]],
    dev_set: list[tuple[str, str | None, str]],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    vocab: Vocabulary | None = None,
    verbose: bool = False,
) -> tuple[Model, list[dict]]:
    """Minibatch Adam training; returns the best-dev model and the history.

    Fully deterministic given train_cfg.seed: fixed init stream, fixed data
    order stream, fixed dropout stream.
    """
    if not train_set or not dev_set:
        raise EmptyCorpus("train and dev sets must be nonempty")
    if vocab is None:
        vocab = build_vocab(train_set)
    model = Model(model_cfg, vocab, seed=train_cfg.seed)
    opt = Adam(model.params, train_cfg)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([train_cfg.seed, 1]))
    drop_rng = np.random.default_rng(np.random.SeedSequence([train_cfg.seed, 2]))
    history: list[dict] = []
    best_der = None
    best_params = {k: v.copy() for k, v in model.params.items()}
    n = len(train_set)
    for epoch in range(train_cfg.epochs):
        order = shuffle_rng.permutation(n)
        total_loss = 0.0
        total_count = 0
        for i in range(0, n, train_cfg.batch_size):
            chunk = [train_set[j] for j in order[i : i + train_cfg.batch_size]]
            batch = encode_batch(chunk, vocab, model_cfg)
            p = model.param_tensors()
            probs, _ = model.forward_graph(batch, train_mode=True, rng=drop_rng, p=p)
            l = loss(probs, batch.label_ids, batch.loss_mask)
            l.backward()
            grads = {
                k: t.grad if t.grad is not None else np.zeros_like(t.data)
                for k, t in p.items()
            }
            opt.step(model.params, grads)
            count = int(batch.loss_mask.sum())
            total_loss += float(l.data) * count
            total_count += count
        dev_der = _dev_der(model, dev_set, vocab, train_cfg.batch_size)
        record = {
            "epoch": epoch,
            "train_loss": round(total_loss / total_count, 6),
            "dev_der_incl_ce": round(dev_der, 6),
        }
        history.append(record)
        if verbose:
            print(
                f"epoch {epoch}: loss {record['train_loss']:.4f} "
                f"dev DER {100 * dev_der:.2f}%"
            )
        if best_der is None or dev_der < best_der:
            best_der = dev_der
            best_params = {k: v.copy() for k, v in model.params.items()}
    model.params = best_params
    model.history = history
    return model, history


# ---------------------------------------------------------------------------
# Gradient check


def grad_check(
    model_cfg_small: ModelConfig | None = None, eps: float = 1e-5, seed: int = 0
) -> float:
    """Max relative error of analytic vs central finite-difference gradients.

    Runs in double precision with dropout disabled on a tiny random batch.
    """
    if model_cfg_small is None:
        model_cfg_small = ModelConfig(
            backbone="transformer",
            d_model=8,
            n_heads=2,
            n_blocks=1,
            ff_dim=8,
            lstm_layers=1,
            max_len_text=12,
            max_len_asr=24,
        )
    if model_cfg_small.d_model > 8:
        raise ValueError("grad_check expects d_model <= 8")
    rng = np.random.default_rng(seed)
    letters = [chr(c) for c in range(0x0628, 0x0630)]
    corpus = []
    from .text import LABEL_TO_MARKS as _marks

    vowels = ["َ", "ُ", "ِ", "ْ"]
    for _ in range(2):
        n = int(rng.integers(4, 7))
        base = "".join(letters[rng.integers(len(letters))] for _ in range(n))
        gold = "".join(c + vowels[rng.integers(4)] for c in base)
        corpus.append((base, gold, gold))
    vocab = build_vocab(corpus)
    model = Model(model_cfg_small, vocab, seed=seed, dtype=np.float64)
    batch = encode_batch(corpus, vocab, model_cfg_small)

    def compute_loss(p=None):
        probs, _ = model.forward_graph(batch, train_mode=False, p=p)
        return loss(probs, batch.label_ids, batch.loss_mask)

    p = model.param_tensors()
    analytic = compute_loss(p)
    analytic.backward()
    worst = 0.0
    for name, t in p.items():
        ga = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat = model.params[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            lp = float(compute_loss().data)
            flat[k] = orig - eps
            lm = float(compute_loss().data)
            flat[k] = orig
            gn = (lp - lm) / (2.0 * eps)
            gak = ga.reshape(-1)[k]
            # Floor the denominator at the finite-difference noise scale so
            # near-zero gradients do not inflate the relative error.
            denom = max(1e-5, abs(gak) + abs(gn))
            worst = max(worst, abs(gak - gn) / denom)
    return worst


# ---------------------------------------------------------------------------
# Checkpoints

MAGIC = b"HRKT"
FORMAT_VERSION = 1


def save_checkpoint(model: Model, path) -> None:
    """Versioned binary container; arrays as shape-prefixed little-endian f32."""
    names = sorted(model.params)
    header = {
        "config": model.cfg.to_dict(),
        "vocab": model.vocab.to_dict(),
        "vocab_sha256": model.vocab.digest(),
        "history": model.history,
        "params": [[n, list(model.params[n].shape)] for n in names],
    }
    blob = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for n in names:
            arr = np.ascontiguousarray(model.params[n], dtype="<f4")
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            f.write(arr.tobytes())


def load_checkpoint(path) -> Model:
    with open(path, "rb") as f:
        data = f.read()
    buf = io.BytesIO(data)

    def need(n: int) -> bytes:
        chunk = buf.read(n)
        if len(chunk) != n:
            raise CorruptFile(f"checkpoint truncated: wanted {n} more bytes")
        return chunk

    if need(4) != MAGIC:
        raise CorruptFile("bad magic bytes")
    (version,) = struct.unpack("<I", need(4))
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format version {version} != {FORMAT_VERSION}")
    (hlen,) = struct.unpack("<Q", need(8))
    try:
        header = json.loads(need(hlen).decode("utf-8"))
        cfg = ModelConfig.from_dict(header["config"])
        vocab = Vocabulary.from_dict(header["vocab"])
    except (ValueError, KeyError, TypeError) as e:
        raise CorruptFile(f"unreadable header: {e}") from e
    if header.get("vocab_sha256") != vocab.digest():
        raise CorruptFile("vocabulary hash mismatch")
    expected = param_shapes(cfg, vocab)
    params: dict[str, np.ndarray] = {}
    for name, shape in header["params"]:
        shape = tuple(shape)
        if name not in expected or expected[name] != shape:
            raise ShapeMismatch(f"unexpected parameter {name} with shape {shape}")
        (ndim,) = struct.unpack("<I", need(4))
        dims = struct.unpack(f"<{ndim}Q", need(8 * ndim))
        if dims != shape:
            raise ShapeMismatch(f"stored shape {dims} != declared {shape} for {name}")
        size = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(need(4 * size), dtype="<f4").reshape(dims)
        params[name] = arr.astype(np.float32)
    missing = set(expected) - set(params)
    if missing:
        raise ShapeMismatch(f"missing parameters: {sorted(missing)[:3]}...")
    if buf.read(1):
        raise CorruptFile("trailing bytes after parameter payload")
    return Model(
        cfg, vocab, params=params, history=header.get("history", [])
    )

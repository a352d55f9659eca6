"""Command-line surface: train, predict, evaluate, corrupt, gen-toy,
grad-check, export-attention.

Every run takes its parameters from flags plus an optional JSON config file
(flags win), seeds are always explicit, and every output artifact gets a
manifest recording the effective config and input hashes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_io
from .asr_sim import NoiseConfig, ToyCorpusConfig, corrupt, generate_toy_corpus
from .corpus import MissingAsrColumn
from .inference import (
    InferenceConfig,
    export_attention,
    sliding_window_predict,
)
from .metrics import BaseMismatch, DerReport, EditStats, cer, der_counts, wer
from .metrics import DerEntry
from .model import (
    ModelConfig,
    TrainConfig,
    grad_check,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .text import apply_labels, strip_diacritics


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _merge(args: argparse.Namespace, file_cfg: dict, defaults: dict) -> dict:
    """Effective config: built-in defaults < config file < explicit flags."""
    eff = dict(defaults)
    for k, v in file_cfg.items():
        if k in eff:
            eff[k] = v
    for k in eff:
        v = getattr(args, k, None)
        if v is not None:
            eff[k] = v
    return eff


def _model_flags(p: argparse.ArgumentParser):
    p.add_argument("--backbone", choices=["transformer", "lstm"])
    p.add_argument("--d-model", dest="d_model", type=int)
    p.add_argument("--n-heads", dest="n_heads", type=int)
    p.add_argument("--n-blocks", dest="n_blocks", type=int)
    p.add_argument("--ff-dim", dest="ff_dim", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--lstm-layers", dest="lstm_layers", type=int)
    p.add_argument("--max-len-text", dest="max_len_text", type=int)
    p.add_argument("--max-len-asr", dest="max_len_asr", type=int)
    p.add_argument(
        "--text-only",
        dest="multimodal",
        action="store_const",
        const=False,
        help="train a Text-Only model (ignore the ASR column)",
    )
    p.add_argument(
        "--no-concat",
        dest="fuse_concat",
        action="store_const",
        const=False,
        help="feed the classifier from cross-attention output alone",
    )


_MODEL_DEFAULTS = {
    "backbone": "transformer",
    "d_model": 128,
    "n_heads": 4,
    "n_blocks": 2,
    "ff_dim": 128,
    "dropout": None,
    "lstm_layers": 2,
    "max_len_text": 200,
    "max_len_asr": None,
    "multimodal": True,
    "fuse_concat": True,
}


def _cmd_train(args) -> int:
    file_cfg = _load_config_file(args.config)
    mc_dict = _merge(args, file_cfg, _MODEL_DEFAULTS)
    tc_dict = _merge(
        args, file_cfg, {"epochs": 20, "batch_size": 32, "lr": 1e-3, "seed": 0}
    )
    model_cfg = ModelConfig(**mc_dict)
    train_cfg = TrainConfig(**tc_dict)
    train_set = corpus_io.read_labeled_tsv(args.train)
    dev_set = corpus_io.read_labeled_tsv(args.dev)
    if model_cfg.multimodal:
        for name, rows in (("train", train_set), ("dev", dev_set)):
            if any(asr is None for _, asr, _ in rows):
                raise MissingAsrColumn(
                    f"{name} file lacks an ASR column but the model is multimodal"
                )
    model, history = train(
        train_set, dev_set, model_cfg, train_cfg, verbose=args.verbose
    )
    save_checkpoint(model, args.out)
    if args.history:
        Path(args.history).write_text(
            json.dumps(history, indent=2) + "\n", encoding="utf-8"
        )
    corpus_io.write_manifest(
        args.out,
        "train",
        {"model": model_cfg.to_dict(), "train": train_cfg.to_dict()},
        [args.train, args.dev],
    )
    best = min(history, key=lambda h: h["dev_der_incl_ce"])
    print(
        f"trained {len(history)} epochs; best dev DER "
        f"{100 * best['dev_der_incl_ce']:.2f}% at epoch {best['epoch']}"
    )
    return 0


def _cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    inf_cfg = InferenceConfig(window=args.window, buffer=args.buffer)
    rows = corpus_io.read_input_tsv(args.input)
    with open(args.output, "w", encoding="utf-8") as f:
        for raw, asr in rows:
            lt = sliding_window_predict(model, raw, asr, inf_cfg)
            f.write(apply_labels(lt) + "\n")
    corpus_io.write_manifest(
        args.output,
        "predict",
        {"window": inf_cfg.window, "buffer": inf_cfg.buffer},
        [args.checkpoint, args.input],
    )
    return 0


def evaluate_files(pred_path, gold_path, per_line: bool = False) -> dict:
    """Pooled-count metrics report for line-aligned prediction/gold files."""
    with open(pred_path, encoding="utf-8") as f:
        pred_lines = [l.rstrip("\n") for l in f if l.rstrip("\n")]
    gold_rows = corpus_io.read_labeled_tsv(gold_path)
    if len(pred_lines) != len(gold_rows):
        raise ValueError(
            f"line count mismatch: {len(pred_lines)} predictions "
            f"vs {len(gold_rows)} gold lines"
        )
    totals = [[0, 0] for _ in range(4)]
    lines_report = []
    edit_totals = {"cer": [0, 0, 0, 0], "wer": [0, 0, 0, 0]}
    has_asr = all(asr is not None for _, asr, _ in gold_rows) and gold_rows
    for i, (pred_line, (raw, asr, gold)) in enumerate(
        zip(pred_lines, gold_rows), start=1
    ):
        pred_lt = strip_diacritics(pred_line)
        gold_lt = strip_diacritics(gold)
        try:
            counts = der_counts(pred_lt, gold_lt)
        except BaseMismatch as e:
            raise BaseMismatch(f"line {i}: {e}") from e
        for k, (e_, t_) in enumerate(counts):
            totals[k][0] += e_
            totals[k][1] += t_
        if per_line:
            lines_report.append(
                {
                    "line": i,
                    **DerReport(*(DerEntry(e_, t_) for e_, t_ in counts)).as_dict(),
                }
            )
        if has_asr:
            for key, stats in (("cer", cer(asr, gold)), ("wer", wer(asr, gold))):
                agg = edit_totals[key]
                agg[0] += stats.substitutions
                agg[1] += stats.insertions
                agg[2] += stats.deletions
                agg[3] += stats.reference_length
    report = DerReport(*(DerEntry(e_, t_) for e_, t_ in totals)).as_dict()
    if has_asr:
        for key in ("cer", "wer"):
            s, ins, d, n = edit_totals[key]
            report[key] = EditStats(s, ins, d, n).as_dict()
    if per_line:
        report["lines"] = lines_report
    return report


def _cmd_evaluate(args) -> int:
    report = evaluate_files(args.pred, args.gold, per_line=args.per_line)
    blob = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(blob, encoding="utf-8")
        corpus_io.write_manifest(
            args.out, "evaluate", {"per_line": args.per_line}, [args.pred, args.gold]
        )
    else:
        sys.stdout.write(blob)
    return 0


def _cmd_corrupt(args) -> int:
    noise = NoiseConfig(
        p_sub=args.p_sub,
        p_del=args.p_del,
        p_ins=args.p_ins,
        class_preserving=not args.no_class_preserving,
        seed=args.seed,
    )
    rows = []
    with open(args.input, encoding="utf-8") as f:
        golds = [l.rstrip("\n") for l in f if l.rstrip("\n")]
    for i, gold in enumerate(golds):
        line_noise = NoiseConfig(
            p_sub=noise.p_sub,
            p_del=noise.p_del,
            p_ins=noise.p_ins,
            class_preserving=noise.class_preserving,
            seed=int(
                np.random.SeedSequence([args.seed, i]).generate_state(1)[0]
            ),
        )
        hyp, _ = corrupt(gold, line_noise)
        rows.append((strip_diacritics(gold).base, hyp, gold))
    corpus_io.write_tsv(args.output, rows)
    corpus_io.write_manifest(
        args.output,
        "corrupt",
        {
            "p_sub": noise.p_sub,
            "p_del": noise.p_del,
            "p_ins": noise.p_ins,
            "class_preserving": noise.class_preserving,
            "seed": args.seed,
        },
        [args.input],
    )
    return 0


def _cmd_gen_toy(args) -> int:
    cfg = ToyCorpusConfig(
        lexicon_size=args.lexicon_size,
        ambiguity_fraction=args.ambiguity,
        sentence_length=args.sentence_length,
        n_train=args.n_train,
        n_dev=args.n_dev,
        n_test=args.n_test,
        seed=args.seed,
    )
    toy = generate_toy_corpus(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, split, split_id in (
        ("train", toy.train, 1),
        ("dev", toy.dev, 2),
        ("test", toy.test, 3),
    ):
        rows = []
        for i, (raw, gold) in enumerate(split):
            line_noise = NoiseConfig(
                p_sub=args.p_sub,
                p_del=args.p_del,
                p_ins=args.p_ins,
                seed=int(
                    np.random.SeedSequence(
                        [args.seed, 10 + split_id, i]
                    ).generate_state(1)[0]
                ),
            )
            hyp, _ = corrupt(gold, line_noise)
            rows.append((raw, hyp, gold))
        corpus_io.write_tsv(out_dir / f"{name}.tsv", rows)
    corpus_io.write_manifest(
        out_dir / "corpus",
        "gen-toy",
        {
            **{k: getattr(cfg, k) for k in (
                "lexicon_size",
                "ambiguity_fraction",
                "sentence_length",
                "n_train",
                "n_dev",
                "n_test",
                "seed",
            )},
            "noise": {"p_sub": args.p_sub, "p_del": args.p_del, "p_ins": args.p_ins},
        },
        [out_dir / "train.tsv", out_dir / "dev.tsv", out_dir / "test.tsv"],
    )
    return 0


def _cmd_grad_check(args) -> int:
    if args.backbone == "lstm":
        cfg = ModelConfig(
            backbone="lstm",
            d_model=4,
            n_heads=2,
            n_blocks=1,
            ff_dim=4,
            lstm_layers=2,
            max_len_text=12,
            max_len_asr=24,
            multimodal=args.multimodal if args.multimodal is not None else True,
            fuse_concat=args.fuse_concat if args.fuse_concat is not None else True,
        )
    else:
        cfg = ModelConfig(
            backbone="transformer",
            d_model=8,
            n_heads=2,
            n_blocks=1,
            ff_dim=8,
            max_len_text=12,
            max_len_asr=24,
            multimodal=args.multimodal if args.multimodal is not None else True,
            fuse_concat=args.fuse_concat if args.fuse_concat is not None else True,
        )
    err = grad_check(cfg, eps=args.eps, seed=args.seed)
    ok = err < 1e-4
    print(f"{args.backbone}: max relative gradient error {err:.3e} "
          f"({'PASS' if ok else 'FAIL'} at 1e-4)")
    return 0 if ok else 1


def _cmd_export_attention(args) -> int:
    model = load_checkpoint(args.checkpoint)
    export_attention(model, args.raw, args.asr, args.out)
    corpus_io.write_manifest(
        args.out, "export-attention", {"raw": args.raw, "asr": args.asr},
        [args.checkpoint],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harakat",
        description="Arabic diacritic restoration with text+ASR fusion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a TSV corpus")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--history")
    p.add_argument("--config", help="JSON config file; flags override")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--verbose", action="store_true")
    _model_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="diacritize raw (or raw+asr) lines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--buffer", type=int, default=25)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out")
    p.add_argument("--per-line", dest="per_line", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("corrupt", help="synthesize ASR hypotheses from gold text")
    p.add_argument("--input", required=True, help="gold-only file, one line each")
    p.add_argument("--output", required=True)
    p.add_argument("--p-sub", dest="p_sub", type=float, default=0.0)
    p.add_argument("--p-del", dest="p_del", type=float, default=0.0)
    p.add_argument("--p-ins", dest="p_ins", type=float, default=0.0)
    p.add_argument("--no-class-preserving", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("gen-toy", help="generate the ambiguous toy corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--lexicon-size", dest="lexicon_size", type=int, default=40)
    p.add_argument("--ambiguity", type=float, default=0.5)
    p.add_argument("--sentence-length", dest="sentence_length", type=int, default=8)
    p.add_argument("--n-train", dest="n_train", type=int, default=2000)
    p.add_argument("--n-dev", dest="n_dev", type=int, default=200)
    p.add_argument("--n-test", dest="n_test", type=int, default=200)
    p.add_argument("--p-sub", dest="p_sub", type=float, default=0.0)
    p.add_argument("--p-del", dest="p_del", type=float, default=0.0)
    p.add_argument("--p-ins", dest="p_ins", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_toy)

    p = sub.add_parser("grad-check", help="finite-difference gradient check")
    p.add_argument("--backbone", choices=["transformer", "lstm"],
                   default="transformer")
    p.add_argument("--text-only", dest="multimodal", action="store_const",
                   const=False)
    p.add_argument("--no-concat", dest="fuse_concat", action="store_const",
                   const=False)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_grad_check, multimodal=None, fuse_concat=None)

    p = sub.add_parser("export-attention", help="dump cross-attention weights")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--raw", required=True)
    p.add_argument("--asr", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_attention)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

"""harakat: Arabic diacritic restoration with text + ASR-hypothesis fusion.

A per-character 15-way diacritic classifier over an undiacritized text
encoder, optionally fused with a provisional diacritized ASR hypothesis via
cross-attention.  Pure numpy, deterministic end to end.
"""

from .asr_sim import (
    LexiconEntry,
    NoiseConfig,
    ToyCorpus,
    ToyCorpusConfig,
    bayes_floor_der,
    corrupt,
    generate_toy_corpus,
)
from .corpus import (
    MalformedLine,
    MissingAsrColumn,
    read_input_tsv,
    read_labeled_tsv,
    write_manifest,
    write_tsv,
)
from .inference import (
    Chunk,
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
from .metrics import (
    BaseMismatch,
    DerEntry,
    DerReport,
    EditStats,
    cer,
    der,
    der_counts,
    pooled_der,
    wer,
)
from .model import (
    AllMasked,
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
    grad_check,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .text import (
    ARABIC_LETTERS,
    DIACRITIC_CHARS,
    DanglingDiacritic,
    DiacriticLabel,
    IllegalCombination,
    LabeledText,
    apply_labels,
    canonicalize,
    case_ending_positions,
    strip_diacritics,
    validate_diacritized,
    word_spans,
)

__version__ = "0.1.0"

__all__ = [
    "ARABIC_LETTERS",
    "AllMasked",
    "BaseMismatch",
    "Chunk",
    "CorruptFile",
    "DIACRITIC_CHARS",
    "DanglingDiacritic",
    "DerEntry",
    "DerReport",
    "DiacriticLabel",
    "EditStats",
    "EmptyCorpus",
    "IllegalCombination",
    "InferenceConfig",
    "LabeledText",
    "LengthMismatch",
    "LexiconEntry",
    "MalformedLine",
    "MissingAsrColumn",
    "MissingAsrInput",
    "Model",
    "ModelConfig",
    "NoiseConfig",
    "NotMultimodal",
    "ShapeMismatch",
    "TooLong",
    "ToyCorpus",
    "ToyCorpusConfig",
    "TrainConfig",
    "VersionMismatch",
    "Vocabulary",
    "apply_labels",
    "bayes_floor_der",
    "build_vocab",
    "canonicalize",
    "case_ending_positions",
    "cer",
    "corrupt",
    "der",
    "der_counts",
    "encode_batch",
    "export_attention",
    "generate_toy_corpus",
    "grad_check",
    "load_checkpoint",
    "pooled_der",
    "predict_direct",
    "predict_truncated",
    "read_input_tsv",
    "read_labeled_tsv",
    "save_checkpoint",
    "sliding_window_predict",
    "strip_diacritics",
    "train",
    "validate_diacritized",
    "wer",
    "window_plan",
    "word_spans",
    "write_manifest",
    "write_tsv",
]

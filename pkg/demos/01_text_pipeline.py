"""
Diacritics as per-character labels
==================================

Walk through the core text pipeline: split a fully diacritized sentence
into (base characters, labels), re-render it, validate malformed input,
and score a deliberately wrong prediction with all four DER variants.
"""

from harakat import (
    DiacriticLabel,
    LabeledText,
    apply_labels,
    canonicalize,
    cer,
    der,
    strip_diacritics,
    validate_diacritized,
    wer,
)

# A short Classical Arabic sentence, fully diacritized.
gold = "كَتَبَ الوَلَدُ الدَّرْسَ"
lt = strip_diacritics(gold)

print("gold:     ", gold)
print("base:     ", lt.base)
print("labels:   ", [l.name for l in lt.labels])
print("words:    ", lt.words)
print("restored: ", apply_labels(lt))
# Re-rendering is identical up to canonical mark order (shadda first,
# duplicates collapsed), so canonicalize is idempotent.
assert apply_labels(lt) == canonicalize(gold)
assert canonicalize(canonicalize(gold)) == canonicalize(gold)

# Validation is total: it reports violations instead of raising.
bad = "َكتب"  # the sentence starts with a dangling fatha
for v in validate_diacritized(bad):
    print(f"violation: {v.kind} at index {v.position}")

# Score a prediction that gets one inner vowel wrong.
pred_labels = list(lt.labels)
pred_labels[1] = DiacriticLabel.DAMMA  # gold has FATHA here
pred = LabeledText(base=lt.base, labels=tuple(pred_labels))
report = der(pred, lt)
print("\nDER variants (errors/total -> percent):")
for key, entry in report.as_dict().items():
    print(f"  {key:15s} {entry['errors']}/{entry['total']} -> {entry['percent']}%")

# Edit-distance scoring of a noisy transcript against the gold string.
noisy = gold.replace("الوَلَدُ", "الوَلَدِ")
print("\nCER:", cer(noisy, gold).as_dict())
print("WER:", wer(noisy, gold).as_dict())

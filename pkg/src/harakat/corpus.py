"""TSV corpus reading/writing and run manifests.

Line format: `raw TAB asr TAB gold` (one utterance per line, UTF-8).  A
single-column file is treated as gold-only (raw derived by stripping); two
columns are `raw TAB gold`.  TAB and newline are forbidden inside fields, so
files are bit-exact and diff-friendly.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from pathlib import Path

from .text import strip_diacritics, validate_diacritized


class MalformedLine(ValueError):
    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class MissingAsrColumn(ValueError):
    pass


def parse_line(path, line_no: int, line: str) -> tuple[str, str | None, str]:
    """One TSV line -> (raw, asr or None, gold)."""
    fields = line.split("\t")
    if len(fields) == 1:
        gold = fields[0]
        violations = validate_diacritized(gold)
        if violations:
            raise MalformedLine(path, line_no, f"invalid gold text: {violations}")
        return strip_diacritics(gold).base, None, gold
    if len(fields) == 2:
        raw, gold = fields
        asr = None
    elif len(fields) == 3:
        raw, asr, gold = fields
    else:
        raise MalformedLine(path, line_no, f"expected 1-3 columns, got {len(fields)}")
    violations = validate_diacritized(gold)
    if violations:
        raise MalformedLine(path, line_no, f"invalid gold text: {violations}")
    if strip_diacritics(gold).base != raw:
        raise MalformedLine(path, line_no, "raw column does not match stripped gold")
    return raw, asr, gold


def read_labeled_tsv(path) -> list[tuple[str, str | None, str]]:
    """Read (raw, asr, gold) training/evaluation lines."""
    out = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            out.append(parse_line(path, i, line))
    return out


def read_input_tsv(path) -> list[tuple[str, str | None]]:
    """Read prediction inputs: `raw` or `raw TAB asr` lines."""
    out = []
    with open(path, encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) == 1:
                out.append((fields[0], None))
            elif len(fields) == 2:
                out.append((fields[0], fields[1]))
            else:
                raise MalformedLine(path, i, f"expected 1-2 columns, got {len(fields)}")
    return out


def write_tsv(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            for field in row:
                if "\t" in field or "\n" in field:
                    raise ValueError("TAB/newline forbidden inside TSV fields")
            f.write("\t".join(row) + "\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(out_path, command: str, config: dict, inputs: list) -> None:
    """Reproducibility record next to each output artifact.

    Wall-clock data lives in its own section so manifests from identical runs
    differ only there.
    """
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "timestamps": {
            "written": datetime.datetime.now(datetime.timezone.utc).isoformat()
        },
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )

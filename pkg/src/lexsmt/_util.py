"""Small shared helpers."""

from __future__ import annotations

from pathlib import Path


def read_text_rows(path):
    """Yield (lineno, line) for non-blank, non-comment lines of a UTF-8 file."""
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def fmt(x: float) -> str:
    """Deterministic shortest round-trip float formatting."""
    return repr(float(x))

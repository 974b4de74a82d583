"""Parallel corpus ingestion, cleaning and serialization.

A corpus is an ordered list of sentence pairs. Pairs come from two
line-aligned UTF-8 text files (line i of the source file translates
line i of the target file). Cleaning applies manual-correction patches
first, then automated filters (empty side, overlong side, token-count
ratio), re-indexing the survivors.
"""

from __future__ import annotations

import json
import string
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ContractError, CorpusAlignmentError, CorpusEncodingError, PatchError

DANDA = "।"
DOUBLE_DANDA = "॥"

# Characters split off into standalone tokens: ASCII punctuation (which
# includes '|') plus the Devanagari danda marks.
_SPLIT_CHARS = frozenset(string.punctuation) | {DANDA, DOUBLE_DANDA}

DEFAULT_MAX_LEN = 80
DEFAULT_MAX_RATIO = 3.0


def normalize(text: str) -> str:
    """NFC-normalize a string (Devanagari has multiple compositions)."""
    return unicodedata.normalize("NFC", text)


def tokenize(text: str) -> list[str]:
    """Split a sentence into tokens.

    Splits on Unicode whitespace, then separates punctuation (ASCII
    punctuation, '|', danda) from adjacent word characters. A maximal
    run of one repeated punctuation character stays a single token, so
    "घर।" becomes ["घर", "।"] and "|UNK|" becomes ["|", "UNK", "|"].
    """
    tokens = []
    for chunk in normalize(text).split():
        word = []
        i = 0
        n = len(chunk)
        while i < n:
            ch = chunk[i]
            if ch in _SPLIT_CHARS:
                if word:
                    tokens.append("".join(word))
                    word = []
                j = i
                while j < n and chunk[j] == ch:
                    j += 1
                tokens.append(chunk[i:j])
                i = j
            else:
                word.append(ch)
                i += 1
        if word:
            tokens.append("".join(word))
    return tokens


@dataclass(frozen=True)
class SentencePair:
    """One aligned sentence pair; token lists are never mutated in place."""

    id: int
    source: tuple[str, ...]
    target: tuple[str, ...]
    origin: str = ""

    def swapped(self) -> "SentencePair":
        return SentencePair(self.id, self.target, self.source, self.origin)


@dataclass
class ParallelCorpus:
    pairs: list[SentencePair]
    name: str = ""
    langpair: str = ""

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def swapped(self) -> "ParallelCorpus":
        """Corpus with source and target sides exchanged."""
        lp = "-".join(reversed(self.langpair.split("-"))) if self.langpair else ""
        return ParallelCorpus([p.swapped() for p in self.pairs], self.name, lp)

    def source_sentences(self) -> list[tuple[str, ...]]:
        return [p.source for p in self.pairs]

    def target_sentences(self) -> list[tuple[str, ...]]:
        return [p.target for p in self.pairs]


@dataclass
class PatchSet:
    """Manual corrections keyed by pair id.

    Each entry optionally replaces the source and/or target sentence of
    the pair with that id. Replacement strings are tokenized the same
    way as corpus text.
    """

    entries: dict[int, dict[str, str]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class CleanReport:
    kept: int = 0
    dropped_empty: int = 0
    dropped_ratio: int = 0
    dropped_length: int = 0
    patched: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_empty + self.dropped_ratio + self.dropped_length

    def to_dict(self) -> dict:
        return {
            "kept": self.kept,
            "dropped_empty": self.dropped_empty,
            "dropped_ratio": self.dropped_ratio,
            "dropped_length": self.dropped_length,
            "patched": self.patched,
        }


def _read_lines(path) -> list[str]:
    """Read a UTF-8 text file, reporting the line number of any bad byte."""
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    out = []
    for lineno, line in enumerate(lines, start=1):
        if line.endswith(b"\r"):
            line = line[:-1]
        try:
            out.append(line.decode("utf-8"))
        except UnicodeDecodeError:
            raise CorpusEncodingError(str(path), lineno) from None
    return out


def ingest_parallel(source_file, target_file, origin: str = "") -> ParallelCorpus:
    """Pair up two line-aligned files into a corpus.

    Raises CorpusAlignmentError when the files disagree on line count
    and CorpusEncodingError on invalid UTF-8.
    """
    src_lines = _read_lines(source_file)
    tgt_lines = _read_lines(target_file)
    if len(src_lines) != len(tgt_lines):
        raise CorpusAlignmentError(len(src_lines), len(tgt_lines))
    pairs = [
        SentencePair(i, tuple(tokenize(s)), tuple(tokenize(t)), origin)
        for i, (s, t) in enumerate(zip(src_lines, tgt_lines))
    ]
    return ParallelCorpus(pairs, name=str(Path(source_file).stem), langpair="")


def load_manifest(manifest_file) -> ParallelCorpus:
    """Load and concatenate the corpora listed in a manifest.

    The manifest is a TSV with columns origin, source_path, target_path;
    relative paths resolve against the manifest's directory. Pair ids
    run 0..N-1 over the combined corpus.
    """
    base = Path(manifest_file).parent
    pairs = []
    for lineno, line in enumerate(_read_lines(manifest_file), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ContractError(
                f"{manifest_file}: line {lineno}: expected 3 tab-separated "
                f"columns, got {len(cols)}"
            )
        origin, src_path, tgt_path = (c.strip() for c in cols)
        part = ingest_parallel(base / src_path, base / tgt_path, origin)
        for p in part.pairs:
            pairs.append(SentencePair(len(pairs), p.source, p.target, origin))
    return ParallelCorpus(pairs, name=str(Path(manifest_file).stem))


def load_patches(patch_file) -> PatchSet:
    """Load a patch TSV with columns id, side (src|tgt), replacement."""
    patches = PatchSet()
    for lineno, line in enumerate(_read_lines(patch_file), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ContractError(
                f"{patch_file}: line {lineno}: expected 3 tab-separated columns"
            )
        pair_id, side, replacement = cols
        side = side.strip()
        if side not in ("src", "tgt"):
            raise ContractError(
                f"{patch_file}: line {lineno}: side must be 'src' or 'tgt'"
            )
        patches.entries.setdefault(int(pair_id), {})[side] = replacement
    return patches


def clean_corpus(
    corpus: ParallelCorpus,
    patches: PatchSet | None = None,
    max_len: int = DEFAULT_MAX_LEN,
    max_ratio: float = DEFAULT_MAX_RATIO,
) -> tuple[ParallelCorpus, CleanReport]:
    """Apply patches, then drop empty / overlong / length-ratio outlier pairs.

    Survivors are re-indexed 0..k-1 with order preserved. Report counts
    sum exactly to the input size; a pair failing several filters is
    counted once, in the order empty, length, ratio.
    """
    if max_len <= 0 or max_ratio <= 0:
        raise ContractError("cleaning thresholds must be positive")
    patches = patches or PatchSet()
    unmatched = set(patches.entries) - {p.id for p in corpus.pairs}
    if unmatched:
        raise PatchError(unmatched)

    report = CleanReport()
    kept = []
    for pair in corpus.pairs:
        source, target = pair.source, pair.target
        patch = patches.entries.get(pair.id)
        if patch:
            if "src" in patch:
                source = tuple(tokenize(patch["src"]))
            if "tgt" in patch:
                target = tuple(tokenize(patch["tgt"]))
            report.patched += 1
        ls, lt = len(source), len(target)
        if ls == 0 or lt == 0:
            report.dropped_empty += 1
            continue
        if ls > max_len or lt > max_len:
            report.dropped_length += 1
            continue
        if max(ls, lt) / min(ls, lt) > max_ratio:
            report.dropped_ratio += 1
            continue
        kept.append(SentencePair(len(kept), source, target, pair.origin))
    report.kept = len(kept)
    return ParallelCorpus(kept, corpus.name, corpus.langpair), report


def partition_corpus(
    corpus: ParallelCorpus, tune_size: int = 0, test_size: int = 0
) -> tuple[ParallelCorpus, ParallelCorpus, ParallelCorpus]:
    """Order-preserving train/tune/test split off the corpus tail.

    The last test_size pairs become the test set, the tune_size pairs
    before them the tuning set; each partition is re-indexed from 0.
    """
    if tune_size < 0 or test_size < 0:
        raise ContractError("partition sizes must be >= 0")
    if tune_size + test_size > len(corpus):
        raise ContractError(
            f"cannot split {tune_size}+{test_size} pairs off a corpus of {len(corpus)}"
        )
    cut_test = len(corpus) - test_size
    cut_tune = cut_test - tune_size

    def part(pairs, suffix):
        reindexed = [
            SentencePair(k, p.source, p.target, p.origin)
            for k, p in enumerate(pairs)
        ]
        name = f"{corpus.name}-{suffix}" if corpus.name else suffix
        return ParallelCorpus(reindexed, name, corpus.langpair)

    return (
        part(corpus.pairs[:cut_tune], "train"),
        part(corpus.pairs[cut_tune:cut_test], "tune"),
        part(corpus.pairs[cut_test:], "test"),
    )


def save_corpus(corpus: ParallelCorpus, out_dir) -> None:
    """Write source.txt, target.txt, origins.txt and meta.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "source.txt", "w", encoding="utf-8") as f:
        for p in corpus.pairs:
            f.write(" ".join(p.source) + "\n")
    with open(out / "target.txt", "w", encoding="utf-8") as f:
        for p in corpus.pairs:
            f.write(" ".join(p.target) + "\n")
    with open(out / "origins.txt", "w", encoding="utf-8") as f:
        for p in corpus.pairs:
            f.write(p.origin + "\n")
    meta = {"name": corpus.name, "langpair": corpus.langpair, "pairs": len(corpus)}
    with open(out / "meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, ensure_ascii=False, sort_keys=True)
        f.write("\n")


def load_corpus(corpus_dir) -> ParallelCorpus:
    """Load a corpus directory written by save_corpus."""
    d = Path(corpus_dir)
    corpus = ingest_parallel(d / "source.txt", d / "target.txt")
    origins_file = d / "origins.txt"
    if origins_file.exists():
        origins = _read_lines(origins_file)
        corpus.pairs = [
            SentencePair(p.id, p.source, p.target, origins[i])
            for i, p in enumerate(corpus.pairs)
        ]
    meta_file = d / "meta.json"
    if meta_file.exists():
        meta = json.loads(meta_file.read_text(encoding="utf-8"))
        corpus.name = meta.get("name", "")
        corpus.langpair = meta.get("langpair", "")
    return corpus

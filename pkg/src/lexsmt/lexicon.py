"""Lexical resources: synset rows, word/kridanta pairs, verb phrases.

Resources load into a flat ResourceSet of parallel entries which are
appended to a training corpus as ordinary sentence pairs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .corpus import ParallelCorpus, SentencePair, tokenize
from .errors import ResourceFormatError
from ._util import read_text_rows

CATEGORIES = (
    "synset",
    "function_word",
    "kridanta",
    "akhyat",
    "suffix_pair",
    "verb_phrase",
)


@dataclass(frozen=True)
class SynsetRow:
    """One source expression mapped to the member expressions of its synset."""

    source_expr: tuple[str, ...]
    target_exprs: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class PairEntry:
    source_expr: tuple[str, ...]
    target_expr: tuple[str, ...]
    category: str


@dataclass
class ResourceSet:
    """Deduplicated bag of parallel entries with per-category counts."""

    entries: list[PairEntry] = field(default_factory=list)
    _seen: set = field(default_factory=set, repr=False)

    def add(self, entry: PairEntry) -> bool:
        key = (entry.source_expr, entry.target_expr)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.entries.append(entry)
        return True

    def extend(self, entries) -> "ResourceSet":
        for e in entries:
            self.add(e)
        return self

    def merge(self, other: "ResourceSet") -> "ResourceSet":
        return self.extend(other.entries)

    def counts(self) -> dict[str, int]:
        return dict(Counter(e.category for e in self.entries))

    def contains_pair(self, a: tuple[str, ...], b: tuple[str, ...]) -> bool:
        return (a, b) in self._seen or (b, a) in self._seen

    def flipped(self) -> "ResourceSet":
        """Entries with source and target expressions exchanged."""
        out = ResourceSet()
        for e in self.entries:
            out.add(PairEntry(e.target_expr, e.source_expr, e.category))
        return out

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def expand_synset_row(row: SynsetRow) -> list[PairEntry]:
    """One entry per distinct target expression, source side repeated."""
    if not row.target_exprs:
        raise ResourceFormatError("synset row has no target expressions")
    entries = []
    seen = set()
    for target in row.target_exprs:
        if target in seen:
            continue
        seen.add(target)
        entries.append(PairEntry(row.source_expr, target, "synset"))
    return entries


def load_synsets(path) -> list[SynsetRow]:
    """Load synset rows: source_expr<TAB>target1<TAB>target2..."""
    rows = []
    for lineno, line in read_text_rows(path):
        cols = line.split("\t")
        if len(cols) < 2:
            raise ResourceFormatError(
                f"{path}: line {lineno}: expected source and at least one target"
            )
        source = tuple(tokenize(cols[0]))
        targets = tuple(tuple(tokenize(c)) for c in cols[1:] if c.strip())
        if not source or not targets:
            raise ResourceFormatError(f"{path}: line {lineno}: empty expression")
        rows.append(SynsetRow(source, targets))
    return rows


def expand_synsets(rows) -> ResourceSet:
    resources = ResourceSet()
    for row in rows:
        resources.extend(expand_synset_row(row))
    return resources


def synonym_set(rows) -> ResourceSet:
    """Pair up co-members of each synset row for synonym matching.

    Treats the row head and every member as mutual synonyms, which is
    how a monolingual synonym file feeds METEOR.
    """
    resources = ResourceSet()
    for row in rows:
        members = [row.source_expr, *row.target_exprs]
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                if members[i] != members[j]:
                    resources.add(PairEntry(members[i], members[j], "synset"))
    return resources


def load_pair_resource(path, category: str) -> ResourceSet:
    """Load a TSV of source<TAB>target entries under one category tag."""
    if category not in CATEGORIES:
        raise ResourceFormatError(f"unknown resource category {category!r}")
    resources = ResourceSet()
    for lineno, line in read_text_rows(path):
        cols = line.split("\t")
        if len(cols) != 2:
            raise ResourceFormatError(
                f"{path}: line {lineno}: expected source<TAB>target"
            )
        source = tuple(tokenize(cols[0]))
        target = tuple(tokenize(cols[1]))
        if not source or not target:
            raise ResourceFormatError(f"{path}: line {lineno}: empty side")
        resources.add(PairEntry(source, target, category))
    return resources


def augment_corpus(
    corpus: ParallelCorpus, resources: ResourceSet, repeat: int = 1
) -> ParallelCorpus:
    """Append one sentence pair per resource entry after the original pairs.

    Original pairs are preserved verbatim and in order. `repeat` controls
    how many copies of each entry enter training (default 1).
    """
    pairs = list(corpus.pairs)
    for _ in range(repeat):
        for entry in resources:
            pairs.append(
                SentencePair(
                    len(pairs), entry.source_expr, entry.target_expr, entry.category
                )
            )
    return ParallelCorpus(pairs, corpus.name, corpus.langpair)

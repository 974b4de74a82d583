"""Alignment-consistent phrase pair extraction and phrase table scoring."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

from .align import NULL_TOKEN, AlignmentSet, TranslationTable
from .corpus import ParallelCorpus, SentencePair
from .errors import ContractError
from ._util import fmt

DEFAULT_MAX_PHRASE_LEN = 7


@dataclass(frozen=True)
class PhrasePair:
    source_span: tuple[str, ...]
    target_span: tuple[str, ...]
    # Links re-based to the spans' own coordinates.
    alignment: frozenset[tuple[int, int]]


def extract_phrases(
    pair: SentencePair,
    alignment: AlignmentSet,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
) -> list[PhrasePair]:
    """All consistent phrase pairs of a sentence pair, up to a length cap.

    A span pair is consistent when no alignment link crosses its
    boundary. Source spans are enumerated directly; the target side is
    the aligned block extended over adjacent unaligned words, which
    together yields every consistent pair containing at least one link.
    Source spans with no aligned word produce nothing.
    """
    if max_phrase_len < 1:
        raise ContractError("max_phrase_len must be >= 1")
    links = alignment.links
    sl, tl = alignment.src_len, alignment.tgt_len
    src_to_tgt = defaultdict(list)
    tgt_aligned = [False] * tl
    for i, j in links:
        src_to_tgt[i].append(j)
        tgt_aligned[j] = True

    out = []
    for i1 in range(sl):
        for i2 in range(i1, min(i1 + max_phrase_len, sl)):
            j_min, j_max = tl, -1
            for i in range(i1, i2 + 1):
                for j in src_to_tgt.get(i, ()):
                    if j < j_min:
                        j_min = j
                    if j > j_max:
                        j_max = j
            if j_max < 0:
                continue
            # Links into the aligned target block must come from inside.
            consistent = True
            for i, j in links:
                if j_min <= j <= j_max and not (i1 <= i <= i2):
                    consistent = False
                    break
            if not consistent:
                continue
            inner = [(i, j) for i, j in links if i1 <= i <= i2]
            j1 = j_min
            while True:
                j2 = j_max
                while True:
                    if j2 - j1 + 1 <= max_phrase_len:
                        rebased = frozenset((i - i1, j - j1) for i, j in inner)
                        out.append(
                            PhrasePair(
                                pair.source[i1 : i2 + 1],
                                pair.target[j1 : j2 + 1],
                                rebased,
                            )
                        )
                    j2 += 1
                    if j2 >= tl or tgt_aligned[j2]:
                        break
                j1 -= 1
                if j1 < 0 or tgt_aligned[j1]:
                    break
    return out


class PhraseTable:
    """Scored phrase records keyed by (source_span, target_span).

    Each record carries four scores: forward and backward relative
    frequencies and forward and backward lexical weights.
    """

    def __init__(self, records: dict | None = None):
        # (src, tgt) -> (p(t|s), p(s|t), lex(t|s), lex(s|t))
        self.records: dict[tuple, tuple[float, float, float, float]] = records or {}
        self._by_source = defaultdict(list)
        for (src, tgt), scores in self.records.items():
            self._by_source[src].append((tgt, scores))

    def options(self, source_span: tuple[str, ...]):
        return self._by_source.get(source_span, [])

    def scores(self, source_span, target_span):
        return self.records.get((source_span, target_span))

    def source_spans(self):
        return self._by_source.keys()

    def has_source_word(self, token: str) -> bool:
        return (token,) in self._by_source

    def __len__(self):
        return len(self.records)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for (src, tgt), scores in sorted(self.records.items()):
                f.write(
                    " ".join(src)
                    + " ||| "
                    + " ".join(tgt)
                    + " ||| "
                    + " ".join(fmt(s) for s in scores)
                    + "\n"
                )

    @classmethod
    def load(cls, path) -> "PhraseTable":
        records = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            src, tgt, score_str = line.split(" ||| ")
            scores = tuple(float(x) for x in score_str.split())
            if len(scores) != 4:
                raise ContractError(f"{path}: expected 4 scores per record")
            records[(tuple(src.split()), tuple(tgt.split()))] = scores
        return cls(records)


def _lexical_weight(source, target, links, table: TranslationTable) -> float:
    """Product over target words of the mean translation probability of
    their aligned source words; unaligned words score against NULL."""
    by_target = defaultdict(list)
    for i, j in links:
        by_target[j].append(i)
    weight = 1.0
    for j, t_word in enumerate(target):
        sources = by_target.get(j)
        if sources:
            weight *= sum(table.prob(source[i], t_word) for i in sorted(sources)) / len(
                sources
            )
        else:
            weight *= table.prob(NULL_TOKEN, t_word)
    return weight


def score_phrase_table(
    extracted: list[PhrasePair],
    forward_table: TranslationTable,
    backward_table: TranslationTable,
) -> PhraseTable:
    """Relative-frequency scores plus lexical weights.

    p(t|s) and p(s|t) are instance counts normalized per source and per
    target span. Lexical weights use each pair's most frequent internal
    alignment (ties broken by the lexicographically smallest link set).
    """
    pair_counts = Counter()
    src_counts = Counter()
    tgt_counts = Counter()
    alignment_votes = defaultdict(Counter)
    for pp in extracted:
        key = (pp.source_span, pp.target_span)
        pair_counts[key] += 1
        src_counts[pp.source_span] += 1
        tgt_counts[pp.target_span] += 1
        alignment_votes[key][tuple(sorted(pp.alignment))] += 1

    records = {}
    for key in pair_counts:
        src, tgt = key
        votes = alignment_votes[key]
        best_alignment = min(votes, key=lambda a: (-votes[a], a))
        links = frozenset(best_alignment)
        backward_links = frozenset((j, i) for i, j in links)
        records[key] = (
            pair_counts[key] / src_counts[src],
            pair_counts[key] / tgt_counts[tgt],
            _lexical_weight(src, tgt, links, forward_table),
            _lexical_weight(tgt, src, backward_links, backward_table),
        )
    return PhraseTable(records)


def build_phrase_table(
    corpus: ParallelCorpus,
    alignments: list[AlignmentSet],
    forward_table: TranslationTable,
    backward_table: TranslationTable,
    max_phrase_len: int = DEFAULT_MAX_PHRASE_LEN,
    min_count: int = 1,
) -> PhraseTable:
    """Extract and score in one pass over an aligned corpus."""
    extracted = []
    for pair, alignment in zip(corpus.pairs, alignments):
        extracted.extend(extract_phrases(pair, alignment, max_phrase_len))
    if min_count > 1:
        keep = Counter((pp.source_span, pp.target_span) for pp in extracted)
        extracted = [
            pp for pp in extracted if keep[(pp.source_span, pp.target_span)] >= min_count
        ]
    return score_phrase_table(extracted, forward_table, backward_table)

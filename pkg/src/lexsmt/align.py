"""Word-translation probabilities by EM, Viterbi links, symmetrization.

Training implements the classic lexical translation model: every
target word of a pair is generated by exactly one source word (or the
NULL token), and EM alternates between distributing fractional counts
over the possible generators and re-normalizing each source word's
translation row.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from math import log
from pathlib import Path

from .corpus import ParallelCorpus, SentencePair
from .errors import ContractError, TrainingError
from ._util import fmt

NULL_TOKEN = "<NULL>"
DEFAULT_FLOOR = 1e-7
DEFAULT_ITERATIONS = 5


@dataclass
class TranslationTable:
    """Row-stochastic table t[source][target] with a NULL source row."""

    t: dict[str, dict[str, float]]
    floor: float = DEFAULT_FLOOR
    log_likelihoods: list[float] = field(default_factory=list)

    def prob(self, source: str, target: str) -> float:
        row = self.t.get(source)
        if row is None:
            return self.floor
        return row.get(target, self.floor)

    def source_vocab(self) -> set[str]:
        return set(self.t)

    def target_vocab(self) -> set[str]:
        vocab = set()
        for row in self.t.values():
            vocab.update(row)
        return vocab

    def save(self, path) -> None:
        """Dump as sorted source<TAB>target<TAB>probability rows."""
        with open(path, "w", encoding="utf-8") as f:
            for source in sorted(self.t):
                row = self.t[source]
                for target in sorted(row):
                    f.write(f"{source}\t{target}\t{fmt(row[target])}\n")

    @classmethod
    def load(cls, path, floor: float = DEFAULT_FLOOR) -> "TranslationTable":
        t: dict[str, dict[str, float]] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            source, target, prob = line.split("\t")
            t.setdefault(source, {})[target] = float(prob)
        return cls(t, floor)


@dataclass(frozen=True)
class AlignmentSet:
    """Links (source_index, target_index) for one sentence pair."""

    links: frozenset[tuple[int, int]]
    src_len: int
    tgt_len: int

    def __post_init__(self):
        for i, j in self.links:
            if not (0 <= i < self.src_len and 0 <= j < self.tgt_len):
                raise ContractError(
                    f"link ({i},{j}) outside a {self.src_len}x{self.tgt_len} pair"
                )

    def __iter__(self):
        return iter(sorted(self.links))

    def __len__(self):
        return len(self.links)

    def transposed(self) -> "AlignmentSet":
        return AlignmentSet(
            frozenset((j, i) for i, j in self.links), self.tgt_len, self.src_len
        )

    def format(self) -> str:
        return " ".join(f"{i}-{j}" for i, j in sorted(self.links))


def train_model1(
    corpus: ParallelCorpus,
    iterations: int = DEFAULT_ITERATIONS,
    floor: float = DEFAULT_FLOOR,
) -> TranslationTable:
    """Train t(target|source) by EM with a NULL source token.

    Initialization is uniform over each source word's co-occurring
    targets (NULL co-occurs with everything). Each round collects
    expected counts

        c(s, t) += t(t|s) / sum_{s' in NULL + source sentence} t(t|s')

    and re-normalizes rows. The per-round training log-likelihood
    (including the 1/(l+1) generator choice factor) is recorded on the
    returned table and is non-decreasing.
    """
    if not corpus.pairs:
        raise TrainingError("cannot train on an empty corpus")
    if iterations < 1:
        raise TrainingError("iterations must be >= 1")

    cooc: dict[str, set[str]] = defaultdict(set)
    for pair in corpus.pairs:
        for t_word in pair.target:
            cooc[NULL_TOKEN].add(t_word)
            for s_word in pair.source:
                cooc[s_word].add(t_word)

    t: dict[str, dict[str, float]] = {}
    for s_word, targets in cooc.items():
        p = 1.0 / len(targets)
        t[s_word] = {t_word: p for t_word in sorted(targets)}

    log_likelihoods = []
    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = {s: defaultdict(float) for s in t}
        ll = 0.0
        for pair in corpus.pairs:
            sources = (NULL_TOKEN, *pair.source)
            for t_word in pair.target:
                denom = 0.0
                for s_word in sources:
                    denom += t[s_word].get(t_word, 0.0)
                ll += log(denom) - log(len(sources))
                for s_word in sources:
                    p = t[s_word].get(t_word, 0.0)
                    if p > 0.0:
                        counts[s_word][t_word] += p / denom
        if log_likelihoods and ll < log_likelihoods[-1] - 1e-9:
            raise TrainingError(
                f"EM log-likelihood decreased: {log_likelihoods[-1]} -> {ll}"
            )
        log_likelihoods.append(ll)
        for s_word, row_counts in counts.items():
            total = sum(row_counts[t_word] for t_word in sorted(row_counts))
            if total > 0.0:
                t[s_word] = {
                    t_word: row_counts[t_word] / total for t_word in sorted(row_counts)
                }

    table = TranslationTable(t, floor)
    table.log_likelihoods = log_likelihoods
    return table


def viterbi_align(pair: SentencePair, table: TranslationTable) -> AlignmentSet:
    """Link each target position to its most probable generator.

    Source positions are scanned left to right with strict replacement,
    so exact ties go to the lowest source index; NULL takes the word
    only when strictly more probable than every position. NULL links
    are omitted from the result.
    """
    links = set()
    for j, t_word in enumerate(pair.target):
        best_i = -1
        best_p = float("-inf")
        for i, s_word in enumerate(pair.source):
            p = table.prob(s_word, t_word)
            if p > best_p:
                best_p = p
                best_i = i
        if best_i >= 0 and table.prob(NULL_TOKEN, t_word) <= best_p:
            links.add((best_i, j))
    return AlignmentSet(frozenset(links), len(pair.source), len(pair.target))


_NEIGHBORS = ((-1, 0), (0, -1), (1, 0), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def symmetrize(
    forward: AlignmentSet, backward: AlignmentSet, heuristic: str = "grow-diag-final-and"
) -> AlignmentSet:
    """Combine source-to-target and target-to-source Viterbi alignments.

    `backward` comes from the swapped direction and is transposed here
    before combination. grow-diag-final-and starts from the
    intersection, repeatedly adopts union links neighboring (including
    diagonally) an existing link while either end is still unaligned,
    then adds union links whose ends are both still unaligned.
    """
    backward = backward.transposed()
    if (forward.src_len, forward.tgt_len) != (backward.src_len, backward.tgt_len):
        raise ContractError(
            f"alignment shapes differ: {forward.src_len}x{forward.tgt_len} vs "
            f"{backward.src_len}x{backward.tgt_len} (after transposing backward)"
        )
    f_links, b_links = forward.links, backward.links
    if heuristic == "intersection":
        return AlignmentSet(f_links & b_links, forward.src_len, forward.tgt_len)
    if heuristic == "union":
        return AlignmentSet(f_links | b_links, forward.src_len, forward.tgt_len)
    if heuristic != "grow-diag-final-and":
        raise ContractError(f"unknown symmetrization heuristic {heuristic!r}")

    union = f_links | b_links
    aligned = set(f_links & b_links)
    src_aligned = {i for i, _ in aligned}
    tgt_aligned = {j for _, j in aligned}

    changed = True
    while changed:
        changed = False
        for i, j in sorted(aligned):
            for di, dj in _NEIGHBORS:
                ni, nj = i + di, j + dj
                if (ni, nj) in union and (ni, nj) not in aligned:
                    if ni not in src_aligned or nj not in tgt_aligned:
                        aligned.add((ni, nj))
                        src_aligned.add(ni)
                        tgt_aligned.add(nj)
                        changed = True
    for i, j in sorted(union):
        if i not in src_aligned and j not in tgt_aligned:
            aligned.add((i, j))
            src_aligned.add(i)
            tgt_aligned.add(j)
    return AlignmentSet(frozenset(aligned), forward.src_len, forward.tgt_len)


def align_corpus(
    corpus: ParallelCorpus,
    forward_table: TranslationTable,
    backward_table: TranslationTable,
    heuristic: str = "grow-diag-final-and",
) -> list[AlignmentSet]:
    """Symmetrized alignments for every pair of the corpus."""
    alignments = []
    for pair in corpus.pairs:
        fwd = viterbi_align(pair, forward_table)
        bwd = viterbi_align(pair.swapped(), backward_table)
        alignments.append(symmetrize(fwd, bwd, heuristic))
    return alignments


def save_alignments(alignments, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for a in alignments:
            f.write(a.format() + "\n")

"""Translation quality metrics and subjective-score aggregation.

All metrics operate on token sequences and a single reference per
hypothesis. Corpus scores aggregate sufficient statistics before the
final formula is applied.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from math import exp, log

from .errors import ContractError

METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5

TER_MAX_SHIFT_SIZE = 10


@dataclass
class BleuResult:
    score: float  # 0..100
    matches: list[int]
    totals: list[int]
    hyp_len: int
    ref_len: int
    precisions: list[float]
    brevity_penalty: float


@dataclass
class EvalScores:
    bleu: float
    meteor: float
    ter: float
    bleu_detail: BleuResult
    meteor_matches: int
    meteor_chunks: int
    ter_edits: int
    ter_shifts: int

    def to_dict(self) -> dict:
        return {
            "bleu": self.bleu,
            "meteor": self.meteor,
            "ter": self.ter,
            "bleu_matches": self.bleu_detail.matches,
            "bleu_totals": self.bleu_detail.totals,
            "brevity_penalty": self.bleu_detail.brevity_penalty,
            "meteor_matches": self.meteor_matches,
            "meteor_chunks": self.meteor_chunks,
            "ter_edits": self.ter_edits,
            "ter_shifts": self.ter_shifts,
        }


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hyp, ref, max_n: int = 4):
    """Clipped n-gram matches and totals for one sentence pair."""
    matches = [0] * max_n
    totals = [0] * max_n
    for n in range(1, max_n + 1):
        hyp_ngrams = _ngram_counts(hyp, n)
        totals[n - 1] = max(len(hyp) - n + 1, 0)
        if not hyp_ngrams:
            continue
        ref_ngrams = _ngram_counts(ref, n)
        matches[n - 1] = sum(
            min(count, ref_ngrams[ng]) for ng, count in hyp_ngrams.items()
        )
    return matches, totals, len(hyp), len(ref)


def bleu_from_stats(matches, totals, hyp_len, ref_len, max_n: int = 4) -> BleuResult:
    """Corpus BLEU from aggregated statistics.

    Orders with no n-grams at all (every hypothesis shorter than n) are
    excluded from the geometric mean; any remaining order with zero
    matches forces a zero score.
    """
    precisions = [0.0] * max_n
    log_sum = 0.0
    used = 0
    zero = False
    for n in range(1, max_n + 1):
        if totals[n - 1] == 0:
            continue
        used += 1
        precisions[n - 1] = matches[n - 1] / totals[n - 1]
        if matches[n - 1] == 0:
            zero = True
        else:
            log_sum += log(precisions[n - 1])
    if hyp_len == 0 or used == 0 or zero or matches[0] == 0:
        bp = 0.0 if hyp_len < ref_len else 1.0
        return BleuResult(0.0, matches, totals, hyp_len, ref_len, precisions, bp)
    bp = 1.0 if hyp_len >= ref_len else exp(1.0 - ref_len / hyp_len)
    score = 100.0 * bp * exp(log_sum / used)
    return BleuResult(score, matches, totals, hyp_len, ref_len, precisions, bp)


def corpus_bleu(hypotheses, references, max_n: int = 4) -> BleuResult:
    """Corpus-level geometric mean of clipped precisions times brevity penalty."""
    hypotheses = list(hypotheses)
    references = list(references)
    if len(hypotheses) != len(references):
        raise ContractError(
            f"hypothesis/reference count mismatch: "
            f"{len(hypotheses)} vs {len(references)}"
        )
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        m, t, hl, rl = bleu_stats(hyp, ref, max_n)
        for n in range(max_n):
            matches[n] += m[n]
            totals[n] += t[n]
        hyp_len += hl
        ref_len += rl
    return bleu_from_stats(matches, totals, hyp_len, ref_len, max_n)


def sentence_bleu(hyp, ref, max_n: int = 4) -> float:
    """Smoothed sentence score on the 0..100 scale, used inside tuning.

    Unigram precision stays raw; higher orders add one to both match
    and total counts.
    """
    matches, totals, hyp_len, ref_len = bleu_stats(hyp, ref, max_n)
    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_sum = log(matches[0] / totals[0])
    for n in range(2, max_n + 1):
        log_sum += log((matches[n - 1] + 1) / (totals[n - 1] + 1))
    bp = 1.0 if hyp_len >= ref_len else exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * exp(log_sum / max_n)


def _meteor_align(hyp, ref, synonyms):
    """Greedy two-stage unigram alignment: exact, then synonym."""
    hyp_match = [None] * len(hyp)
    ref_used = [False] * len(ref)
    for i, h in enumerate(hyp):
        for j, r in enumerate(ref):
            if not ref_used[j] and h == r:
                hyp_match[i] = j
                ref_used[j] = True
                break
    if synonyms is not None:
        for i, h in enumerate(hyp):
            if hyp_match[i] is not None:
                continue
            for j, r in enumerate(ref):
                if ref_used[j]:
                    continue
                if synonyms.contains_pair((h,), (r,)):
                    hyp_match[i] = j
                    ref_used[j] = True
                    break
    return [(i, j) for i, j in enumerate(hyp_match) if j is not None]


def _count_chunks(pairs) -> int:
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_stats(hyp, ref, synonyms=None):
    pairs = _meteor_align(list(hyp), list(ref), synonyms)
    return len(pairs), _count_chunks(pairs), len(hyp), len(ref)


def meteor_from_stats(matches, chunks, hyp_len, ref_len) -> float:
    if matches == 0 or hyp_len == 0 or ref_len == 0:
        return 0.0
    precision = matches / hyp_len
    recall = matches / ref_len
    f_mean = precision * recall / (
        METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall
    )
    penalty = METEOR_GAMMA * (chunks / matches) ** METEOR_BETA
    return f_mean * (1.0 - penalty)


def meteor_lite(hyp, ref, synonyms=None) -> float:
    """Unigram-alignment score in [0, 1] with a fragmentation penalty.

    `synonyms` is an optional ResourceSet; an unmatched hypothesis word
    may match a reference word when the set contains the pair in either
    orientation.
    """
    return meteor_from_stats(*meteor_stats(hyp, ref, synonyms))


def edit_distance(a, b) -> int:
    """Word-level Levenshtein distance (unit costs)."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = list(range(lb + 1))
    cur = [0] * (lb + 1)
    for i in range(1, la + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            sub = prev[j - 1] + (ai != b[j - 1])
            dele = prev[j] + 1
            ins = cur[j - 1] + 1
            best = sub if sub <= dele else dele
            cur[j] = best if best <= ins else ins
        prev, cur = cur, prev
    return prev[lb]


def _best_shift(hyp, ref, current):
    """Best single block move, scanned deterministically.

    Only blocks that occur somewhere in the reference are candidates.
    Returns (new_distance, new_hyp) or None when no move helps.
    """
    lh = len(hyp)
    ref_ngrams = set()
    for n in range(1, min(TER_MAX_SHIFT_SIZE, len(ref)) + 1):
        for i in range(len(ref) - n + 1):
            ref_ngrams.add(tuple(ref[i : i + n]))
    best = None
    for size in range(1, min(TER_MAX_SHIFT_SIZE, lh) + 1):
        for start in range(lh - size + 1):
            block = tuple(hyp[start : start + size])
            if block not in ref_ngrams:
                continue
            remaining = hyp[:start] + hyp[start + size :]
            for dest in range(len(remaining) + 1):
                if dest == start:
                    continue
                candidate = remaining[:dest] + list(block) + remaining[dest:]
                d = edit_distance(candidate, ref)
                if d < current and (best is None or d < best[0]):
                    best = (d, candidate)
        if best is not None and best[0] == 0:
            break
    return best


def ter_stats(hyp, ref, shifts: bool = True):
    """Edit and shift counts behind the TER score."""
    if len(ref) == 0:
        raise ContractError("TER needs a non-empty reference")
    hyp = list(hyp)
    ref = list(ref)
    num_shifts = 0
    distance = edit_distance(hyp, ref)
    if shifts:
        while distance > 0:
            move = _best_shift(hyp, ref, distance)
            if move is None:
                break
            distance, hyp = move
            num_shifts += 1
    return distance, num_shifts, len(ref)


def ter(hyp, ref, shifts: bool = True) -> float:
    """Edits (including block shifts) per reference word, as a percentage."""
    distance, num_shifts, ref_len = ter_stats(hyp, ref, shifts)
    return (distance + num_shifts) / ref_len * 100.0


@dataclass
class SubjectiveRatings:
    """Per-sentence adequacy and fluency ratings on a 1..5 scale."""

    ratings: list[tuple[float, float]]

    def __post_init__(self):
        for adequacy, fluency in self.ratings:
            if not (1 <= adequacy <= 5 and 1 <= fluency <= 5):
                raise ContractError(
                    f"rating ({adequacy}, {fluency}) outside the 1..5 scale"
                )


def aggregate_subjective(ratings: SubjectiveRatings) -> tuple[float, float]:
    """Mean rating as a percentage of the scale maximum, per dimension."""
    if not ratings.ratings:
        raise ContractError("need at least one rating")
    n = len(ratings.ratings)
    adequacy = sum(a for a, _ in ratings.ratings) / n / 5.0 * 100.0
    fluency = sum(f for _, f in ratings.ratings) / n / 5.0 * 100.0
    return round(adequacy, 2), round(fluency, 2)


def load_subjective(path) -> SubjectiveRatings:
    """Load a TSV of id<TAB>adequacy<TAB>fluency rows."""
    from ._util import read_text_rows

    rows = []
    for lineno, line in read_text_rows(path):
        cols = line.split("\t")
        if len(cols) != 3:
            raise ContractError(f"{path}: line {lineno}: expected 3 columns")
        rows.append((float(cols[1]), float(cols[2])))
    return SubjectiveRatings(rows)


def evaluate_corpus(hypotheses, references, synonyms=None) -> EvalScores:
    """BLEU, METEOR and TER over a corpus with aggregated statistics."""
    hypotheses = [list(h) for h in hypotheses]
    references = [list(r) for r in references]
    bleu = corpus_bleu(hypotheses, references)
    m_matches = m_chunks = 0
    m_hyp_len = m_ref_len = 0
    edits = shifts = ref_total = 0
    for hyp, ref in zip(hypotheses, references):
        matches, chunks, hl, rl = meteor_stats(hyp, ref, synonyms)
        m_matches += matches
        m_chunks += chunks
        m_hyp_len += hl
        m_ref_len += rl
        d, s, r = ter_stats(hyp, ref)
        edits += d
        shifts += s
        ref_total += r
    meteor = meteor_from_stats(m_matches, m_chunks, m_hyp_len, m_ref_len)
    ter_score = (edits + shifts) / ref_total * 100.0 if ref_total else 0.0
    return EvalScores(
        bleu=bleu.score,
        meteor=meteor,
        ter=ter_score,
        bleu_detail=bleu,
        meteor_matches=m_matches,
        meteor_chunks=m_chunks,
        ter_edits=edits,
        ter_shifts=shifts,
    )


def bootstrap_bleu(
    hypotheses, references, resamples: int = 1000, seed: int = 0
) -> tuple[float, float]:
    """95% percentile interval for corpus BLEU under resampling."""
    hypotheses = list(hypotheses)
    references = list(references)
    if len(hypotheses) != len(references):
        raise ContractError("hypothesis/reference count mismatch")
    stats = [bleu_stats(h, r) for h, r in zip(hypotheses, references)]
    rng = random.Random(seed)
    n = len(stats)
    scores = []
    for _ in range(resamples):
        matches = [0] * 4
        totals = [0] * 4
        hyp_len = ref_len = 0
        for _ in range(n):
            m, t, hl, rl = stats[rng.randrange(n)]
            for k in range(4):
                matches[k] += m[k]
                totals[k] += t[k]
            hyp_len += hl
            ref_len += rl
        scores.append(bleu_from_stats(matches, totals, hyp_len, ref_len).score)
    scores.sort()
    lo = scores[max(int(0.025 * resamples) - 1, 0)]
    hi = scores[min(int(0.975 * resamples), resamples - 1)]
    return lo, hi

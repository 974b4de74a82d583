"""Minimum-error-rate training of the decoder's log-linear weights.

The tuner alternates decoding the tuning set into n-best lists and
optimizing weights against corpus BLEU over the merged candidate pool.
Over a fixed pool, BLEU as a function of any single weight is piecewise
constant, so each dimension is searched exactly: per sentence the
candidate scores are lines in the weight, their upper envelope gives
the switching points, and corpus BLEU is evaluated once per interval
with sufficient statistics updated incrementally along the sweep.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import ParallelCorpus
from .decoder import (
    DEFAULT_BEAM,
    DEFAULT_DISTORTION_LIMIT,
    FEATURE_NAMES,
    WeightVector,
    decode_nbest,
)
from .errors import TrainingError
from .metrics import bleu_from_stats, bleu_stats, sentence_bleu
from ._util import fmt

DEFAULT_OUTER_ITERATIONS = 10
DEFAULT_NBEST = 100
DEFAULT_RESTARTS = 8
MAX_SWEEPS = 10


@dataclass
class TraceRow:
    iteration: int
    weights: WeightVector
    pool_bleu: float
    pool_size: int


@dataclass
class TuneTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write("iteration,pool_bleu,pool_size," + ",".join(FEATURE_NAMES) + "\n")
            for row in self.rows:
                f.write(
                    f"{row.iteration},{fmt(row.pool_bleu)},{row.pool_size},"
                    + ",".join(fmt(w) for w in row.weights.values)
                    + "\n"
                )


@dataclass(frozen=True)
class _Candidate:
    features: tuple[float, ...]
    stats: tuple  # (matches, totals, hyp_len, ref_len) vs the reference
    sent_bleu: float


class NBestPool:
    """Cumulative per-sentence candidate lists with BLEU stats attached."""

    def __init__(self, references):
        self.references = [tuple(r) for r in references]
        self.candidates: list[list[_Candidate]] = [[] for _ in references]
        self._seen: list[set] = [set() for _ in references]

    def add(self, sentence_id: int, derivations) -> bool:
        grew = False
        ref = self.references[sentence_id]
        for d in derivations:
            key = (tuple(d.tokens), tuple(d.features))
            if key in self._seen[sentence_id]:
                continue
            self._seen[sentence_id].add(key)
            stats = bleu_stats(d.tokens, ref)
            self.candidates[sentence_id].append(
                _Candidate(tuple(d.features), stats, sentence_bleu(d.tokens, ref))
            )
            grew = True
        return grew

    def size(self) -> int:
        return sum(len(c) for c in self.candidates)


def _select(candidates, weights: WeightVector) -> int:
    """Argmax candidate index; exact ties keep the earliest candidate."""
    best_idx = 0
    best_score = weights.dot(candidates[0].features)
    for idx in range(1, len(candidates)):
        score = weights.dot(candidates[idx].features)
        if score > best_score:
            best_score = score
            best_idx = idx
    return best_idx


def pool_bleu(pool: NBestPool, weights: WeightVector) -> float:
    """Corpus BLEU of the per-sentence argmax selections."""
    agg = _StatAccumulator()
    for candidates in pool.candidates:
        if candidates:
            agg.add(candidates[_select(candidates, weights)])
    return agg.bleu()


class _StatAccumulator:
    def __init__(self):
        self.matches = [0, 0, 0, 0]
        self.totals = [0, 0, 0, 0]
        self.hyp_len = 0
        self.ref_len = 0
        self.sent_sum = 0.0

    def add(self, cand: _Candidate, sign: int = 1):
        m, t, hl, rl = cand.stats
        for k in range(4):
            self.matches[k] += sign * m[k]
            self.totals[k] += sign * t[k]
        self.hyp_len += sign * hl
        self.ref_len += sign * rl
        self.sent_sum += sign * cand.sent_bleu

    def bleu(self) -> float:
        return bleu_from_stats(
            self.matches, self.totals, self.hyp_len, self.ref_len
        ).score


def _upper_envelope(lines):
    """Upper envelope of lines (slope, intercept, idx).

    Returns the leftmost best index and the ascending switch points as
    (x, new_idx). Equal lines keep the smallest index.
    """
    by_slope = {}
    for slope, intercept, idx in lines:
        best = by_slope.get(slope)
        if best is None or intercept > best[0] or (intercept == best[0] and idx < best[1]):
            by_slope[slope] = (intercept, idx)
    ordered = sorted((s, b, i) for s, (b, i) in by_slope.items())
    hull = []  # (slope, intercept, idx, x_from)
    for slope, intercept, idx in ordered:
        x_from = float("-inf")
        while hull:
            s0, b0, i0, x0 = hull[-1]
            x_from = (b0 - intercept) / (slope - s0)
            if x_from <= x0:
                hull.pop()
            else:
                break
        if not hull:
            x_from = float("-inf")
        hull.append((slope, intercept, idx, x_from))
    switches = [(x, idx) for _, _, idx, x in hull[1:]]
    return hull[0][2], switches


def optimize_on_pool(
    pool: NBestPool,
    start: WeightVector,
    dims=None,
    max_sweeps: int = MAX_SWEEPS,
) -> tuple[WeightVector, float]:
    """Coordinate-wise exact line search; accepts only strict BLEU gains.

    Intervals of the sweep are ranked by corpus BLEU with the summed
    smoothed sentence BLEU as tie-breaker.
    """
    dims = list(range(len(FEATURE_NAMES))) if dims is None else list(dims)
    weights = start
    active = [c for c in pool.candidates if c]
    if not active:
        return weights, 0.0

    current = _StatAccumulator()
    for candidates in active:
        current.add(candidates[_select(candidates, weights)])
    current_bleu = current.bleu()

    for _ in range(max_sweeps):
        improved = False
        for dim in dims:
            events = []  # (x, sentence, new_idx)
            base = _StatAccumulator()
            start_idx = []
            for s, candidates in enumerate(active):
                lines = []
                for idx, cand in enumerate(candidates):
                    slope = cand.features[dim]
                    intercept = weights.dot(cand.features) - weights.values[dim] * slope
                    lines.append((slope, intercept, idx))
                first, switches = _upper_envelope(lines)
                start_idx.append(first)
                base.add(candidates[first])
                for x, idx in switches:
                    events.append((x, s, idx))
            events.sort(key=lambda e: e[0])

            xs = sorted({x for x, _, _ in events})
            if xs:
                midpoints = [xs[0] - 1.0]
                midpoints += [(xs[k] + xs[k + 1]) / 2.0 for k in range(len(xs) - 1)]
                midpoints.append(xs[-1] + 1.0)
            else:
                midpoints = [weights.values[dim]]

            best_gamma = None
            best_key = None
            cursor = 0
            chosen = list(start_idx)
            for interval, gamma in enumerate(midpoints):
                if interval > 0:
                    boundary = xs[interval - 1]
                    while cursor < len(events) and events[cursor][0] <= boundary:
                        _, s, idx = events[cursor]
                        base.add(active[s][chosen[s]], sign=-1)
                        chosen[s] = idx
                        base.add(active[s][idx])
                        cursor += 1
                key = (base.bleu(), base.sent_sum)
                if best_key is None or key > best_key:
                    best_key = key
                    best_gamma = gamma
            if best_key is not None and best_key[0] > current_bleu:
                weights = weights.replace(dim, best_gamma)
                current_bleu = best_key[0]
                improved = True
        if not improved:
            break
    return weights, current_bleu


def tune_weights(
    tuning_corpus: ParallelCorpus,
    table,
    lm,
    initial: WeightVector | None = None,
    outer_iterations: int = DEFAULT_OUTER_ITERATIONS,
    nbest_size: int = DEFAULT_NBEST,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    beam: int = DEFAULT_BEAM,
    distortion_limit: int | None = DEFAULT_DISTORTION_LIMIT,
    dims=None,
) -> tuple[WeightVector, TuneTrace]:
    """Decode, merge, optimize: repeat until the pool stops growing.

    Each iteration optimizes from the incumbent weights and from
    `restarts` random points in the [-1, 1] cube, adopting the pool-BLEU
    winner. Fully deterministic for a fixed seed.
    """
    if not tuning_corpus.pairs:
        raise TrainingError("tuning corpus is empty")
    if outer_iterations < 1:
        raise TrainingError("outer iterations must be >= 1")
    rng = random.Random(seed)
    weights = initial or WeightVector.uniform()
    pool = NBestPool([p.target for p in tuning_corpus.pairs])
    trace = TuneTrace()

    for iteration in range(1, outer_iterations + 1):
        grew = False
        for sid, pair in enumerate(tuning_corpus.pairs):
            derivations = decode_nbest(
                pair.source,
                table,
                lm,
                weights,
                n=nbest_size,
                beam=beam,
                distortion_limit=distortion_limit,
            )
            if pool.add(sid, derivations):
                grew = True
        starts = [weights] + [
            WeightVector(tuple(rng.uniform(-1.0, 1.0) for _ in FEATURE_NAMES))
            for _ in range(restarts)
        ]
        best_weights, best_bleu = None, None
        for start in starts:
            cand_weights, cand_bleu = optimize_on_pool(pool, start, dims)
            if best_bleu is None or cand_bleu > best_bleu:
                best_weights, best_bleu = cand_weights, cand_bleu
        weights = best_weights
        trace.rows.append(TraceRow(iteration, weights, best_bleu, pool.size()))
        if not grew:
            break
    return weights, trace

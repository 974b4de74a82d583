"""Stack-based beam-search phrase decoder with log-linear scoring.

Hypotheses live in stacks indexed by the number of covered source
words. Each expansion applies one phrase-table option (or an unknown
word copy), accumulating seven features: the four phrase-table log
scores, the language model log-probability, a word penalty of -1 per
emitted word, and a distance-based distortion penalty. Hypotheses that
agree on coverage, language model state and last source position are
recombined; the losers are kept on the winner so the n-best pass can
still enumerate every surviving derivation exactly.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from math import isfinite, log
from pathlib import Path

from .errors import ContractError
from .lm import BOS, EOS, NGramModel
from .phrases import PhraseTable
from ._util import fmt

FEATURE_NAMES = (
    "phrase_fwd",
    "phrase_bwd",
    "lex_fwd",
    "lex_bwd",
    "lm",
    "word_penalty",
    "distortion",
)

DEFAULT_BEAM = 100
DEFAULT_DISTORTION_LIMIT = 6

# Log score assigned to each translation feature of an unknown-word copy.
UNK_LOG_SCORE = log(1e-7)

UNK_WRAP = "|UNK|"


@dataclass(frozen=True)
class WeightVector:
    """Log-linear weights, one per feature, in FEATURE_NAMES order."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(FEATURE_NAMES):
            raise ContractError(f"expected {len(FEATURE_NAMES)} weights")
        if not all(isfinite(w) for w in self.values):
            raise ContractError("weights must be finite")

    @classmethod
    def uniform(cls, value: float = 1.0) -> "WeightVector":
        return cls(tuple([value] * len(FEATURE_NAMES)))

    def dot(self, features) -> float:
        total = 0.0
        for w, f in zip(self.values, features):
            total += w * f
        return total

    def replace(self, dim: int, value: float) -> "WeightVector":
        vals = list(self.values)
        vals[dim] = value
        return WeightVector(tuple(vals))

    def scaled(self, factor: float) -> "WeightVector":
        return WeightVector(tuple(w * factor for w in self.values))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for name, value in zip(FEATURE_NAMES, self.values):
                f.write(f"{name}\t{fmt(value)}\n")

    @classmethod
    def load(cls, path) -> "WeightVector":
        values = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            name, value = line.split("\t")
            values[name] = float(value)
        return cls(tuple(values[name] for name in FEATURE_NAMES))


@dataclass(frozen=True)
class Derivation:
    """One complete translation with its feature decomposition."""

    tokens: tuple[str, ...]
    unk_flags: tuple[bool, ...]
    features: tuple[float, ...]
    score: float

    def render(self, mark_unk: bool = False) -> str:
        if not mark_unk:
            return " ".join(self.tokens)
        return " ".join(
            UNK_WRAP if unk else tok for tok, unk in zip(self.tokens, self.unk_flags)
        )


@dataclass(frozen=True)
class _Option:
    start: int
    end: int  # exclusive
    target: tuple[str, ...]
    logs: tuple[float, float, float, float]
    is_unk: bool


class _Hyp:
    __slots__ = (
        "coverage",
        "lm_state",
        "end",
        "score",
        "features",
        "target",
        "unk_flags",
        "prev",
        "option",
        "delta",
        "score_delta",
        "merged",
    )

    def __init__(self, coverage, lm_state, end, score, features, target, unk_flags,
                 prev, option, delta, score_delta):
        self.coverage = coverage
        self.lm_state = lm_state
        self.end = end
        self.score = score
        self.features = features
        self.target = target
        self.unk_flags = unk_flags
        self.prev = prev
        self.option = option
        self.delta = delta
        self.score_delta = score_delta
        self.merged = []

    def state(self):
        return (self.coverage, self.lm_state, self.end)


def build_options(sentence, table: PhraseTable, lm_vocab=None) -> dict:
    """Translation options per source span, plus unknown-word copies.

    A position with no single-token table entry gets a copy option so
    every sentence can be fully covered.
    """
    sentence = tuple(sentence)
    n = len(sentence)
    max_span = max((len(s) for s in table.source_spans()), default=1)
    options: dict[tuple[int, int], list[_Option]] = {}
    for i in range(n):
        for j in range(i + 1, min(i + max_span, n) + 1):
            span = sentence[i:j]
            found = []
            for target, scores in table.options(span):
                found.append(
                    _Option(i, j, target, tuple(log(s) for s in scores), False)
                )
            if found:
                found.sort(key=lambda o: (-o.logs[0], o.target))
                options[(i, j)] = found
    for i in range(n):
        if not table.has_source_word(sentence[i]):
            options.setdefault((i, i + 1), []).append(
                _Option(i, i + 1, (sentence[i],), (UNK_LOG_SCORE,) * 4, True)
            )
    return options


def _future_costs(n, options, lm: NGramModel, weights: WeightVector):
    """Best achievable weighted span scores, combined over split points.

    Spans are scored with the four translation features plus a unigram
    language model estimate of their target side; word and distortion
    penalties are left out of the estimate.
    """
    w1, w2, w3, w4, wlm = weights.values[:5]
    best = [[float("-inf")] * (n + 1) for _ in range(n + 1)]
    for (i, j), opts in options.items():
        for opt in opts:
            score = (
                w1 * opt.logs[0]
                + w2 * opt.logs[1]
                + w3 * opt.logs[2]
                + w4 * opt.logs[3]
                + wlm * sum(log(lm.unigram_prob(t)) for t in opt.target)
            )
            if score > best[i][j]:
                best[i][j] = score
    for length in range(2, n + 1):
        for i in range(n - length + 1):
            j = i + length
            acc = best[i][j]
            for k in range(i + 1, j):
                combined = best[i][k] + best[k][j]
                if combined > acc:
                    acc = combined
            best[i][j] = acc
    return best


def _coverage_future(coverage, n, fc):
    total = 0.0
    i = 0
    while i < n:
        if coverage >> i & 1:
            i += 1
            continue
        j = i
        while j < n and not (coverage >> j & 1):
            j += 1
        total += fc[i][j]
        i = j
    return total


class DecoderLattice:
    """Search result: final hypotheses plus recombination bookkeeping."""

    def __init__(self, finals, lm_order):
        self.finals = finals
        self.lm_order = lm_order

    def best(self) -> Derivation | None:
        if not self.finals:
            return None
        top = min(self.finals, key=lambda h: (-h.score, h.target))
        return Derivation(top.target, top.unk_flags, top.features, top.score)

    def best_options(self):
        """Option sequence of the best derivation, in application order."""
        if not self.finals:
            return []
        hyp = min(self.finals, key=lambda h: (-h.score, h.target))
        chain = []
        while hyp is not None and hyp.option is not None:
            chain.append(hyp.option)
            hyp = hyp.prev
        return list(reversed(chain))

    def nbest(self, n: int) -> list[Derivation]:
        """Top-n derivations distinct in token sequence.

        Each recombination group lazily yields its derivations in
        descending score by heap-merging the streams of its members'
        predecessors shifted by the member's own feature delta.
        """
        if n < 1:
            raise ContractError("n must be >= 1")
        streams: dict[int, _Stream] = {}

        def stream_for(hyp: _Hyp) -> "_Stream":
            key = id(hyp)
            existing = streams.get(key)
            if existing is None:
                existing = _Stream(hyp, stream_for)
                streams[key] = existing
            return existing

        entries = []
        for seq, hyp in enumerate(self.finals):
            stream = stream_for(hyp)
            first = stream.get(0)
            if first is not None:
                heapq.heappush(entries, (-first.score, first.tokens, seq, 0, stream))
        results: list[Derivation] = []
        seen_tokens = set()
        while entries and len(results) < n:
            neg_score, tokens, seq, idx, stream = heapq.heappop(entries)
            partial = stream.get(idx)
            if tokens not in seen_tokens:
                seen_tokens.add(tokens)
                results.append(
                    Derivation(
                        partial.tokens, partial.unk_flags, partial.features, partial.score
                    )
                )
            nxt = stream.get(idx + 1)
            if nxt is not None:
                heapq.heappush(entries, (-nxt.score, nxt.tokens, seq, idx + 1, stream))
        return results


@dataclass(frozen=True)
class _Partial:
    score: float
    features: tuple[float, ...]
    tokens: tuple[str, ...]
    unk_flags: tuple[bool, ...]


class _Stream:
    """Lazy, memoized descending-score enumeration of one group's derivations."""

    def __init__(self, rep: _Hyp, stream_for):
        self.cache: list[_Partial] = []
        self.heap = []
        self.exhausted = False
        if rep.prev is None:
            self.cache.append(_Partial(rep.score, rep.features, rep.target, rep.unk_flags))
            self.exhausted = True
            return
        for seq, member in enumerate((rep, *rep.merged)):
            parent = stream_for(member.prev)
            first = parent.get(0)
            if first is not None:
                item = self._extend(first, member)
                heapq.heappush(self.heap, (-item.score, item.tokens, seq, 0, member, parent))

    @staticmethod
    def _extend(parent: _Partial, member: _Hyp) -> _Partial:
        features = tuple(a + b for a, b in zip(parent.features, member.delta))
        return _Partial(
            parent.score + member.score_delta,
            features,
            parent.tokens + member.target[len(member.prev.target):],
            parent.unk_flags + member.unk_flags[len(member.prev.unk_flags):],
        )

    def get(self, index: int) -> _Partial | None:
        while len(self.cache) <= index and not self.exhausted:
            if not self.heap:
                self.exhausted = True
                break
            neg, tokens, seq, idx, member, parent = heapq.heappop(self.heap)
            self.cache.append(self._extend(parent.get(idx), member))
            nxt = parent.get(idx + 1)
            if nxt is not None:
                item = self._extend(nxt, member)
                heapq.heappush(
                    self.heap, (-item.score, item.tokens, seq, idx + 1, member, parent)
                )
        return self.cache[index] if index < len(self.cache) else None


def search(
    sentence,
    table: PhraseTable,
    lm: NGramModel,
    weights: WeightVector,
    beam: int = DEFAULT_BEAM,
    distortion_limit: int | None = DEFAULT_DISTORTION_LIMIT,
) -> DecoderLattice:
    """Histogram-pruned stack search over all segmentations and orders."""
    if beam < 1:
        raise ContractError("beam must be >= 1")
    if distortion_limit is not None and distortion_limit < 0:
        raise ContractError("distortion limit must be >= 0 (or None for unlimited)")
    sentence = tuple(sentence)
    n = len(sentence)
    ctx = lm.order - 1
    init_state = (BOS,) * ctx
    zeros = (0.0,) * len(FEATURE_NAMES)
    initial = _Hyp(0, init_state, -1, 0.0, zeros, (), (), None, None, zeros, 0.0)
    if n == 0:
        eos_lp = lm.log_prob(EOS, init_state)
        delta = (0.0, 0.0, 0.0, 0.0, eos_lp, 0.0, 0.0)
        score = weights.dot(delta)
        final = _Hyp(0, init_state, -1, score, delta, (), (), initial, None, delta, score)
        return DecoderLattice([final], lm.order)

    options = build_options(sentence, table)
    fc = _future_costs(n, options, lm, weights)
    spans = sorted(options)
    full = (1 << n) - 1
    stacks: list[dict] = [dict() for _ in range(n + 1)]
    stacks[0][initial.state()] = initial

    for covered in range(n):
        stack = stacks[covered]
        if not stack:
            continue
        hyps = sorted(
            stack.values(),
            key=lambda h: (-(h.score + _coverage_future(h.coverage, n, fc)), h.target),
        )[:beam]
        for hyp in hyps:
            for i, j in spans:
                span_mask = ((1 << (j - i)) - 1) << i
                if hyp.coverage & span_mask:
                    continue
                jump = abs(i - (hyp.end + 1))
                if distortion_limit is not None and jump > distortion_limit:
                    continue
                coverage = hyp.coverage | span_mask
                complete = coverage == full
                for opt in options[(i, j)]:
                    lm_lp = 0.0
                    state = hyp.lm_state
                    for word in opt.target:
                        lm_lp += lm.log_prob(word, state)
                        state = (state + (word,))[-ctx:] if ctx else ()
                    if complete:
                        lm_lp += lm.log_prob(EOS, state)
                    delta = (
                        opt.logs[0],
                        opt.logs[1],
                        opt.logs[2],
                        opt.logs[3],
                        lm_lp,
                        -float(len(opt.target)),
                        -float(jump),
                    )
                    score_delta = weights.dot(delta)
                    new = _Hyp(
                        coverage,
                        state,
                        j - 1,
                        hyp.score + score_delta,
                        tuple(a + b for a, b in zip(hyp.features, delta)),
                        hyp.target + opt.target,
                        hyp.unk_flags + (opt.is_unk,) * len(opt.target),
                        hyp,
                        opt,
                        delta,
                        score_delta,
                    )
                    _insert(stacks[covered + (j - i)], new)

    finals = sorted(stacks[n].values(), key=lambda h: (-h.score, h.target))
    if not finals and distortion_limit != 0:
        # A hard distortion limit can strand every beam survivor with an
        # unreachable hole; the monotone search always completes.
        return search(sentence, table, lm, weights, beam, 0)
    return DecoderLattice(finals, lm.order)


def _insert(stack: dict, hyp: _Hyp) -> None:
    state = hyp.state()
    incumbent = stack.get(state)
    if incumbent is None:
        stack[state] = hyp
        return
    # Keep the better hypothesis as representative; ties favor the
    # lexicographically smaller target for reproducibility.
    if (-hyp.score, hyp.target) < (-incumbent.score, incumbent.target):
        hyp.merged = incumbent.merged + [incumbent]
        incumbent.merged = []
        stack[state] = hyp
    else:
        incumbent.merged.append(hyp)


def decode(
    sentence,
    table: PhraseTable,
    lm: NGramModel,
    weights: WeightVector | None = None,
    beam: int = DEFAULT_BEAM,
    distortion_limit: int | None = DEFAULT_DISTORTION_LIMIT,
) -> list[str]:
    """Best translation of one tokenized sentence, unknown words copied bare."""
    best = decode_detailed(sentence, table, lm, weights, beam, distortion_limit)
    return list(best.tokens)


def decode_detailed(
    sentence,
    table: PhraseTable,
    lm: NGramModel,
    weights: WeightVector | None = None,
    beam: int = DEFAULT_BEAM,
    distortion_limit: int | None = DEFAULT_DISTORTION_LIMIT,
) -> Derivation:
    weights = weights or WeightVector.uniform()
    lattice = search(sentence, table, lm, weights, beam, distortion_limit)
    return lattice.best()


def decode_nbest(
    sentence,
    table: PhraseTable,
    lm: NGramModel,
    weights: WeightVector | None = None,
    n: int = 1,
    beam: int = DEFAULT_BEAM,
    distortion_limit: int | None = DEFAULT_DISTORTION_LIMIT,
) -> list[Derivation]:
    """Top-n token-distinct derivations, best first."""
    weights = weights or WeightVector.uniform()
    lattice = search(sentence, table, lm, weights, beam, distortion_limit)
    return lattice.nbest(n)


def recompute_features(options, source_len: int, lm: NGramModel) -> tuple[float, ...]:
    """Re-derive a feature vector from a derivation's option sequence.

    Mirrors the search's accumulation order exactly (per-phrase language
    model sums, phrase-by-phrase addition, end transition folded into
    the completing phrase) so the result is bit-identical to the
    accumulated vector of the corresponding hypothesis.
    """
    ctx = lm.order - 1
    state = (BOS,) * ctx
    features = (0.0,) * len(FEATURE_NAMES)
    end = -1
    covered = 0
    for opt in options:
        lm_lp = 0.0
        for word in opt.target:
            lm_lp += lm.log_prob(word, state)
            state = (state + (word,))[-ctx:] if ctx else ()
        covered += opt.end - opt.start
        if covered == source_len:
            lm_lp += lm.log_prob(EOS, state)
        delta = (
            opt.logs[0],
            opt.logs[1],
            opt.logs[2],
            opt.logs[3],
            lm_lp,
            -float(len(opt.target)),
            -float(abs(opt.start - (end + 1))),
        )
        features = tuple(a + b for a, b in zip(features, delta))
        end = opt.end - 1
    return features


def save_nbest(nbest_lists: list[list[Derivation]], path) -> None:
    """Write 'sent_id ||| tokens ||| f1..f7 ||| score' lines."""
    with open(path, "w", encoding="utf-8") as f:
        for sent_id, derivations in enumerate(nbest_lists):
            for d in derivations:
                f.write(
                    f"{sent_id} ||| {' '.join(d.tokens)} ||| "
                    f"{' '.join(fmt(x) for x in d.features)} ||| {fmt(d.score)}\n"
                )

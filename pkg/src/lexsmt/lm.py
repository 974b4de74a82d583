"""Interpolated n-gram language model over the target language.

Maximum-likelihood estimates of each order are mixed with the next
lower order using fixed weights; the base distribution is an add-one
unigram over the closed vocabulary, with small reserved floors for
unknown words and for the end marker so every query stays finite.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from math import log
from pathlib import Path

from .errors import TrainingError
from ._util import fmt

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

DEFAULT_ORDER = 3
DEFAULT_LAMBDA = 0.4
DEFAULT_UNKNOWN_SHARE = 1e-6
DEFAULT_EOS_SHARE = 1e-6


@dataclass
class NGramModel:
    order: int
    lambdas: tuple[float, ...]  # lambdas[k-2] weights the order-k ML estimate
    counts: list[Counter]  # counts[k-1][(ngram tuple)] for k = 1..order
    context_counts: list[Counter]  # context_counts[k-2][(context)] for k = 2..order
    vocab: set[str]
    word_total: int
    unknown_share: float = DEFAULT_UNKNOWN_SHARE
    eos_share: float = DEFAULT_EOS_SHARE
    _log_cache: dict = field(default_factory=dict, repr=False)

    def unigram_prob(self, word: str) -> float:
        """Base distribution over vocab + unknown + end marker."""
        if word == EOS:
            return self.eos_share
        if word in self.vocab:
            scale = 1.0 - self.unknown_share - self.eos_share
            return (
                scale
                * (self.counts[0][(word,)] + 1)
                / (self.word_total + len(self.vocab))
            )
        return self.unknown_share

    def cond_prob(self, word: str, context: tuple[str, ...]) -> float:
        """Interpolated p(word | context).

        Unseen contexts contribute nothing at their order and fall
        through to the lower order, which keeps every conditional
        distribution normalized.
        """
        context = tuple(context[-(self.order - 1) :]) if self.order > 1 else ()
        p = self.unigram_prob(word)
        for k in range(2, self.order + 1):
            ctx = context[-(k - 1) :]
            if len(ctx) < k - 1:
                break
            ctx_count = self.context_counts[k - 2].get(ctx, 0)
            if ctx_count == 0:
                continue
            lam = self.lambdas[k - 2]
            ml = self.counts[k - 1].get(ctx + (word,), 0) / ctx_count
            p = lam * ml + (1.0 - lam) * p
        return p

    def log_prob(self, word: str, context: tuple[str, ...]) -> float:
        key = (word, tuple(context[-(self.order - 1) :]) if self.order > 1 else ())
        cached = self._log_cache.get(key)
        if cached is None:
            cached = log(self.cond_prob(word, key[1]))
            self._log_cache[key] = cached
        return cached

    def save(self, path) -> None:
        """Sorted count dump with a header carrying order and lambdas."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(
                "# order=%d lambdas=%s unknown_share=%s eos_share=%s\n"
                % (
                    self.order,
                    ",".join(fmt(x) for x in self.lambdas),
                    fmt(self.unknown_share),
                    fmt(self.eos_share),
                )
            )
            for k in range(1, self.order + 1):
                for ngram in sorted(self.counts[k - 1]):
                    f.write(
                        f"{k}\t{' '.join(ngram)}\t{self.counts[k - 1][ngram]}\n"
                    )

    @classmethod
    def load(cls, path) -> "NGramModel":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = lines[0].lstrip("# ").split()
        fields = dict(item.split("=", 1) for item in header)
        order = int(fields["order"])
        lambdas = tuple(float(x) for x in fields["lambdas"].split(","))
        counts = [Counter() for _ in range(order)]
        for line in lines[1:]:
            k_str, ngram_str, count = line.split("\t")
            counts[int(k_str) - 1][tuple(ngram_str.split(" "))] = int(count)
        context_counts = [Counter() for _ in range(max(order - 1, 0))]
        for k in range(2, order + 1):
            for ngram, c in counts[k - 1].items():
                context_counts[k - 2][ngram[:-1]] += c
        vocab = {w for (w,) in counts[0]}
        word_total = sum(counts[0].values())
        return cls(
            order,
            lambdas,
            counts,
            context_counts,
            vocab,
            word_total,
            float(fields["unknown_share"]),
            float(fields["eos_share"]),
        )


def train_lm(
    sentences,
    order: int = DEFAULT_ORDER,
    lambdas=DEFAULT_LAMBDA,
    unknown_share: float = DEFAULT_UNKNOWN_SHARE,
    eos_share: float = DEFAULT_EOS_SHARE,
) -> NGramModel:
    """Count n-grams with boundary padding and fix interpolation weights.

    `lambdas` is either one weight shared by all orders >= 2 or a
    sequence of order-1 weights (for orders 2..order). Unigram counts
    cover real words only; higher orders include transitions into the
    end marker, so sentence length is modeled.
    """
    sentences = list(sentences)
    if not sentences:
        raise TrainingError("cannot train a language model on an empty corpus")
    if order < 1:
        raise TrainingError("order must be >= 1")
    if isinstance(lambdas, (int, float)):
        lam = tuple([float(lambdas)] * (order - 1))
    else:
        lam = tuple(float(x) for x in lambdas)
        if len(lam) != order - 1:
            raise TrainingError(f"need {order - 1} lambdas for order {order}")
    if any(not (0.0 < x < 1.0) for x in lam):
        raise TrainingError("interpolation weights must lie strictly in (0, 1)")

    counts = [Counter() for _ in range(order)]
    context_counts = [Counter() for _ in range(max(order - 1, 0))]
    vocab = set()
    word_total = 0
    for sentence in sentences:
        words = tuple(sentence)
        vocab.update(words)
        word_total += len(words)
        for w in words:
            counts[0][(w,)] += 1
        padded = (BOS,) * (order - 1) + words + (EOS,)
        for k in range(2, order + 1):
            for pos in range(order - k, len(padded) - k + 1):
                ngram = padded[pos : pos + k]
                counts[k - 1][ngram] += 1
                context_counts[k - 2][ngram[:-1]] += 1
    return NGramModel(
        order, lam, counts, context_counts, vocab, word_total, unknown_share, eos_share
    )


def score_sequence(model: NGramModel, tokens) -> float:
    """Log-probability of a token sequence including the end transition."""
    tokens = tuple(tokens)
    history = (BOS,) * (model.order - 1)
    total = 0.0
    for word in tokens + (EOS,):
        total += model.log_prob(word, history)
        history = (history + (word,))[-(model.order - 1) :] if model.order > 1 else ()
    return total

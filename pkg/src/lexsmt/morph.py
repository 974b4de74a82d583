"""Table-driven splitting of agglutinative suffixes.

Rules rewrite rather than merely cut: a suffix rule strips a matching
token ending and emits a replacement token sequence in its place, so
vowel changes at the seam can be expressed. A separate exact-match map
handles full-token rewrites (lemmatizations) and can also protect a
token from the suffix rules with an identity entry.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ParallelCorpus, SentencePair, normalize
from .errors import ContractError, RuleTableError
from ._util import read_text_rows


@dataclass(frozen=True)
class SuffixRule:
    surface_suffix: str
    emit: tuple[str, ...]
    min_stem_len: int = 1


@dataclass(frozen=True)
class ExactRule:
    pattern: str
    emit: tuple[str, ...]


class SuffixTable:
    """Validated rule inventory with longest-suffix-first lookup."""

    def __init__(self, suffix_rules, exact_rules=()):
        self.exact: dict[str, tuple[str, ...]] = {}
        for rule in exact_rules:
            if not rule.pattern or not rule.emit:
                raise RuleTableError("exact rules need a pattern and an emit sequence")
            if rule.pattern in self.exact:
                raise RuleTableError(f"duplicate exact rule for {rule.pattern!r}")
            self.exact[rule.pattern] = rule.emit
        seen = set()
        for rule in suffix_rules:
            if not rule.surface_suffix or not rule.emit:
                raise RuleTableError("suffix rules need a suffix and an emit sequence")
            if rule.min_stem_len < 1:
                raise RuleTableError("min_stem_len must be >= 1")
            if rule.surface_suffix in seen:
                raise RuleTableError(
                    f"duplicate suffix rule for {rule.surface_suffix!r}"
                )
            seen.add(rule.surface_suffix)
        # Longest suffix wins, so output is independent of file order.
        self.suffix_rules = sorted(
            suffix_rules, key=lambda r: (-len(r.surface_suffix), r.surface_suffix)
        )
        self._validate_terminality()

    def _validate_terminality(self):
        """Every emitted token must be a fixed point of split_token.

        Otherwise a second pass over already-split text would split
        again and corpus splitting would not be idempotent.
        """
        for rule in self.suffix_rules:
            for tok in rule.emit:
                if split_token(tok, self) != [tok]:
                    raise RuleTableError(
                        f"emit token {tok!r} of suffix rule "
                        f"{rule.surface_suffix!r} is itself splittable"
                    )
        for pattern, emit in self.exact.items():
            for tok in emit:
                if split_token(tok, self) != [tok]:
                    raise RuleTableError(
                        f"emit token {tok!r} of exact rule {pattern!r} "
                        "is itself splittable"
                    )


def split_token(token: str, table: SuffixTable) -> list[str]:
    """Split one token, applying at most one rule.

    Exact rules take precedence. Among suffix rules the longest
    matching suffix is chosen; if its stem-length guard fails the token
    passes through unchanged (no fallback to shorter suffixes). A split
    is also withheld when the stem itself would split again (a doubled
    suffix, say), which keeps corpus splitting idempotent for every
    token, not just well-formed ones.
    """
    exact = table.exact.get(token)
    if exact is not None:
        return list(exact)
    for rule in table.suffix_rules:
        if token.endswith(rule.surface_suffix) and len(token) > len(rule.surface_suffix):
            stem = token[: -len(rule.surface_suffix)]
            if len(stem) >= rule.min_stem_len and split_token(stem, table) == [stem]:
                return [stem, *rule.emit]
            return [token]
    return [token]


def split_sentence(tokens, table: SuffixTable) -> tuple[str, ...]:
    out = []
    for tok in tokens:
        out.extend(split_token(tok, table))
    return tuple(out)


def split_corpus(corpus: ParallelCorpus, table: SuffixTable, side: str) -> ParallelCorpus:
    """Apply the rule table to every token of one side of the corpus."""
    if side not in ("src", "tgt"):
        raise ContractError("side must be 'src' or 'tgt'")
    pairs = []
    for p in corpus.pairs:
        if side == "src":
            pairs.append(SentencePair(p.id, split_sentence(p.source, table), p.target, p.origin))
        else:
            pairs.append(SentencePair(p.id, p.source, split_sentence(p.target, table), p.origin))
    return ParallelCorpus(pairs, corpus.name, corpus.langpair)


def load_rules(rule_file) -> SuffixTable:
    """Load a rule TSV with columns kind (suffix|exact), pattern, emit, min_stem_len.

    The emit column is a space-separated token sequence; min_stem_len is
    ignored for exact rules (write '-').
    """
    suffix_rules = []
    exact_rules = []
    for lineno, line in read_text_rows(rule_file):
        cols = line.split("\t")
        if len(cols) != 4:
            raise RuleTableError(
                f"{rule_file}: line {lineno}: expected 4 tab-separated columns"
            )
        kind, pattern, emit, min_stem = (normalize(c.strip()) for c in cols)
        emit_tokens = tuple(emit.split())
        if kind == "suffix":
            suffix_rules.append(SuffixRule(pattern, emit_tokens, int(min_stem)))
        elif kind == "exact":
            exact_rules.append(ExactRule(pattern, emit_tokens))
        else:
            raise RuleTableError(
                f"{rule_file}: line {lineno}: kind must be 'suffix' or 'exact'"
            )
    return SuffixTable(suffix_rules, exact_rules)

import random

import pytest

from lexsmt.align import AlignmentSet, TranslationTable, NULL_TOKEN
from lexsmt.corpus import SentencePair
from lexsmt.errors import ContractError
from lexsmt.phrases import (
    PhrasePair,
    PhraseTable,
    build_phrase_table,
    extract_phrases,
    score_phrase_table,
)

import oracles
from conftest import make_corpus


def make_pair(src_len, tgt_len):
    return SentencePair(
        0,
        tuple(f"s{i}" for i in range(src_len)),
        tuple(f"t{j}" for j in range(tgt_len)),
    )


def extracted_spans(pair, links, max_len):
    alignment = AlignmentSet(
        frozenset(links), len(pair.source), len(pair.target)
    )
    out = set()
    for pp in extract_phrases(pair, alignment, max_len):
        # Unique tokens make span recovery unambiguous.
        i1 = int(pp.source_span[0][1:])
        j1 = int(pp.target_span[0][1:])
        out.add((i1, i1 + len(pp.source_span) - 1, j1, j1 + len(pp.target_span) - 1))
    return out


class TestExtraction:
    def test_two_token_diagonal(self):
        pair = make_pair(2, 2)
        spans = extracted_spans(pair, {(0, 0), (1, 1)}, 2)
        assert spans == {(0, 0, 0, 0), (1, 1, 1, 1), (0, 1, 0, 1)}

    def test_single_aligned_token(self):
        pair = make_pair(1, 1)
        spans = extracted_spans(pair, {(0, 0)}, 7)
        assert spans == {(0, 0, 0, 0)}

    def test_crossing_alignment(self):
        # The anti-diagonal: each single link is fully inside or fully
        # outside any of these span pairs, so the singles qualify along
        # with the full block (confirmed by the brute-force oracle).
        pair = make_pair(2, 2)
        spans = extracted_spans(pair, {(0, 1), (1, 0)}, 2)
        assert spans == oracles.consistent_phrases(2, 2, {(0, 1), (1, 0)}, 2)
        assert spans == {(0, 0, 1, 1), (1, 1, 0, 0), (0, 1, 0, 1)}

    def test_overlapping_links_force_full_block(self):
        # With a word aligned to both targets, only the block survives.
        pair = make_pair(2, 2)
        spans = extracted_spans(pair, {(0, 0), (0, 1), (1, 0)}, 2)
        assert spans == {(0, 1, 0, 1)}

    def test_unaligned_source_spans_excluded(self):
        pair = make_pair(3, 2)
        spans = extracted_spans(pair, {(0, 0)}, 3)
        assert all(i1 == 0 for (i1, _, _, _) in spans)

    def test_unaligned_target_boundary_expansion(self):
        # t1 is unaligned: spans may absorb it on either side.
        pair = make_pair(2, 3)
        spans = extracted_spans(pair, {(0, 0), (1, 2)}, 3)
        assert (0, 0, 0, 0) in spans
        assert (0, 0, 0, 1) in spans  # absorbed to the right
        assert (1, 1, 1, 2) in spans  # absorbed to the left
        assert (1, 1, 2, 2) in spans

    def test_max_phrase_len_caps_both_sides(self):
        pair = make_pair(3, 3)
        links = {(0, 0), (1, 1), (2, 2)}
        spans = extracted_spans(pair, links, 2)
        assert (0, 2, 0, 2) not in spans
        assert (0, 1, 0, 1) in spans

    def test_matches_oracle_on_random_cases(self):
        rng = random.Random(5)
        for _ in range(300):
            sl, tl = rng.randint(1, 4), rng.randint(1, 4)
            pair = make_pair(sl, tl)
            n_links = rng.randint(0, sl * tl)
            links = set(
                rng.sample([(i, j) for i in range(sl) for j in range(tl)], n_links)
            )
            expected = oracles.consistent_phrases(sl, tl, links, 4)
            assert extracted_spans(pair, links, 4) == expected

    def test_bad_max_len(self):
        with pytest.raises(ContractError):
            extract_phrases(make_pair(1, 1), AlignmentSet(frozenset(), 1, 1), 0)


class TestScoring:
    def test_relative_frequency(self):
        link = frozenset({(0, 0)})
        pp = lambda s, t: PhrasePair((s,), (t,), link)
        extracted = [pp("a", "x"), pp("a", "x"), pp("a", "y"), pp("a", "z")]
        t = TranslationTable({"a": {"x": 1.0, "y": 1.0, "z": 1.0}})
        table = score_phrase_table(extracted, t, t)
        assert table.scores(("a",), ("x",))[0] == pytest.approx(0.5)
        assert table.scores(("a",), ("y",))[0] == pytest.approx(0.25)

    def test_forward_scores_sum_to_one(self):
        rng = random.Random(9)
        link = frozenset({(0, 0)})
        extracted = []
        for _ in range(60):
            s = f"s{rng.randint(0, 3)}"
            t = f"t{rng.randint(0, 3)}"
            extracted.append(PhrasePair((s,), (t,), link))
        t_table = TranslationTable(
            {f"s{i}": {f"t{j}": 0.25 for j in range(4)} for i in range(4)}
        )
        table = score_phrase_table(extracted, t_table, t_table)
        by_source = {}
        for (src, tgt), scores in table.records.items():
            by_source.setdefault(src, 0.0)
            by_source[src] += scores[0]
        for total in by_source.values():
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_single_word_lexical_weight(self):
        extracted = [PhrasePair(("la",), ("the",), frozenset({(0, 0)}))]
        fwd = TranslationTable({"la": {"the": 0.9, "a": 0.1}})
        bwd = TranslationTable({"the": {"la": 0.8, "le": 0.2}})
        table = score_phrase_table(extracted, fwd, bwd)
        scores = table.scores(("la",), ("the",))
        assert scores[2] == pytest.approx(0.9)
        assert scores[3] == pytest.approx(0.8)

    def test_unaligned_word_uses_null(self):
        extracted = [PhrasePair(("la",), ("the", "dot"), frozenset({(0, 0)}))]
        fwd = TranslationTable({"la": {"the": 0.9}, NULL_TOKEN: {"dot": 0.25}})
        bwd = TranslationTable({"the": {"la": 1.0}, "dot": {"la": 1.0}})
        table = score_phrase_table(extracted, fwd, bwd)
        scores = table.scores(("la",), ("the", "dot"))
        assert scores[2] == pytest.approx(0.9 * 0.25)

    def test_multiply_aligned_word_averages(self):
        extracted = [
            PhrasePair(("a", "b"), ("x",), frozenset({(0, 0), (1, 0)}))
        ]
        fwd = TranslationTable({"a": {"x": 0.4}, "b": {"x": 0.8}})
        bwd = TranslationTable({"x": {"a": 0.5, "b": 0.5}})
        table = score_phrase_table(extracted, fwd, bwd)
        scores = table.scores(("a", "b"), ("x",))
        assert scores[2] == pytest.approx((0.4 + 0.8) / 2)

    def test_scores_in_unit_interval(self):
        corpus = make_corpus([("a b", "x y"), ("a", "x"), ("b", "y")])
        from lexsmt.align import train_model1, align_corpus

        fwd = train_model1(corpus, 5)
        bwd = train_model1(corpus.swapped(), 5)
        table = build_phrase_table(corpus, align_corpus(corpus, fwd, bwd), fwd, bwd)
        assert len(table) > 0
        for scores in table.records.values():
            for s in scores:
                assert 0.0 < s <= 1.0


class TestSerialization:
    def test_round_trip(self, tmp_path):
        records = {
            (("a",), ("x",)): (0.5, 1.0, 0.25, 0.75),
            (("a", "b"), ("x", "y")): (0.5, 0.5, 0.0625, 0.3),
        }
        table = PhraseTable(records)
        table.save(tmp_path / "pt.txt")
        loaded = PhraseTable.load(tmp_path / "pt.txt")
        assert loaded.records == records

    def test_sorted_and_formatted(self, tmp_path):
        table = PhraseTable({(("b",), ("y",)): (1.0, 1.0, 1.0, 1.0),
                             (("a",), ("x",)): (0.5, 1.0, 1.0, 1.0)})
        table.save(tmp_path / "pt.txt")
        lines = (tmp_path / "pt.txt").read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("a ||| x ||| 0.5 ")
        assert lines[1].startswith("b ||| y ||| ")


def test_augmented_multiword_entry_becomes_a_phrase():
    # Appending a resource pair to training guarantees the pair itself
    # is learnable as a phrase: its words co-occur only there, align
    # monotonically, and the whole block is consistent.
    from lexsmt.align import align_corpus, train_model1
    from lexsmt.lexicon import PairEntry, ResourceSet, augment_corpus

    corpus = make_corpus([("a b", "x y"), ("b c", "y z"), ("a", "x")])
    resources = ResourceSet()
    entry = PairEntry(("p", "q", "r"), ("u", "v"), "verb_phrase")
    resources.add(entry)
    augmented = augment_corpus(corpus, resources)
    fwd = train_model1(augmented, 5)
    bwd = train_model1(augmented.swapped(), 5)
    table = build_phrase_table(
        augmented, align_corpus(augmented, fwd, bwd), fwd, bwd, 4
    )
    assert table.scores(entry.source_expr, entry.target_expr) is not None


def test_min_count_pruning():
    from lexsmt.align import align_corpus, train_model1

    corpus = make_corpus([("a b", "x y")] * 3 + [("a c", "x z")])
    fwd = train_model1(corpus, 5)
    bwd = train_model1(corpus.swapped(), 5)
    alignments = align_corpus(corpus, fwd, bwd)
    full = build_phrase_table(corpus, alignments, fwd, bwd, 2)
    pruned = build_phrase_table(corpus, alignments, fwd, bwd, 2, min_count=2)
    assert len(pruned) < len(full)
    assert all(key in full.records for key in pruned.records)

import math

import pytest

from lexsmt.errors import TrainingError
from lexsmt.lm import (
    BOS,
    EOS,
    DEFAULT_EOS_SHARE,
    DEFAULT_UNKNOWN_SHARE,
    NGramModel,
    score_sequence,
    train_lm,
)

import oracles

SCALE = 1.0 - DEFAULT_UNKNOWN_SHARE - DEFAULT_EOS_SHARE


@pytest.fixture(scope="module")
def aba_unigram():
    return train_lm([("a", "b", "a")], order=1)


@pytest.fixture(scope="module")
def aba_bigram():
    return train_lm([("a", "b", "a")], order=2, lambdas=0.6)


class TestUnigram:
    def test_add_one_estimate(self, aba_unigram):
        # Hand count: (2+1)/(3+2) = 0.6, scaled by the reserved floor mass.
        assert aba_unigram.unigram_prob("a") == pytest.approx(0.6 * SCALE, abs=1e-12)
        assert aba_unigram.unigram_prob("a") == pytest.approx(0.6, abs=1e-5)
        assert aba_unigram.unigram_prob("b") == pytest.approx(0.4 * SCALE, abs=1e-12)

    def test_unknown_floor_share(self, aba_unigram):
        assert aba_unigram.unigram_prob("zzz") == DEFAULT_UNKNOWN_SHARE

    def test_end_marker_floor(self, aba_unigram):
        assert aba_unigram.unigram_prob(EOS) == DEFAULT_EOS_SHARE


class TestBigram:
    def test_interpolated_conditional(self, aba_bigram):
        # 0.6 * ML(b|a) + 0.4 * p_uni(b) = 0.6*0.5 + 0.4*0.4*scale.
        expected = 0.6 * 0.5 + 0.4 * (0.4 * SCALE)
        assert aba_bigram.cond_prob("b", ("a",)) == pytest.approx(expected, abs=1e-12)
        assert aba_bigram.cond_prob("b", ("a",)) == pytest.approx(0.46, abs=1e-5)

    def test_unseen_context_backs_off(self, aba_bigram):
        assert aba_bigram.cond_prob("a", ("zzz",)) == pytest.approx(
            aba_bigram.unigram_prob("a"), abs=1e-15
        )

    def test_sequence_score_matches_hand_sum(self, aba_bigram):
        # p(a|<s>) p(b|a) p(a|b) p(</s>|a), each interpolated by hand.
        uni_a = 0.6 * SCALE
        uni_b = 0.4 * SCALE
        expected = (
            math.log(0.6 * 1.0 + 0.4 * uni_a)
            + math.log(0.6 * 0.5 + 0.4 * uni_b)
            + math.log(0.6 * 1.0 + 0.4 * uni_a)
            + math.log(0.6 * 0.5 + 0.4 * DEFAULT_EOS_SHARE)
        )
        assert score_sequence(aba_bigram, ("a", "b", "a")) == pytest.approx(
            expected, abs=1e-12
        )
        assert score_sequence(aba_bigram, ("a", "b", "a")) == pytest.approx(
            oracles.lm_sequence_logprob(aba_bigram, ("a", "b", "a")), abs=1e-12
        )


class TestScoring:
    def test_empty_sequence_is_boundary_only(self, aba_bigram):
        expected = math.log(aba_bigram.cond_prob(EOS, (BOS,)))
        assert score_sequence(aba_bigram, ()) == pytest.approx(expected)
        assert math.isfinite(score_sequence(aba_bigram, ()))

    def test_finite_for_any_input(self):
        model = train_lm([("a", "b"), ("b", "c", "a")], order=3)
        for seq in [(), ("zzz",), ("zzz", "qqq", "zzz"), ("a",) * 30, ("a", "zzz", "b")]:
            assert math.isfinite(score_sequence(model, seq))

    def test_unseen_word_scores_below_known(self):
        model = train_lm(
            [("a", "b", "c"), ("a", "c", "b"), ("b", "a", "c")], order=3
        )
        known = score_sequence(model, ("a", "b", "c"))
        unk = score_sequence(model, ("a", "zzz", "c"))
        assert known >= unk

    def test_normalization_over_vocab(self):
        model = train_lm([("a", "b", "a"), ("b", "c")], order=3)
        histories = [
            (BOS, BOS),
            (BOS, "a"),
            ("a", "b"),
            ("b", "a"),
            ("zzz", "qqq"),
            ("c", "zzz"),
        ]
        support = sorted(model.vocab) + [EOS, "unseen-word"]
        for history in histories:
            total = sum(model.cond_prob(w, history) for w in support)
            assert total == pytest.approx(1.0, abs=1e-6)


class TestTraining:
    def test_empty_corpus_rejected(self):
        with pytest.raises(TrainingError):
            train_lm([], order=2)

    def test_bad_order_and_lambdas(self):
        with pytest.raises(TrainingError):
            train_lm([("a",)], order=0)
        with pytest.raises(TrainingError):
            train_lm([("a",)], order=3, lambdas=(0.5,))
        with pytest.raises(TrainingError):
            train_lm([("a",)], order=2, lambdas=1.5)

    def test_save_load_round_trip(self, tmp_path):
        model = train_lm([("a", "b", "a"), ("b", "c")], order=3)
        model.save(tmp_path / "lm.tsv")
        loaded = NGramModel.load(tmp_path / "lm.tsv")
        assert loaded.order == model.order
        assert loaded.lambdas == model.lambdas
        assert loaded.vocab == model.vocab
        for history in [(BOS, BOS), ("a", "b"), ("zzz", "zzz")]:
            for w in ["a", "b", "c", EOS, "unk-w"]:
                assert loaded.cond_prob(w, history) == pytest.approx(
                    model.cond_prob(w, history), abs=1e-12
                )

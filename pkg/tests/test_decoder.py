import random

import pytest

from lexsmt.corpus import tokenize
from lexsmt.decoder import (
    FEATURE_NAMES,
    WeightVector,
    decode,
    decode_detailed,
    decode_nbest,
    recompute_features,
    save_nbest,
    search,
)
from lexsmt.errors import ContractError
from lexsmt.lm import train_lm
from lexsmt.phrases import PhraseTable

import oracles


def random_instance(rng, max_src=4, max_options=3, allow_oov=True):
    n = rng.randint(1, max_src)
    sentence = [f"w{i}" for i in range(n)]
    tgt_vocab = [f"v{k}" for k in range(8)]
    records = {}
    for i, w in enumerate(sentence):
        if allow_oov and rng.random() < 0.15:
            continue
        for _ in range(rng.randint(1, max_options)):
            tgt = tuple(rng.sample(tgt_vocab, rng.randint(1, 2)))
            records[((w,), tgt)] = tuple(rng.uniform(0.05, 1.0) for _ in range(4))
    if n >= 2 and rng.random() < 0.5:
        i = rng.randrange(n - 1)
        span = (sentence[i], sentence[i + 1])
        tgt = tuple(rng.sample(tgt_vocab, rng.randint(1, 3)))
        records[(span, tgt)] = tuple(rng.uniform(0.05, 1.0) for _ in range(4))
    table = PhraseTable(records)
    lm = train_lm(
        [tuple(rng.choices(tgt_vocab, k=rng.randint(3, 8))) for _ in range(6)],
        order=rng.choice((2, 3)),
    )
    weights = WeightVector(tuple(rng.uniform(0.2, 1.5) for _ in range(7)))
    return sentence, table, lm, weights


@pytest.fixture(scope="module")
def simple_models():
    table = PhraseTable({(("w",), ("v",)): (1.0, 1.0, 1.0, 1.0)})
    lm = train_lm([("v",)], order=2)
    return table, lm


class TestDecodeBasics:
    def test_single_entry(self, simple_models):
        table, lm = simple_models
        assert decode(["w"], table, lm) == ["v"]

    def test_oov_copied_verbatim(self, simple_models):
        table, lm = simple_models
        out = decode(["w", "mystery"], table, lm, distortion_limit=0)
        assert "mystery" in out

    def test_mark_unk_rendering(self, simple_models):
        table, lm = simple_models
        d = decode_detailed(["w", "mystery"], table, lm, distortion_limit=0)
        assert d.render() == "v mystery"
        assert d.render(mark_unk=True) == "v |UNK|"

    def test_devanagari_unk_pass_through(self):
        table = PhraseTable({
            (("तो",), ("वह",)): (1.0, 1.0, 1.0, 1.0),
            (("घरी",), ("घर",)): (1.0, 1.0, 1.0, 1.0),
            (("जाई",), ("जाता",)): (1.0, 1.0, 1.0, 1.0),
            ((".",), ("।",)): (1.0, 1.0, 1.0, 1.0),
        })
        lm = train_lm([("वह", "घर", "जाता", "।")], order=3)
        src = tokenize("तो घरी जाणाऱ्यांबरोबर जाई.")
        d = decode_detailed(src, table, lm, distortion_limit=0)
        assert d.render() == "वह घर जाणाऱ्यांबरोबर जाता ।"
        assert d.render(mark_unk=True) == "वह घर |UNK| जाता ।"

    def test_empty_sentence(self, simple_models):
        table, lm = simple_models
        assert decode([], table, lm) == []

    def test_all_unk_worst_case(self, simple_models):
        table, lm = simple_models
        out = decode(["x", "y", "z"], table, lm, distortion_limit=0)
        assert out == ["x", "y", "z"]

    def test_bad_beam(self, simple_models):
        table, lm = simple_models
        with pytest.raises(ContractError):
            decode(["w"], table, lm, beam=0)


class TestExactness:
    def test_matches_exhaustive_enumeration(self):
        rng = random.Random(1234)
        for case in range(60):
            sentence, table, lm, weights = random_instance(rng)
            expected = oracles.enumerate_derivations(sentence, table, lm, weights)
            got = decode_nbest(
                sentence, table, lm, weights, n=5, beam=10**6, distortion_limit=None
            )
            assert [d.tokens for d in got] == [tokens for tokens, _, _ in expected[:5]]
            for d, (tokens, feats, score) in zip(got, expected):
                assert d.score == pytest.approx(score, abs=1e-9)
                assert d.features == pytest.approx(feats, abs=1e-9)

    def test_matches_enumeration_with_distortion_limit(self):
        rng = random.Random(77)
        for case in range(25):
            sentence, table, lm, weights = random_instance(rng, allow_oov=False)
            for dlimit in (0, 1):
                expected = oracles.enumerate_derivations(
                    sentence, table, lm, weights, distortion_limit=dlimit
                )
                got = decode_nbest(
                    sentence, table, lm, weights, n=3, beam=10**6,
                    distortion_limit=dlimit,
                )
                assert [d.tokens for d in got] == [t for t, _, _ in expected[:3]]

    def test_nbest_contracts(self):
        rng = random.Random(55)
        sentence, table, lm, weights = random_instance(rng, max_src=3)
        nbest = decode_nbest(sentence, table, lm, weights, n=10, beam=10**6,
                             distortion_limit=None)
        scores = [d.score for d in nbest]
        assert scores == sorted(scores, reverse=True)
        assert len({d.tokens for d in nbest}) == len(nbest)
        top = decode_nbest(sentence, table, lm, weights, n=1, beam=10**6,
                           distortion_limit=None)
        assert top[0].tokens == nbest[0].tokens
        assert top[0].tokens == tuple(
            decode(sentence, table, lm, weights, beam=10**6, distortion_limit=None)
        )


class TestInvariants:
    def test_weight_scaling_keeps_argmax(self):
        rng = random.Random(99)
        for _ in range(20):
            sentence, table, lm, weights = random_instance(rng)
            base = decode(sentence, table, lm, weights, beam=50, distortion_limit=None)
            for factor in (2.0, 0.25, 3.7):
                scaled = decode(
                    sentence, table, lm, weights.scaled(factor), beam=50,
                    distortion_limit=None,
                )
                assert scaled == base

    def test_beam_monotone_model_score(self):
        rng = random.Random(314)
        for _ in range(15):
            sentence, table, lm, weights = random_instance(rng)
            best = None
            for beam in (1, 2, 4, 16, 256):
                d = decode_detailed(
                    sentence, table, lm, weights, beam=beam, distortion_limit=None
                )
                if best is not None:
                    assert d.score >= best - 1e-12
                best = d.score

    def test_feature_additivity_exact(self):
        rng = random.Random(2718)
        for _ in range(20):
            sentence, table, lm, weights = random_instance(rng)
            lattice = search(sentence, table, lm, weights, beam=100,
                             distortion_limit=None)
            best = lattice.best()
            recomputed = recompute_features(
                lattice.best_options(), len(sentence), lm
            )
            assert recomputed == best.features  # bit-exact

    def test_monotone_dictionary_substitution(self):
        words = {f"w{i}": f"v{i}" for i in range(6)}
        records = {
            ((s,), (t,)): (1.0, 1.0, 1.0, 1.0) for s, t in words.items()
        }
        table = PhraseTable(records)
        lm = train_lm([tuple(words.values())], order=2)
        rng = random.Random(4)
        for _ in range(10):
            src = rng.choices(sorted(words), k=rng.randint(1, 7))
            out = decode(src, table, lm, distortion_limit=0)
            assert out == [words[s] for s in src]


class TestWeights:
    def test_round_trip(self, tmp_path):
        w = WeightVector(tuple(float(i) / 7 for i in range(7)))
        w.save(tmp_path / "w.tsv")
        assert WeightVector.load(tmp_path / "w.tsv") == w

    def test_dimension_enforced(self):
        with pytest.raises(ContractError):
            WeightVector((1.0, 2.0))

    def test_finiteness_enforced(self):
        with pytest.raises(ContractError):
            WeightVector((float("inf"),) + (1.0,) * 6)
        with pytest.raises(ContractError):
            WeightVector((float("nan"),) + (1.0,) * 6)

    def test_dot(self):
        w = WeightVector((1.0,) * 7)
        assert w.dot(tuple(range(7))) == sum(range(7))


def test_save_nbest_format(tmp_path, simple_models):
    table, lm = simple_models
    lists = [decode_nbest(["w"], table, lm, n=1)]
    path = tmp_path / "nbest.txt"
    save_nbest(lists, path)
    line = path.read_text(encoding="utf-8").splitlines()[0]
    fields = line.split(" ||| ")
    assert fields[0] == "0"
    assert fields[1] == "v"
    assert len(fields[2].split()) == len(FEATURE_NAMES)
    float(fields[3])


def test_distortion_limit_fallback(simple_models):
    # A tight beam plus hard limit can strand the search; decode must
    # still return something for every sentence.
    rng = random.Random(8)
    for _ in range(10):
        sentence, table, lm, weights = random_instance(rng, max_src=4)
        out = decode(sentence, table, lm, weights, beam=1, distortion_limit=1)
        assert out

"""Bundled fixtures: sample lexical resources and synthetic corpora.

The synthetic world is a pair of made-up languages with a bijective
core dictionary. The source language glues case suffixes onto nouns;
the target language expresses them as standalone function words.
Extra vocabulary strata are reachable only through the lexical
resources, so the staged experiment ladder has something to gain at
every step: unseen fused forms need suffix splitting, and three
resource strata (synonym rows, function/kridanta words, verb phrases)
cover words absent from the base corpus.
"""

from __future__ import annotations

import random
from collections import Counter
from pathlib import Path

from .corpus import ParallelCorpus, SentencePair

DATA_DIR = Path(__file__).parent / "data"

SUFFIX_RULE_FILE = DATA_DIR / "suffix_rules_mr.tsv"
SYNSET_FILE = DATA_DIR / "synsets_hi_mr.tsv"
KRIDANTA_FILE = DATA_DIR / "kridanta_pairs_hi_mr.tsv"
FUNCTION_WORD_FILE = DATA_DIR / "function_words_hi_mr.tsv"
VERB_PHRASE_FILE = DATA_DIR / "verb_phrases_hi_mr.tsv"

_SRC_CONS = "bdgklmnprstv"
_TGT_CONS = "cfhjrwxz"
_VOWELS = "aeiou"

SUFFIXES = ("ka", "ne", "su", "mo")


def _make_word(rng, consonants, syllables):
    return "".join(
        rng.choice(consonants) + rng.choice(_VOWELS) for _ in range(syllables)
    )


def _fresh_word(rng, used, consonants, syllables=2, forbid_endings=()):
    while True:
        word = _make_word(rng, consonants, syllables)
        if word in used:
            continue
        if any(word.endswith(e) for e in forbid_endings):
            continue
        used.add(word)
        return word


class SyntheticWorld:
    """Deterministic vocabulary and sentence generator for one seed."""

    def __init__(self, seed: int = 42):
        rng = random.Random(seed)
        self.rng = rng
        used_src: set[str] = set(SUFFIXES)
        used_tgt: set[str] = set()

        def src_word(syllables=2):
            return _fresh_word(rng, used_src, _SRC_CONS, syllables, SUFFIXES)

        def tgt_word(syllables=2):
            return _fresh_word(rng, used_tgt, _TGT_CONS, syllables)

        self.dictionary: dict[str, str] = {}
        self.nouns = []
        for _ in range(18):
            s = src_word()
            self.nouns.append(s)
            self.dictionary[s] = tgt_word()
        self.verbs = []
        for _ in range(10):
            s = src_word(3)
            self.verbs.append(s)
            self.dictionary[s] = tgt_word(3)
        self.adjectives = []
        for _ in range(6):
            s = src_word()
            self.adjectives.append(s)
            self.dictionary[s] = tgt_word()
        self.core = self.nouns + self.verbs + self.adjectives

        self.suffix_map = {suf: tgt_word(1) for suf in SUFFIXES}

        # Resource strata: absent from the base corpus by construction.
        self.syn_single = {}  # test-visible rows with a single member
        for _ in range(5):
            self.syn_single[src_word(3)] = tgt_word(3)
        self.syn_multi = {}
        for _ in range(3):
            self.syn_multi[src_word(3)] = [tgt_word(3) for _ in range(rng.randint(2, 3))]
        self.function_pairs = [(src_word(1), tgt_word(1)) for _ in range(6)]
        self.verb_phrases = []
        for _ in range(5):
            length = rng.randint(2, 3)
            src_expr = tuple(src_word() for _ in range(length))
            tgt_expr = tuple(tgt_word() for _ in range(length))
            self.verb_phrases.append((src_expr, tgt_expr))
        self.junk_src = [src_word() for _ in range(10)]
        self.junk_tgt = [tgt_word() for _ in range(10)]

        combos = [(n, s) for n in self.nouns for s in SUFFIXES]
        rng.shuffle(combos)
        # Every suffix must occur in training so its split form aligns;
        # trade over-represented suffixes for missing ones.
        counts = Counter(s for _, s in combos[:40])
        for suffix in SUFFIXES:
            if counts[suffix] == 0:
                donor = counts.most_common(1)[0][0]
                evict = next(k for k in range(40) if combos[k][1] == donor)
                take = next(
                    k for k in range(40, len(combos)) if combos[k][1] == suffix
                )
                combos[evict], combos[take] = combos[take], combos[evict]
                counts[donor] -= 1
                counts[suffix] += 1
        self.train_combos = combos[:40]
        self.test_combos = combos[40:55]
        self.tune_combos = combos[55:65]

    def fused(self, noun, suffix) -> str:
        return noun + suffix

    def sentence(self, length=None, combos=()):
        """Random core sentence; each item of `combos` is fused in.

        Sentences are built from aligned items so the target side stays
        the exact word-for-word translation.
        """
        rng = self.rng
        length = length or rng.randint(4, 8)
        items = []
        for _ in range(length):
            word = rng.choice(self.core)
            items.append(([word], [self.dictionary[word]]))
        for noun, suffix in combos:
            pos = rng.randrange(len(items) + 1)
            items.insert(
                pos,
                (
                    [self.fused(noun, suffix)],
                    [self.dictionary[noun], self.suffix_map[suffix]],
                ),
            )
        src = [tok for s, _ in items for tok in s]
        tgt = [tok for _, t in items for tok in t]
        return src, tgt


def _write_lines(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


def generate_copy_corpus(
    seed: int = 0,
    vocab_size: int = 30,
    train_size: int = 500,
    test_size: int = 50,
) -> tuple[ParallelCorpus, ParallelCorpus]:
    """Unambiguous 1:1 dictionary world for exactness checks.

    Every test word occurs in training, so a correctly trained pipeline
    can reproduce the references verbatim.
    """
    rng = random.Random(seed)
    used_src: set[str] = set()
    used_tgt: set[str] = set()
    words = [
        (
            _fresh_word(rng, used_src, _SRC_CONS),
            _fresh_word(rng, used_tgt, _TGT_CONS),
        )
        for _ in range(vocab_size)
    ]

    def make_pairs(count, start_id=0, min_len=4, max_len=9):
        pairs = []
        for k in range(count):
            length = rng.randint(min_len, max_len)
            chosen = [rng.choice(words) for _ in range(length)]
            # Guarantee full vocabulary coverage early in training.
            if k < len(words):
                chosen[0] = words[k]
            pairs.append(
                SentencePair(
                    start_id + k,
                    tuple(s for s, _ in chosen),
                    tuple(t for _, t in chosen),
                    "copy",
                )
            )
        return pairs

    train = ParallelCorpus(make_pairs(train_size), "copy-train", "src-tgt")
    test = ParallelCorpus(make_pairs(test_size), "copy-test", "src-tgt")
    return train, test


def generate_experiment_fixture(out_dir, seed: int = 42) -> Path:
    """Materialize corpora, resources and a matrix file; returns the matrix path.

    Forward direction translates the suffix-fusing language into the
    analytic one; the reverse direction flips every file and splits the
    target side instead.
    """
    out = Path(out_dir)
    world = SyntheticWorld(seed)
    rng = world.rng

    clean_src, clean_tgt = [], []
    for _ in range(435):
        combos = []
        if rng.random() < 0.55:
            combos.append(rng.choice(world.train_combos))
        src, tgt = world.sentence(combos=combos)
        clean_src.append(" ".join(src))
        clean_tgt.append(" ".join(tgt))
    # Guarantee every core word appears alone and every training combo occurs.
    for word in world.core:
        src, tgt = world.sentence(length=3)
        src.append(word)
        tgt.append(world.dictionary[word])
        clean_src.append(" ".join(src))
        clean_tgt.append(" ".join(tgt))
    for combo in world.train_combos:
        src, tgt = world.sentence(length=3, combos=[combo])
        clean_src.append(" ".join(src))
        clean_tgt.append(" ".join(tgt))

    # Damage: misaligned targets (patched later), empty, overlong and
    # ratio-violating pairs built from junk vocabulary. Misalignment is
    # heavy enough to visibly degrade the models trained without cleaning.
    records = [
        {"src": s, "tgt": t, "patch": None} for s, t in zip(clean_src, clean_tgt)
    ]
    tgt_vocab = sorted(
        set(world.dictionary.values()) | set(world.suffix_map.values())
    )
    wrong_ids = rng.sample(range(len(records)), 120)
    for rid in wrong_ids:
        salad = rng.choices(tgt_vocab, k=len(records[rid]["tgt"].split()))
        records[rid] = {
            "src": records[rid]["src"],
            "tgt": " ".join(salad),
            "patch": records[rid]["tgt"],
        }
    junk_pairs = []
    for _ in range(8):
        junk_pairs.append((" ".join(rng.choices(world.junk_src, k=4)), ""))
    for _ in range(6):
        junk_pairs.append(
            (
                " ".join(rng.choices(world.junk_src, k=8)),
                " ".join(rng.choices(world.junk_tgt, k=85)),
            )
        )
    for _ in range(8):
        junk_pairs.append(
            (
                " ".join(rng.choices(world.junk_src, k=12)),
                " ".join(rng.choices(world.junk_tgt, k=2)),
            )
        )
    for src, tgt in junk_pairs:
        records.insert(rng.randrange(len(records) + 1), {"src": src, "tgt": tgt, "patch": None})

    train_src = [r["src"] for r in records]
    train_tgt = [r["tgt"] for r in records]
    patches_fwd = [
        f"{i}\ttgt\t{r['patch']}" for i, r in enumerate(records) if r["patch"]
    ]
    patches_rev = [
        f"{i}\tsrc\t{r['patch']}" for i, r in enumerate(records) if r["patch"]
    ]

    # The tuning set mirrors the test distribution: plain core sentences
    # plus sentences exercising every resource stratum, so tuned weights
    # face the same coverage trade-offs the test set will.
    tune_src, tune_tgt = [], []

    def add_tune(src, tgt):
        tune_src.append(" ".join(src))
        tune_tgt.append(" ".join(tgt))

    for _ in range(24):
        combos = [rng.choice(world.train_combos)] if rng.random() < 0.4 else []
        src, tgt = world.sentence(combos=combos)
        add_tune(src, tgt)
    for k in range(14):
        src, tgt = world.sentence(length=5, combos=[world.tune_combos[k % len(world.tune_combos)]])
        add_tune(src, tgt)
    syn_words_tune = sorted(world.syn_single)
    for k in range(14):
        word = syn_words_tune[k % len(syn_words_tune)]
        src, tgt = world.sentence(length=5)
        pos = rng.randrange(len(src) + 1)
        src.insert(pos, word)
        tgt.insert(pos, world.syn_single[word])
        add_tune(src, tgt)
    for k in range(14):
        f_src, f_tgt = world.function_pairs[k % len(world.function_pairs)]
        src, tgt = world.sentence(length=5)
        pos = rng.randrange(len(src) + 1)
        src.insert(pos, f_src)
        tgt.insert(pos, f_tgt)
        add_tune(src, tgt)
    for k in range(14):
        vp_src, vp_tgt = world.verb_phrases[k % len(world.verb_phrases)]
        src, tgt = world.sentence(length=5)
        pos = rng.randrange(len(src) + 1)
        src[pos:pos] = list(vp_src)
        tgt[pos:pos] = list(vp_tgt)
        add_tune(src, tgt)

    test_src, test_tgt = [], []

    def add_test(src, tgt):
        test_src.append(" ".join(src))
        test_tgt.append(" ".join(tgt))

    for combo in world.test_combos:
        src, tgt = world.sentence(length=5, combos=[combo])
        add_test(src, tgt)
    syn_words = sorted(world.syn_single)
    for k in range(15):
        word = syn_words[k % len(syn_words)]
        src, tgt = world.sentence(length=5)
        pos = rng.randrange(len(src) + 1)
        src.insert(pos, word)
        tgt.insert(pos, world.syn_single[word])
        add_test(src, tgt)
    for k in range(15):
        f_src, f_tgt = world.function_pairs[k % len(world.function_pairs)]
        src, tgt = world.sentence(length=5)
        pos = rng.randrange(len(src) + 1)
        src.insert(pos, f_src)
        tgt.insert(pos, f_tgt)
        add_test(src, tgt)
    for k in range(15):
        vp_src, vp_tgt = world.verb_phrases[k % len(world.verb_phrases)]
        src, tgt = world.sentence(length=5)
        pos = rng.randrange(len(src) + 1)
        src[pos:pos] = list(vp_src)
        tgt[pos:pos] = list(vp_tgt)
        add_test(src, tgt)

    _write_lines(out / "train.nor", train_src)
    _write_lines(out / "train.sar", train_tgt)
    _write_lines(out / "tune.nor", tune_src)
    _write_lines(out / "tune.sar", tune_tgt)
    _write_lines(out / "test.nor", test_src)
    _write_lines(out / "test.sar", test_tgt)
    _write_lines(out / "patches.fwd.tsv", patches_fwd)
    _write_lines(out / "patches.rev.tsv", patches_rev)

    rules = [f"suffix\t{suf}\t{suf}\t2" for suf in SUFFIXES]
    _write_lines(out / "suffix_rules.tsv", rules)

    synsets_fwd = [
        f"{word}\t{target}" for word, target in sorted(world.syn_single.items())
    ]
    synsets_fwd += [
        word + "\t" + "\t".join(targets)
        for word, targets in sorted(world.syn_multi.items())
    ]
    synsets_rev = [
        f"{target}\t{word}" for word, target in sorted(world.syn_single.items())
    ]
    synsets_rev += [
        f"{target}\t{word}"
        for word, targets in sorted(world.syn_multi.items())
        for target in targets
    ]
    _write_lines(out / "synsets.fwd.tsv", synsets_fwd)
    _write_lines(out / "synsets.rev.tsv", synsets_rev)

    func = world.function_pairs
    _write_lines(out / "function_words.fwd.tsv", [f"{s}\t{t}" for s, t in func[:3]])
    _write_lines(out / "function_words.rev.tsv", [f"{t}\t{s}" for s, t in func[:3]])
    _write_lines(out / "kridanta.fwd.tsv", [f"{s}\t{t}" for s, t in func[3:]])
    _write_lines(out / "kridanta.rev.tsv", [f"{t}\t{s}" for s, t in func[3:]])
    _write_lines(
        out / "verb_phrases.fwd.tsv",
        [f"{' '.join(s)}\t{' '.join(t)}" for s, t in world.verb_phrases],
    )
    _write_lines(
        out / "verb_phrases.rev.tsv",
        [f"{' '.join(t)}\t{' '.join(s)}" for s, t in world.verb_phrases],
    )

    matrix = f"""\
# Synthetic experiment fixture
[matrix]
seed = {seed}
stages = "uncleaned,cleaned,suffix_split,wordnet,function_kridanta,verb_phrases"
tuning = "off,on"
em_iterations = 5
lm_order = 3
max_phrase_len = 5
beam = 20
distortion_limit = 6
tune_iterations = 3
tune_nbest = 50
tune_restarts = 2

[direction.fwd]
label = "nor-sar"
train_source = "train.nor"
train_target = "train.sar"
tune_source = "tune.nor"
tune_target = "tune.sar"
test_source = "test.nor"
test_target = "test.sar"
patches = "patches.fwd.tsv"
suffix_rules = "suffix_rules.tsv"
split_side = "src"
synsets = "synsets.fwd.tsv"
pairs = "function_words.fwd.tsv:function_word,kridanta.fwd.tsv:kridanta"
verb_phrases = "verb_phrases.fwd.tsv"

[direction.rev]
label = "sar-nor"
train_source = "train.sar"
train_target = "train.nor"
tune_source = "tune.sar"
tune_target = "tune.nor"
test_source = "test.sar"
test_target = "test.nor"
patches = "patches.rev.tsv"
suffix_rules = "suffix_rules.tsv"
split_side = "tgt"
synsets = "synsets.rev.tsv"
pairs = "function_words.rev.tsv:function_word,kridanta.rev.tsv:kridanta"
verb_phrases = "verb_phrases.rev.tsv"
"""
    matrix_path = out / "matrix.cfg"
    matrix_path.write_text(matrix, encoding="utf-8")
    return matrix_path

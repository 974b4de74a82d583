"""Desk-scale phrase-based statistical machine translation toolkit.

Pipeline pieces: corpus ingestion and cleaning, suffix splitting,
lexical-resource augmentation, EM word alignment, phrase extraction
and scoring, n-gram language modeling, beam-search decoding, weight
tuning, and BLEU/METEOR/TER evaluation, plus an experiment runner for
the staged configuration ladder.
"""

from .align import (
    AlignmentSet,
    TranslationTable,
    align_corpus,
    symmetrize,
    train_model1,
    viterbi_align,
)
from .corpus import (
    CleanReport,
    ParallelCorpus,
    PatchSet,
    SentencePair,
    clean_corpus,
    ingest_parallel,
    load_corpus,
    load_manifest,
    load_patches,
    partition_corpus,
    save_corpus,
    tokenize,
)
from .decoder import (
    Derivation,
    WeightVector,
    decode,
    decode_detailed,
    decode_nbest,
)
from .errors import LexsmtError
from .experiment import (
    ExperimentConfig,
    RunReport,
    RunRow,
    emit_report,
    run_matrix,
    run_pipeline,
)
from .lexicon import (
    PairEntry,
    ResourceSet,
    SynsetRow,
    augment_corpus,
    expand_synset_row,
    expand_synsets,
    load_pair_resource,
    load_synsets,
    synonym_set,
)
from .lm import NGramModel, score_sequence, train_lm
from .mert import NBestPool, TuneTrace, optimize_on_pool, tune_weights
from .metrics import (
    EvalScores,
    SubjectiveRatings,
    aggregate_subjective,
    corpus_bleu,
    evaluate_corpus,
    meteor_lite,
    sentence_bleu,
    ter,
)
from .morph import SuffixRule, SuffixTable, load_rules, split_corpus, split_token
from .phrases import PhrasePair, PhraseTable, build_phrase_table, extract_phrases, score_phrase_table

__version__ = "0.1.0"

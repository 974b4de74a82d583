"""Command line interface: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fixtures
from .corpus import (
    DEFAULT_MAX_LEN,
    DEFAULT_MAX_RATIO,
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
    DEFAULT_BEAM,
    DEFAULT_DISTORTION_LIMIT,
    WeightVector,
    decode_nbest,
    save_nbest,
)
from .errors import LexsmtError
from .experiment import run_matrix
from .lexicon import (
    ResourceSet,
    augment_corpus,
    expand_synsets,
    load_pair_resource,
    load_synsets,
    synonym_set,
)
from .lm import DEFAULT_ORDER, NGramModel, train_lm
from .metrics import (
    aggregate_subjective,
    bootstrap_bleu,
    evaluate_corpus,
    load_subjective,
    meteor_lite,
    sentence_bleu,
    ter,
)
from .mert import DEFAULT_NBEST, DEFAULT_OUTER_ITERATIONS, DEFAULT_RESTARTS, tune_weights
from .morph import load_rules, split_corpus
from .phrases import PhraseTable
from ._util import fmt


def _read_sentences(path):
    text = Path(path).read_text(encoding="utf-8")
    return [tokenize(line) for line in text.splitlines()]


def _cmd_clean(args):
    if args.manifest:
        corpus = load_manifest(args.manifest)
    else:
        corpus = ingest_parallel(args.src, args.tgt, args.origin)
    patches = load_patches(args.patches) if args.patches else None
    cleaned, report = clean_corpus(corpus, patches, args.max_len, args.max_ratio)
    if args.tune_size or args.test_size:
        train, tune, test = partition_corpus(cleaned, args.tune_size, args.test_size)
        save_corpus(train, Path(args.out) / "train")
        save_corpus(tune, Path(args.out) / "tune")
        save_corpus(test, Path(args.out) / "test")
    else:
        save_corpus(cleaned, args.out)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    with open(Path(args.out) / "clean_report.json", "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, sort_keys=True)
        f.write("\n")
    print(
        f"kept {report.kept} of {report.kept + report.dropped} pairs "
        f"({report.patched} patched)"
    )


def _cmd_split(args):
    table = load_rules(args.rules)
    corpus = load_corpus(args.in_dir)
    save_corpus(split_corpus(corpus, table, args.side), args.out)
    print(f"split {args.side} side of {len(corpus)} pairs")


def _cmd_augment(args):
    corpus = load_corpus(args.corpus)
    resources = ResourceSet()
    if args.synsets:
        resources.merge(expand_synsets(load_synsets(args.synsets)))
    for item in args.pairs or []:
        if ":" not in item:
            raise LexsmtError(f"--pairs needs path:category, got {item!r}")
        path, category = item.rsplit(":", 1)
        resources.merge(load_pair_resource(path, category))
    augmented = augment_corpus(corpus, resources, repeat=args.repeat)
    save_corpus(augmented, args.out)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(resources.counts().items()))
    print(f"{len(corpus)} pairs + {len(resources)} entries ({counts or 'none'})")


def _cmd_lm(args):
    sentences = _read_sentences(args.in_file)
    model = train_lm(sentences, order=args.order)
    model.save(args.out)
    print(f"trained order-{args.order} model on {len(sentences)} sentences")


def _cmd_decode(args):
    table = PhraseTable.load(args.table)
    model = NGramModel.load(args.lm)
    weights = WeightVector.load(args.weights) if args.weights else WeightVector.uniform()
    sentences = _read_sentences(args.in_file) if args.in_file else [
        tokenize(line) for line in sys.stdin
    ]
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    nbest_lists = []
    try:
        for sentence in sentences:
            derivations = decode_nbest(
                sentence,
                table,
                model,
                weights,
                n=args.nbest,
                beam=args.beam,
                distortion_limit=None if args.dlimit < 0 else args.dlimit,
            )
            nbest_lists.append(derivations)
            out.write(derivations[0].render(mark_unk=args.mark_unk) + "\n")
    finally:
        if args.out:
            out.close()
    if args.nbest_out:
        save_nbest(nbest_lists, args.nbest_out)


def _cmd_tune(args):
    table = PhraseTable.load(args.table)
    model = NGramModel.load(args.lm)
    initial = WeightVector.load(args.weights) if args.weights else None
    tuning = ingest_parallel(args.tune_src, args.tune_ref)
    weights, trace = tune_weights(
        tuning,
        table,
        model,
        initial=initial,
        outer_iterations=args.iters,
        nbest_size=args.nbest,
        restarts=args.restarts,
        seed=args.seed,
        beam=args.beam,
        distortion_limit=None if args.dlimit < 0 else args.dlimit,
    )
    weights.save(args.out)
    if args.trace:
        trace.save(args.trace)
    final = trace.rows[-1]
    print(
        f"tuned in {final.iteration} iterations; pool BLEU {final.pool_bleu:.2f} "
        f"over {final.pool_size} candidates"
    )


def _cmd_eval(args):
    hyps = _read_sentences(args.hyp)
    refs = _read_sentences(args.ref)
    synonyms = synonym_set(load_synsets(args.synsets)) if args.synsets else None
    scores = evaluate_corpus(hyps, refs, synonyms)
    summary = scores.to_dict()
    if args.subjective:
        adequacy, fluency = aggregate_subjective(load_subjective(args.subjective))
        summary["adequacy"] = adequacy
        summary["fluency"] = fluency
    if args.bootstrap:
        lo, hi = bootstrap_bleu(hyps, refs, args.bootstrap, args.seed)
        summary["bleu_ci_low"] = lo
        summary["bleu_ci_high"] = hi
    prefix = Path(args.out_prefix)
    with open(f"{prefix}.jsonl", "w", encoding="utf-8") as f:
        for i, (hyp, ref) in enumerate(zip(hyps, refs)):
            record = {
                "id": i,
                "sentence_bleu": sentence_bleu(hyp, ref),
                "meteor": meteor_lite(hyp, ref, synonyms),
                "ter": ter(hyp, ref),
            }
            f.write(json.dumps(record, sort_keys=True) + "\n")
    with open(f"{prefix}.csv", "w", encoding="utf-8") as f:
        keys = [k for k in summary if not isinstance(summary[k], list)]
        f.write(",".join(keys) + "\n")
        f.write(",".join(fmt(float(summary[k])) for k in keys) + "\n")
    print(
        f"BLEU {scores.bleu:.2f}  METEOR {scores.meteor:.3f}  TER {scores.ter:.2f}"
        + (
            f"  adequacy {summary['adequacy']:.2f}%  fluency {summary['fluency']:.2f}%"
            if args.subjective
            else ""
        )
    )


def _cmd_experiment(args):
    report = run_matrix(args.matrix, args.out)
    print(f"completed {len(report.rows)} runs; reports under {args.out}")


def _cmd_fixture(args):
    matrix = fixtures.generate_experiment_fixture(args.out, args.seed)
    print(f"fixture written; matrix at {matrix}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexsmt",
        description="Desk-scale phrase-based statistical machine translation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean", help="ingest, patch and filter a parallel corpus")
    p.add_argument("--src", help="source-side text file")
    p.add_argument("--tgt", help="target-side text file")
    p.add_argument("--manifest", help="TSV of origin, source_path, target_path")
    p.add_argument("--origin", default="", help="origin tag for --src/--tgt")
    p.add_argument("--patches", help="patch TSV: id, side, replacement")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.add_argument("--max-ratio", type=float, default=DEFAULT_MAX_RATIO)
    p.add_argument("--tune-size", type=int, default=0,
                   help="also split this many pairs off as a tuning set")
    p.add_argument("--test-size", type=int, default=0,
                   help="also split this many pairs off as a test set")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=_cmd_clean)

    p = sub.add_parser("split", help="apply suffix rules to one corpus side")
    p.add_argument("--rules", required=True)
    p.add_argument("--side", choices=("src", "tgt"), default="src")
    p.add_argument("--in", dest="in_dir", required=True, help="input corpus directory")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("augment", help="append lexical resources to a corpus")
    p.add_argument("--corpus", required=True, help="input corpus directory")
    p.add_argument("--synsets", help="synset rows file")
    p.add_argument("--pairs", action="append", help="pair file as path:category")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("lm", help="train a language model on one text file")
    p.add_argument("--order", type=int, default=DEFAULT_ORDER)
    p.add_argument("--in", dest="in_file", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lm)

    p = sub.add_parser("decode", help="translate text with trained models")
    p.add_argument("--table", required=True, help="phrase table file")
    p.add_argument("--lm", required=True, help="language model file")
    p.add_argument("--weights", help="weights file (default uniform)")
    p.add_argument("--beam", type=int, default=DEFAULT_BEAM)
    p.add_argument("--dlimit", type=int, default=DEFAULT_DISTORTION_LIMIT,
                   help="distortion limit; negative means unlimited")
    p.add_argument("--nbest", type=int, default=1)
    p.add_argument("--nbest-out", help="write an n-best file here")
    p.add_argument("--mark-unk", action="store_true",
                   help="render untranslatable tokens as |UNK|")
    p.add_argument("--in", dest="in_file", help="input text (default stdin)")
    p.add_argument("--out", help="output text (default stdout)")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("tune", help="minimum-error-rate training of weights")
    p.add_argument("--tune-src", required=True)
    p.add_argument("--tune-ref", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--lm", required=True)
    p.add_argument("--weights", help="initial weights file")
    p.add_argument("--iters", type=int, default=DEFAULT_OUTER_ITERATIONS)
    p.add_argument("--nbest", type=int, default=DEFAULT_NBEST)
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beam", type=int, default=DEFAULT_BEAM)
    p.add_argument("--dlimit", type=int, default=DEFAULT_DISTORTION_LIMIT)
    p.add_argument("--out", required=True, help="tuned weights file")
    p.add_argument("--trace", help="tuning trace CSV")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("eval", help="score hypotheses against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--synsets", help="synonym rows for METEOR matching")
    p.add_argument("--subjective", help="TSV of id, adequacy, fluency")
    p.add_argument("--bootstrap", type=int, default=0,
                   help="bootstrap resamples for a BLEU confidence interval")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", default="eval")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment", help="run a configuration matrix")
    p.add_argument("--matrix", required=True, help="matrix config file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("fixture", help="materialize the bundled synthetic fixture")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except LexsmtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

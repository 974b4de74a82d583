"""Experiment orchestration: the staged configuration ladder, with and
without tuning, in both translation directions.

Stages are cumulative. Each run cleans, splits and augments per its
stage, trains word alignment in both directions, builds a phrase table
and a language model, optionally tunes weights, decodes the test set
and evaluates it. Every run persists its artifacts under a directory
keyed by a hash of the semantic configuration, so a finished run is
reused when the matrix is re-executed into the same output directory.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import align, corpus as corpus_mod, decoder, lexicon, lm as lm_mod, mert, metrics, morph, phrases
from .errors import ConfigurationError, LexsmtError
from ._util import fmt

STAGES = (
    "uncleaned",
    "cleaned",
    "suffix_split",
    "wordnet",
    "function_kridanta",
    "verb_phrases",
)


@dataclass
class ExperimentConfig:
    direction: str
    stage: str
    tuning: bool
    seed: int
    train_source: Path
    train_target: Path
    tune_source: Path | None = None
    tune_target: Path | None = None
    test_source: Path | None = None
    test_target: Path | None = None
    patches: Path | None = None
    suffix_rules: Path | None = None
    split_side: str = "src"
    synsets: Path | None = None
    pair_files: list = field(default_factory=list)  # [(path, category)]
    verb_phrases: Path | None = None
    subjective: Path | None = None
    max_len: int = corpus_mod.DEFAULT_MAX_LEN
    max_ratio: float = corpus_mod.DEFAULT_MAX_RATIO
    em_iterations: int = align.DEFAULT_ITERATIONS
    lm_order: int = lm_mod.DEFAULT_ORDER
    max_phrase_len: int = phrases.DEFAULT_MAX_PHRASE_LEN
    beam: int = decoder.DEFAULT_BEAM
    distortion_limit: int | None = decoder.DEFAULT_DISTORTION_LIMIT
    tune_iterations: int = mert.DEFAULT_OUTER_ITERATIONS
    tune_nbest: int = mert.DEFAULT_NBEST
    tune_restarts: int = mert.DEFAULT_RESTARTS

    @property
    def stage_index(self) -> int:
        return STAGES.index(self.stage)

    def validate(self) -> None:
        if not self.stage:
            raise ConfigurationError("no stage selected")
        if self.stage not in STAGES:
            raise ConfigurationError(
                f"unknown stage {self.stage!r}; expected one of {', '.join(STAGES)}"
            )
        if self.split_side not in ("src", "tgt"):
            raise ConfigurationError("split_side must be 'src' or 'tgt'")
        required = [("train_source", self.train_source), ("train_target", self.train_target)]
        idx = self.stage_index
        if idx >= STAGES.index("suffix_split"):
            required.append(("suffix_rules", self.suffix_rules))
        if idx >= STAGES.index("wordnet"):
            required.append(("synsets", self.synsets))
        if idx >= STAGES.index("function_kridanta"):
            if not self.pair_files:
                raise ConfigurationError(
                    f"stage {self.stage} needs at least one word-pair resource"
                )
            for path, _ in self.pair_files:
                required.append(("pairs", path))
        if idx >= STAGES.index("verb_phrases"):
            required.append(("verb_phrases", self.verb_phrases))
        if self.tuning:
            required.append(("tune_source", self.tune_source))
            required.append(("tune_target", self.tune_target))
        required.append(("test_source", self.test_source))
        required.append(("test_target", self.test_target))
        for name, path in required:
            if path is None:
                raise ConfigurationError(
                    f"stage {self.stage}: missing required input {name}"
                )
            if not Path(path).exists():
                raise ConfigurationError(f"{name} file not found: {path}")

    def run_id(self) -> str:
        ident = {
            "direction": self.direction,
            "stage": self.stage,
            "tuning": self.tuning,
            "seed": self.seed,
            "max_len": self.max_len,
            "max_ratio": self.max_ratio,
            "em_iterations": self.em_iterations,
            "lm_order": self.lm_order,
            "max_phrase_len": self.max_phrase_len,
            "beam": self.beam,
            "distortion_limit": self.distortion_limit,
            "tune_iterations": self.tune_iterations,
            "tune_nbest": self.tune_nbest,
            "tune_restarts": self.tune_restarts,
            "split_side": self.split_side,
        }
        digest = hashlib.sha256(
            json.dumps(ident, sort_keys=True).encode("utf-8")
        ).hexdigest()
        return f"{self.direction}_{self.stage}_{'tuned' if self.tuning else 'plain'}_{digest[:12]}"


@dataclass
class RunRow:
    direction: str
    stage: str
    stage_index: int
    tuning: bool
    bleu: float
    meteor: float
    ter: float
    oov_rate: float
    adequacy: float | None = None
    fluency: float | None = None
    run_id: str = ""

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "stage": self.stage,
            "stage_index": self.stage_index,
            "tuning": self.tuning,
            "bleu": self.bleu,
            "meteor": self.meteor,
            "ter": self.ter,
            "oov_rate": self.oov_rate,
            "adequacy": self.adequacy,
            "fluency": self.fluency,
            "run_id": self.run_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRow":
        return cls(**d)


@dataclass
class RunReport:
    rows: list[RunRow] = field(default_factory=list)


def _load_side(path) -> list[tuple[str, ...]]:
    return [
        tuple(corpus_mod.tokenize(line))
        for line in corpus_mod._read_lines(path)
    ]


def _prepare_training_corpus(config: ExperimentConfig):
    """Clean, split and augment the training corpus per the stage ladder."""
    train = corpus_mod.ingest_parallel(
        config.train_source, config.train_target, origin=config.direction
    )
    clean_report = None
    idx = config.stage_index
    if idx >= STAGES.index("cleaned"):
        patches = (
            corpus_mod.load_patches(config.patches)
            if config.patches and Path(config.patches).exists()
            else None
        )
        train, clean_report = corpus_mod.clean_corpus(
            train, patches, config.max_len, config.max_ratio
        )
    rules = None
    if idx >= STAGES.index("suffix_split"):
        rules = morph.load_rules(config.suffix_rules)
        train = morph.split_corpus(train, rules, config.split_side)

    resources = lexicon.ResourceSet()
    if idx >= STAGES.index("wordnet"):
        resources.merge(lexicon.expand_synsets(lexicon.load_synsets(config.synsets)))
    if idx >= STAGES.index("function_kridanta"):
        for path, category in config.pair_files:
            resources.merge(lexicon.load_pair_resource(path, category))
    if idx >= STAGES.index("verb_phrases"):
        resources.merge(lexicon.load_pair_resource(config.verb_phrases, "verb_phrase"))
    if rules is not None and len(resources):
        resources = _split_resources(resources, rules, config.split_side)
    train = lexicon.augment_corpus(train, resources)
    return train, clean_report, rules


def _split_resources(resources, rules, side):
    out = lexicon.ResourceSet()
    for entry in resources:
        source, target = entry.source_expr, entry.target_expr
        if side == "src":
            source = morph.split_sentence(source, rules)
        else:
            target = morph.split_sentence(target, rules)
        out.add(lexicon.PairEntry(source, target, entry.category))
    return out


def run_pipeline(config: ExperimentConfig, out_dir) -> RunRow:
    """Execute one configuration end to end, persisting all artifacts."""
    config.validate()
    run_dir = Path(out_dir) / "runs" / config.run_id()
    row_file = run_dir / "row.json"
    if row_file.exists():
        return RunRow.from_dict(json.loads(row_file.read_text(encoding="utf-8")))
    run_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    train, clean_report, rules = _prepare_training_corpus(config)
    corpus_mod.save_corpus(train, run_dir / "train")
    if clean_report is not None:
        (run_dir / "clean_report.json").write_text(
            json.dumps(clean_report.to_dict(), sort_keys=True) + "\n", encoding="utf-8"
        )

    forward = align.train_model1(train, config.em_iterations)
    backward = align.train_model1(train.swapped(), config.em_iterations)
    forward.save(run_dir / "ttable.forward.tsv")
    backward.save(run_dir / "ttable.backward.tsv")
    alignments = align.align_corpus(train, forward, backward)
    align.save_alignments(alignments, run_dir / "alignments.txt")

    table = phrases.build_phrase_table(
        train, alignments, forward, backward, config.max_phrase_len
    )
    table.save(run_dir / "phrase_table.txt")
    model = lm_mod.train_lm(train.target_sentences(), config.lm_order)
    model.save(run_dir / "lm.tsv")

    weights = decoder.WeightVector.uniform()
    if config.tuning:
        tune_corpus = _preprocess_heldout(
            config.tune_source, config.tune_target, rules, config.split_side
        )
        weights, trace = mert.tune_weights(
            tune_corpus,
            table,
            model,
            initial=weights,
            outer_iterations=config.tune_iterations,
            nbest_size=config.tune_nbest,
            restarts=config.tune_restarts,
            seed=config.seed,
            beam=config.beam,
            distortion_limit=config.distortion_limit,
        )
        trace.save(run_dir / "tune_trace.csv")
    weights.save(run_dir / "weights.tsv")

    test_corpus = _preprocess_heldout(
        config.test_source, config.test_target, rules, config.split_side
    )
    derivations = [
        decoder.decode_detailed(
            pair.source, table, model, weights, config.beam, config.distortion_limit
        )
        for pair in test_corpus.pairs
    ]
    with open(run_dir / "test_hypotheses.txt", "w", encoding="utf-8") as f:
        for d in derivations:
            f.write(d.render() + "\n")

    scores = metrics.evaluate_corpus(
        [d.tokens for d in derivations], [p.target for p in test_corpus.pairs]
    )
    oov = _oov_rate(test_corpus, table)

    adequacy = fluency = None
    subjective = resolve_subjective(config)
    if subjective is not None:
        ratings = metrics.load_subjective(subjective)
        adequacy, fluency = metrics.aggregate_subjective(ratings)

    row = RunRow(
        direction=config.direction,
        stage=config.stage,
        stage_index=config.stage_index,
        tuning=config.tuning,
        bleu=scores.bleu,
        meteor=scores.meteor,
        ter=scores.ter,
        oov_rate=oov,
        adequacy=adequacy,
        fluency=fluency,
        run_id=config.run_id(),
    )
    (run_dir / "scores.json").write_text(
        json.dumps(scores.to_dict(), sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_provenance(config, run_dir)
    # Wall time lives outside row.json so reports stay byte-reproducible.
    (run_dir / "timing.txt").write_text(
        f"{time.perf_counter() - started:.3f}\n", encoding="utf-8"
    )
    # Written last: its presence marks the run complete and reusable.
    row_file.write_text(
        json.dumps(row.to_dict(), sort_keys=True) + "\n", encoding="utf-8"
    )
    return row


def _write_provenance(config: ExperimentConfig, run_dir: Path) -> None:
    """Config echo plus content hashes of every persisted model file."""
    hashes = {}
    for name in (
        "ttable.forward.tsv",
        "ttable.backward.tsv",
        "phrase_table.txt",
        "lm.tsv",
        "weights.tsv",
        "alignments.txt",
    ):
        path = run_dir / name
        if path.exists():
            hashes[name] = hashlib.sha256(path.read_bytes()).hexdigest()
    echo = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in vars(config).items()
        if key != "pair_files"
    }
    echo["pair_files"] = [[str(p), c] for p, c in config.pair_files]
    (run_dir / "provenance.json").write_text(
        json.dumps({"config": echo, "model_hashes": hashes}, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def resolve_subjective(config: ExperimentConfig) -> Path | None:
    """Per-run ratings file; {stage} and {tuning} placeholders expand.

    Ratings are optional: a missing file simply leaves the subjective
    columns empty.
    """
    if not config.subjective:
        return None
    path = Path(
        str(config.subjective).format(
            stage=config.stage, tuning="on" if config.tuning else "off"
        )
    )
    return path if path.exists() else None


def _preprocess_heldout(source_file, target_file, rules, split_side):
    held = corpus_mod.ingest_parallel(source_file, target_file)
    if rules is not None:
        held = morph.split_corpus(held, rules, split_side)
    return held


def _oov_rate(test_corpus, table) -> float:
    total = oov = 0
    for pair in test_corpus.pairs:
        for token in pair.source:
            total += 1
            if not table.has_source_word(token):
                oov += 1
    return oov / total if total else 0.0


def _parse_value(raw: str):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    if raw in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_matrix_file(path) -> dict:
    """Parse the key=value matrix format with [section] headers."""
    sections: dict[str, dict] = {}
    current = sections.setdefault("matrix", {})
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1].strip(), {})
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}: line {lineno}: expected key = value")
        key, raw = line.split("=", 1)
        current[key.strip()] = _parse_value(raw)
    return sections


_PARAM_KEYS = (
    "max_len",
    "max_ratio",
    "em_iterations",
    "lm_order",
    "max_phrase_len",
    "beam",
    "distortion_limit",
    "tune_iterations",
    "tune_nbest",
    "tune_restarts",
)


def configs_from_matrix(matrix_file) -> tuple[list[ExperimentConfig], dict]:
    """Expand a matrix file into the full list of run configurations."""
    sections = parse_matrix_file(matrix_file)
    base = Path(matrix_file).parent
    top = sections.get("matrix", {})
    seed = int(top.get("seed", 0))
    stage_names = [s.strip() for s in str(top.get("stages", ",".join(STAGES))).split(",") if s.strip()]
    if not stage_names:
        raise ConfigurationError("matrix selects no stages")
    tuning_states = []
    for state in str(top.get("tuning", "off,on")).split(","):
        state = state.strip()
        if state not in ("off", "on"):
            raise ConfigurationError(f"tuning must list 'off' and/or 'on', got {state!r}")
        tuning_states.append(state == "on")
    params = {k: top[k] for k in _PARAM_KEYS if k in top}

    def resolve(section, key):
        value = section.get(key)
        if value in (None, ""):
            return None
        return base / str(value)

    configs = []
    for name in sorted(sections):
        if not name.startswith("direction."):
            continue
        section = sections[name]
        label = str(section.get("label", name.split(".", 1)[1]))
        pair_files = []
        pairs_value = section.get("pairs")
        if pairs_value:
            for item in str(pairs_value).split(","):
                item = item.strip()
                if not item:
                    continue
                if ":" not in item:
                    raise ConfigurationError(
                        f"pair resource {item!r} must be path:category"
                    )
                p, category = item.rsplit(":", 1)
                pair_files.append((base / p, category))
        for stage in stage_names:
            for tuning in tuning_states:
                configs.append(
                    ExperimentConfig(
                        direction=label,
                        stage=stage,
                        tuning=tuning,
                        seed=seed,
                        train_source=resolve(section, "train_source"),
                        train_target=resolve(section, "train_target"),
                        tune_source=resolve(section, "tune_source"),
                        tune_target=resolve(section, "tune_target"),
                        test_source=resolve(section, "test_source"),
                        test_target=resolve(section, "test_target"),
                        patches=resolve(section, "patches"),
                        suffix_rules=resolve(section, "suffix_rules"),
                        split_side=str(section.get("split_side", "src")),
                        synsets=resolve(section, "synsets"),
                        pair_files=pair_files,
                        verb_phrases=resolve(section, "verb_phrases"),
                        subjective=resolve(section, "subjective"),
                        **params,
                    )
                )
    if not configs:
        raise ConfigurationError("matrix defines no direction sections")
    return configs, top


def run_matrix(matrix_file, out_dir, check_oov_ladder: bool | None = None) -> RunReport:
    """Run every configuration of the matrix and emit reports."""
    configs, top = configs_from_matrix(matrix_file)
    if check_oov_ladder is None:
        check_oov_ladder = bool(top.get("check_oov_ladder", True))
    report = RunReport()
    for config in configs:
        report.rows.append(run_pipeline(config, out_dir))
    if check_oov_ladder:
        _assert_oov_ladder(report.rows)
    emit_report(report.rows, out_dir)
    return report


def _assert_oov_ladder(rows) -> None:
    """Adding resources must never raise the test-set OOV rate."""
    by_key = {}
    for row in rows:
        by_key[(row.direction, row.tuning, row.stage_index)] = row
    for (direction, tuning, idx), row in sorted(by_key.items()):
        prev = by_key.get((direction, tuning, idx - 1))
        if prev is not None and row.oov_rate > prev.oov_rate + 1e-12:
            raise LexsmtError(
                f"OOV rate increased from stage {prev.stage} "
                f"({fmt(prev.oov_rate)}) to {row.stage} ({fmt(row.oov_rate)}) "
                f"for direction {direction}"
            )


def _sorted_rows(rows):
    return sorted(rows, key=lambda r: (r.direction, r.stage_index, r.tuning))


def _format_row(row: RunRow, with_subjective: bool):
    cells = [
        row.stage,
        "With Tuning" if row.tuning else "Without Tuning",
        f"{row.bleu:.2f}",
        f"{row.meteor:.3f}",
        f"{row.ter:.2f}",
    ]
    if with_subjective:
        cells.append("" if row.adequacy is None else f"{row.adequacy:.2f}%")
        cells.append("" if row.fluency is None else f"{row.fluency:.2f}%")
    return cells


def emit_report(rows, out_dir, formats=("csv", "markdown")) -> list[Path]:
    """Write per-direction result tables and per-metric series files."""
    if not rows:
        raise ConfigurationError("no rows to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    directions = sorted({r.direction for r in rows})
    for direction in directions:
        table_rows = _sorted_rows([r for r in rows if r.direction == direction])
        with_subjective = any(
            r.adequacy is not None or r.fluency is not None for r in table_rows
        )
        header = ["configuration", "tuning", "bleu", "meteor", "ter"]
        if with_subjective:
            header += ["adequacy", "fluency"]
        if "csv" in formats:
            path = out / f"report_{direction}.csv"
            with open(path, "w", encoding="utf-8") as f:
                f.write(",".join(header) + "\n")
                for row in table_rows:
                    f.write(",".join(_format_row(row, with_subjective)) + "\n")
            written.append(path)
        if "markdown" in formats:
            path = out / f"report_{direction}.md"
            with open(path, "w", encoding="utf-8") as f:
                f.write(f"## {direction}\n\n")
                f.write("| " + " | ".join(h.upper() for h in header) + " |\n")
                f.write("|" + "---|" * len(header) + "\n")
                for row in table_rows:
                    f.write("| " + " | ".join(_format_row(row, with_subjective)) + " |\n")
            written.append(path)
        for metric in ("bleu", "meteor", "ter", "oov_rate"):
            path = out / f"series_{metric}_{direction}.tsv"
            with open(path, "w", encoding="utf-8") as f:
                f.write("config_index\tconfiguration\twithout_tuning\twith_tuning\n")
                by_stage = {}
                for row in table_rows:
                    by_stage.setdefault((row.stage_index, row.stage), {})[row.tuning] = getattr(
                        row, metric
                    )
                for (idx, stage), values in sorted(by_stage.items()):
                    off = values.get(False)
                    on = values.get(True)
                    f.write(
                        f"{idx}\t{stage}\t"
                        f"{'' if off is None else fmt(off)}\t"
                        f"{'' if on is None else fmt(on)}\n"
                    )
            written.append(path)
    return written

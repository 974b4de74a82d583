import pytest

from lexsmt.errors import ConfigurationError, LexsmtError
from lexsmt.experiment import (
    STAGES,
    ExperimentConfig,
    RunRow,
    _assert_oov_ladder,
    configs_from_matrix,
    emit_report,
    parse_matrix_file,
    run_matrix,
    run_pipeline,
)
from lexsmt.fixtures import generate_experiment_fixture


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    root = tmp_path_factory.mktemp("world")
    matrix = generate_experiment_fixture(root, seed=7)
    return matrix.parent


MINI_MATRIX = """\
[matrix]
seed = 7
stages = "cleaned,verb_phrases"
tuning = "off"
em_iterations = 3
lm_order = 3
max_phrase_len = 4
beam = 10
distortion_limit = 6
tune_iterations = 1
tune_nbest = 20
tune_restarts = 1

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
"""


@pytest.fixture(scope="module")
def mini_matrix(world):
    path = world / "mini_matrix.cfg"
    path.write_text(MINI_MATRIX, encoding="utf-8")
    return path


class TestMatrixParsing:
    def test_sections_and_types(self, tmp_path):
        f = tmp_path / "m.cfg"
        f.write_text(
            '# comment\n[matrix]\nseed = 3\nratio = 2.5\nflag = true\n'
            'name = "quoted"\n[direction.x]\nlabel = "a-b"\n',
            encoding="utf-8",
        )
        sections = parse_matrix_file(f)
        assert sections["matrix"] == {
            "seed": 3, "ratio": 2.5, "flag": True, "name": "quoted"
        }
        assert sections["direction.x"]["label"] == "a-b"

    def test_malformed_line(self, tmp_path):
        f = tmp_path / "m.cfg"
        f.write_text("[matrix]\nnot a pair\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            parse_matrix_file(f)

    def test_configs_expand_full_matrix(self, world):
        configs, _ = configs_from_matrix(world / "matrix.cfg")
        assert len(configs) == len(STAGES) * 2 * 2
        assert {c.direction for c in configs} == {"nor-sar", "sar-nor"}

    def test_no_directions_rejected(self, tmp_path):
        f = tmp_path / "m.cfg"
        f.write_text("[matrix]\nseed = 1\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            configs_from_matrix(f)


class TestConfigValidation:
    def base_config(self, world, **kw):
        defaults = dict(
            direction="nor-sar",
            stage="cleaned",
            tuning=False,
            seed=0,
            train_source=world / "train.nor",
            train_target=world / "train.sar",
            test_source=world / "test.nor",
            test_target=world / "test.sar",
        )
        defaults.update(kw)
        return ExperimentConfig(**defaults)

    def test_empty_stage_rejected(self, world):
        with pytest.raises(ConfigurationError):
            self.base_config(world, stage="").validate()

    def test_unknown_stage_rejected(self, world):
        with pytest.raises(ConfigurationError):
            self.base_config(world, stage="extra_shiny").validate()

    def test_missing_resource_for_enabled_stage(self, world):
        config = self.base_config(world, stage="wordnet",
                                  suffix_rules=world / "suffix_rules.tsv")
        with pytest.raises(ConfigurationError) as exc:
            config.validate()
        assert "synsets" in str(exc.value)

    def test_missing_file_reported(self, world):
        config = self.base_config(world, train_source=world / "nope.txt")
        with pytest.raises(ConfigurationError):
            config.validate()

    def test_tuning_requires_tune_files(self, world):
        config = self.base_config(world, tuning=True)
        with pytest.raises(ConfigurationError):
            config.validate()

    def test_run_id_ignores_paths(self, world, tmp_path):
        a = self.base_config(world)
        b = self.base_config(world, train_source=tmp_path / "elsewhere.nor")
        assert a.run_id() == b.run_id()
        assert a.run_id() != self.base_config(world, stage="wordnet").run_id()


class TestRunPipeline:
    def test_smoke_and_artifacts(self, world, tmp_path):
        configs, _ = configs_from_matrix(world / "matrix.cfg")
        config = next(
            c for c in configs
            if c.stage == "cleaned" and not c.tuning and c.direction == "nor-sar"
        )
        row = run_pipeline(config, tmp_path)
        assert 0.0 <= row.bleu <= 100.0
        assert row.stage == "cleaned"
        run_dir = tmp_path / "runs" / config.run_id()
        for name in (
            "train/source.txt",
            "clean_report.json",
            "ttable.forward.tsv",
            "ttable.backward.tsv",
            "alignments.txt",
            "phrase_table.txt",
            "lm.tsv",
            "weights.tsv",
            "test_hypotheses.txt",
            "scores.json",
            "row.json",
            "provenance.json",
            "timing.txt",
        ):
            assert (run_dir / name).exists(), name

    def test_cached_row_reused(self, world, tmp_path):
        configs, _ = configs_from_matrix(world / "matrix.cfg")
        config = next(
            c for c in configs
            if c.stage == "uncleaned" and not c.tuning and c.direction == "nor-sar"
        )
        row1 = run_pipeline(config, tmp_path)
        marker = tmp_path / "runs" / config.run_id() / "row.json"
        before = marker.stat().st_mtime_ns
        row2 = run_pipeline(config, tmp_path)
        assert marker.stat().st_mtime_ns == before
        assert row1 == row2


class TestRunMatrix:
    def test_mini_matrix_rows_and_reports(self, mini_matrix, tmp_path):
        report = run_matrix(mini_matrix, tmp_path)
        assert len(report.rows) == 2
        assert (tmp_path / "report_nor-sar.csv").exists()
        assert (tmp_path / "report_nor-sar.md").exists()
        series = (tmp_path / "series_bleu_nor-sar.tsv").read_text(encoding="utf-8")
        lines = series.splitlines()
        assert lines[0] == "config_index\tconfiguration\twithout_tuning\twith_tuning"
        assert len(lines) == 3  # two configured stages
        final = next(r for r in report.rows if r.stage == "verb_phrases")
        base = next(r for r in report.rows if r.stage == "cleaned")
        assert final.bleu > base.bleu
        assert final.oov_rate <= base.oov_rate


class TestSubjectiveResolution:
    def test_template_expansion(self, world, tmp_path):
        from lexsmt.experiment import resolve_subjective

        ratings = tmp_path / "wordnet_on.tsv"
        ratings.write_text("0\t4\t5\n", encoding="utf-8")
        config = ExperimentConfig(
            direction="d", stage="wordnet", tuning=True, seed=0,
            train_source=world / "train.nor", train_target=world / "train.sar",
            subjective=tmp_path / "{stage}_{tuning}.tsv",
        )
        assert resolve_subjective(config) == ratings
        config_off = ExperimentConfig(
            direction="d", stage="wordnet", tuning=False, seed=0,
            train_source=world / "train.nor", train_target=world / "train.sar",
            subjective=tmp_path / "{stage}_{tuning}.tsv",
        )
        assert resolve_subjective(config_off) is None  # file absent

    def test_none_when_unconfigured(self, world):
        from lexsmt.experiment import resolve_subjective

        config = ExperimentConfig(
            direction="d", stage="cleaned", tuning=False, seed=0,
            train_source=world / "train.nor", train_target=world / "train.sar",
        )
        assert resolve_subjective(config) is None


class TestOovLadder:
    def row(self, stage, oov, direction="d", tuning=False):
        return RunRow(direction, stage, STAGES.index(stage), tuning,
                      50.0, 0.5, 50.0, oov)

    def test_monotone_accepted(self):
        rows = [self.row("cleaned", 0.3), self.row("suffix_split", 0.3),
                self.row("wordnet", 0.1)]
        _assert_oov_ladder(rows)

    def test_increase_rejected(self):
        rows = [self.row("cleaned", 0.1), self.row("suffix_split", 0.2)]
        with pytest.raises(LexsmtError):
            _assert_oov_ladder(rows)


class TestEmitReport:
    def make_rows(self, with_subjective):
        rows = []
        for direction in ("a-b",):
            for idx, stage in enumerate(STAGES):
                for tuning in (False, True):
                    rows.append(
                        RunRow(
                            direction, stage, idx, tuning,
                            bleu=10.0 * idx + tuning,
                            meteor=0.1 * idx,
                            ter=90.0 - 10 * idx,
                            oov_rate=0.5 - 0.05 * idx,
                            adequacy=80.0 + idx if with_subjective else None,
                            fluency=85.0 + idx if with_subjective else None,
                        )
                    )
        return rows

    def test_twelve_row_markdown(self, tmp_path):
        emit_report(self.make_rows(False), tmp_path)
        md = (tmp_path / "report_a-b.md").read_text(encoding="utf-8").splitlines()
        data_lines = [l for l in md if l.startswith("| ") and "CONFIGURATION" not in l]
        assert len(data_lines) == 12
        assert "uncleaned" in data_lines[0]
        assert "Without Tuning" in data_lines[0]
        assert "With Tuning" in data_lines[1]

    def test_column_set_matches_metrics(self, tmp_path):
        emit_report(self.make_rows(False), tmp_path)
        header = (tmp_path / "report_a-b.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "configuration,tuning,bleu,meteor,ter"

    def test_subjective_columns_when_present(self, tmp_path):
        emit_report(self.make_rows(True), tmp_path)
        lines = (tmp_path / "report_a-b.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0].endswith("adequacy,fluency")
        assert lines[1].endswith("80.00%,85.00%")

    def test_series_points_per_tuning_state(self, tmp_path):
        emit_report(self.make_rows(False), tmp_path)
        lines = (tmp_path / "series_bleu_a-b.tsv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1 + 6
        for line in lines[1:]:
            cols = line.split("\t")
            assert len(cols) == 4
            float(cols[2]), float(cols[3])

    def test_empty_rows_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_report([], tmp_path)

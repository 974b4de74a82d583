import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lexsmt.corpus import ParallelCorpus, SentencePair


def pytest_runtest_logreport(report):
    """One visible verdict line per acceptance criterion.

    Runs in the reporting phase, outside capture, so the lines show up
    in plain pytest output.
    """
    if report.when != "call":
        return
    module, _, test_name = report.nodeid.rpartition("::")
    if not module.endswith("test_acceptance.py"):
        return
    criterion = test_name.split("[")[0].removeprefix("test_").replace("_", "-")
    verdict = "PASS" if report.passed else "FAIL"
    sys.stdout.write(f"\nACCEPTANCE {criterion}: {verdict}\n")
    sys.stdout.flush()


def make_corpus(rows, origin=""):
    """Build a corpus from (source_string, target_string) rows."""
    pairs = [
        SentencePair(i, tuple(src.split()), tuple(tgt.split()), origin)
        for i, (src, tgt) in enumerate(rows)
    ]
    return ParallelCorpus(pairs, name="test")


@pytest.fixture
def toy_em_corpus():
    return make_corpus([("la maison", "the house"), ("la", "the")])

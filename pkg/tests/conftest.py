from __future__ import annotations

import pytest

from depforge.config import bundled
from depforge.corpus import ParsedSentence, Token, read_conllu
from depforge.pattern import load_patterns

FIXTURES = bundled("fixtures")


def make_sentence(rows, doc_id="t", sent_index=0) -> ParsedSentence:
    """Build a tree from (form, lemma, xpos, head, deprel) rows."""
    return ParsedSentence(doc_id, sent_index, tuple(Token(i, *row) for i, row in enumerate(rows, 1)))


@pytest.fixture(scope="session")
def fixture_corpus():
    return read_conllu(FIXTURES / "fixture.conllu")


@pytest.fixture(scope="session")
def sub_patterns():
    return load_patterns(bundled("substitution.pat"))


@pytest.fixture(scope="session")
def con_patterns():
    return load_patterns(bundled("contraposition.pat"))


@pytest.fixture(scope="session")
def all_patterns(sub_patterns, con_patterns):
    return sub_patterns + con_patterns


@pytest.fixture(scope="session")
def by_ref(fixture_corpus):
    return {s.ref: s for s in fixture_corpus}


_CRITERIA: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    # a setup failure or a failing call both count against the criterion
    if (report.when == "call") or (report.when == "setup" and report.failed):
        _CRITERIA.append((marker.args[0], "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _CRITERIA:
        terminalreporter.write_line(f"{verdict}  {name}")

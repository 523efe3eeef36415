import hashlib
import random

import pytest
from hypothesis import given, settings, strategies as st

from depforge.corpus import (
    IngestError,
    ParsedSentence,
    Token,
    parse_conllu,
    read_conllu,
    read_corpus,
    to_conllu,
    validate_tree,
)
from depforge.synthetic import random_tree

from conftest import FIXTURES, make_sentence


def _line(i, form, head, deprel, xpos="NN", lemma=None):
    return "\t".join([str(i), form, lemma or form.lower(), "_", xpos, "_", str(head), deprel, "_", "_"])


def test_fixture_corpus_shape(fixture_corpus):
    assert len(fixture_corpus) == 17
    assert not fixture_corpus.skipped
    refs = [s.ref for s in fixture_corpus]
    assert refs[:5] == [("tea", 0), ("gallery", 0), ("gallery", 1), ("gallery", 2), ("gallery", 3)]
    assert refs[5] == ("misc", 0)


def test_source_manifest_checksum():
    path = FIXTURES / "tea.conllu"
    corpus = read_conllu(path)
    entry = corpus.source_manifest[0]
    assert entry["sha256"] == hashlib.sha256(path.read_bytes()).hexdigest()
    assert entry["sentences"] == 1


def test_token_fields(fixture_corpus):
    s = fixture_corpus.sentences[0]
    assert s.token(5) == Token(5, "teas", "tea", "NNS", 10, "nsubj")
    assert s.root_id == 10
    assert s.children(10) == (1, 3, 5, 12, 13)
    assert s.children(0) == (10,)
    assert list(s.ancestors(9)) == [7, 5, 10]


def test_subtree_and_prune(fixture_corpus):
    s = fixture_corpus.sentences[0]
    assert s.subtree(5) == [4, 5, 6, 7, 8, 9]
    assert s.subtree(5, prune=[7]) == [4, 5]
    assert s.subtree(11) == [11]


def test_newdoc_and_default_numbering():
    text = "\n".join([
        "# newdoc id = alpha",
        _line(1, "Dogs", 2, "nsubj", "NNS"), _line(2, "bark", 0, "ROOT", "VBP"), "",
        _line(1, "Cats", 2, "nsubj", "NNS"), _line(2, "meow", 0, "ROOT", "VBP"), "",
        "# newdoc id = beta",
        _line(1, "Birds", 2, "nsubj", "NNS"), _line(2, "sing", 0, "ROOT", "VBP"), "",
    ])
    corpus = parse_conllu(text, name="mem")
    assert [s.ref for s in corpus] == [("alpha", 0), ("alpha", 1), ("beta", 0)]


def test_doc_id_defaults_to_name():
    corpus = parse_conllu(_line(1, "Hi", 0, "ROOT") + "\n", name="file.conllu", doc_id="file")
    assert corpus.sentences[0].ref == ("file", 0)


def test_multiword_and_empty_nodes_skipped():
    text = "\n".join([
        "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_",
        _line(1, "do", 3, "aux", "VBP"),
        _line(2, "n't", 3, "neg", "RB"),
        _line(3, "go", 0, "ROOT", "VB"),
        "3.1\tgone\tgo\t_\tVBN\t_\t_\t_\t_\t_",
        "",
    ])
    corpus = parse_conllu(text)
    assert [t.form for t in corpus.sentences[0].tokens] == ["do", "n't", "go"]


def test_bad_column_count_raises_with_line():
    text = "# c\n" + _line(1, "a", 0, "ROOT") + "\n1\tb\tb\n\n"
    with pytest.raises(IngestError) as err:
        parse_conllu(text, name="x.conllu")
    assert err.value.line == 3 and err.value.file == "x.conllu"
    assert "columns" in err.value.reason


def test_non_numeric_head_raises():
    with pytest.raises(IngestError, match="non-numeric"):
        parse_conllu("\t".join(["1", "a", "a", "_", "NN", "_", "x", "ROOT", "_", "_"]) + "\n")


@pytest.mark.parametrize("rows,reason", [
    ([("a", 2, "dep"), ("b", 1, "dep")], "no root token"),
    ([("a", 0, "ROOT"), ("b", 3, "dep"), ("c", 2, "dep")], "cyclic head chain"),
    ([("a", 0, "ROOT"), ("b", 0, "ROOT")], "multiple root tokens"),
    ([("a", 0, "ROOT"), ("b", 7, "dep")], "dangling head"),
    ([("a", 0, "ROOT"), ("b", 2, "dep")], "self-loop on token 2"),
])
def test_invalid_trees_are_skipped(rows, reason):
    good = "\n".join([_line(1, "ok", 0, "ROOT"), ""])
    bad = "\n".join(_line(i, f, h, d) for i, (f, h, d) in enumerate(rows, 1)) + "\n"
    corpus = parse_conllu(good + "\n" + bad + "\n" + good, name="m")
    assert len(corpus) == 2
    assert corpus.skipped == [{"file": "m", "line": 3, "reason": reason}]
    assert corpus.source_manifest[0]["sentences"] == 2


def test_validate_tree_accepts_fixture(fixture_corpus):
    assert all(validate_tree(s) is None for s in fixture_corpus)


def test_duplicate_refs_across_files_rejected(tmp_path):
    a = tmp_path / "a.conllu"
    a.write_text("# newdoc id = d\n" + _line(1, "x", 0, "ROOT") + "\n\n")
    b = tmp_path / "b.conllu"
    b.write_text(a.read_text())
    with pytest.raises(ValueError, match="duplicate"):
        read_corpus([a, b])


def test_to_conllu_round_trip(fixture_corpus):
    again = parse_conllu(to_conllu(fixture_corpus.sentences))
    assert again.sentences == fixture_corpus.sentences


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 25))
def test_random_trees_valid_and_round_trip(seed, n):
    s = random_tree(random.Random(seed), n, "doc", seed % 7)
    assert validate_tree(s) is None
    assert parse_conllu(to_conllu([s])).sentences == [s]


def test_make_sentence_helper_matches_reader(fixture_corpus):
    s = fixture_corpus.sentences[0]
    rebuilt = make_sentence([t[1:] for t in s.tokens], "tea", 0)
    assert rebuilt == s
    assert isinstance(rebuilt, ParsedSentence)

import json
import logging
import random
from pathlib import Path

import pytest

from depforge.index import WILDCARD, ChainKey, DepIndex, build_index
from depforge.matcher import match_sentence
from depforge.pattern import parse_pattern
from depforge.search import candidate_keys, full_scan, search
from depforge.synthetic import RARE_LEMMA, RARE_PATTERN, random_pattern, random_trees, synthetic_corpus

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def fixture_index(tmp_path_factory, fixture_corpus):
    return DepIndex(build_index(fixture_corpus, tmp_path_factory.mktemp("fx"), chunk_size=6))


def brute_force(sentences, pattern):
    return {(m.sentence_ref, m.bindings, m.anchor) for s in sentences for m in match_sentence(pattern, s)}


def found(results):
    return {(m.sentence_ref, m.bindings, m.anchor) for m in results}


def test_candidate_keys_for_sub1(sub_patterns):
    keys = candidate_keys(sub_patterns[0], 3)
    steps = {k.steps for k in keys}
    assert (("root", "VBP", WILDCARD),) in steps
    assert (("prep", "IN", "as"),) in steps
    assert (("prep", "IN", WILDCARD), ("nsubj", "NNS", WILDCARD), ("root", "VBP", WILDCARD)) in steps
    # a chain through a lemma-free node never yields a concrete key
    assert not any(len(k) > 1 and not k.is_wildcard for k in keys)
    # pobj:$1 has no POS and amod:'such' has no POS: neither starts a chain
    assert not any(k.steps[0][0] in ("pobj", "amod") for k in keys)


def test_candidate_keys_respect_depth(sub_patterns):
    assert all(len(k) <= 2 for k in candidate_keys(sub_patterns[0], 2))


def test_no_indexable_chain_falls_back_with_warning(fixture_index, fixture_corpus, caplog):
    pat = parse_pattern("nsubj:$0 > VBP$1")
    assert candidate_keys(pat, 3) == []
    with caplog.at_level(logging.WARNING, logger="depforge.search"):
        got = found(search(fixture_index, pat))
    assert "no indexable chain" in caplog.text
    assert got == brute_force(fixture_corpus, pat)


def test_fixture_search_equals_brute_force(fixture_index, fixture_corpus, all_patterns):
    for p in all_patterns:
        assert found(search(fixture_index, p)) == brute_force(fixture_corpus, p)
        assert found(full_scan(fixture_index, p)) == brute_force(fixture_corpus, p)


def test_fixture_search_counts_golden(fixture_index, all_patterns):
    golden = json.loads((GOLDEN / "fixture_search_counts.json").read_text())
    counts = {p.pattern_id: sum(1 for _ in search(fixture_index, p)) for p in all_patterns}
    assert counts == golden


def test_results_in_chunk_then_sentence_order(fixture_index, all_patterns):
    for p in all_patterns:
        res = list(search(fixture_index, p))
        keys = [(m.chunk_id, m.sentence_ref) for m in res]
        assert keys == sorted(keys)
        for m in res:
            assert fixture_index.sentence(m.sentence_ref, m.chunk_id).ref == m.sentence_ref


def test_parallel_search_same_results(fixture_index, all_patterns):
    for p in all_patterns[:3]:
        assert list(search(fixture_index, p, workers=2)) == list(search(fixture_index, p))


def test_random_patterns_against_brute_force(tmp_path):
    trees = random_trees(99, 250)
    idx = DepIndex(build_index(trees, tmp_path, chunk_size=40))
    rng = random.Random(5)
    for i in range(60):
        pat = random_pattern(rng, rng.choice(trees), rng.randint(1, 5), f"r{i}")
        assert found(search(idx, pat)) == brute_force(trees, pat), pat.raw_text


def test_rare_lemma_pattern_on_synthetic(tmp_path):
    sents = list(synthetic_corpus(3000, seed=1, rare_rate=0.01))
    idx = DepIndex(build_index(sents, tmp_path, chunk_size=1000))
    pat = parse_pattern(RARE_PATTERN, "rare")
    hits = list(search(idx, pat))
    assert hits and found(hits) == brute_force(sents, pat)
    # plural subjects only, so a subset of the sentences holding the rare preposition
    assert 0 < len({m.sentence_ref for m in hits}) <= idx.count(ChainKey((("prep", "IN", RARE_LEMMA),)))

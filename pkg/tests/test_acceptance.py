"""End-to-end acceptance checks, one test per criterion.

Each test carries a ``criterion`` marker; the session summary prints one
PASS/FAIL line per criterion (see conftest.py).
"""

import json
import random
import time

import pytest

from depforge.augment import AugmentReport, MockProvider, augment_examples
from depforge.cli import main
from depforge.corpus import read_conllu
from depforge.index import DepIndex, build_index
from depforge.matcher import match_sentence
from depforge.pattern import load_patterns, parse_pattern
from depforge.config import bundled
from depforge.search import full_scan, search
from depforge.synthetic import RARE_PATTERN, random_pattern, random_trees, synthetic_corpus
from depforge.templates import CONTRAPOSITION, SUBSTITUTION, expand, filter_match, invented_words

from conftest import FIXTURES

SYNTHETIC_SIZE = 1_000_000


def norm(text):
    return " ".join(text.split())


def expand_all(corpus, patterns):
    out = []
    for s in corpus:
        for p in patterns:
            op = CONTRAPOSITION if p.pattern_id.startswith("con") else SUBSTITUTION
            for m in match_sentence(p, s):
                if filter_match(m, s) is None:
                    out.append((s, expand(m, s, op)))
    return out


@pytest.mark.criterion("herbal-tea golden expansion, exact strings, under 1 s")
def test_herbal_tea_golden():
    start = time.perf_counter()
    sentence = read_conllu(FIXTURES / "tea.conllu").sentences[0]
    sub1 = load_patterns(bundled("substitution.pat"))[0]
    (m,) = match_sentence(sub1, sentence)
    assert filter_match(m, sentence) is None
    ex = expand(m, sentence, SUBSTITUTION)
    elapsed = time.perf_counter() - start
    assert [norm(p) for p in ex.premises] == ["In Egypt, herbal teas are very popular.", "Hibiscus tea is a herbal tea."]
    assert norm(ex.conclusion) == "In Egypt, Hibiscus tea is very popular."
    assert elapsed < 1.0


GALLERY = {
    0: "Staphylococcus epidermis colonizes the skin surface.",
    1: "During the undergraduate years, seminarians learn Latin.",
    2: "As such, rivers that do not provide water for irrigation in the surrounding lands do not have headwaters "
       "in the mountains.",
    3: "Dogs that are able to participate in contests are not especially dirty or hungry.",
}


@pytest.mark.criterion("gallery golden conclusions (2 substitution, 2 contraposition)")
def test_gallery_goldens(all_patterns):
    corpus = read_conllu(FIXTURES / "gallery.conllu")
    got = {}
    for s, ex in expand_all(corpus, all_patterns):
        got.setdefault(s.sent_index, set()).add((ex.op, norm(ex.conclusion)))
    ops = {0: SUBSTITUTION, 1: SUBSTITUTION, 2: CONTRAPOSITION, 3: CONTRAPOSITION}
    assert got == {i: {(ops[i], text)} for i, text in GALLERY.items()}


@pytest.mark.criterion("oracle equivalence: 1,000 trees x (8 + 200 random) patterns, under 2 min")
def test_oracle_equivalence(tmp_path, all_patterns):
    start = time.perf_counter()
    trees = random_trees(2024, 1000, 5, 20)
    assert min(map(len, trees)) >= 5 and max(map(len, trees)) <= 20
    index = DepIndex(build_index(trees, tmp_path / "idx", chunk_size=128))
    rng = random.Random(2024)
    patterns = list(all_patterns) + [
        random_pattern(rng, rng.choice(trees), rng.randint(1, 5), f"rand{i}") for i in range(200)
    ]
    assert len(patterns) == 208
    discrepancies = 0
    for p in patterns:
        indexed = {(m.sentence_ref, m.bindings, m.anchor) for m in search(index, p)}
        brute = {(s.ref, m.bindings, m.anchor) for s in trees for m in match_sentence(p, s)}
        discrepancies += indexed != brute
    assert discrepancies == 0
    assert time.perf_counter() - start < 120


@pytest.fixture(scope="session")
def synthetic_index(request, tmp_path_factory):
    # kept in the pytest cache so repeated runs skip the rebuild; rebuilds are deterministic
    cache = request.config.cache.mkdir(f"synthetic-{SYNTHETIC_SIZE}")
    try:
        idx = DepIndex(cache)
        if len(idx) == SYNTHETIC_SIZE:
            return idx
    except (FileNotFoundError, ValueError):
        pass
    for p in cache.iterdir():
        p.unlink()
    return DepIndex(build_index(synthetic_corpus(SYNTHETIC_SIZE, seed=0), cache, workers=4))


@pytest.mark.slow
@pytest.mark.criterion("index speedup >= 10x over full scan on 1M synthetic sentences")
def test_index_speedup(synthetic_index):
    pattern = parse_pattern(RARE_PATTERN, "rare")
    start = time.perf_counter()
    indexed = list(search(synthetic_index, pattern))
    t_index = time.perf_counter() - start
    start = time.perf_counter()
    scanned = list(full_scan(synthetic_index, pattern))
    t_scan = time.perf_counter() - start
    assert indexed and indexed == scanned
    print(f"indexed {t_index:.3f}s, full scan {t_scan:.3f}s, speedup {t_scan / t_index:.0f}x")
    assert t_scan >= 10 * t_index


@pytest.mark.criterion("index determinism: byte-identical chunks and manifest")
def test_index_determinism(tmp_path):
    trees = random_trees(11, 2000)
    a = build_index(trees, tmp_path / "a", chunk_size=300)
    b = build_index(trees, tmp_path / "b", chunk_size=300, workers=2)
    names = sorted(p.name for p in a.iterdir())
    assert "manifest.json" in names and len(names) == 8
    assert names == sorted(p.name for p in b.iterdir())
    assert all((a / n).read_bytes() == (b / n).read_bytes() for n in names)


@pytest.mark.criterion("pipeline determinism: run --seed 42 twice gives identical train.jsonl and stats.json")
def test_pipeline_determinism(tmp_path):
    for name in ("a", "b"):
        code = main(["run", "--corpus", str(FIXTURES / "fixture.conllu"), "--work", str(tmp_path / name),
                     "--seed", "42", "--provider", "mock", "--workers", "2"])
        assert code == 0
    for f in ("train.jsonl", "stats.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert (tmp_path / "a" / "train.jsonl").stat().st_size > 0


@pytest.mark.criterion("augmentation cardinality: n=2 gives 3x examples with unchanged conclusions")
def test_augmentation_cardinality(fixture_corpus, all_patterns):
    originals = [ex for _, ex in expand_all(fixture_corpus, all_patterns)]
    report = AugmentReport()
    out = list(augment_examples(originals, MockProvider(), n=2, seed=42, report=report))
    assert report.failures == 0
    assert len(out) == 3 * len(originals)
    by_key = {ex.key: ex for ex in originals}
    copies = [ex for ex in out if ex.paraphrase_of is not None]
    assert len(copies) == 2 * len(originals)
    for copy in copies:
        assert copy.conclusion.encode() == by_key[copy.paraphrase_of].conclusion.encode()


@pytest.mark.criterion("lexical conservatism: every generated sentence passes the lexicon check")
def test_lexical_conservatism(all_patterns):
    corpus = read_conllu(FIXTURES / "fixture.conllu")
    checked = failed = 0
    for s, ex in expand_all(corpus, all_patterns):
        for text in (*ex.premises, ex.conclusion):
            checked += 1
            failed += bool(invented_words(s, text))
    assert checked > 0 and failed == 0


def test_stats_report_from_run(tmp_path):
    assert main(["run", "--corpus", str(FIXTURES / "fixture.conllu"), "--work", str(tmp_path), "--seed", "42"]) == 0
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["augmentation_multiplier"] == 3.0 and stats["augmentation_failures"] == 0

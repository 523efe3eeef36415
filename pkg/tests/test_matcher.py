import itertools
import random

from depforge.matcher import MatchBinding, match_sentence, node_accepts
from depforge.pattern import PatternNode, parse_pattern
from depforge.synthetic import random_pattern, random_tree

from conftest import make_sentence


def oracle_matches(pattern, sentence):
    """Try every injective tuple of locally acceptable tokens, then check the links."""
    nodes = list(pattern.root.walk())
    index = {id(n): i for i, n in enumerate(nodes)}
    links = []  # (head node index, dependent node index)
    for n in nodes:
        for op, child in n.edges:
            a, b = index[id(n)], index[id(child)]
            links.append((a, b) if op == "<" else (b, a))
    has_head = {d for _, d in links}
    top = next(i for i in range(len(nodes)) if i not in has_head)
    toks = {t.id: t for t in sentence.tokens}

    def ok(node, t):
        if node.arc is not None:
            if node.arc.upper() == "ROOT":
                if t.head != 0:
                    return False
            elif t.head == 0 or t.deprel != node.arc:
                return False
        if node.pos is not None and t.xpos != node.pos:
            return False
        return node.lemma is None or t.lemma == node.lemma

    out = set()
    candidates = [[t for t in toks if ok(n, toks[t])] for n in nodes]
    for combo in itertools.product(*candidates):
        if len(set(combo)) != len(combo):
            continue
        if not all(toks[combo[d]].head == combo[h] for h, d in links):
            continue
        binds = tuple(sorted((n.var, combo[i]) for i, n in enumerate(nodes) if n.var is not None))
        out.add((binds, combo[top]))
    return out


def as_set(results):
    return {(m.bindings, m.anchor) for m in results}


def test_herbal_tea_binding(fixture_corpus, sub_patterns):
    sub1 = sub_patterns[0]
    res = match_sentence(sub1, fixture_corpus.sentences[0])
    assert len(res) == 1
    m = res[0]
    assert m.binding_map == {0: 5, 1: 9, 2: 10}
    assert m.anchor == 10 and m[1] == 9
    assert m.sentence_ref == ("tea", 0) and m.pattern_id == "sub1"


def test_root_arc_only_matches_head_zero():
    s = make_sentence([("Dogs", "dog", "NNS", 2, "nsubj"), ("bark", "bark", "VBP", 0, "ROOT")])
    assert match_sentence(parse_pattern("ROOT:VBP"), s)
    assert match_sentence(parse_pattern("root:VBP"), s)
    # a label that merely spells ROOT on a dependent does not count as the root
    t = make_sentence([("x", "x", "NN", 2, "ROOT"), ("y", "y", "VBP", 0, "ROOT")])
    assert [m.anchor for m in match_sentence(parse_pattern("ROOT:$0"), t)] == [2]
    # and the real root carries no other arc label
    assert not match_sentence(parse_pattern("dep:VBP"), make_sentence([("y", "y", "VBP", 0, "dep")]))


def test_node_accepts_checks_each_constraint():
    tok = make_sentence([("Teas", "tea", "NNS", 0, "ROOT")]).tokens[0]
    assert node_accepts(PatternNode(pos="NNS", lemma="tea"), tok)
    assert not node_accepts(PatternNode(pos="NN"), tok)
    assert not node_accepts(PatternNode(lemma="teas"), tok)


def test_injective_assignment():
    # one dependent cannot satisfy two sibling pattern nodes
    s = make_sentence([("a", "a", "DT", 2, "det"), ("dog", "dog", "NN", 0, "ROOT")])
    p = parse_pattern("[ROOT:NN$2 < det:DT$0] < det:DT$1")
    assert match_sentence(p, s) == []
    s2 = make_sentence([("a", "a", "DT", 3, "det"), ("b", "b", "DT", 3, "det"), ("dog", "dog", "NN", 0, "ROOT")])
    got = as_set(match_sentence(p, s2))
    assert got == {(((0, 1), (1, 2), (2, 3)), 3), (((0, 2), (1, 1), (2, 3)), 3)}


def test_dedup_on_captures_and_anchor():
    # uncaptured node with two candidates gives a single result
    s = make_sentence([("a", "a", "DT", 3, "det"), ("b", "b", "DT", 3, "det"), ("dog", "dog", "NN", 0, "ROOT")])
    res = match_sentence(parse_pattern("ROOT:NN$0 < det:DT"), s)
    assert len(res) == 1


def test_results_sorted_and_json_round_trip(fixture_corpus, all_patterns):
    for s in fixture_corpus:
        for p in all_patterns:
            res = match_sentence(p, s)
            keys = [(tuple(t for _, t in m.bindings), m.anchor) for m in res]
            assert keys == sorted(keys)
            for m in res:
                assert MatchBinding.from_json(m.to_json()) == m


def test_agrees_with_oracle_on_random_trees():
    rng = random.Random(1234)
    checked = 0
    for i in range(300):
        sent = random_tree(rng, rng.randint(3, 8), "r", i)
        pat = random_pattern(rng, sent, rng.randint(1, 4), f"p{i}")
        assert as_set(match_sentence(pat, sent)) == oracle_matches(pat, sent), (pat.raw_text, sent)
        # and against a different tree, where misses are likely
        other = random_tree(rng, rng.randint(3, 8), "o", i)
        assert as_set(match_sentence(pat, other)) == oracle_matches(pat, other)
        checked += 2
    assert checked == 600


def test_agrees_with_oracle_on_fixture(fixture_corpus, all_patterns):
    for s in fixture_corpus:
        for p in all_patterns:
            assert as_set(match_sentence(p, s)) == oracle_matches(p, s)

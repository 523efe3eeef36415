"""Seeded random trees and patterns for property tests and benchmarks."""

from __future__ import annotations

import random
from typing import Iterator

from .corpus import ParsedSentence, Token
from .pattern import DepPattern, PatternNode, format_pattern, parse_pattern

DEPRELS = ["nsubj", "dobj", "prep", "pobj", "amod", "det", "advmod", "relcl", "conj", "cc", "compound", "aux"]
XPOS = ["NN", "NNS", "VBP", "VBZ", "IN", "JJ", "DT", "RB", "WDT", "VBG"]
LEMMAS = ["dog", "tea", "river", "be", "have", "as", "such", "like", "with", "that", "the", "run", "green", "very"]


def random_tree(rng: random.Random, n: int, doc_id: str = "rand", sent_index: int = 0,
                lemmas: list[str] = LEMMAS) -> ParsedSentence:
    """A uniformly shaped random tree over ``n`` tokens with small label alphabets."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = {order[0]: 0}
    for i, tid in enumerate(order[1:], start=1):
        heads[tid] = order[rng.randrange(i)]
    tokens = []
    for tid in range(1, n + 1):
        lemma = rng.choice(lemmas)
        deprel = "ROOT" if heads[tid] == 0 else rng.choice(DEPRELS)
        tokens.append(Token(tid, lemma.capitalize() if tid == 1 else lemma, lemma, rng.choice(XPOS), heads[tid], deprel))
    return ParsedSentence(doc_id, sent_index, tuple(tokens))


def random_trees(seed: int, count: int, min_len: int = 5, max_len: int = 20) -> list[ParsedSentence]:
    rng = random.Random(seed)
    return [random_tree(rng, rng.randint(min_len, max_len), f"doc{i // 100}", i % 100) for i in range(count)]


def random_pattern(rng: random.Random, sentence: ParsedSentence, size: int = 4, pattern_id: str = "rand",
                   keep: float = 0.6, perturb: float = 0.15) -> DepPattern:
    """Pattern grown over a connected token set of ``sentence``.

    Each node keeps each of its constraints with probability ``keep`` and a
    kept constraint is replaced by a random value with probability
    ``perturb``, so patterns both hit and miss. The written form starts at a
    random node, exercising both link directions.
    """
    start = rng.randint(1, len(sentence))
    chosen = [start]
    while len(chosen) < min(size, len(sentence)):
        frontier = []
        for tid in chosen:
            head = sentence.token(tid).head
            if head and head not in chosen:
                frontier.append(head)
            frontier.extend(c for c in sentence.children(tid) if c not in chosen)
        if not frontier:
            break
        chosen.append(rng.choice(sorted(set(frontier))))

    nodes: dict[int, PatternNode] = {}
    var = 0
    for tid in chosen:
        tok = sentence.token(tid)
        node = PatternNode()
        if rng.random() < keep:
            node.arc = "ROOT" if tok.head == 0 else tok.deprel
            if rng.random() < perturb:
                node.arc = rng.choice(DEPRELS + ["ROOT"])
        if rng.random() < keep:
            node.pos = rng.choice(XPOS) if rng.random() < perturb else tok.xpos
        if rng.random() < keep * 0.6:
            node.lemma = rng.choice(LEMMAS) if rng.random() < perturb else tok.lemma
        if rng.random() < 0.5 or not (node.arc or node.pos or node.lemma):
            node.var = var
            var += 1
        nodes[tid] = node

    first = rng.choice(chosen)
    seen = {first}
    stack = [first]
    while stack:
        cur = stack.pop()
        head = sentence.token(cur).head
        neighbours = [(">", head)] if head in nodes else []
        neighbours += [("<", c) for c in sentence.children(cur) if c in nodes]
        rng.shuffle(neighbours)
        for op, other in neighbours:
            if other not in seen:
                seen.add(other)
                nodes[cur].edges.append((op, nodes[other]))
                stack.append(other)
    ast = DepPattern(pattern_id, nodes[first])
    return parse_pattern(format_pattern(ast), pattern_id)


# --- benchmark corpus --------------------------------------------------------

_NOUNS = [f"noun{i}" for i in range(400)]
_VERBS = [f"verb{i}" for i in range(150)]
_ADJS = [f"adj{i}" for i in range(200)]
_PREPS = ["in", "of", "for", "on", "at", "with", "from", "by", "like", "as"]
RARE_LEMMA = "amidst"


def _noun_phrase(rng: random.Random, toks: list, head_of: int, deprel: str) -> int:
    noun = rng.choice(_NOUNS)
    plural = rng.random() < 0.5
    tid = len(toks) + 1
    toks.append([noun + ("s" if plural else ""), noun, "NNS" if plural else "NN", head_of, deprel])
    if rng.random() < 0.4:
        adj = rng.choice(_ADJS)
        toks.append([adj, adj, "JJ", tid, "amod"])
    return tid


def synthetic_sentence(rng: random.Random, doc_id: str, sent_index: int, rare_rate: float) -> ParsedSentence:
    """A small SVO tree; with probability ``rare_rate`` the subject carries a
    ``prep`` headed by :data:`RARE_LEMMA`."""
    verb = rng.choice(_VERBS)
    toks: list[list] = [[verb, verb, "VBP", 0, "ROOT"]]
    subj = _noun_phrase(rng, toks, 1, "nsubj")
    if rng.random() < rare_rate:
        toks.append([RARE_LEMMA, RARE_LEMMA, "IN", subj, "prep"])
        _noun_phrase(rng, toks, len(toks), "pobj")
    elif rng.random() < 0.3:
        prep = rng.choice(_PREPS)
        toks.append([prep, prep, "IN", subj, "prep"])
        _noun_phrase(rng, toks, len(toks), "pobj")
    _noun_phrase(rng, toks, 1, "dobj")
    # surface order is the generation order; only the tree shape matters here
    tokens = tuple(Token(i + 1, f, l, x, h, d) for i, (f, l, x, h, d) in enumerate(toks))
    return ParsedSentence(doc_id, sent_index, tokens)


def synthetic_corpus(count: int, seed: int = 0, rare_rate: float = 1e-4, per_doc: int = 1000) -> Iterator[ParsedSentence]:
    rng = random.Random(seed)
    for i in range(count):
        yield synthetic_sentence(rng, f"syn{i // per_doc:06d}", i % per_doc, rare_rate)


RARE_PATTERN = f"[nsubj:NNS$0 < prep:IN'{RARE_LEMMA}' < pobj:$1] > ROOT:VBP$2"

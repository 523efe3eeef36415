"""Reference (exhaustive) matcher of dependency patterns against one tree."""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import ParsedSentence, Token
from .pattern import DepPattern, PatternNode


@dataclass(frozen=True, order=True)
class MatchBinding:
    sentence_ref: tuple[str, int]
    pattern_id: str
    bindings: tuple[tuple[int, int], ...]
    anchor: int
    chunk_id: int | None = field(default=None, compare=False)

    @property
    def binding_map(self) -> dict[int, int]:
        return dict(self.bindings)

    def __getitem__(self, capture: int) -> int:
        return self.binding_map[capture]

    def to_json(self) -> dict:
        out = {
            "pattern_id": self.pattern_id,
            "sentence_ref": list(self.sentence_ref),
            "bindings": {str(k): v for k, v in self.bindings},
            "anchor": self.anchor,
        }
        if self.chunk_id is not None:
            out["chunk"] = self.chunk_id
        return out

    @classmethod
    def from_json(cls, data: dict) -> "MatchBinding":
        return cls(
            (data["sentence_ref"][0], int(data["sentence_ref"][1])),
            data["pattern_id"],
            tuple(sorted((int(k), int(v)) for k, v in data["bindings"].items())),
            int(data["anchor"]),
            data.get("chunk"),
        )


def node_accepts(node: PatternNode, tok: Token) -> bool:
    """Local (arc/POS/lemma) constraints of one pattern node."""
    if node.arc is not None:
        if node.is_root_arc:
            if tok.head != 0:
                return False
        # a root token has no arc to a head, so it carries no other label
        elif tok.head == 0 or tok.deprel != node.arc:
            return False
    if node.pos is not None and tok.xpos != node.pos:
        return False
    if node.lemma is not None and tok.lemma != node.lemma:
        return False
    return True


def match_sentence(pattern: DepPattern, sentence: ParsedSentence) -> list[MatchBinding]:
    """Every injective assignment of pattern nodes to tokens that satisfies the pattern.

    Results are deduplicated on (captures, anchor) and sorted by bound token ids.
    """
    nodes = pattern.nodes
    parents = pattern.parents
    tokens = sentence.tokens
    k = len(nodes)
    assign = [0] * k
    used: set[int] = set()
    found: set[tuple[tuple[int, int], ...] | int] = set()
    results: list[MatchBinding] = []
    captures = [(n.var, i) for i, n in enumerate(nodes) if n.var is not None]
    captures.sort()

    def extend(i: int):
        if i == k:
            binds = tuple((var, assign[j]) for var, j in captures)
            key = (binds, assign[0])
            if key not in found:
                found.add(key)
                results.append(MatchBinding(sentence.ref, pattern.pattern_id, binds, assign[0]))
            return
        node = nodes[i]
        if parents[i] < 0:
            pool = range(1, len(tokens) + 1)
        else:
            pool = sentence.children(assign[parents[i]])
        for tid in pool:
            if tid in used or not node_accepts(node, tokens[tid - 1]):
                continue
            assign[i] = tid
            used.add(tid)
            extend(i + 1)
            used.discard(tid)

    extend(0)
    results.sort(key=lambda b: (tuple(t for _, t in b.bindings), b.anchor))
    return results

"""Dependency pattern language.

A pattern head is written ``arclabel:POS`lemma'$i``; every part is
optional but at least one must be present. Terms are linked with ``<``
(right operand is a dependent of the left) and ``>`` (left operand is a
dependent of the right). Links chain: in ``A < B < C`` the node ``C``
hangs under ``B``. Brackets group a term so that its head node takes part
in the outer link, e.g. ``[amod:'such' > prep:IN'as' < pobj:$1]`` is
headed by the ``as`` node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

QUOTES = "'`’‘"
ROOT_ARC = "ROOT"
_IDENT_CHAR = re.compile(r"[A-Za-z0-9_\-]")


class PatternSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.offset = len(text[:pos].encode("utf-8"))
        super().__init__(f"{message} at byte {self.offset}: {text!r}")


@dataclass(eq=True)
class PatternNode:
    arc: str | None = None
    pos: str | None = None
    lemma: str | None = None
    var: int | None = None
    edges: list[tuple[str, "PatternNode"]] = field(default_factory=list)

    @property
    def is_root_arc(self) -> bool:
        return self.arc is not None and self.arc.upper() == ROOT_ARC

    def head_text(self) -> str:
        out = ""
        if self.arc is not None:
            out += self.arc + ":"
        if self.pos is not None:
            out += self.pos
        if self.lemma is not None:
            out += f"'{self.lemma}'"
        if self.var is not None:
            out += f"${self.var}"
        return out

    def walk(self):
        yield self
        for _, child in self.edges:
            yield from child.walk()


@dataclass
class DepPattern:
    pattern_id: str
    root: PatternNode
    raw_text: str = ""
    # syntactic view, filled by _compile: nodes in pre-order from the
    # pattern's syntactic head, with parent index (-1 for the head)
    nodes: list[PatternNode] = field(default_factory=list, repr=False, compare=False)
    parents: list[int] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if not self.nodes:
            self._compile()

    def __eq__(self, other):
        if not isinstance(other, DepPattern):
            return NotImplemented
        return self.pattern_id == other.pattern_id and self.root == other.root

    @property
    def captures(self) -> list[int]:
        return sorted(n.var for n in self.nodes if n.var is not None)

    def children_of(self, index: int) -> list[int]:
        return [i for i, p in enumerate(self.parents) if p == index]

    def _compile(self) -> None:
        # undirected adjacency with direction recorded as (head, dependent)
        heads: dict[int, PatternNode] = {}
        deps: dict[int, list[PatternNode]] = {}
        for node in self.root.walk():
            for op, child in node.edges:
                head, dep = (node, child) if op == "<" else (child, node)
                if id(dep) in heads:
                    raise ValueError("pattern node has two heads")
                heads[id(dep)] = head
                deps.setdefault(id(head), []).append(dep)
        top = [n for n in self.root.walk() if id(n) not in heads]
        if len(top) != 1:
            raise ValueError("pattern has no unique head node")
        nodes, parents = [], []
        stack = [(top[0], -1)]
        while stack:
            node, parent = stack.pop()
            nodes.append(node)
            parents.append(parent)
            idx = len(nodes) - 1
            for dep in reversed(deps.get(id(node), [])):
                stack.append((dep, idx))
        self.nodes = nodes
        self.parents = parents


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.nodes: list[PatternNode] = []
        # (head index, dependent index) in creation order
        self.links: list[tuple[int, int]] = []
        self.head_of: dict[int, int] = {}

    def error(self, message: str, pos: int | None = None):
        raise PatternSyntaxError(message, self.text, self.pos if pos is None else pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> tuple[list[PatternNode], list[tuple[int, int]]]:
        if not self.text.strip():
            self.error("empty pattern")
        self.seq()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return self.nodes, self.links

    def link(self, head: int, dep: int, at: int):
        if dep in self.head_of:
            self.error("node would have two heads", at)
        self.head_of[dep] = head
        self.links.append((head, dep))

    def seq(self) -> int:
        first = prev = self.term()
        members = [first]
        while self.peek() in ("<", ">"):
            op = self.text[self.pos]
            at = self.pos
            self.pos += 1
            cur = self.term()
            if op == "<":
                self.link(prev, cur, at)
            else:
                self.link(cur, prev, at)
            members.append(cur)
            prev = cur
        tops = [m for m in members if m not in self.head_of]
        return tops[0]

    def term(self) -> int:
        ch = self.peek()
        if ch == "[":
            start = self.pos
            self.pos += 1
            if self.peek() == "]":
                self.error("empty brackets", start)
            head = self.seq()
            if self.peek() != "]":
                self.error("expected ']'")
            self.pos += 1
            return head
        return self.node()

    def ident(self) -> str:
        start = self.pos
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if _IDENT_CHAR.match(ch):
                self.pos += 1
            elif ch == "$" and not (self.pos + 1 < len(text) and text[self.pos + 1].isdigit()):
                # tags such as PRP$ carry a literal dollar sign
                self.pos += 1
            else:
                break
        return text[start:self.pos]

    def node(self) -> int:
        self.skip_ws()
        start = self.pos
        node = PatternNode()
        word = self.ident()
        if word and self.pos < len(self.text) and self.text[self.pos] == ":":
            node.arc = word
            self.pos += 1
            word = self.ident()
        if word:
            node.pos = word
        if self.pos < len(self.text) and self.text[self.pos] in QUOTES:
            self.pos += 1
            end = self.pos
            while end < len(self.text) and self.text[end] not in QUOTES:
                end += 1
            if end >= len(self.text):
                self.error("unterminated lemma quote", self.pos - 1)
            if end == self.pos:
                self.error("empty lemma")
            node.lemma = self.text[self.pos:end].lower()
            self.pos = end + 1
        if self.pos < len(self.text) and self.text[self.pos] == "$":
            self.pos += 1
            digits = re.match(r"\d+", self.text[self.pos:])
            if not digits:
                self.error("expected capture index after '$'")
            node.var = int(digits.group())
            self.pos += len(digits.group())
        if node.arc is None and node.pos is None and node.lemma is None and node.var is None:
            self.error("expected a pattern node", start)
        if node.var is not None and any(n.var == node.var for n in self.nodes):
            self.error(f"duplicate capture ${node.var}", start)
        self.nodes.append(node)
        return len(self.nodes) - 1


def parse_pattern(text: str, pattern_id: str = "pattern") -> DepPattern:
    nodes, links = _Parser(text).parse()
    # root the AST at the first written node; neighbours in link order
    adjacency: dict[int, list[tuple[str, int]]] = {i: [] for i in range(len(nodes))}
    for head, dep in links:
        adjacency[head].append(("<", dep))
        adjacency[dep].append((">", head))
    seen = {0}
    stack = [0]
    while stack:
        cur = stack.pop()
        for op, other in adjacency[cur]:
            if other in seen:
                continue
            seen.add(other)
            nodes[cur].edges.append((op, nodes[other]))
            stack.append(other)
    return DepPattern(pattern_id, nodes[0], text)


def format_pattern(pattern: DepPattern | PatternNode) -> str:
    """Render an AST so that :func:`parse_pattern` rebuilds it exactly."""
    node = pattern.root if isinstance(pattern, DepPattern) else pattern
    out = node.head_text()
    for i, (op, child) in enumerate(node.edges):
        left = out if i == 0 else f"[{out}]"
        right = format_pattern(child)
        if child.edges:
            right = f"[{right}]"
        out = f"{left} {op} {right}"
    return out


_NAMED = re.compile(r"^([A-Za-z0-9_.\-]+):\s+(\S.*)$")


def read_patterns(lines: Iterable[str], prefix: str = "p") -> list[DepPattern]:
    """Parse a pattern file body: one pattern per line, ``name: `` prefix optional.

    A name is only recognised when whitespace follows its colon, so
    ``ROOT:VBP$2 ...`` is read as a pattern rather than a name.
    """
    patterns = []
    names = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _NAMED.match(line)
        if m:
            name, body = m.group(1), m.group(2)
        else:
            name, body = f"{prefix}{lineno}", line
        if name in names:
            raise ValueError(f"duplicate pattern name {name!r} on line {lineno}")
        names.add(name)
        patterns.append(parse_pattern(body, name))
    return patterns


def load_patterns(path: str | Path) -> list[DepPattern]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return read_patterns(fh, prefix=path.stem)

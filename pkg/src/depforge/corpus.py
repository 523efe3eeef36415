"""CoNLL-U ingestion into validated dependency trees."""

from __future__ import annotations

import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, NamedTuple

logger = logging.getLogger(__name__)


class IngestError(ValueError):
    """A CoNLL-U line could not be read at all."""

    def __init__(self, file: str, line: int, reason: str):
        super().__init__(f"{file}:{line}: {reason}")
        self.file = file
        self.line = line
        self.reason = reason


class Token(NamedTuple):
    id: int
    form: str
    lemma: str
    xpos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class ParsedSentence:
    doc_id: str
    sent_index: int
    tokens: tuple[Token, ...]
    root_id: int = 0
    _children: tuple[tuple[int, ...], ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        kids: list[list[int]] = [[] for _ in range(len(self.tokens) + 1)]
        root = 0
        for tok in self.tokens:
            if tok.head == 0 and not root:
                root = tok.id
            if 0 <= tok.head <= len(self.tokens):
                kids[tok.head].append(tok.id)
        object.__setattr__(self, "_children", tuple(tuple(k) for k in kids))
        if not self.root_id:
            object.__setattr__(self, "root_id", root)

    @property
    def ref(self) -> tuple[str, int]:
        return (self.doc_id, self.sent_index)

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, token_id: int) -> Token:
        if not 1 <= token_id <= len(self.tokens):
            raise KeyError(f"no token {token_id} in sentence {self.ref}")
        return self.tokens[token_id - 1]

    def children(self, token_id: int) -> tuple[int, ...]:
        """Dependents of ``token_id`` in surface order (0 gives the root)."""
        return self._children[token_id]

    def subtree(self, token_id: int, prune: Iterable[int] = ()) -> list[int]:
        """Sorted ids of the subtree under ``token_id``, minus pruned branches."""
        pruned = set(prune)
        out = []
        stack = [token_id]
        while stack:
            tid = stack.pop()
            if tid in pruned:
                continue
            out.append(tid)
            stack.extend(self._children[tid])
        out.sort()
        return out

    def ancestors(self, token_id: int) -> Iterator[int]:
        """Yield the heads above ``token_id``, nearest first."""
        seen = 0
        tid = self.token(token_id).head
        while tid and seen <= len(self.tokens):
            yield tid
            tid = self.tokens[tid - 1].head
            seen += 1

    @property
    def text(self) -> str:
        return " ".join(t.form for t in self.tokens)


@dataclass
class Corpus:
    sentences: list[ParsedSentence] = field(default_factory=list)
    source_manifest: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def __iter__(self):
        return iter(self.sentences)

    def __len__(self):
        return len(self.sentences)

    def extend(self, other: "Corpus") -> None:
        seen = {s.ref for s in self.sentences}
        for sent in other.sentences:
            if sent.ref in seen:
                raise ValueError(f"duplicate sentence reference {sent.ref}")
            seen.add(sent.ref)
        self.sentences.extend(other.sentences)
        self.source_manifest.extend(other.source_manifest)
        self.skipped.extend(other.skipped)


def validate_tree(sentence: ParsedSentence) -> str | None:
    """Return ``None`` for a well-formed tree, else the first violation found."""
    n = len(sentence.tokens)
    if n == 0:
        return "empty sentence"
    roots = 0
    for pos, tok in enumerate(sentence.tokens, start=1):
        if tok.id != pos:
            return f"token ids not consecutive at {tok.id}"
        if not tok.xpos or not tok.deprel:
            return f"empty xpos or deprel on token {tok.id}"
        if tok.head == tok.id:
            return f"self-loop on token {tok.id}"
        if tok.head < 0 or tok.head > n:
            return "dangling head"
        if tok.head == 0:
            roots += 1
    if roots == 0:
        return "no root token"
    if roots > 1:
        return "multiple root tokens"
    # every token must reach the root within n steps
    state = [0] * (n + 1)  # 0 unvisited, 1 on current path, 2 reaches root
    for start in range(1, n + 1):
        path = []
        tid = start
        while tid and state[tid] == 0:
            state[tid] = 1
            path.append(tid)
            tid = sentence.tokens[tid - 1].head
        if tid and state[tid] == 1:
            return "cyclic head chain"
        for p in path:
            state[p] = 2
    return None


def _checksum(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _iter_blocks(lines: Iterable[str]) -> Iterator[tuple[int, list[tuple[int, str]], list[str]]]:
    block: list[tuple[int, str]] = []
    comments: list[str] = []
    start = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block or comments:
                yield start, block, comments
            block, comments = [], []
            continue
        if not block and not comments:
            start = lineno
        if line.startswith("#"):
            comments.append(line)
        else:
            block.append((lineno, line))
    if block or comments:
        yield start, block, comments


def parse_conllu(stream: BinaryIO | bytes | str, name: str = "<stream>", doc_id: str | None = None) -> Corpus:
    """Read a CoNLL-U byte stream.

    ``# newdoc id`` and ``# sent_index`` comments are honoured when present;
    otherwise sentences are numbered within ``doc_id`` (default: ``name``).
    Sentences failing :func:`validate_tree` are dropped and recorded in
    ``Corpus.skipped``; unreadable lines raise :class:`IngestError`.
    """
    if isinstance(stream, str):
        data = stream.encode("utf-8")
    elif isinstance(stream, (bytes, bytearray)):
        data = bytes(stream)
    else:
        data = stream.read()
    text = data.decode("utf-8")
    current_doc = doc_id if doc_id is not None else name
    counter: dict[str, int] = {}
    corpus = Corpus(source_manifest=[{"path": name, "sha256": _checksum(data), "sentences": 0}])
    seen: set[tuple[str, int]] = set()

    for start, block, comments in _iter_blocks(io.StringIO(text)):
        explicit_index = None
        for c in comments:
            key, eq, value = c[1:].partition("=")
            key = key.strip()
            if not eq:
                continue
            if key == "newdoc id":
                current_doc = value.strip()
            elif key == "sent_index" and value.strip().isdigit():
                explicit_index = int(value)
        if not block:
            continue
        tokens = []
        for lineno, line in block:
            cols = line.split("\t")
            if len(cols) != 10:
                raise IngestError(name, lineno, f"expected 10 columns, got {len(cols)}")
            raw_id = cols[0]
            if "-" in raw_id or "." in raw_id:
                continue
            try:
                tid = int(raw_id)
                head = int(cols[6])
            except ValueError:
                raise IngestError(name, lineno, f"non-numeric ID or HEAD: {cols[0]!r} / {cols[6]!r}") from None
            tokens.append(Token(tid, cols[1], cols[2].lower(), cols[4] if cols[4] != "_" else "", head, cols[7] if cols[7] != "_" else ""))
        index = counter.get(current_doc, 0) if explicit_index is None else explicit_index
        counter[current_doc] = index + 1
        sent = ParsedSentence(current_doc, index, tuple(tokens))
        problem = validate_tree(sent)
        if problem is None and sent.ref in seen:
            problem = "duplicate sentence reference"
        if problem is not None:
            corpus.skipped.append({"file": name, "line": start, "reason": problem})
            logger.debug("skipping sentence at %s:%d: %s", name, start, problem)
            continue
        seen.add(sent.ref)
        corpus.sentences.append(sent)
    corpus.source_manifest[0]["sentences"] = len(corpus.sentences)
    return corpus


def read_conllu(path: str | Path) -> Corpus:
    path = Path(path)
    with path.open("rb") as fh:
        return parse_conllu(fh, name=str(path), doc_id=path.stem)


def read_corpus(paths: Iterable[str | Path]) -> Corpus:
    corpus = Corpus()
    for p in paths:
        corpus.extend(read_conllu(p))
    return corpus


def to_conllu(sentences: Iterable[ParsedSentence]) -> str:
    """Serialize the columns this package reads back into CoNLL-U."""
    out = []
    last_doc = None
    for sent in sentences:
        if sent.doc_id != last_doc:
            out.append(f"# newdoc id = {sent.doc_id}")
            last_doc = sent.doc_id
        out.append(f"# sent_id = {sent.doc_id}-{sent.sent_index}")
        out.append(f"# sent_index = {sent.sent_index}")
        for t in sent.tokens:
            out.append("\t".join([str(t.id), t.form, t.lemma, "_", t.xpos, "_", str(t.head), t.deprel, "_", "_"]))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_skip_report(skipped: Iterable[dict], fh) -> None:
    for entry in skipped:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")

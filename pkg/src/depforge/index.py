"""Chunked on-disk index of dependency trees keyed by upward chain prefixes.

Each token contributes the (deprel, xpos, lemma) steps read from itself
toward the root; every prefix of length 1..D is indexed twice, once with
concrete lemmas and once with all lemmas wildcarded. Chunk files are
self-contained: they embed the sentences they index.

Chunk file layout (little-endian)::

    header    magic "DPIX", version u16, depth u16, chunk_id u32,
              sentences u32, strings u32, keys u32, postings u64,
              4 x u64 section offsets
    strings   u32 byte lengths, then the UTF-8 blob
    sentences u64 record offsets (n + 1), then records
    keys      fixed-width big-endian key rows (12 * depth bytes, sorted),
              u64 posting starts, u32 posting counts
    postings  u32 sentence deltas (restarting per key), u16 token ids
"""

from __future__ import annotations

import bisect
import hashlib
import json
import logging
import mmap
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .corpus import Corpus, ParsedSentence, Token

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MAGIC = b"DPIX"
DEFAULT_CHUNK_SIZE = 160_000
DEFAULT_DEPTH = 3
ROOT_DEPREL = "root"
MANIFEST = "manifest.json"

_HEADER = struct.Struct("<4sHHIIIIQQQQQ")
_WILD_ID = 0xFFFFFFFF
_STEP = struct.Struct(">III")


class DepIndexError(Exception):
    """Base class for index failures."""


class IndexBuildError(DepIndexError):
    pass


class CorruptChunkError(DepIndexError):
    def __init__(self, chunk_id: int, reason: str):
        super().__init__(f"chunk {chunk_id}: {reason}")
        self.chunk_id = chunk_id


class _Wildcard:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "*"

    def __reduce__(self):
        return (_Wildcard, ())

    def __lt__(self, other):
        return not isinstance(other, _Wildcard)


WILDCARD = _Wildcard()


@dataclass(frozen=True)
class ChainKey:
    steps: tuple[tuple[str, str, object], ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("chain key needs at least one step")
        for step in self.steps:
            if len(step) != 3 or any(part == "" or part is None for part in step):
                raise ValueError(f"bad chain step {step!r}")

    def __len__(self):
        return len(self.steps)

    @property
    def is_wildcard(self) -> bool:
        return all(s[2] is WILDCARD for s in self.steps)

    def __str__(self):
        return " <- ".join(f"{d}:{p}:{'*' if l is WILDCARD else l}" for d, p, l in self.steps)


class Posting(NamedTuple):
    chunk_id: int
    sentence_ref: tuple[str, int]
    token_id: int


def _step_deprel(tok: Token) -> str:
    return ROOT_DEPREL if tok.head == 0 else tok.deprel


def upward_chain(sentence: ParsedSentence, token_id: int, max_depth: int) -> list[int]:
    chain = [token_id]
    tid = sentence.token(token_id).head
    while tid and len(chain) < max_depth:
        chain.append(tid)
        tid = sentence.tokens[tid - 1].head
    return chain


def chain_keys(sentence: ParsedSentence, token_id: int, max_depth: int = DEFAULT_DEPTH) -> list[ChainKey]:
    """All chain-prefix keys of one token: concrete and wildcard variant per length."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if not 1 <= token_id <= len(sentence.tokens):
        raise ValueError(f"unknown token id {token_id}")
    keys = []
    concrete: list = []
    wild: list = []
    for tid in upward_chain(sentence, token_id, max_depth):
        tok = sentence.tokens[tid - 1]
        dep = _step_deprel(tok)
        concrete.append((dep, tok.xpos, tok.lemma))
        wild.append((dep, tok.xpos, WILDCARD))
        keys.append(ChainKey(tuple(concrete)))
        keys.append(ChainKey(tuple(wild)))
    return keys


# --- writing -----------------------------------------------------------------


class _Strings:
    def __init__(self):
        self.ids: dict[str, int] = {}
        self.items: list[str] = []

    def __call__(self, s: str) -> int:
        sid = self.ids.get(s)
        if sid is None:
            self.items.append(s)
            sid = self.ids[s] = len(self.items)
        return sid


def encode_chunk(chunk_id: int, sentences: list[ParsedSentence], max_depth: int) -> bytes:
    """Serialize one chunk. Output depends only on the arguments."""
    sentences = sorted(sentences, key=lambda s: s.ref)
    for a, b in zip(sentences, sentences[1:]):
        if a.ref == b.ref:
            raise IndexBuildError(f"duplicate sentence reference {a.ref}")
    intern = _Strings()
    width = 12 * max_depth
    records = []
    postings: dict[bytes, list[int]] = {}
    wild_bytes = _WILD_ID
    for li, sent in enumerate(sentences):
        n = len(sent.tokens)
        if n >= 1 << 16:
            raise IndexBuildError(f"sentence {sent.ref} too long to index")
        cols = []
        heads = []
        ctrip = [b""]
        wtrip = [b""]
        for tok in sent.tokens:
            f, l, x, d = intern(tok.form), intern(tok.lemma), intern(tok.xpos), intern(tok.deprel)
            cols.extend((f, l, x, d))
            heads.append(tok.head)
            sd = intern(ROOT_DEPREL) if tok.head == 0 else d
            ctrip.append(_STEP.pack(sd, x, l))
            wtrip.append(_STEP.pack(sd, x, wild_bytes))
        records.append(struct.pack(f"<IIH{4 * n}I{n}H", intern(sent.doc_id), sent.sent_index, n, *cols, *heads))
        toks = sent.tokens
        base = li << 16
        for tok in toks:
            c = w = b""
            tid = tok.id
            depth = 0
            value = base | tid
            while tid and depth < max_depth:
                c += ctrip[tid]
                w += wtrip[tid]
                depth += 1
                pad = b"\0" * (width - len(c))
                postings.setdefault(c + pad, []).append(value)
                postings.setdefault(w + pad, []).append(value)
                tid = toks[tid - 1].head

    keys = sorted(postings)
    counts = np.fromiter((len(postings[k]) for k in keys), dtype=np.uint32, count=len(keys))
    starts = np.zeros(len(keys), dtype=np.uint64)
    if len(keys):
        starts[1:] = np.cumsum(counts[:-1], dtype=np.uint64)
    flat = np.fromiter((v for k in keys for v in postings[k]), dtype=np.uint64, count=int(counts.sum()))
    sent_ids = (flat >> np.uint64(16)).astype(np.int64)
    tok_ids = (flat & np.uint64(0xFFFF)).astype("<u2")
    deltas = np.empty_like(sent_ids)
    if len(deltas):
        deltas[0] = sent_ids[0]
        deltas[1:] = sent_ids[1:] - sent_ids[:-1]
        deltas[starts.astype(np.int64)] = sent_ids[starts.astype(np.int64)]
    deltas = deltas.astype("<u4")

    str_blobs = [s.encode("utf-8") for s in intern.items]
    strings_sec = np.array([len(b) for b in str_blobs], dtype="<u4").tobytes() + b"".join(str_blobs)
    rec_offsets = np.zeros(len(records) + 1, dtype="<u8")
    if records:
        rec_offsets[1:] = np.cumsum([len(r) for r in records])
    sents_sec = rec_offsets.tobytes() + b"".join(records)
    keys_sec = b"".join(keys) + starts.astype("<u8").tobytes() + counts.astype("<u4").tobytes()
    post_sec = deltas.tobytes() + tok_ids.tobytes()

    off_strings = _HEADER.size
    off_sents = off_strings + len(strings_sec)
    off_keys = off_sents + len(sents_sec)
    off_post = off_keys + len(keys_sec)
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, max_depth, chunk_id, len(sentences), len(intern.items),
        len(keys), len(flat), off_strings, off_sents, off_keys, off_post,
    )
    return header + strings_sec + sents_sec + keys_sec + post_sec


def _write_chunk(args) -> tuple[int, str, int, str]:
    chunk_id, sentences, max_depth, directory = args
    data = encode_chunk(chunk_id, sentences, max_depth)
    name = chunk_filename(chunk_id)
    _atomic_write(Path(directory) / name, data)
    return chunk_id, name, len(sentences), hashlib.sha256(data).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def chunk_filename(chunk_id: int) -> str:
    return f"chunk-{chunk_id:06d}.dpi"


def _batches(items: Iterable[ParsedSentence], size: int) -> Iterator[list[ParsedSentence]]:
    it = iter(items)
    while True:
        batch = list(islice(it, size))
        if not batch:
            return
        yield batch


def build_index(
    corpus: Corpus | Iterable[ParsedSentence],
    out_dir: str | Path,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_depth: int = DEFAULT_DEPTH,
    workers: int = 1,
    sources: list[dict] | None = None,
) -> Path:
    """Write (or extend) an index directory and return its path.

    Rebuilding over the same sources rewrites byte-identical files. When the
    existing manifest's sources are a strict prefix of ``sources``, only the
    sentences of the new sources are indexed, into fresh chunks.
    """
    if chunk_size < 1 or max_depth < 1:
        raise ValueError("chunk_size and max_depth must be positive")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IndexBuildError(f"cannot create index directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise IndexBuildError(f"index directory {out} is not writable")
    if sources is None:
        sources = list(corpus.source_manifest) if isinstance(corpus, Corpus) else []
    sentences: Iterable[ParsedSentence] = corpus.sentences if isinstance(corpus, Corpus) else corpus

    chunks: list[dict] = []
    skip = 0
    manifest_path = out / MANIFEST
    if manifest_path.exists():
        old = json.loads(manifest_path.read_text())
        if old.get("max_depth") != max_depth or old.get("chunk_size") != chunk_size:
            raise IndexBuildError("existing index was built with a different depth or chunk size")
        old_src = old.get("sources", [])
        for a, b in zip(old_src, sources):
            if a["path"] == b["path"] and a["sha256"] != b["sha256"]:
                raise IndexBuildError(f"checksum mismatch for {a['path']} against existing manifest")
            if a != b:
                raise IndexBuildError(f"existing index covers a different corpus ({a['path']})")
        if len(old_src) > len(sources):
            raise IndexBuildError("existing index covers more sources than supplied")
        if old_src and len(old_src) < len(sources):
            chunks = old["chunks"]
            skip = sum(s["sentences"] for s in old_src)
            sentences = islice(sentences, skip, None)

    first_id = len(chunks)
    jobs = ((first_id + i, batch, max_depth, str(out)) for i, batch in enumerate(_batches(sentences, chunk_size)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            written = list(pool.map(_write_chunk, jobs))
    else:
        written = [_write_chunk(job) for job in jobs]
    for chunk_id, name, count, digest in written:
        chunks.append({"chunk_id": chunk_id, "file": name, "sentences": count, "sha256": digest})

    manifest = {
        "format": "depforge-index",
        "format_version": FORMAT_VERSION,
        "max_depth": max_depth,
        "chunk_size": chunk_size,
        "sentence_count": sum(c["sentences"] for c in chunks),
        "chunks": chunks,
        "sources": sources,
    }
    _atomic_write(manifest_path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    logger.info("indexed %d sentences into %d chunks at %s", manifest["sentence_count"], len(chunks), out)
    return out


# --- reading -----------------------------------------------------------------


class ChunkReader:
    def __init__(self, path: Path, chunk_id: int, max_depth: int):
        self.chunk_id = chunk_id
        self.path = path
        try:
            with open(path, "rb") as fh:
                self._buf = mmap.mmap(fh.fileno(), 0, access=mmap.ACCESS_READ) if os.path.getsize(path) else b""
        except OSError as exc:
            raise CorruptChunkError(chunk_id, f"cannot open {path}: {exc}") from exc
        buf = self._buf
        if len(buf) < _HEADER.size:
            raise CorruptChunkError(chunk_id, "truncated header")
        (magic, version, depth, cid, n_sent, n_str, n_keys, n_post,
         self._off_str, self._off_sent, self._off_keys, self._off_post) = _HEADER.unpack_from(buf, 0)
        if magic != MAGIC:
            raise CorruptChunkError(chunk_id, "bad magic")
        if version != FORMAT_VERSION:
            raise CorruptChunkError(chunk_id, f"unsupported format version {version}")
        if cid != chunk_id or depth != max_depth:
            raise CorruptChunkError(chunk_id, "header does not match manifest")
        self.depth = depth
        self.sentence_count = n_sent
        self.n_str, self.n_keys, self.n_post = n_str, n_keys, n_post
        width = 12 * depth
        expected = self._off_post + n_post * 6
        if not (_HEADER.size <= self._off_str <= self._off_sent <= self._off_keys <= self._off_post) or len(buf) != expected:
            raise CorruptChunkError(chunk_id, "section table inconsistent with file size")
        if self._off_post - self._off_keys != n_keys * (width + 12):
            raise CorruptChunkError(chunk_id, "key table size mismatch")
        self._width = width
        self._strings: list[str] | None = None
        self._string_ids: dict[str, int] | None = None
        self._rec_offsets = np.frombuffer(buf, dtype="<u8", count=n_sent + 1, offset=self._off_sent)
        self._rec_base = self._off_sent + 8 * (n_sent + 1)
        ko = self._off_keys
        self._keys = np.frombuffer(buf, dtype=f"S{width}", count=n_keys, offset=ko)
        self._starts = np.frombuffer(buf, dtype="<u8", count=n_keys, offset=ko + n_keys * width)
        self._counts = np.frombuffer(buf, dtype="<u4", count=n_keys, offset=ko + n_keys * (width + 8))
        self._deltas = np.frombuffer(buf, dtype="<u4", count=n_post, offset=self._off_post)
        self._tokens = np.frombuffer(buf, dtype="<u2", count=n_post, offset=self._off_post + 4 * n_post)

    @property
    def strings(self) -> list[str]:
        if self._strings is None:
            buf = self._buf
            lengths = np.frombuffer(buf, dtype="<u4", count=self.n_str, offset=self._off_str)
            pos = self._off_str + 4 * self.n_str
            blob = bytes(buf[pos:self._off_sent])
            ends = np.cumsum(lengths, dtype=np.int64)
            if len(ends) and ends[-1] != len(blob):
                raise CorruptChunkError(self.chunk_id, "string table size mismatch")
            out = [""]
            start = 0
            try:
                for end in ends.tolist():
                    out.append(blob[start:end].decode("utf-8"))
                    start = end
            except UnicodeDecodeError as exc:
                raise CorruptChunkError(self.chunk_id, "string table is not UTF-8") from exc
            self._strings = out
        return self._strings

    def _sid(self, s) -> int | None:
        if s is WILDCARD:
            return _WILD_ID
        if self._string_ids is None:
            self._string_ids = {s: i for i, s in enumerate(self.strings) if i}
        return self._string_ids.get(s)

    def encode_key(self, key: ChainKey) -> bytes | None:
        if len(key) > self.depth:
            raise ValueError(f"key length {len(key)} exceeds indexed depth {self.depth}")
        parts = []
        for dep, pos, lemma in key.steps:
            ids = (self._sid(dep), self._sid(pos), self._sid(lemma))
            if None in ids:
                return None
            parts.append(_STEP.pack(*ids))
        return b"".join(parts).ljust(self._width, b"\0")

    def _find(self, key: ChainKey) -> int | None:
        raw = self.encode_key(key)
        if raw is None or not self.n_keys:
            return None
        probe = np.array(raw, dtype=self._keys.dtype)
        i = int(np.searchsorted(self._keys, probe))
        if i < self.n_keys and self._keys[i] == probe:
            return i
        return None

    def count(self, key: ChainKey) -> int:
        i = self._find(key)
        return 0 if i is None else int(self._counts[i])

    def postings(self, key: ChainKey) -> list[tuple[int, int]]:
        """(local sentence index, token id) pairs for ``key``."""
        i = self._find(key)
        if i is None:
            return []
        start, count = int(self._starts[i]), int(self._counts[i])
        if start + count > self.n_post:
            raise CorruptChunkError(self.chunk_id, "posting range out of bounds")
        sents = np.cumsum(self._deltas[start:start + count], dtype=np.int64)
        if count and sents[-1] >= self.sentence_count:
            raise CorruptChunkError(self.chunk_id, "posting refers past sentence store")
        return list(zip(sents.tolist(), self._tokens[start:start + count].tolist()))

    def _record(self, li: int) -> tuple[int, int]:
        o0 = int(self._rec_offsets[li])
        o1 = int(self._rec_offsets[li + 1])
        return self._rec_base + o0, self._rec_base + o1

    def ref(self, li: int) -> tuple[str, int]:
        start, _ = self._record(li)
        doc, idx = struct.unpack_from("<II", self._buf, start)
        return (self.strings[doc], idx)

    def sentence(self, li: int) -> ParsedSentence:
        if not 0 <= li < self.sentence_count:
            raise CorruptChunkError(self.chunk_id, f"sentence {li} out of range")
        start, end = self._record(li)
        buf = self._buf
        try:
            doc, idx, n = struct.unpack_from("<IIH", buf, start)
            vals = struct.unpack_from(f"<{4 * n}I{n}H", buf, start + 10)
        except struct.error as exc:
            raise CorruptChunkError(self.chunk_id, f"bad sentence record {li}") from exc
        if start + 10 + 18 * n != end:
            raise CorruptChunkError(self.chunk_id, f"bad sentence record {li}")
        strings = self.strings
        heads = vals[4 * n:]
        tokens = tuple(
            Token(i + 1, strings[vals[4 * i]], strings[vals[4 * i + 1]], strings[vals[4 * i + 2]], heads[i], strings[vals[4 * i + 3]])
            for i in range(n)
        )
        return ParsedSentence(strings[doc], idx, tokens)

    def find(self, ref: tuple[str, int]) -> int | None:
        ref = (ref[0], int(ref[1]))
        li = bisect.bisect_left(range(self.sentence_count), ref, key=self.ref)
        if li < self.sentence_count and self.ref(li) == ref:
            return li
        return None

    def __iter__(self) -> Iterator[ParsedSentence]:
        for li in range(self.sentence_count):
            yield self.sentence(li)


class DepIndex:
    """Read-only view of an index directory."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        manifest_path = self.path / MANIFEST
        if not manifest_path.exists():
            raise FileNotFoundError(f"no index manifest at {manifest_path}")
        self.manifest = json.loads(manifest_path.read_text())
        if self.manifest.get("format_version") != FORMAT_VERSION:
            raise IndexBuildError(f"unsupported index format version {self.manifest.get('format_version')}")
        self.max_depth: int = self.manifest["max_depth"]
        self._chunks: dict[int, ChunkReader] = {}

    @property
    def chunk_ids(self) -> list[int]:
        return [c["chunk_id"] for c in self.manifest["chunks"]]

    def __len__(self):
        return self.manifest["sentence_count"]

    def chunk(self, chunk_id: int) -> ChunkReader:
        reader = self._chunks.get(chunk_id)
        if reader is None:
            entries = [c for c in self.manifest["chunks"] if c["chunk_id"] == chunk_id]
            if not entries:
                raise KeyError(f"no chunk {chunk_id}")
            reader = ChunkReader(self.path / entries[0]["file"], chunk_id, self.max_depth)
            self._chunks[chunk_id] = reader
        return reader

    def verify(self) -> None:
        """Check every chunk file against its manifest checksum."""
        for entry in self.manifest["chunks"]:
            data = (self.path / entry["file"]).read_bytes()
            if hashlib.sha256(data).hexdigest() != entry["sha256"]:
                raise CorruptChunkError(entry["chunk_id"], "checksum mismatch")

    def lookup(self, key: ChainKey, chunk_ids: Iterable[int] | None = None) -> Iterator[Posting]:
        if len(key) > self.max_depth:
            raise ValueError(f"key length {len(key)} exceeds indexed depth {self.max_depth}")
        for cid in self.chunk_ids if chunk_ids is None else chunk_ids:
            reader = self.chunk(cid)
            for li, tid in reader.postings(key):
                yield Posting(cid, reader.ref(li), tid)

    def count(self, key: ChainKey) -> int:
        return sum(self.chunk(cid).count(key) for cid in self.chunk_ids)

    def sentence(self, ref: tuple[str, int], chunk_id: int | None = None) -> ParsedSentence:
        for cid in self.chunk_ids if chunk_id is None else [chunk_id]:
            reader = self.chunk(cid)
            li = reader.find(ref)
            if li is not None:
                return reader.sentence(li)
        raise KeyError(f"sentence {ref} not in index")

    def sentences(self) -> Iterator[tuple[int, ParsedSentence]]:
        for cid in self.chunk_ids:
            for sent in self.chunk(cid):
                yield cid, sent


def open_index(path: str | Path) -> DepIndex:
    return DepIndex(path)

"""Index-accelerated pattern search over a chunked corpus index."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Iterator

from .index import WILDCARD, ROOT_DEPREL, ChainKey, DepIndex
from .matcher import MatchBinding, match_sentence
from .pattern import DepPattern

logger = logging.getLogger(__name__)


def candidate_keys(pattern: DepPattern, max_depth: int) -> list[ChainKey]:
    """Chain keys that every match of ``pattern`` must have a posting for.

    A chain starts at any node constraining both arc and POS and climbs the
    pattern's head links while that stays true. A concrete-lemma key is only
    produced when every node on the chain names a lemma.
    """
    keys = []
    for i, node in enumerate(pattern.nodes):
        concrete: list | None = []
        wild: list = []
        j = i
        while j >= 0 and len(wild) < max_depth:
            n = pattern.nodes[j]
            if n.arc is None or n.pos is None:
                break
            dep = ROOT_DEPREL if n.is_root_arc else n.arc
            wild.append((dep, n.pos, WILDCARD))
            if concrete is not None and n.lemma is not None:
                concrete.append((dep, n.pos, n.lemma))
            else:
                concrete = None
            keys.append(ChainKey(tuple(wild)))
            if concrete is not None:
                keys.append(ChainKey(tuple(concrete)))
            if n.is_root_arc:
                break
            j = pattern.parents[j]
    return keys


def _search_chunk(index: DepIndex, pattern: DepPattern, chunk_id: int) -> list[MatchBinding]:
    reader = index.chunk(chunk_id)
    keys = candidate_keys(pattern, index.max_depth)
    if keys:
        # fewest postings wins; ties go to the longer, then earlier, key
        best = min(enumerate(keys), key=lambda ik: (reader.count(ik[1]), -len(ik[1]), ik[0]))[1]
        local = sorted({li for li, _ in reader.postings(best)})
    else:
        local = range(reader.sentence_count)
    out = []
    for li in local:
        sent = reader.sentence(li)
        for b in match_sentence(pattern, sent):
            out.append(MatchBinding(b.sentence_ref, b.pattern_id, b.bindings, b.anchor, chunk_id))
    return out


def _search_chunk_job(args) -> list[MatchBinding]:
    path, pattern, chunk_id = args
    return _search_chunk(DepIndex(path), pattern, chunk_id)


def search(index: DepIndex, pattern: DepPattern, workers: int = 1) -> Iterator[MatchBinding]:
    """Yield every match of ``pattern`` in the index, in chunk then sentence order."""
    if not candidate_keys(pattern, index.max_depth):
        logger.warning("pattern %s has no indexable chain; scanning every chunk", pattern.pattern_id)
    if workers > 1 and len(index.chunk_ids) > 1:
        jobs = [(index.path, pattern, cid) for cid in index.chunk_ids]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_search_chunk_job, jobs):
                yield from part
        return
    for cid in index.chunk_ids:
        yield from _search_chunk(index, pattern, cid)


def full_scan(index: DepIndex, pattern: DepPattern) -> Iterator[MatchBinding]:
    """Match every stored sentence; the unaccelerated baseline."""
    for cid, sent in index.sentences():
        for b in match_sentence(pattern, sent):
            yield MatchBinding(b.sentence_ref, b.pattern_id, b.bindings, b.anchor, cid)

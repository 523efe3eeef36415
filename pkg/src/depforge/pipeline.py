"""Pipeline stages over a work directory.

Each stage reads the previous stage's files and writes its own, so the
full run and hand-chained stage commands produce the same bytes:

    index/              dependency index
    ingest_skips.jsonl  sentences rejected at ingest
    matches.jsonl       pattern matches (with the pattern's operation)
    examples.jsonl      expanded deduction examples
    expand_skips.jsonl  filtered or unexpandable matches, with reasons
    augmented.jsonl     originals plus paraphrased copies
    augment_report.json provider call counts and edit-distance histogram
    train.jsonl, stats.json
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Iterable, Iterator

from .augment import (
    AugmentReport,
    FixtureProvider,
    HTTPProvider,
    IdentityProvider,
    MockProvider,
    ParaphraseProvider,
    ProviderError,
    RecordingProvider,
    augment_examples,
)
from .config import PipelineConfig
from .corpus import read_corpus, write_skip_report
from .emit import emit
from .index import DepIndex, build_index
from .matcher import MatchBinding
from .pattern import DepPattern, load_patterns
from .search import search
from .templates import DeductionExample, ExpansionSkipped, ModifierStoplist, expand, filter_match

logger = logging.getLogger(__name__)

MATCHES = "matches.jsonl"
EXAMPLES = "examples.jsonl"
EXPAND_SKIPS = "expand_skips.jsonl"
AUGMENTED = "augmented.jsonl"
AUGMENT_REPORT = "augment_report.json"
INGEST_SKIPS = "ingest_skips.jsonl"


class StageInputError(FileNotFoundError):
    """A stage's input file is missing; run the earlier stage first."""


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_jsonl(path: Path, rows: Iterable[dict]) -> int:
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(_dump(row) + "\n")
            count += 1
    os.replace(tmp, path)
    return count


def read_jsonl(path: Path) -> Iterator[dict]:
    if not path.exists():
        raise StageInputError(f"{path} not found; run the preceding stage first")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield json.loads(line)
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})") from None


def load_pattern_set(config: PipelineConfig) -> list[tuple[str, DepPattern]]:
    out = []
    for op, path in config.pattern_files():
        out.extend((op, p) for p in load_patterns(path))
    ids = [p.pattern_id for _, p in out]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ValueError(f"pattern ids used twice across pattern files: {', '.join(dupes)}")
    return out


def open_index_dir(config: PipelineConfig) -> DepIndex:
    path = config.index_path
    if not (path / "manifest.json").exists():
        raise StageInputError(f"no index at {path}; build one with `depforge index --corpus FILE`")
    return DepIndex(path)


# --- stages ------------------------------------------------------------------------


def stage_index(config: PipelineConfig) -> Path:
    corpus = read_corpus(config.corpus)
    config.work.mkdir(parents=True, exist_ok=True)
    with open(config.work / INGEST_SKIPS, "w", encoding="utf-8") as fh:
        write_skip_report(corpus.skipped, fh)
    if corpus.skipped:
        logger.warning("skipped %d malformed sentences (see %s)", len(corpus.skipped), config.work / INGEST_SKIPS)
    return build_index(corpus, config.index_path, config.chunk_size, config.max_depth, config.workers)


def stage_search(config: PipelineConfig) -> int:
    index = open_index_dir(config)
    patterns = load_pattern_set(config)

    def rows():
        for op, pattern in patterns:
            for m in search(index, pattern, config.workers):
                row = m.to_json()
                row["op"] = op
                yield row

    config.work.mkdir(parents=True, exist_ok=True)
    n = write_jsonl(config.work / MATCHES, rows())
    logger.info("found %d matches for %d patterns", n, len(patterns))
    return n


def expand_matches(matches: Iterable[tuple[str, MatchBinding]], index: DepIndex,
                   stoplist: ModifierStoplist) -> tuple[list[DeductionExample], list[dict]]:
    """Filter and expand matches; returns examples and skip records in match order."""
    examples, skips = [], []
    for op, m in matches:
        sentence = index.sentence(m.sentence_ref, m.chunk_id)
        reason = filter_match(m, sentence, stoplist)
        stage = "filter"
        if reason is None:
            try:
                examples.append(expand(m, sentence, op))
                continue
            except ExpansionSkipped as exc:
                reason, stage = exc.reason, "expand"
        skips.append({"stage": stage, "reason": reason, "op": op, **m.to_json()})
    return examples, skips


def stage_expand(config: PipelineConfig) -> tuple[int, int]:
    index = open_index_dir(config)
    stoplist = ModifierStoplist.from_file(config.stoplist) if config.stoplist else ModifierStoplist()
    matches = [(row["op"], MatchBinding.from_json(row)) for row in read_jsonl(config.work / MATCHES)]
    examples, skips = expand_matches(matches, index, stoplist)
    write_jsonl(config.work / EXAMPLES, (e.to_json() for e in examples))
    write_jsonl(config.work / EXPAND_SKIPS, skips)
    logger.info("expanded %d examples, skipped %d matches", len(examples), len(skips))
    return len(examples), len(skips)


def make_provider(config: PipelineConfig) -> ParaphraseProvider | None:
    spec = config.provider
    if spec == "none":
        return None
    if spec == "mock":
        provider: ParaphraseProvider = MockProvider()
    elif spec == "identity":
        provider = IdentityProvider()
    elif spec.startswith("fixture:"):
        provider = FixtureProvider(spec[len("fixture:"):])
    elif spec.startswith(("http://", "https://")):
        provider = HTTPProvider(spec)
    else:
        raise ValueError(f"unknown provider {spec!r}; use mock, identity, none, fixture:PATH or an http(s) URL")
    if config.record:
        provider = RecordingProvider(provider, config.record)
    return provider


def stage_augment(config: PipelineConfig, backoff: float = 0.05) -> AugmentReport:
    provider = make_provider(config)
    examples = [DeductionExample.from_json(r) for r in read_jsonl(config.work / EXAMPLES)]
    report = AugmentReport()
    if provider is None:
        out: Iterable[DeductionExample] = examples
        report.examples_in = report.examples_out = len(examples)
    else:
        out = augment_examples(examples, provider, config.n, config.top_p, config.seed, config.workers,
                               backoff=backoff, report=report)
    write_jsonl(config.work / AUGMENTED, (e.to_json() for e in out))
    with open(config.work / AUGMENT_REPORT, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    if provider is not None and report.examples_in and report.failures == report.examples_in:
        raise ProviderError(f"paraphrase provider failed for all {report.failures} examples; "
                            f"originals were written unaugmented to {config.work / AUGMENTED}")
    return report


def stage_emit(config: PipelineConfig) -> dict:
    work = config.work
    examples = [DeductionExample.from_json(r) for r in read_jsonl(work / AUGMENTED)]
    matches = [MatchBinding.from_json(r) for r in read_jsonl(work / MATCHES)] if (work / MATCHES).exists() else None
    skips = list(read_jsonl(work / EXPAND_SKIPS)) if (work / EXPAND_SKIPS).exists() else None
    pattern_ids = []
    if (work / MATCHES).exists():
        try:
            pattern_ids = [p.pattern_id for _, p in load_pattern_set(config)]
        except (OSError, ValueError):
            pattern_ids = []
    return emit(examples, config.seed, work, config.separator, config.dev_fraction, matches, skips, pattern_ids)


def run(config: PipelineConfig) -> dict:
    """index -> search -> expand -> augment -> emit."""
    stage_index(config)
    stage_search(config)
    stage_expand(config)
    stage_augment(config)
    return stage_emit(config)

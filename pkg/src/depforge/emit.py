"""Serialization of deduction examples into seq2seq training records."""

from __future__ import annotations

import hashlib
import json
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .templates import OPERATIONS, DeductionExample

SCHEMA_VERSION = 1
AUGMENT_FAILED_NOTE = "augmentation failed"


@dataclass(frozen=True)
class TrainingRecord:
    source: str
    target: str
    meta: dict

    def to_json(self) -> dict:
        return {"schema": SCHEMA_VERSION, "source": self.source, "target": self.target, "meta": self.meta}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True)


def premise_order(seed: int, index: int, k: int) -> list[int]:
    """Permutation of ``k`` premises for record ``index``; depends only on (seed, index)."""
    if k <= 1:
        return list(range(k))
    rng = np.random.default_rng([seed, index])
    return [int(i) for i in rng.permutation(k)]


def to_record(example: DeductionExample, seed: int, index: int, separator: str = " ") -> TrainingRecord:
    order = premise_order(seed, index, len(example.premises))
    meta = {
        "op": example.op,
        "pattern_id": example.pattern_id,
        "sentence_ref": list(example.sentence_ref),
        "bindings": {str(k): v for k, v in example.bindings},
        "paraphrase": example.paraphrase_of is not None,
        "paraphrase_of": example.paraphrase_of,
        "premise_order": order,
    }
    if example.notes:
        meta["notes"] = list(example.notes)
    return TrainingRecord(separator.join(example.premises[i] for i in order), example.conclusion, meta)


def to_records(examples: Iterable[DeductionExample], seed: int, separator: str = " ") -> Iterator[TrainingRecord]:
    if seed is None:
        raise ValueError("emit needs an explicit seed")
    for index, ex in enumerate(examples):
        yield to_record(ex, seed, index, separator)


def in_dev_split(example: DeductionExample, dev_fraction: float) -> bool:
    """Hash split on the original example key, so copies follow their original."""
    if dev_fraction <= 0:
        return False
    key = example.paraphrase_of or example.key
    bucket = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big") / 2 ** 64
    return bucket < dev_fraction


def stats(examples: Iterable[DeductionExample], matches: Iterable | None = None, skips: Iterable[dict] | None = None,
          pattern_ids: Iterable[str] = ()) -> dict:
    """Counts per pattern and operation, skip reasons and augmentation ratios.

    ``matches`` are MatchBindings (or anything with ``pattern_id``) and
    ``skips`` the expansion-stage skip records.
    """
    per_pattern_matches: Counter = Counter({p: 0 for p in pattern_ids})
    for m in matches or ():
        per_pattern_matches[m.pattern_id] += 1
    reasons: Counter = Counter()
    dropped_per_pattern: Counter = Counter()
    for s in skips or ():
        reasons[s["reason"]] += 1
        dropped_per_pattern[s["pattern_id"]] += 1
    per_op: Counter = Counter({op: 0 for op in OPERATIONS})
    per_pattern: Counter = Counter({p: 0 for p in pattern_ids})
    total = originals = failures = duplicates = 0
    for ex in examples:
        total += 1
        per_op[ex.op] += 1
        per_pattern[ex.pattern_id] += 1
        if ex.paraphrase_of is None:
            originals += 1
        if any(n.startswith(AUGMENT_FAILED_NOTE) for n in ex.notes):
            failures += 1
        if "duplicate paraphrase" in ex.notes:
            duplicates += 1
    paraphrased = total - originals
    return {
        "schema": SCHEMA_VERSION,
        "matches_per_pattern": dict(sorted(per_pattern_matches.items())),
        "matches": sum(per_pattern_matches.values()),
        "kept": originals,
        "dropped": sum(reasons.values()),
        "dropped_per_pattern": dict(sorted(dropped_per_pattern.items())),
        "skip_reasons": dict(sorted(reasons.items())),
        "examples": total,
        "examples_per_op": dict(sorted(per_op.items())),
        "examples_per_pattern": dict(sorted(per_pattern.items())),
        "original_examples": originals,
        "paraphrased_examples": paraphrased,
        "paraphrase_ratio": round(paraphrased / total, 6) if total else 0.0,
        "augmentation_multiplier": round(total / originals, 6) if originals else 0.0,
        "augmentation_failures": failures,
        "duplicate_paraphrases": duplicates,
    }


def _write_atomic(path: Path, lines: Iterable[str]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    os.replace(tmp, path)


def emit(examples: Iterable[DeductionExample], seed: int, out_dir: str | Path, separator: str = " ",
         dev_fraction: float = 0.0, matches: Iterable | None = None, skips: Iterable[dict] | None = None,
         pattern_ids: Iterable[str] = ()) -> dict:
    """Write ``train.jsonl`` (plus ``dev.jsonl`` when splitting) and ``stats.json``.

    Returns the stats report. Records keep input order; the premise
    permutation of record ``i`` is drawn from a generator keyed by
    ``(seed, i)`` with ``i`` counted over the whole input stream.
    """
    if seed is None:
        raise ValueError("emit needs an explicit seed")
    examples = list(examples)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, dev = [], []
    for index, ex in enumerate(examples):
        line = to_record(ex, seed, index, separator).dumps()
        (dev if in_dev_split(ex, dev_fraction) else train).append(line)
    _write_atomic(out / "train.jsonl", train)
    if dev_fraction > 0:
        _write_atomic(out / "dev.jsonl", dev)
    report = stats(examples, matches, skips, pattern_ids)
    report["records"] = {"train": len(train), "dev": len(dev)}
    _write_atomic(out / "stats.json", [json.dumps(report, indent=2, sort_keys=True)])
    return report

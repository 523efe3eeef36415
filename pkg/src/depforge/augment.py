"""Paraphrase augmentation of deduction examples.

Only premises are paraphrased; every copy keeps the original conclusion
byte for byte. Providers are pluggable: a deterministic rule-based mock,
a JSONL fixture replayer, a recorder, and an HTTP client for a remote
paraphrase service.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
import threading
import time
import urllib.error
import urllib.request
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .templates import DeductionExample

logger = logging.getLogger(__name__)

DEFAULT_N = 2
DEFAULT_TOP_P = 0.9
DEFAULT_RETRIES = 3


class ProviderError(Exception):
    """A paraphrase request failed. ``transient`` failures are retried."""

    def __init__(self, message: str, transient: bool = False):
        super().__init__(message)
        self.transient = transient


@dataclass(frozen=True)
class ParaphraseRequest:
    text: str
    n: int = DEFAULT_N
    top_p: float = DEFAULT_TOP_P
    seed: int | None = None

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0 < self.top_p <= 1:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p!r}")
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValueError("text must be a non-empty string")

    def to_json(self) -> dict:
        return {"text": self.text, "n": self.n, "top_p": self.top_p, "seed": self.seed}

    @classmethod
    def from_json(cls, data: dict) -> "ParaphraseRequest":
        if not isinstance(data, dict):
            raise ValueError("request body must be a JSON object")
        extra = set(data) - {"text", "n", "top_p", "seed"}
        if extra:
            raise ValueError(f"unknown request fields: {sorted(extra)}")
        seed = data.get("seed")
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
            raise ValueError("seed must be an integer or null")
        top_p = data.get("top_p", DEFAULT_TOP_P)
        if not isinstance(top_p, (int, float)) or isinstance(top_p, bool):
            raise ValueError("top_p must be a number")
        return cls(data.get("text"), data.get("n", DEFAULT_N), float(top_p), seed)

    def fixture_key(self) -> str:
        # the seed is left out so recordings replay under any run seed
        canon = json.dumps({"text": self.text, "n": self.n, "top_p": self.top_p}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def validate_response(request: ParaphraseRequest, paraphrases) -> list[str]:
    """Enforce the provider contract: exactly ``n`` non-empty strings."""
    if not isinstance(paraphrases, list) or not all(isinstance(p, str) for p in paraphrases):
        raise ProviderError("provider response is not a list of strings")
    if len(paraphrases) != request.n:
        raise ProviderError(f"provider returned {len(paraphrases)} paraphrases, expected {request.n}")
    if any(not p.strip() for p in paraphrases):
        raise ProviderError("provider returned an empty paraphrase")
    return list(paraphrases)


class ParaphraseProvider:
    supports_seed = False
    name = "provider"

    def paraphrase(self, request: ParaphraseRequest) -> list[str]:
        raise NotImplementedError

    def close(self) -> None:
        pass


# --- rule-based mock ---------------------------------------------------------------

_SYNONYMS = {
    "very": ["really", "quite", "highly"],
    "popular": ["common", "widespread", "well liked"],
    "large": ["big", "huge"],
    "small": ["little", "tiny"],
    "big": ["large"],
    "ancient": ["old", "antique"],
    "old": ["ancient"],
    "learn": ["study"],
    "learns": ["studies"],
    "provide": ["supply", "give"],
    "provides": ["supplies", "gives"],
    "colonize": ["inhabit", "populate"],
    "colonizes": ["inhabits", "populates"],
    "grow": ["cultivate", "raise"],
    "grows": ["cultivates", "raises"],
    "contain": ["hold", "include"],
    "contains": ["holds", "includes"],
    "produce": ["make", "create"],
    "produces": ["makes", "creates"],
    "able": ["allowed", "permitted"],
    "often": ["frequently", "regularly"],
    "slowly": ["gradually"],
    "weak": ["fragile", "feeble"],
    "dirty": ["filthy", "unclean"],
    "hungry": ["starving", "famished"],
    "especially": ["particularly", "notably"],
    "surrounding": ["nearby", "adjacent"],
    "lands": ["areas", "regions"],
    "water": ["H2O"],
    "hunt": ["chase", "prey on"],
    "hunts": ["chases", "preys on"],
    "teach": ["instruct in", "offer"],
    "teaches": ["instructs in", "offers"],
    "sense": ["detect", "feel"],
    "senses": ["detects", "feels"],
    "receive": ["get", "obtain"],
    "receives": ["gets", "obtains"],
    "live": ["reside", "dwell"],
    "lives": ["resides", "dwells"],
    "useful": ["helpful", "handy"],
    "courses": ["classes", "subjects"],
    "course": ["class", "subject"],
    "years": ["period", "time"],
}
_OPENERS = ["", "", "Generally, ", "Typically, ", "In general, ", "Usually, "]
_CLOSERS = [", in general", ", as a rule", ", typically", " in most cases"]
_LEADING_PREPS = {"in", "on", "at", "during", "after", "before", "throughout", "within", "for", "among", "across", "as"}
_FUNCTION_CAPS = {"The", "A", "An", "In", "During", "As", "These", "Those"}
_COPULA = re.compile(r"^(?P<subj>.+?) (?P<cop>is|are) (?P<art>an?) (?P<pred>[^,;]+?)(?P<end>[.!?])$")


def _swap_synonyms(words: list[str], rng: random.Random) -> list[str]:
    out = []
    for w in words:
        core = w.rstrip(".,;!?")
        tail = w[len(core):]
        options = _SYNONYMS.get(core.lower())
        if options and rng.random() < 0.6:
            pick = rng.choice(options)
            if core[:1].isupper():
                pick = pick[:1].upper() + pick[1:]
            out.append(pick + tail)
        else:
            out.append(w)
    return out


def _flip_copula(text: str) -> str | None:
    m = _COPULA.match(text)
    if not m:
        return None
    subj = m["subj"]
    if subj.split(" ", 1)[0] in _FUNCTION_CAPS:
        subj = subj[:1].lower() + subj[1:]
    art = m["art"].capitalize()
    return f"{art} {m['pred']} {m['cop']} {subj}{m['end']}"


def _reorder_leading_pp(text: str) -> str | None:
    first = text.split(" ", 1)[0].lower()
    if first not in _LEADING_PREPS or ", " not in text:
        return None
    pp, rest = text.split(", ", 1)
    if not rest or rest[-1] not in ".!?":
        return None
    body = rest[:-1]
    pp = pp[:1].lower() + pp[1:]
    return f"{body[:1].upper()}{body[1:]} {pp}{rest[-1]}"


def mock_variant(text: str, rng: random.Random) -> str:
    """One perturbed rendering of ``text`` drawn with ``rng``."""
    out = text
    if rng.random() < 0.5:
        flipped = _flip_copula(out)
        if flipped:
            out = flipped
    if rng.random() < 0.6:
        moved = _reorder_leading_pp(out)
        if moved:
            out = moved
    out = " ".join(_swap_synonyms(out.split(" "), rng))
    opener = rng.choice(_OPENERS)
    first = out.split(" ", 1)[0]
    # only prepend when the first word is known to be common; a possible proper noun would keep a stray capital
    if opener and (first in _FUNCTION_CAPS or first.lower() in _SYNONYMS or f" {first.lower()} " in f" {text} "):
        out = opener + out[:1].lower() + out[1:]
    if out == text and out[-1:] in ".!?":
        out = out[:-1] + rng.choice(_CLOSERS) + out[-1]
    return out


def mock_paraphrase(request: ParaphraseRequest) -> list[str]:
    """Deterministic rule-based paraphrases keyed by (seed, text, copy index)."""
    seed = 0 if request.seed is None else request.seed
    return [mock_variant(request.text, random.Random(f"{seed}\x1f{request.text}\x1f{i}")) for i in range(request.n)]


class MockProvider(ParaphraseProvider):
    supports_seed = True
    name = "mock"

    def paraphrase(self, request: ParaphraseRequest) -> list[str]:
        return mock_paraphrase(request)


class IdentityProvider(ParaphraseProvider):
    """Returns the input unchanged ``n`` times."""

    supports_seed = True
    name = "identity"

    def paraphrase(self, request: ParaphraseRequest) -> list[str]:
        return [request.text] * request.n


# --- fixtures ------------------------------------------------------------------------


def fixture_record(request: ParaphraseRequest, paraphrases: list[str]) -> dict:
    return {
        "key": request.fixture_key(),
        "request": {"text": request.text, "n": request.n, "top_p": request.top_p},
        "paraphrases": list(paraphrases),
    }


class FixtureProvider(ParaphraseProvider):
    """Replays responses from a JSONL file of request-hash -> paraphrases."""

    supports_seed = False
    name = "fixture"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.responses: dict[str, list[str]] = {}
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    self.responses[rec["key"]] = list(rec["paraphrases"])
                except (ValueError, KeyError, TypeError) as exc:
                    raise ValueError(f"{self.path}:{lineno}: bad fixture record ({exc})") from None

    def paraphrase(self, request: ParaphraseRequest) -> list[str]:
        try:
            return list(self.responses[request.fixture_key()])
        except KeyError:
            raise ProviderError(f"no fixture response for {request.text!r} (n={request.n}, top_p={request.top_p})") from None


class RecordingProvider(ParaphraseProvider):
    """Forwards to ``inner`` and appends every successful exchange to a fixture file."""

    name = "recording"

    def __init__(self, inner: ParaphraseProvider, path: str | Path):
        self.inner = inner
        self.supports_seed = inner.supports_seed
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seen: set[str] = set()

    def paraphrase(self, request: ParaphraseRequest) -> list[str]:
        out = self.inner.paraphrase(request)
        rec = fixture_record(request, out)
        with self._lock:
            if rec["key"] not in self._seen:
                self._seen.add(rec["key"])
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        return out


class HTTPProvider(ParaphraseProvider):
    """Client for a service exposing ``POST /paraphrase``."""

    name = "http"

    def __init__(self, url: str, timeout: float = 30.0, supports_seed: bool = True):
        base = url.rstrip("/")
        self.url = base if base.endswith("/paraphrase") else base + "/paraphrase"
        self.timeout = timeout
        self.supports_seed = supports_seed

    def paraphrase(self, request: ParaphraseRequest) -> list[str]:
        body = json.dumps(request.to_json()).encode("utf-8")
        req = urllib.request.Request(self.url, data=body, method="POST",
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            detail = _error_detail(exc.read())
            # 5xx and 429 may clear up on their own; other 4xx will not
            raise ProviderError(f"HTTP {exc.code}: {detail}", transient=exc.code >= 500 or exc.code == 429) from None
        except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
            raise ProviderError(f"cannot reach {self.url}: {getattr(exc, 'reason', exc)}", transient=True) from None
        try:
            data = json.loads(payload)
        except ValueError:
            raise ProviderError("response is not JSON") from None
        if not isinstance(data, dict) or "paraphrases" not in data:
            raise ProviderError(f"response lacks 'paraphrases': {str(data)[:200]}")
        return data["paraphrases"]


def _error_detail(raw: bytes) -> str:
    try:
        data = json.loads(raw)
        if isinstance(data, dict) and "error" in data:
            return str(data["error"])
    except ValueError:
        pass
    return raw.decode("utf-8", "replace")[:200] or "no detail"


# --- augmentation ----------------------------------------------------------------------


def edit_distance(a: str, b: str) -> int:
    """Character-level Levenshtein distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


HISTOGRAM_BINS = (0, 5, 10, 20, 40, 80)


def _bin_label(dist: int) -> str:
    lo = 0
    for hi in HISTOGRAM_BINS:
        if dist <= hi:
            return f"{lo}-{hi}" if hi else "0"
        lo = hi + 1
    return f">{HISTOGRAM_BINS[-1]}"


@dataclass
class AugmentReport:
    examples_in: int = 0
    examples_out: int = 0
    requests: int = 0
    paraphrases: int = 0
    retries: int = 0
    failures: int = 0
    duplicates: int = 0
    edit_distance: Counter = field(default_factory=Counter)

    def to_json(self) -> dict:
        order = [_bin_label(d) for d in HISTOGRAM_BINS] + [f">{HISTOGRAM_BINS[-1]}"]
        return {
            "examples_in": self.examples_in,
            "examples_out": self.examples_out,
            "requests": self.requests,
            "paraphrases": self.paraphrases,
            "retries": self.retries,
            "failures": self.failures,
            "duplicates": self.duplicates,
            "edit_distance_histogram": {k: self.edit_distance.get(k, 0) for k in order},
        }

    def merge(self, other: "AugmentReport") -> None:
        for name in ("examples_in", "examples_out", "requests", "paraphrases", "retries", "failures", "duplicates"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.edit_distance.update(other.edit_distance)


def request_seed(seed: int | None, example: DeductionExample, premise_index: int) -> int | None:
    """Per-premise seed derived from the run seed and the example's provenance."""
    if seed is None:
        return None
    digest = hashlib.sha256(f"{seed}\x1f{example.key}\x1f{premise_index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def _call(provider: ParaphraseProvider, request: ParaphraseRequest, retries: int, backoff: float,
          report: AugmentReport) -> list[str]:
    attempt = 0
    while True:
        report.requests += 1
        try:
            return validate_response(request, provider.paraphrase(request))
        except ProviderError as exc:
            if not exc.transient or attempt >= retries:
                raise
            attempt += 1
            report.retries += 1
            logger.debug("retrying paraphrase request (%s): %s", attempt, exc)
            time.sleep(backoff * 2 ** (attempt - 1))


def augment_example(example: DeductionExample, provider: ParaphraseProvider, n: int = DEFAULT_N,
                    top_p: float = DEFAULT_TOP_P, seed: int | None = None, retries: int = DEFAULT_RETRIES,
                    backoff: float = 0.05, report: AugmentReport | None = None) -> list[DeductionExample]:
    """The original followed by ``n`` copies with paraphrased premises.

    One request per premise asks for ``n`` paraphrases; copy ``i`` takes the
    ``i``-th paraphrase of every premise. A failing provider yields just the
    original, annotated.
    """
    report = report if report is not None else AugmentReport()
    report.examples_in += 1
    try:
        per_premise = [
            _call(provider, ParaphraseRequest(p, n, top_p, request_seed(seed, example, i)), retries, backoff, report)
            for i, p in enumerate(example.premises)
        ]
    except ProviderError as exc:
        report.failures += 1
        report.examples_out += 1
        logger.warning("augmentation failed for %s: %s", example.key, exc)
        return [replace(example, notes=example.notes + (f"augmentation failed: {exc}",))]

    out = [example]
    seen = {example.premises}
    for i in range(n):
        premises = tuple(alts[i] for alts in per_premise)
        notes = ()
        if premises in seen:
            notes = ("duplicate paraphrase",)
            report.duplicates += 1
        seen.add(premises)
        for orig, para in zip(example.premises, premises):
            report.edit_distance[_bin_label(edit_distance(orig, para))] += 1
        report.paraphrases += len(premises)
        out.append(DeductionExample(premises, example.conclusion, example.op, example.sentence_ref,
                                    example.pattern_id, example.bindings, example.key, notes))
    report.examples_out += len(out)
    return out


def augment_examples(examples: Iterable[DeductionExample], provider: ParaphraseProvider, n: int = DEFAULT_N,
                     top_p: float = DEFAULT_TOP_P, seed: int | None = None, workers: int = 1,
                     retries: int = DEFAULT_RETRIES, backoff: float = 0.05,
                     report: AugmentReport | None = None) -> Iterator[DeductionExample]:
    """Augment a stream of examples with at most ``workers`` examples in flight.

    Output order follows input order regardless of completion order.
    """
    report = report if report is not None else AugmentReport()
    if workers <= 1:
        for ex in examples:
            yield from augment_example(ex, provider, n, top_p, seed, retries, backoff, report)
        _log_histogram(report)
        return

    def job(ex):
        local = AugmentReport()
        return augment_example(ex, provider, n, top_p, seed, retries, backoff, local), local

    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = []
        it = iter(examples)
        for ex in it:
            pending.append(pool.submit(job, ex))
            if len(pending) >= workers * 2:
                break
        while pending:
            group, local = pending.pop(0).result()
            report.merge(local)
            yield from group
            nxt = next(it, None)
            if nxt is not None:
                pending.append(pool.submit(job, nxt))
    _log_histogram(report)


def _log_histogram(report: AugmentReport) -> None:
    hist = report.to_json()["edit_distance_histogram"]
    logger.info("paraphrase edit-distance histogram: %s", ", ".join(f"{k}: {v}" for k, v in hist.items()))

"""Template expansion of pattern matches into deduction examples.

Substitution turns "Xs such as Y VP" into the premises "Xs VP" and
"Y is an X", with conclusion "Y VP". Contraposition turns
"Xs that R VP" into "Xs that do not VP do not R".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import ParsedSentence, Token
from .matcher import MatchBinding
from .morphology import (
    BASE,
    PLURAL,
    SINGULAR_3RD,
    indefinite_article,
    pluralize,
    reinflect_verb,
    singularize,
)

SUBSTITUTION = "substitution"
CONTRAPOSITION = "contraposition"
OPERATIONS = (SUBSTITUTION, CONTRAPOSITION)

TEMPLATE_LEXICON = frozenset({"is", "are", "a", "an", "that", "do", "does", "not", "have", "has"})
DEFAULT_STOPLIST = ("some", "many", "most", "several", "few", "certain", "other", "various", "numerous", "all", "no")

PUNCT_TAGS = frozenset({",", ".", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "NFP"})
_NO_SPACE_BEFORE = {",", ".", ";", ":", "%", ")", "!", "?", "'s", "n't", "'re", "'ve", "'ll", "'d", "'m"}
_NO_SPACE_AFTER = {"("}
_FINAL = {".", "!", "?", ",", ";", ":"}
_PROPER = {"NNP", "NNPS"}
_MODIFIER_ARCS = {"det", "amod", "nummod", "advmod", "predet", "quantmod"}
_DROPPABLE_DETS = {"a", "an", "the", "these", "those", "this", "that"}
_RELATIVIZERS = {"that", "which", "who"}
PRONOUNS = frozenset({
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
    "this", "that", "these", "those", "one", "ones", "which", "who", "whom",
    "something", "anything", "everything", "others", "itself", "themselves", "-pron-",
})


class ExpansionSkipped(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class Phrase:
    text: str
    head_token: int
    token_ids: tuple[int, ...]
    head_pos: str


@dataclass(frozen=True)
class DeductionExample:
    premises: tuple[str, ...]
    conclusion: str
    op: str
    sentence_ref: tuple[str, int]
    pattern_id: str
    bindings: tuple[tuple[int, int], ...]
    paraphrase_of: str | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.op not in OPERATIONS:
            raise ValueError(f"unknown operation {self.op!r}")
        expected = 2 if self.op == SUBSTITUTION else 1
        if len(self.premises) != expected:
            raise ValueError(f"{self.op} needs {expected} premises, got {len(self.premises)}")
        # provider paraphrases are taken verbatim, so only template output must end in punctuation
        finished = (self.conclusion,) if self.paraphrase_of else (*self.premises, self.conclusion)
        for s in finished:
            if not s or s[-1] not in ".!?":
                raise ValueError(f"not a finished sentence: {s!r}")
        if any(not p.strip() for p in self.premises):
            raise ValueError("empty premise")

    @property
    def key(self) -> str:
        binds = ",".join(f"{k}={v}" for k, v in self.bindings)
        return f"{self.sentence_ref[0]}#{self.sentence_ref[1]}/{self.pattern_id}/{binds}"

    def to_json(self) -> dict:
        out = {
            "premises": list(self.premises),
            "conclusion": self.conclusion,
            "op": self.op,
            "provenance": {
                "sentence_ref": list(self.sentence_ref),
                "pattern_id": self.pattern_id,
                "bindings": {str(k): v for k, v in self.bindings},
            },
            "paraphrase_of": self.paraphrase_of,
        }
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DeductionExample":
        prov = data["provenance"]
        return cls(
            tuple(data["premises"]),
            data["conclusion"],
            data["op"],
            (prov["sentence_ref"][0], int(prov["sentence_ref"][1])),
            prov["pattern_id"],
            tuple(sorted((int(k), int(v)) for k, v in prov["bindings"].items())),
            data.get("paraphrase_of"),
            tuple(data.get("notes", ())),
        )


@dataclass(frozen=True)
class ModifierStoplist:
    lemmas: frozenset[str] = field(default_factory=lambda: frozenset(DEFAULT_STOPLIST))

    def __post_init__(self):
        object.__setattr__(self, "lemmas", frozenset(l.strip().lower() for l in self.lemmas if l.strip()))

    def __contains__(self, lemma: str) -> bool:
        return lemma.lower() in self.lemmas

    @classmethod
    def from_file(cls, path: str | Path) -> "ModifierStoplist":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(frozenset(l.split("#", 1)[0] for l in lines))


# --- surface realization -------------------------------------------------------


def is_punct(tok: Token) -> bool:
    return tok.xpos in PUNCT_TAGS or not any(ch.isalnum() for ch in tok.form)


def surface(sentence: ParsedSentence, tid: int) -> str:
    """Token form, with sentence-initial capitalization undone for common words."""
    tok = sentence.token(tid)
    form = tok.form
    if tid == 1 and tok.xpos not in _PROPER and form[:1].isupper() and form != "I" and not (len(form) > 1 and form.isupper()):
        return form[:1].lower() + form[1:]
    return form


def detokenize(words: Iterable[str]) -> str:
    out = ""
    prev = None
    for w in words:
        if not w:
            continue
        if prev is None or w in _NO_SPACE_BEFORE or prev in _NO_SPACE_AFTER:
            out += w
        else:
            out += " " + w
        prev = w
    return out


def finish_sentence(words: list[str]) -> str:
    """Clean stray punctuation, end with one period and capitalize the start."""
    words = [w for w in words if w]
    while words and words[0] in _FINAL:
        words.pop(0)
    cleaned: list[str] = []
    for w in words:
        if w == "," and cleaned and cleaned[-1] == ",":
            continue
        cleaned.append(w)
    while cleaned and cleaned[-1] in _FINAL:
        cleaned.pop()
    text = detokenize(cleaned) + "."
    for i, ch in enumerate(text):
        if ch.isalpha():
            return text[:i] + ch.upper() + text[i + 1:]
    return text


def _strip_punct(sentence: ParsedSentence, ids: list[int]) -> list[int]:
    ids = list(ids)
    while ids and is_punct(sentence.token(ids[0])):
        ids.pop(0)
    while ids and is_punct(sentence.token(ids[-1])):
        ids.pop()
    return ids


def extract_subtree(sentence: ParsedSentence, token_id: int, prune: Iterable[int] = ()) -> Phrase:
    """In-order realization of the subtree under ``token_id``.

    ``prune`` names dependent tokens whose whole branches are left out.
    Punctuation at the phrase edges is trimmed.
    """
    ids = _strip_punct(sentence, sentence.subtree(token_id, prune))
    text = detokenize(surface(sentence, t) for t in ids)
    return Phrase(text, token_id, tuple(ids), sentence.token(token_id).xpos)


def _contiguous(sentence: ParsedSentence, ids: Iterable[int]) -> bool:
    ids = set(ids)
    gaps = set(range(min(ids), max(ids) + 1)) - ids
    return all(is_punct(sentence.token(t)) for t in gaps)


def _realize(sentence: ParsedSentence, drop: set[int] = frozenset(), insert: dict[int, list[str]] | None = None,
             override: dict[int, str] | None = None) -> list[str]:
    insert = insert or {}
    override = override or {}
    words = []
    for tok in sentence.tokens:
        words.extend(insert.get(tok.id, ()))
        if tok.id in drop:
            continue
        words.append(override.get(tok.id, surface(sentence, tok.id)))
    return words


def _with_commas(sentence: ParsedSentence, ids: Iterable[int]) -> set[int]:
    ids = set(ids)
    lo, hi = min(ids), max(ids)
    out = set(range(lo, hi + 1))
    for t in (lo - 1, hi + 1):
        if 1 <= t <= len(sentence) and sentence.token(t).form == ",":
            out.add(t)
    return out


def _branch_under(sentence: ParsedSentence, top: int, low: int) -> int | None:
    """The child of ``top`` on the head path from ``low``, if ``low`` is below ``top``."""
    cur = low
    for head in sentence.ancestors(low):
        if head == top:
            return cur
        cur = head
    return None


def _is_plural(sentence: ParsedSentence, tid: int) -> bool:
    tok = sentence.token(tid)
    if tok.xpos in ("NNS", "NNPS"):
        return True
    return any(sentence.token(c).deprel == "conj" for c in sentence.children(tid))


def _noun_form(tok: Token, plural: bool) -> str:
    if plural:
        return tok.form if tok.xpos in ("NNS", "NNPS") else pluralize(tok.form)
    if tok.xpos not in ("NNS", "NNPS"):
        return tok.form
    lemma = tok.lemma
    if lemma and lemma.isalpha() and lemma != tok.form.lower():
        return tok.form[:1] + lemma[1:] if tok.form[:1].lower() == lemma[:1] else lemma
    return singularize(tok.form)


def _nominal(sentence: ParsedSentence, ids: list[int], head: int, plural: bool) -> list[str]:
    """Words of a noun phrase recast as a generic predicate nominal."""
    dets = {c for c in sentence.children(head)
            if sentence.token(c).deprel == "det" and sentence.token(c).lemma in _DROPPABLE_DETS}
    keep = [t for t in ids if t not in dets]
    words = []
    for t in keep:
        if t == head:
            form = _noun_form(sentence.token(t), plural)
            if t == 1:
                form = surface(sentence, 1)[:1] + form[1:]
            words.append(form)
        else:
            words.append(surface(sentence, t))
    if not plural:
        has_det = any(sentence.token(c).deprel in ("det", "poss") for c in sentence.children(head) if c in keep)
        if not has_det and words:
            words.insert(0, indefinite_article(words[0]))
    return words


def _need(binding: MatchBinding, *captures: int) -> list[int]:
    b = binding.binding_map
    missing = [c for c in captures if c not in b]
    if missing:
        raise ExpansionSkipped(f"missing capture ${missing[0]}")
    return [b[c] for c in captures]


# --- filtering -----------------------------------------------------------------


def filter_match(binding: MatchBinding, sentence: ParsedSentence, stoplist: ModifierStoplist | None = None) -> str | None:
    """``None`` to keep the match, otherwise the reason for dropping it."""
    stoplist = stoplist if stoplist is not None else ModifierStoplist()
    b = binding.binding_map
    if 0 in b:
        for c in sentence.children(b[0]):
            tok = sentence.token(c)
            if tok.deprel in _MODIFIER_ARCS and tok.lemma in stoplist:
                return f"disallowed modifier: {tok.lemma}"
    if 1 in b:
        tok = sentence.token(b[1])
        if tok.xpos in ("PRP", "PRP$", "WP", "WP$", "EX") or tok.lemma in PRONOUNS:
            return "pronoun capture"
    for cap in (0, 1):
        if cap in b and len(extract_subtree(sentence, b[cap]).text) <= 1:
            return "single-character capture"
    return None


# --- substitution ----------------------------------------------------------------


def expand_substitution(binding: MatchBinding, sentence: ParsedSentence) -> DeductionExample:
    n0, n1, n2 = _need(binding, 0, 1, 2)
    branch = _branch_under(sentence, n0, n1)
    if branch is None:
        raise ExpansionSkipped("$1 is not inside the $0 subtree")
    sub0 = sentence.subtree(n0)
    if n2 in sub0:
        raise ExpansionSkipped("$2 inside the $0 subtree")
    content = {t.id for t in sentence.tokens if not is_punct(t)}
    if content <= set(sub0):
        raise ExpansionSkipped("$0 subtree is the whole sentence")
    branch_ids = sentence.subtree(branch)
    if not _contiguous(sentence, sub0) or not _contiguous(sentence, branch_ids):
        raise ExpansionSkipped("discontinuous span")
    core = _strip_punct(sentence, [t for t in sub0 if t not in set(branch_ids)])
    if not core or n0 not in core:
        raise ExpansionSkipped("empty $0 core after pruning")

    removal = _with_commas(sentence, branch_ids)
    premise = finish_sentence(_realize(sentence, drop=removal))

    hypo = extract_subtree(sentence, n1)
    plural = _is_plural(sentence, n1)
    hyper = _nominal(sentence, core, n0, plural)
    hypo_words = [surface(sentence, t) for t in hypo.token_ids]
    definition = finish_sentence(hypo_words + ["are" if plural else "is"] + hyper)

    override = {}
    if sentence.token(n0).deprel.startswith("nsubj"):
        verb = _finite_verb(sentence, n2)
        if verb is not None:
            tok = sentence.token(verb)
            override[verb] = reinflect_verb(tok.form, PLURAL if plural else SINGULAR_3RD, lemma=tok.lemma)
    span = set(range(min(sub0), max(sub0) + 1)) | removal
    conclusion = finish_sentence(_realize(sentence, drop=span, insert={min(span): hypo_words}, override=override))
    return DeductionExample(
        (premise, definition), conclusion, SUBSTITUTION, sentence.ref, binding.pattern_id, binding.bindings
    )


def _finite_verb(sentence: ParsedSentence, head: int) -> int | None:
    for c in sentence.children(head):
        tok = sentence.token(c)
        if c < head and tok.deprel in ("aux", "auxpass") and tok.xpos in ("VBP", "VBZ"):
            return c
    if sentence.token(head).xpos in ("VBP", "VBZ"):
        return head
    return None


# --- contraposition ------------------------------------------------------------


@dataclass
class VPWord:
    text: str
    role: str = "other"  # verb | aux | do | neg | other
    lemma: str = ""


def verb_phrase(sentence: ParsedSentence, ids: Iterable[int], head: int) -> list[VPWord]:
    """Tag the words of a verb phrase with the roles negation cares about."""
    kids = sentence.children(head)
    negated = any(sentence.token(c).deprel == "neg" or sentence.token(c).lemma in ("not", "n't") for c in kids)
    words = []
    for t in ids:
        tok = sentence.token(t)
        role = "other"
        if t == head:
            role = "verb"
        elif tok.head == head and (tok.deprel == "neg" or tok.lemma in ("not", "n't")):
            role = "neg"
        elif tok.head == head and t < head and tok.deprel in ("aux", "auxpass"):
            role = "do" if negated and tok.lemma == "do" else "aux"
        words.append(VPWord(surface(sentence, t), role, tok.lemma or tok.form.lower()))
    return words


def negate_vp(words: list[VPWord], plural: bool = True) -> list[VPWord]:
    """Toggle clausal negation: strip an existing one, else add it.

    Auxiliaries and copulas take a bare ``not``; lexical verbs get
    ``do``/``does`` support. Never produces contractions.
    """
    words = [VPWord(w.text, w.role, w.lemma) for w in words]
    if any(w.role == "neg" for w in words):
        had_do = any(w.role == "do" for w in words)
        out = [w for w in words if w.role not in ("neg", "do")]
        if had_do:
            for w in out:
                if w.role == "verb":
                    w.text = reinflect_verb(w.text, PLURAL if plural else SINGULAR_3RD, lemma=w.lemma)
        return out
    for i, w in enumerate(words):
        if w.role == "aux":
            return words[:i + 1] + [VPWord("not", "neg", "not")] + words[i + 1:]
    for i, w in enumerate(words):
        if w.role == "verb":
            if w.lemma == "be":
                return words[:i + 1] + [VPWord("not", "neg", "not")] + words[i + 1:]
            w.text = reinflect_verb(w.text, BASE, lemma=w.lemma)
            support = VPWord("do" if plural else "does", "do", "do")
            return words[:i] + [support, VPWord("not", "neg", "not")] + words[i:]
    raise ExpansionSkipped("verb phrase lacks a head verb")


def vp_text(words: list[VPWord]) -> str:
    return detokenize(w.text for w in words)


def expand_contraposition(binding: MatchBinding, sentence: ParsedSentence) -> DeductionExample:
    n0, n1, n2 = _need(binding, 0, 1, 2)
    branch = _branch_under(sentence, n0, n1)
    if branch is None:
        raise ExpansionSkipped("$1 is not inside the $0 subtree")
    sub0 = sentence.subtree(n0)
    if n2 in sub0:
        raise ExpansionSkipped("$2 inside the $0 subtree")
    branch_ids = sentence.subtree(branch)
    if not _contiguous(sentence, sub0) or not _contiguous(sentence, branch_ids):
        raise ExpansionSkipped("discontinuous span")
    core = _strip_punct(sentence, [t for t in sub0 if t not in set(branch_ids)])
    if not core:
        raise ExpansionSkipped("empty $0 core after pruning")
    plural = _is_plural(sentence, n0)

    lo, hi = min(sub0), max(sub0)
    prefix = [surface(sentence, t) for t in range(1, lo)]
    tail = list(range(hi + 1, len(sentence) + 1))
    while tail and is_punct(sentence.token(tail[-1])):
        tail.pop()
    if n2 not in tail:
        raise ExpansionSkipped("matrix VP lacks an identifiable head verb")
    matrix = verb_phrase(sentence, tail, n2)

    if branch == n1 and sentence.token(n1).xpos.startswith("VB"):
        rel_ids = [t for t in branch_ids
                   if not (sentence.token(t).head == n1 and sentence.token(t).lemma in _RELATIVIZERS
                           and sentence.token(t).deprel.startswith("nsubj"))]
        rel_ids = _strip_punct(sentence, rel_ids)
        if n1 not in rel_ids or not _contiguous(sentence, rel_ids):
            raise ExpansionSkipped("unusable relative clause")
        restrictor = verb_phrase(sentence, rel_ids, n1)
    else:
        obj = extract_subtree(sentence, n1)
        restrictor = [VPWord("have" if plural else "has", "verb", "have")]
        restrictor += [VPWord(surface(sentence, t)) for t in obj.token_ids]

    core_words = [surface(sentence, t) for t in core]
    words = prefix + core_words + ["that"]
    words += [w.text for w in negate_vp(matrix, plural)]
    words += [w.text for w in negate_vp(restrictor, plural)]
    conclusion = finish_sentence(words)
    premise = finish_sentence(_realize(sentence))
    return DeductionExample((premise,), conclusion, CONTRAPOSITION, sentence.ref, binding.pattern_id, binding.bindings)


def expand(binding: MatchBinding, sentence: ParsedSentence, op: str) -> DeductionExample:
    if op == SUBSTITUTION:
        return expand_substitution(binding, sentence)
    if op == CONTRAPOSITION:
        return expand_contraposition(binding, sentence)
    raise ValueError(f"unknown operation {op!r}")


# --- checks ----------------------------------------------------------------------

_ALPHA = re.compile(r"[A-Za-z]+")


def allowed_vocabulary(sentence: ParsedSentence) -> set[str]:
    """Lowercased alphabetic pieces a template may emit for ``sentence``."""
    allowed = set(TEMPLATE_LEXICON)
    allowed.update(p.lower() for p in _ALPHA.findall(detokenize(t.form for t in sentence.tokens)))
    for tok in sentence.tokens:
        for word in (tok.form, tok.lemma):
            allowed.update(p.lower() for p in _ALPHA.findall(word))
        low = tok.form.lower()
        if tok.xpos.startswith("VB"):
            for target in (SINGULAR_3RD, PLURAL, BASE):
                allowed.add(reinflect_verb(low, target, lemma=tok.lemma).lower())
        if tok.xpos.startswith("NN"):
            allowed.update({singularize(low), pluralize(low)})
    return allowed


def invented_words(sentence: ParsedSentence, text: str) -> list[str]:
    """Alphabetic words in ``text`` that neither the source nor the template supplies."""
    allowed = allowed_vocabulary(sentence)
    return [w for w in _ALPHA.findall(text) if w.lower() not in allowed]

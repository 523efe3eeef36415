"""Small English inflection heuristics: verb agreement and noun number."""

from __future__ import annotations

SINGULAR_3RD = "singular-3rd"
PLURAL = "plural"
BASE = "base"
SINGULAR = "singular"

_VERB_FORMS = {
    # lemma: (3rd singular, plural present, base)
    "be": ("is", "are", "be"),
    "have": ("has", "have", "have"),
    "do": ("does", "do", "do"),
    "go": ("goes", "go", "go"),
}
_VERB_LEMMA = {
    "is": "be", "are": "be", "am": "be", "be": "be", "'s": "be", "'re": "be",
    "has": "have", "have": "have", "'ve": "have",
    "does": "do", "do": "do",
    "goes": "go", "go": "go",
}
_PAST_BE = {"was": ("was", "were"), "were": ("was", "were")}
_MODALS = {"can", "could", "may", "might", "must", "shall", "should", "will", "would"}

_IRREGULAR_PLURALS = {
    "child": "children", "person": "people", "man": "men", "woman": "women",
    "mouse": "mice", "goose": "geese", "foot": "feet", "tooth": "teeth",
    "ox": "oxen", "louse": "lice", "wolf": "wolves", "knife": "knives",
    "leaf": "leaves", "life": "lives", "wife": "wives", "half": "halves",
    "calf": "calves", "shelf": "shelves", "thief": "thieves", "loaf": "loaves",
    "potato": "potatoes", "tomato": "tomatoes", "hero": "heroes", "echo": "echoes",
    "cactus": "cacti", "fungus": "fungi", "nucleus": "nuclei", "radius": "radii",
    "criterion": "criteria", "phenomenon": "phenomena", "analysis": "analyses",
    "thesis": "theses", "crisis": "crises", "bacterium": "bacteria",
}
_INVARIANT = {"series", "species", "sheep", "deer", "fish", "aircraft", "moose", "offspring", "means"}
_SINGULARS = {v: k for k, v in _IRREGULAR_PLURALS.items()}

ARTICLE_AN_EXCEPTIONS = {"hour", "hours", "honest", "honor", "honour", "heir", "herb"}
ARTICLE_A_EXCEPTIONS = {"university", "unicorn", "uniform", "unique", "unit", "union", "use",
                        "user", "usual", "one", "once", "european", "eucalyptus", "ewe", "utility"}


def _match_case(template: str, word: str) -> str:
    if template.isupper() and len(template) > 1:
        return word.upper()
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def _third_person(base: str) -> str:
    if base.endswith(("s", "sh", "ch", "x", "z", "o")):
        return base + "es"
    if len(base) > 1 and base.endswith("y") and base[-2] not in "aeiou":
        return base[:-1] + "ies"
    return base + "s"


def _strip_third_person(form: str) -> str:
    if form.endswith("ies") and len(form) > 4:
        return form[:-3] + "y"
    if form.endswith(("sses", "shes", "ches", "xes", "zzes", "oes")):
        return form[:-2]
    if form.endswith("s") and not form.endswith("ss"):
        return form[:-1]
    return form


def verb_lemma(word: str) -> str:
    w = word.lower()
    return _VERB_LEMMA.get(w, w)


def reinflect_verb(word: str, target: str, lemma: str | None = None) -> str:
    """Present-tense agreement form of a verb.

    ``word`` may be a lemma or an inflected form; pass the parser's ``lemma``
    when known, it beats the suffix heuristics. Unknown shapes come back
    unchanged.
    """
    if target not in (SINGULAR_3RD, PLURAL, BASE):
        raise ValueError(f"unknown verb target {target!r}")
    low = word.lower()
    if low in _PAST_BE:
        sg, pl = _PAST_BE[low]
        return _match_case(word, word if target == BASE else (sg if target == SINGULAR_3RD else pl))
    if low in _MODALS:
        return word
    base = (lemma or "").lower() or verb_lemma(low)
    if base == low and low not in _VERB_FORMS and low.endswith("s") and lemma is None:
        base = _strip_third_person(low)
    if base in _VERB_FORMS:
        sg, pl, bare = _VERB_FORMS[base]
    else:
        sg, pl, bare = _third_person(base), base, base
    out = {SINGULAR_3RD: sg, PLURAL: pl, BASE: bare}[target]
    return _match_case(word, out)


def pluralize(noun: str) -> str:
    low = noun.lower()
    if low in _INVARIANT or low in _SINGULARS:
        return noun
    if low in _IRREGULAR_PLURALS:
        return _match_case(noun, _IRREGULAR_PLURALS[low])
    if low.endswith(("s", "sh", "ch", "x", "z")):
        return noun + "es"
    if len(low) > 1 and low.endswith("y") and low[-2] not in "aeiou":
        return noun[:-1] + "ies"
    return noun + "s"


def singularize(noun: str) -> str:
    low = noun.lower()
    if low in _INVARIANT or low in _IRREGULAR_PLURALS:
        return noun
    if low in _SINGULARS:
        return _match_case(noun, _SINGULARS[low])
    if low.endswith("ies") and len(low) > 4:
        return noun[:-3] + "y"
    if low.endswith(("sses", "shes", "ches", "xes", "zes")):
        return noun[:-2]
    if low.endswith(("ss", "us", "is")):
        return noun
    if low.endswith("s"):
        return noun[:-1]
    return noun


def indefinite_article(word: str) -> str:
    low = word.lower()
    if low in ARTICLE_AN_EXCEPTIONS:
        return "an"
    if low in ARTICLE_A_EXCEPTIONS or low.startswith(("uni", "eu")):
        return "a"
    return "an" if low[:1] in "aeiou" and low[:1] else "a"


_ARTICLES = {"a", "an"}
_PLURAL_DETERMINERS = {"the", "these", "those"}


def adjust_noun_number(phrase: str, target: str) -> str:
    """Reinflect the last word of a simple noun phrase (taken as its head).

    Singular output gains an indefinite article unless another determiner
    is present; plural output drops ``a``/``an``.
    """
    if target not in (SINGULAR, PLURAL):
        raise ValueError(f"unknown noun target {target!r}")
    words = phrase.split()
    if not words:
        return phrase
    head = words[-1]
    if target == PLURAL:
        if words[0].lower() in _ARTICLES:
            words = words[1:]
        words[-1] = pluralize(head)
        return " ".join(words)
    words[-1] = singularize(head)
    if words[0].lower() in _PLURAL_DETERMINERS | _ARTICLES:
        words = words[1:]
        if not words:
            return phrase
    elif len(words) > 1 and words[0].lower() in {"this", "that", "my", "your", "his", "her", "its", "our", "their"}:
        return " ".join(words)
    return " ".join([indefinite_article(words[0])] + words)

"""Dependency-pattern mining of deduction training data.

Parsed sentences are indexed by upward dependency chains, searched with a
small tree-pattern language, expanded by templates into premise/conclusion
examples, augmented with paraphrased premises and emitted as JSONL.
"""

__version__ = "0.1.0"

from .augment import ParaphraseRequest, augment_example, mock_paraphrase
from .corpus import Corpus, ParsedSentence, Token, parse_conllu, read_conllu, read_corpus
from .emit import TrainingRecord, emit, stats
from .index import DepIndex, build_index
from .matcher import MatchBinding, match_sentence
from .pattern import DepPattern, format_pattern, load_patterns, parse_pattern
from .search import search
from .templates import DeductionExample, ModifierStoplist, expand, filter_match

__all__ = [
    "Corpus", "DeductionExample", "DepIndex", "DepPattern", "MatchBinding", "ModifierStoplist",
    "ParaphraseRequest", "ParsedSentence", "Token", "TrainingRecord", "augment_example", "build_index",
    "emit", "expand", "filter_match", "format_pattern", "load_patterns", "match_sentence", "mock_paraphrase",
    "parse_conllu", "parse_pattern", "read_conllu", "read_corpus", "search", "stats",
]

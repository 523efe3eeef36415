"""Command-line entry point: ``depforge <stage> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 provider/backend error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .augment import ProviderError
from .config import ConfigError, PipelineConfig, build_config, load_config_file
from .index import FORMAT_VERSION
from .pattern import DepPattern, PatternSyntaxError, parse_pattern
from .search import search
from .templates import detokenize
from . import pipeline

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PROVIDER = 0, 1, 2, 3

# capture colors: $0 green, $1 blue, $2 magenta, then cycle
_COLORS = ["\033[32m", "\033[34m", "\033[35m", "\033[33m", "\033[36m", "\033[31m"]
_RESET = "\033[0m"
_BOLD = "\033[1m"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("common")
    g.add_argument("--config", help="TOML config file; flags override its values")
    g.add_argument("--work", dest="work_dir", help="work directory for stage files (default: work)")
    g.add_argument("--index", dest="index_dir", help="index directory (default: <work>/index)")
    g.add_argument("--seed", type=int, help="single source of randomness")
    g.add_argument("--workers", type=int, help="parallelism for indexing, search and paraphrase requests")
    g.add_argument("--json-errors", action="store_true", help="report errors as one-line JSON on stderr")
    g.add_argument("-v", "--verbose", action="count", default=0)


def _add_index_opts(p):
    p.add_argument("--corpus", nargs="+", help="CoNLL-U files, in order")
    p.add_argument("--chunk-size", type=int)
    p.add_argument("--max-depth", type=int)


def _add_pattern_opts(p):
    p.add_argument("--patterns", nargs="+", metavar="[OP=]FILE",
                   help="pattern files; OP is substitution or contraposition")
    p.add_argument("--op", dest="operation", choices=["substitution", "contraposition", "both"])


def _add_expand_opts(p):
    p.add_argument("--stoplist", help="one disallowed modifier lemma per line")


def _add_augment_opts(p):
    p.add_argument("--provider", help="mock | identity | none | fixture:PATH | http(s)://host:port")
    p.add_argument("--n", type=int, help="paraphrases per premise (default 2)")
    p.add_argument("--top-p", type=float, help="nucleus sampling cutoff (default 0.9)")
    p.add_argument("--record", help="append provider exchanges to this fixture file")


def _add_emit_opts(p):
    p.add_argument("--separator", help="premise separator (default: single space)")
    p.add_argument("--dev-fraction", type=float, help="hash-split this share of examples into dev.jsonl")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depforge", description="Mine dependency-pattern matches and turn them into "
                                                  "premise/conclusion training data.")
    parser.add_argument("--version", action="version",
                        version=f"depforge {__version__} (index format {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("index", help="build or extend the dependency index")
    _add_common(p)
    _add_index_opts(p)

    p = sub.add_parser("search", help="match patterns against the index")
    _add_common(p)
    _add_pattern_opts(p)
    p.add_argument("pattern", nargs="?", help="a single pattern to list; without it, all configured "
                                              "patterns are searched into <work>/matches.jsonl")
    p.add_argument("--jsonl", action="store_true", help="print matches as JSON lines")
    p.add_argument("--color", choices=["auto", "always", "never"], default="auto")
    p.add_argument("--limit", type=int, help="stop after this many matches")

    p = sub.add_parser("expand", help="turn matches into deduction examples")
    _add_common(p)
    _add_expand_opts(p)

    p = sub.add_parser("augment", help="add paraphrased copies of each example")
    _add_common(p)
    _add_augment_opts(p)

    p = sub.add_parser("emit", help="write train.jsonl and stats.json")
    _add_common(p)
    _add_emit_opts(p)

    p = sub.add_parser("run", help="index, search, expand, augment and emit in one go")
    _add_common(p)
    _add_index_opts(p)
    _add_pattern_opts(p)
    _add_expand_opts(p)
    _add_augment_opts(p)
    _add_emit_opts(p)
    return parser


_CONFIG_KEYS = {"corpus", "work_dir", "index_dir", "patterns", "stoplist", "operation", "seed", "workers",
                "chunk_size", "max_depth", "provider", "n", "top_p", "record", "separator", "dev_fraction"}


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_KEYS}
    return build_config(file_values, overrides)


# --- search listing -------------------------------------------------------------------


def render_match(sentence, binding, color: bool) -> str:
    """Sentence text with each token tinted by the innermost capture covering it.

    Tokens linking a capture to its nearest enclosing capture (the "such as"
    between $0 and $1) stay untinted, as do tokens outside every capture.
    """
    heads = dict((var, tid) for var, tid in binding.bindings)
    spans = {var: set(sentence.subtree(tid)) for var, tid in heads.items()}
    owner = {}
    for var, ids in sorted(spans.items(), key=lambda kv: -len(kv[1])):
        for t in ids:
            owner[t] = var
    for var, tid in heads.items():
        outer = [v for v in spans if v != var and tid in spans[v] and heads[v] != tid]
        if not outer:
            continue
        host = min(outer, key=lambda v: len(spans[v]))
        branch = next((a for a in [tid, *sentence.ancestors(tid)] if sentence.token(a).head == heads[host]), None)
        if branch is not None:
            for t in set(sentence.subtree(branch)) - spans[var]:
                owner.pop(t, None)
    words = []
    for tok in sentence.tokens:
        var = owner.get(tok.id)
        if not color:
            words.append(tok.form)
        elif var is None:
            words.append(f"{_BOLD}{tok.form}{_RESET}")
        else:
            words.append(f"{_COLORS[var % len(_COLORS)]}{tok.form}{_RESET}")
    text = detokenize(words)
    caps = "  ".join(
        f"${var}={detokenize(sentence.token(t).form for t in sorted(spans[var]) if owner.get(t) == var)}"
        for var in sorted(heads)
    )
    return f"{binding.sentence_ref[0]}#{binding.sentence_ref[1]}  {binding.pattern_id}  {text}\n    {caps}"


def _resolve_pattern(text: str, config: PipelineConfig) -> DepPattern:
    """A configured pattern id such as ``sub1``, else literal pattern syntax."""
    if text.replace("_", "").replace("-", "").isalnum():
        for _, p in pipeline.load_pattern_set(config):
            if p.pattern_id == text:
                return p
    try:
        return parse_pattern(text, "cli")
    except PatternSyntaxError as exc:
        raise UsageError(f"bad pattern: {exc}") from None


def _cmd_search(args, config: PipelineConfig) -> int:
    if args.pattern is None:
        config.validate("search")
        n = pipeline.stage_search(config)
        print(f"{n} matches written to {config.work / pipeline.MATCHES}")
        return EXIT_OK
    pattern = _resolve_pattern(args.pattern, config)
    index = pipeline.open_index_dir(config)
    color = args.color == "always" or (args.color == "auto" and sys.stdout.isatty() and not os.environ.get("NO_COLOR"))
    shown = 0
    for m in search(index, pattern, config.workers):
        if args.limit is not None and shown >= args.limit:
            break
        if args.jsonl:
            print(json.dumps(m.to_json(), sort_keys=True))
        else:
            print(render_match(index.sentence(m.sentence_ref, m.chunk_id), m, color))
        shown += 1
    if not args.jsonl:
        print(f"{shown} matches", file=sys.stderr)
    return EXIT_OK


def dispatch(args, config: PipelineConfig) -> int:
    cmd = args.command
    if cmd == "search":
        return _cmd_search(args, config)
    config.validate(cmd)
    if cmd == "index":
        path = pipeline.stage_index(config)
        print(f"index written to {path}")
    elif cmd == "expand":
        kept, skipped = pipeline.stage_expand(config)
        print(f"{kept} examples, {skipped} skipped matches")
    elif cmd == "augment":
        report = pipeline.stage_augment(config)
        print(f"{report.examples_in} examples in, {report.examples_out} out, {report.failures} failures")
    elif cmd == "emit":
        report = pipeline.stage_emit(config)
        print(f"{report['examples']} records written to {config.work / 'train.jsonl'}")
    elif cmd == "run":
        report = pipeline.run(config)
        print(f"{report['examples']} records written to {config.work / 'train.jsonl'}")
    return EXIT_OK


def _classify(exc: BaseException) -> int:
    if isinstance(exc, (UsageError, ConfigError, pipeline.StageInputError)):
        return EXIT_USAGE
    if isinstance(exc, ProviderError):
        return EXIT_PROVIDER
    # IngestError, PatternSyntaxError, DepIndexError, bad JSON, unreadable files...
    return EXIT_DATA


def _report(exc: BaseException, code: int, json_errors: bool) -> None:
    kind = {EXIT_USAGE: "usage", EXIT_DATA: "data", EXIT_PROVIDER: "provider"}[code]
    msg = str(exc) or type(exc).__name__
    if json_errors:
        print(json.dumps({"error": msg, "kind": kind, "exit_code": code, "type": type(exc).__name__}), file=sys.stderr)
    else:
        print(f"depforge: {kind} error: {msg}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _report(exc, EXIT_USAGE, json_errors)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = config_from_args(args)
        return dispatch(args, config)
    except Exception as exc:  # every failure becomes an exit code
        code = _classify(exc)
        _report(exc, code, args.json_errors)
        if args.verbose > 1:
            logging.exception("traceback")
        return code


if __name__ == "__main__":
    sys.exit(main())

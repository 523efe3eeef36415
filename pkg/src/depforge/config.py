"""Pipeline configuration: TOML file values overridden by command-line flags.

File format (all keys optional)::

    corpus = ["data/wiki.conllu"]
    work_dir = "work"
    index_dir = "work/index"          # defaults to <work_dir>/index
    patterns = ["substitution=my.pat"] # op=path; bare paths infer the op from the file name
    stoplist = "stoplist.txt"
    operation = "both"                # substitution | contraposition | both
    seed = 42
    workers = 4
    chunk_size = 160000
    max_depth = 3

    [augment]
    provider = "mock"                 # mock | identity | none | fixture:PATH | http://host:port
    n = 2
    # more paraphrases or a higher top_p made downstream inferences less consistent
    top_p = 0.9
    record = "recorded.jsonl"         # optional, appends provider exchanges as fixtures

    [emit]
    separator = " "
    dev_fraction = 0.0

Relative paths are resolved against the current directory, not the file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import tomli

from .augment import DEFAULT_N, DEFAULT_TOP_P
from .index import DEFAULT_CHUNK_SIZE, DEFAULT_DEPTH
from .templates import CONTRAPOSITION, OPERATIONS, SUBSTITUTION

BOTH = "both"


class ConfigError(ValueError):
    """Invalid or incomplete configuration; a usage error."""


def bundled(name: str) -> Path:
    return Path(str(resources.files("depforge") / "data" / name))


def default_pattern_specs() -> list[str]:
    return [f"{SUBSTITUTION}={bundled('substitution.pat')}", f"{CONTRAPOSITION}={bundled('contraposition.pat')}"]


def parse_pattern_spec(spec: str) -> tuple[str, Path]:
    """``op=path`` or a bare path whose name mentions the operation."""
    op, sep, rest = spec.partition("=")
    if sep and op in OPERATIONS:
        return op, Path(rest)
    path = Path(spec)
    return (CONTRAPOSITION if "contra" in path.name.lower() else SUBSTITUTION), path


@dataclass
class PipelineConfig:
    corpus: list[str] = field(default_factory=list)
    work_dir: str = "work"
    index_dir: str | None = None
    patterns: list[str] = field(default_factory=default_pattern_specs)
    stoplist: str | None = None
    operation: str = BOTH
    seed: int | None = None
    workers: int = 1
    chunk_size: int = DEFAULT_CHUNK_SIZE
    max_depth: int = DEFAULT_DEPTH
    provider: str = "mock"
    n: int = DEFAULT_N
    top_p: float = DEFAULT_TOP_P
    record: str | None = None
    separator: str = " "
    dev_fraction: float = 0.0

    @property
    def work(self) -> Path:
        return Path(self.work_dir)

    @property
    def index_path(self) -> Path:
        return Path(self.index_dir) if self.index_dir else self.work / "index"

    def pattern_files(self) -> list[tuple[str, Path]]:
        specs = [parse_pattern_spec(s) for s in self.patterns]
        if self.operation != BOTH:
            specs = [(op, p) for op, p in specs if op == self.operation]
        return specs

    def validate(self, stage: str) -> None:
        if self.operation not in (*OPERATIONS, BOTH):
            raise ConfigError(f"operation must be substitution, contraposition or both, not {self.operation!r}")
        if self.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if self.n < 1:
            raise ConfigError("--n must be at least 1")
        if not 0 < self.top_p <= 1:
            raise ConfigError("--top-p must be in (0, 1]")
        if not 0 <= self.dev_fraction < 1:
            raise ConfigError("--dev-fraction must be in [0, 1)")
        if stage in ("index", "run"):
            if not self.corpus:
                raise ConfigError("no corpus given; pass --corpus FILE or set corpus in the config file")
            for c in self.corpus:
                if not Path(c).is_file():
                    raise ConfigError(f"corpus file {c} does not exist")
        if stage in ("search", "run"):
            for _, p in self.pattern_files():
                if not p.is_file():
                    raise ConfigError(f"pattern file {p} does not exist")
        if stage in ("expand", "run") and self.stoplist and not Path(self.stoplist).is_file():
            raise ConfigError(f"stoplist {self.stoplist} does not exist")
        if stage in ("emit", "run") and self.seed is None:
            raise ConfigError(f"{stage} needs --seed (all randomness flows from it)")
        if stage in ("augment", "run") and self.provider.startswith("fixture:"):
            if not Path(self.provider[len("fixture:"):]).is_file():
                raise ConfigError(f"fixture file {self.provider[len('fixture:'):]} does not exist")


_SECTIONS = {"augment": {"provider", "n", "top_p", "record"}, "emit": {"separator", "dev_fraction"}}


def load_config_file(path: str | Path) -> dict:
    """Flatten a TOML config into PipelineConfig field values."""
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    known = {f.name for f in fields(PipelineConfig)}
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            allowed = _SECTIONS.get(key)
            if allowed is None:
                raise ConfigError(f"config file {path}: unknown section [{key}]")
            for k, v in value.items():
                if k not in allowed:
                    raise ConfigError(f"config file {path}: unknown key {key}.{k}")
                flat[k] = v
        elif key in known:
            flat[key] = value
        else:
            raise ConfigError(f"config file {path}: unknown key {key}")
    for key in ("corpus", "patterns"):
        if isinstance(flat.get(key), str):
            flat[key] = [flat[key]]
    return flat


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then file values, then flag overrides (``None`` means unset)."""
    values = dict(file_values or {})
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

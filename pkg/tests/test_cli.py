import json
import subprocess
import sys

from depforge import __version__
from depforge.cli import main

from conftest import FIXTURES

CORPUS = str(FIXTURES / "fixture.conllu")


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_version(capsys):
    assert run_cli("--version") == 0
    assert capsys.readouterr().out.strip() == f"depforge {__version__} (index format 1)"


def test_usage_errors_exit_1(capsys, tmp_path):
    assert run_cli() == 1
    assert run_cli("frobnicate") == 1
    assert run_cli("index", "--chunk-size", "many") == 1
    assert "usage error" in capsys.readouterr().err
    # emit without a seed is a usage error, not a crash
    assert run_cli("emit", "--work", tmp_path) == 1


def test_missing_index_is_usage_error(tmp_path, capsys):
    assert run_cli("search", "sub1", "--work", tmp_path) == 1
    assert "index" in capsys.readouterr().err


def test_json_errors(tmp_path, capsys):
    assert run_cli("search", "sub1", "--work", tmp_path, "--json-errors") == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 1 and err["kind"] == "usage" and err["error"]


def test_malformed_corpus_is_data_error(tmp_path, capsys):
    bad = tmp_path / "bad.conllu"
    bad.write_text("1\tDogs\tdog\t_\tNNS\n\n")
    assert run_cli("index", "--corpus", bad, "--work", tmp_path / "w", "--json-errors") == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["kind"] == "data"


def test_bad_tree_is_skipped_not_fatal(tmp_path):
    bad = tmp_path / "bad.conllu"
    bad.write_text("1\tDogs\tdog\t_\tNNS\t_\t7\tnsubj\t_\t_\n\n")
    assert run_cli("index", "--corpus", bad, "--work", tmp_path / "w") == 0
    skips = (tmp_path / "w" / "ingest_skips.jsonl").read_text().splitlines()
    assert len(skips) == 1


def test_provider_failure_exits_3(tmp_path, capsys):
    empty = tmp_path / "none.jsonl"
    empty.write_text("")
    code = run_cli("run", "--corpus", CORPUS, "--work", tmp_path / "w", "--seed", 1, "--provider", f"fixture:{empty}")
    assert code == 3
    assert "provider error" in capsys.readouterr().err
    # the originals are still on disk for inspection
    assert (tmp_path / "w" / "augmented.jsonl").read_text().count("\n") == 13


def test_unreachable_http_provider_exits_3(tmp_path):
    code = run_cli("run", "--corpus", CORPUS, "--work", tmp_path / "w", "--seed", 1, "--provider",
                   "http://127.0.0.1:9", "--op", "contraposition")
    assert code == 3


def test_run_equals_manual_chaining(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli("run", "--corpus", CORPUS, "--work", a, "--seed", 42) == 0
    assert run_cli("index", "--corpus", CORPUS, "--work", b) == 0
    assert run_cli("search", "--work", b) == 0
    assert run_cli("expand", "--work", b) == 0
    assert run_cli("augment", "--work", b, "--seed", 42) == 0
    assert run_cli("emit", "--work", b, "--seed", 42) == 0
    for name in ("matches.jsonl", "examples.jsonl", "augmented.jsonl", "train.jsonl", "stats.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    stats = json.loads((a / "stats.json").read_text())
    assert (stats["examples"], stats["original_examples"], stats["augmentation_multiplier"]) == (39, 13, 3.0)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(f'corpus = ["{CORPUS}"]\nwork_dir = "{tmp_path / "w"}"\nseed = 5\n'
                   f'operation = "contraposition"\n\n[augment]\nprovider = "identity"\nn = 1\n\n'
                   f'[emit]\nseparator = " | "\n')
    assert run_cli("run", "--config", cfg, "--n", 2) == 0
    recs = [json.loads(x) for x in (tmp_path / "w" / "train.jsonl").read_text().splitlines()]
    assert {r["meta"]["op"] for r in recs} == {"contraposition"}
    assert len(recs) == 5 * 3
    assert recs[1]["source"] == recs[0]["source"]


def test_config_file_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("colour = true\n")
    assert run_cli("index", "--config", cfg) == 1


def test_search_listing_and_jsonl(tmp_path, capsys):
    assert run_cli("index", "--corpus", CORPUS, "--work", tmp_path) == 0
    capsys.readouterr()
    assert run_cli("search", "sub1", "--work", tmp_path, "--color", "never") == 0
    captured = capsys.readouterr()
    assert "tea#0  sub1  In Egypt, herbal teas such as Hibiscus tea are very popular." in captured.out
    assert "$0=herbal teas  $1=Hibiscus tea  $2=In Egypt, are very popular." in captured.out
    assert "5 matches" in captured.err
    assert run_cli("search", "sub1", "--work", tmp_path, "--jsonl", "--limit", 2) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and json.loads(lines[0])["pattern_id"] == "sub1"
    assert run_cli("search", "ROOT:VBP$0 < nsubj:NNS$1", "--work", tmp_path, "--jsonl") == 0
    assert capsys.readouterr().out.strip()


def test_search_colored_output(tmp_path, capsys):
    run_cli("index", "--corpus", CORPUS, "--work", tmp_path)
    capsys.readouterr()
    run_cli("search", "sub1", "--work", tmp_path, "--color", "always")
    out = capsys.readouterr().out
    assert "\033[32mherbal\033[0m" in out and "\033[34mHibiscus\033[0m" in out


def test_bad_pattern_is_usage_error(tmp_path, capsys):
    run_cli("index", "--corpus", CORPUS, "--work", tmp_path)
    assert run_cli("search", "nsubj:[", "--work", tmp_path) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "depforge", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("depforge ")

import hashlib
import json
import subprocess
import sys

import pytest

from perturbshield.cli import main
from perturbshield.synth import NB_ALPHA, write_bundle


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("bundle")
    paths = write_bundle(d, seed=5, n_train=200, n_test=30)
    model = d / "model.json"
    assert run("train", "--input", paths["train"], "--output", model, "--alpha", NB_ALPHA) == 0
    paths["model"] = model
    return paths


def lex_flags(b):
    return ["--spell-lexicon", b["spell"], "--synonyms", b["synonyms"]]


def test_train_deterministic(bundle, tmp_path):
    out = tmp_path / "m.json"
    assert run("train", "--input", bundle["train"], "--output", out, "--alpha", NB_ALPHA) == 0
    assert out.read_bytes() == bundle["model"].read_bytes()


def test_train_rejects_zero_alpha(bundle, tmp_path):
    assert run("train", "--input", bundle["train"], "--output", tmp_path / "m.json", "--alpha", "0") == 1


def test_train_empty_corpus(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert run("train", "--input", p, "--output", tmp_path / "m.json") == 2


def test_missing_input_is_usage_error(tmp_path):
    assert run("train", "--output", tmp_path / "m.json") == 1
    assert run("frobnicate") == 1


def test_attack_row_count_and_determinism(bundle, tmp_path):
    outs = []
    for jobs in (1, 4):
        out = tmp_path / f"att{jobs}.jsonl"
        assert run("attack", "--input", bundle["test"], "--output", out, "--style", "greedyflip",
                   "--fraction", "0.1", "--backend", f"builtin:{bundle['model']}",
                   "--synonyms", bundle["synonyms"], "--jobs", jobs) == 0
        outs.append(out)
    rows = [json.loads(line) for line in outs[0].read_text().splitlines()]
    assert len(rows) == 30
    assert digest(outs[0]) == digest(outs[1])


def test_attack_keeps_odd_corpus_size(bundle, tmp_path):
    src = tmp_path / "77.jsonl"
    lines = bundle["train"].read_text().splitlines()[:77]
    src.write_text("\n".join(lines) + "\n")
    out = tmp_path / "a.jsonl"
    assert run("attack", "--input", src, "--output", out, "--style", "charbug", "--budget", "2") == 0
    assert len(out.read_text().splitlines()) == 77


def test_defend_deterministic_across_jobs(bundle, tmp_path):
    digests = set()
    for method in ("rpd", "ird"):
        for jobs in (1, 4):
            out = tmp_path / f"d-{method}-{jobs}.jsonl"
            assert run("defend", "--input", bundle["test"], "--output", out, "--method", method,
                       "--backend", f"builtin:{bundle['model']}", *lex_flags(bundle),
                       "--seed", "9", "--jobs", jobs) == 0
            digests.add((method, digest(out)))
    assert len(digests) == 2


def test_defend_audit(bundle, tmp_path):
    out, audit = tmp_path / "d.jsonl", tmp_path / "audit.jsonl"
    assert run("defend", "--input", bundle["test"], "--output", out, "--method", "ird", "--k", "3",
               "--backend", "stub:positive", *lex_flags(bundle), "--audit", audit) == 0
    rows = [json.loads(line) for line in audit.read_text().splitlines()]
    assert len(rows) == 30 * 3
    assert all(len(r["steps"]) == 1 for r in rows)
    outs = [json.loads(line) for line in out.read_text().splitlines()]
    assert all(o["classifier_calls"] == 3 for o in outs)


def test_defend_needs_lexicon_for_enabled_kinds(bundle, tmp_path):
    assert run("defend", "--input", bundle["test"], "--output", tmp_path / "d.jsonl",
               "--backend", "stub:positive") == 1
    assert run("defend", "--input", bundle["test"], "--output", tmp_path / "d.jsonl",
               "--backend", "stub:positive", "--kinds", "drop") == 0


def test_evaluate_with_stub(bundle, tmp_path):
    att = tmp_path / "att.jsonl"
    assert run("attack", "--input", bundle["test"], "--output", att, "--style", "charbug", "--budget", "1") == 0
    out = tmp_path / "report.json"
    assert run("evaluate", "--input", bundle["test"], "--attacked", att, "--output", out,
               "--method", "rpd,ird", "--runs", "2", "--backend", "stub:positive", *lex_flags(bundle)) == 0
    doc = json.loads(out.read_text())
    assert doc["clean_accuracy"] == 0.5
    assert [r["method"] for r in doc["rows"]] == ["rpd", "ird"]
    assert all(r["calls_per_review"] == 41 for r in doc["rows"] if r["method"] == "ird")
    assert (tmp_path / "report.txt").exists()
    again = tmp_path / "again.json"
    run("evaluate", "--input", bundle["test"], "--attacked", att, "--output", again,
        "--method", "rpd,ird", "--runs", "2", "--backend", "stub:positive", *lex_flags(bundle), "--jobs", "3")
    assert again.read_bytes() == out.read_bytes()


def test_evaluate_id_mismatch(bundle, tmp_path):
    att = tmp_path / "att.jsonl"
    att.write_text(json.dumps({"id": "nobody", "attacked_text": "good film", "style": "x"}) + "\n")
    assert run("evaluate", "--input", bundle["test"], "--attacked", att, "--output", tmp_path / "r.json",
               "--backend", "stub:positive", "--kinds", "drop") == 2


def test_remote_unreachable_exit_code(bundle, tmp_path):
    assert run("defend", "--input", bundle["test"], "--output", tmp_path / "d.jsonl", "--kinds", "drop",
               "--backend", "remote:http://127.0.0.1:9", "--retries", "0", "--timeout", "1") == 3


def test_prob_output(capsys):
    assert run("prob", "--N", 10, "--m", 20, "--a", 5, "--k", 41) == 0
    out = capsys.readouterr().out
    assert "p_attack   = 0.025" in out and "p_ird      = 0.205" in out
    assert "holds" in out and "p_rpd" not in out


def test_prob_with_l(capsys):
    assert run("prob", "--N", 2, "--m", 5, "--k", 2, "--l", 1) == 0
    assert "p_rpd      = 20" in capsys.readouterr().out
    assert run("prob", "--N", 10, "--m", 20, "--k", 41, "--l", 7) == 1


def test_prob_budget_exceeds_words():
    assert run("prob", "--N", 2, "--m", 3, "--a", 7, "--k", 1) == 1


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# prob settings\nN = 10\nm = 20\na = 5\n")
    assert run("prob", "--config", cfg, "--k", 41) == 0
    assert "p_ird      = 0.205" in capsys.readouterr().out
    cfg.write_text("bogus = 1\n")
    assert run("prob", "--config", cfg, "--N", 1, "--m", 1, "--k", 1) == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "perturbshield", "prob", "--N", "1", "--m", "1", "--k", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "p_ird      = 1" in res.stdout


def test_config_value_validated(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("alpha = 0\n")
    assert run("train", "--config", cfg, "--input", "x", "--output", tmp_path / "m.json") == 1

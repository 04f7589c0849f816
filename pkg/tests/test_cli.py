import csv
import io
import json
import shutil

import pytest

from iemetrics.cli import main
from iemetrics.corpus import load_corpus
from iemetrics.report import evaluate_corpus, format_percent, metric_names
from synth import random_corpus, write_corpus


@pytest.fixture
def dirs(tmp_path):
    return write_corpus(random_corpus(7, n_docs=12), tmp_path / "c")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_identical_inputs_are_perfect(capsys, dirs):
    labels, _ = dirs
    code, out, _ = run(capsys, "evaluate", labels, labels, "--format", "json")
    assert code == 0
    rows = {r["name"]: r["value"] for r in json.loads(out)["metrics"]}
    for name, v in rows.items():
        assert v == (100.0 if name.endswith(("-P", "-R", "F1")) else 0.0), name


def test_formats_carry_same_numbers(capsys, dirs):
    labels, preds = dirs
    shown = {}
    for fmt in ("json", "csv", "markdown"):
        code, out, _ = run(capsys, "evaluate", labels, preds, "--format", fmt)
        assert code == 0
        if fmt == "json":
            shown[fmt] = {r["name"]: r["display"] for r in json.loads(out)["metrics"]}
        elif fmt == "csv":
            shown[fmt] = {r["metric"]: r["display"] for r in csv.DictReader(io.StringIO(out))}
        else:
            rows = [l.strip("|").split("|") for l in out.splitlines()[2:] if l.startswith("|")]
            shown[fmt] = {r[0].strip().rsplit(" ", 1)[0]: r[1].strip() for r in rows}
    assert shown["json"] == shown["csv"] == shown["markdown"]
    assert list(shown["json"]) == metric_names()


def test_json_has_full_precision_and_provenance(capsys, dirs):
    labels, preds = dirs
    _, out, _ = run(capsys, "evaluate", labels, preds, "--format", "json", "--seed", "9")
    data = json.loads(out)
    hdr = data["header"]
    assert hdr["seed"] == 9 and hdr["thresholds"] == [0.3] and hdr["mode"] == "directory"
    assert len(hdr["inputs"]["labels"]["sha256"]) == 64
    corpus = load_corpus(labels, preds)
    direct = evaluate_corpus(corpus)
    for row in data["metrics"]:
        assert row["value"] == direct.scores[row["name"]]
        assert row["display"] == format_percent(row["value"])


def test_threshold_sweep(capsys, dirs):
    labels, preds = dirs
    _, out, _ = run(capsys, "evaluate", labels, preds, "--format", "json", "--threshold", "0", "0.3", "1")
    names = [r["name"] for r in json.loads(out)["metrics"]]
    assert "OINerval-F1@0" in names and "Nerval-P@1" in names and "ECER" in names


def test_metric_selection(capsys, dirs):
    labels, preds = dirs
    code, out, _ = run(capsys, "evaluate", labels, preds, "--format", "csv", "--metrics", "OIECER", "btWER")
    assert code == 0
    assert [r["metric"] for r in csv.DictReader(io.StringIO(out))] == ["OIECER", "btWER"]
    code, _, err = run(capsys, "evaluate", labels, preds, "--metrics", "nope")
    assert code == 2 and "nope" in err


def test_per_document_and_ci(capsys, dirs):
    labels, preds = dirs
    code, out, _ = run(capsys, "evaluate", labels, preds, "--format", "json",
                       "--per-document", "--ci", "--resamples", "50")
    data = json.loads(out)
    assert code == 0 and len(data["documents"]) <= 12
    for row in data["metrics"]:
        if row["value"] is not None:
            assert row["ci"]["low"] <= row["value"] <= row["ci"]["high"]


def test_parallel_matches_serial(capsys, dirs):
    labels, preds = dirs
    _, a, _ = run(capsys, "evaluate", labels, preds, "--format", "json")
    _, b, _ = run(capsys, "evaluate", labels, preds, "--format", "json", "--jobs", "2")
    assert a == b


def test_exit_codes(capsys, tmp_path, dirs):
    labels, preds = dirs
    assert run(capsys, "evaluate", tmp_path / "missing", preds)[0] == 2
    assert run(capsys, "evaluate", labels, preds, "--threshold", "1.5")[0] == 2
    bad = tmp_path / "bad"
    shutil.copytree(preds, bad)
    next(bad.iterdir()).write_text("oops\n")
    assert run(capsys, "evaluate", labels, bad)[0] == 2
    orphan = tmp_path / "orphan"
    shutil.copytree(preds, orphan)
    (orphan / "extra.bio").write_text("x B-P\n")
    code, _, err = run(capsys, "evaluate", labels, orphan)
    assert code == 2 and "extra" in err
    empty_ref, hyp = tmp_path / "er", tmp_path / "eh"
    empty_ref.mkdir()
    hyp.mkdir()
    (empty_ref / "a.bio").write_text("x O\n")
    (hyp / "a.bio").write_text("x B-P\n")
    assert run(capsys, "evaluate", empty_ref, hyp)[0] == 3
    assert run(capsys, "nonsense")[0] == 2


def test_env_defaults_and_precedence(capsys, monkeypatch, dirs):
    labels, preds = dirs
    monkeypatch.setenv("IEMETRICS_FORMAT", "csv")
    _, out, _ = run(capsys, "evaluate", labels, preds)
    assert out.startswith("document,metric")
    _, out, _ = run(capsys, "evaluate", labels, preds, "--format", "json")
    assert out.startswith("{")
    monkeypatch.setenv("IEMETRICS_THRESHOLD", "0,1")
    _, out, _ = run(capsys, "evaluate", labels, preds, "--format", "json")
    assert json.loads(out)["header"]["thresholds"] == [0.0, 1.0]


def test_output_file(capsys, tmp_path, dirs):
    labels, preds = dirs
    target = tmp_path / "out" / "r.json"
    assert run(capsys, "evaluate", labels, preds, "--format", "json", "-o", target)[0] == 0
    assert json.loads(target.read_text())["schema"] == "iemetrics.report/1"


def test_shuffle_deterministic_and_invariant(capsys, tmp_path, dirs):
    labels, preds = dirs
    a, b = tmp_path / "s1", tmp_path / "s2"
    assert run(capsys, "shuffle", preds, a, "--seed", "4")[0] == 0
    assert run(capsys, "shuffle", preds, b, "--seed", "4")[0] == 0
    for f in preds.iterdir():
        assert (a / f.name).read_bytes() == (b / f.name).read_bytes()
    _, before, _ = run(capsys, "evaluate", labels, preds, "--format", "json")
    _, after, _ = run(capsys, "evaluate", labels, a, "--format", "json")
    before = {r["name"]: r["value"] for r in json.loads(before)["metrics"]}
    after = {r["name"]: r["value"] for r in json.loads(after)["metrics"]}
    for name in before:
        if name.startswith(("OI", "bt", "be")):
            assert before[name] == after[name], name


def test_shuffle_single_entity_files_unchanged(capsys, tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    (src / "a.bio").write_text("x O\nJohn B-PER\nSmith I-PER\n")
    assert run(capsys, "shuffle", src, tmp_path / "dst")[0] == 0
    assert (tmp_path / "dst" / "a.bio").read_text() == (src / "a.bio").read_text()


def test_shuffle_errors(capsys, tmp_path, dirs):
    labels, preds = dirs
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(capsys, "shuffle", preds, blocker / "sub", "--seed", "1")[0] == 2
    assert run(capsys, "shuffle", preds, tmp_path / "o", "--scope", "both")[0] == 2


def test_shuffle_single_file_mode(capsys, tmp_path):
    src = tmp_path / "in.bio"
    src.write_text("a B-P\nb B-Q\nc B-R\n\nd B-P\n")
    dst = tmp_path / "out.bio"
    assert run(capsys, "shuffle", src, dst, "--mode", "file", "--seed", "2")[0] == 0
    assert run(capsys, "evaluate", src, dst, "--mode", "file", "--metrics", "OIECER", "--format", "csv")[0] == 0


def test_by_category(capsys, dirs):
    labels, preds = dirs
    code, out, _ = run(capsys, "by-category", labels, preds, "--format", "json")
    assert code == 0
    data = json.loads(out)
    corpus = load_corpus(labels, preds)
    n_ref = sum(len(p.reference.entities()) for p in corpus)
    assert sum(r["entities"] for r in data["rows"]) == n_ref
    code, out, _ = run(capsys, "by-category", labels, preds, "--categories")
    assert code == 0 and "total (including untagged words)" in out
    code, _, err = run(capsys, "by-category", labels, preds, "--categories", "nosuch")
    assert code == 2 and "nosuch" in err


def test_correlate(capsys, dirs):
    labels, preds = dirs
    code, out, _ = run(capsys, "correlate", labels, preds, "--format", "json")
    assert code == 0
    data = json.loads(out)
    for kind in ("pearson", "spearman"):
        m = data[kind]
        for i in range(len(m["names"])):
            assert m["coefficients"][i][i] == 1.0
    code, out, _ = run(capsys, "correlate", labels, preds, "--metrics", "ECER", "ECER", "--format", "json")
    assert json.loads(out)["pearson"]["names"] == ["ECER"]
    code, out, _ = run(capsys, "correlate", labels, preds, "--metrics", "OIECER", "ECER", "--format", "json")
    m = json.loads(out)["pearson"]
    assert m["names"] == ["OIECER", "ECER"] and -1 <= m["coefficients"][0][1] <= 1
    code, out, _ = run(capsys, "correlate", labels, preds)
    assert code == 0 and "Spearman" in out


def test_correlate_too_few_documents(capsys, tmp_path):
    labels, preds = write_corpus(random_corpus(3, n_docs=2), tmp_path)
    assert run(capsys, "correlate", labels, preds)[0] == 3

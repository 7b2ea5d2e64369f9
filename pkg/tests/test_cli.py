import json

import pytest

from privdetect.cli import main


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(out), "--n-per-class", "15", "--n-reference", "80", "--seed", "1"]) == 0
    return out


def test_synth_outputs(synth_dir):
    lines = (synth_dir / "corpus.jsonl").read_text().splitlines()
    assert len(lines) == 30
    assert len((synth_dir / "reference.jsonl").read_text().splitlines()) == 80


def test_sanitize_is_reproducible(synth_dir, tmp_path, capsys):
    args = ["sanitize", "--corpus", str(synth_dir / "corpus.jsonl"), "--epsilon", "1.0", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert "ledger spend" in capsys.readouterr().out
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("sanitized.jsonl", "audit.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    audit = [json.loads(l) for l in (tmp_path / "a" / "audit.jsonl").read_text().splitlines()]
    assert all(r["ledger_total"] <= 1.0 + 1e-9 for r in audit)


def test_sanitize_empty_corpus(tmp_path):
    (tmp_path / "empty.jsonl").write_text("")
    assert main(["sanitize", "--corpus", str(tmp_path / "empty.jsonl"), "--epsilon", "1",
                 "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "sanitized.jsonl").read_text() == ""
    assert (tmp_path / "o" / "audit.jsonl").read_text() == ""


def test_corrupt_line_reported(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"doc_id": "a", "text": "x", "label": 0}\n{oops\n')
    assert main(["sanitize", "--corpus", str(bad), "--epsilon", "1", "--out", str(tmp_path)]) != 0
    assert "line 2" in capsys.readouterr().err


def test_sanitize_needs_single_budget(synth_dir, tmp_path):
    assert main(["sanitize", "--corpus", str(synth_dir / "corpus.jsonl"), "--out", str(tmp_path)]) != 0


def test_extract(synth_dir, tmp_path):
    assert main(["extract", "--corpus", str(synth_dir / "corpus.jsonl"), "--out", str(tmp_path)]) == 0
    rows = [json.loads(l) for l in (tmp_path / "entities.jsonl").read_text().splitlines()]
    assert len(rows) == 30 and all(r["spans"] for r in rows)


def test_features_grid_count(synth_dir, tmp_path):
    assert main(["features", "--corpus", str(synth_dir / "corpus.jsonl"), "--reference",
                 str(synth_dir / "reference.jsonl"), "--grid-count", "10", "--out", str(tmp_path)]) == 0
    rows = [json.loads(l) for l in (tmp_path / "features.jsonl").read_text().splitlines()]
    assert {len(r["flat"]) for r in rows} == {30}


def test_pipeline_and_config_override(synth_dir, tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"corpus": str(synth_dir / "corpus.jsonl"),
                               "reference": str(synth_dir / "reference.jsonl"),
                               "grid_count": 4, "seed": 2}))
    assert main(["pipeline", "--config", str(cfg), "--grid-count", "3", "--out", str(tmp_path)]) == 0
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert "f1" in metrics and metrics["d"] == 3


def test_pipeline_stage_error(synth_dir, tmp_path, capsys):
    assert main(["pipeline", "--corpus", str(synth_dir / "corpus.jsonl"), "--out", str(tmp_path)]) == 1
    assert "[features]" in capsys.readouterr().err


def test_ablation(synth_dir, tmp_path):
    assert main(["ablation", "--corpus", str(synth_dir / "corpus.jsonl"), "--reference",
                 str(synth_dir / "reference.jsonl"), "--d-values", "2,3", "--out", str(tmp_path)]) == 0
    header = (tmp_path / "ablation.csv").read_text().splitlines()[0]
    assert header.startswith("d,f1")

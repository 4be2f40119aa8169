import json

import pytest
from click.testing import CliRunner

from speech2latex.cli import main

from conftest import CORPUS


@pytest.fixture
def runner():
    return CliRunner()


def write_corpus(path, rows=CORPUS, split=None):
    with open(path, "w", encoding="utf-8") as fh:
        for pair_id, nl, tex in rows:
            obj = {"id": pair_id, "nl_text": nl, "latex": tex}
            if split:
                obj["split"] = split
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@pytest.fixture
def corpus_path(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_corpus(path)
    return path


class TestIngest:
    def test_splits_and_writes(self, runner, corpus_path, tmp_path):
        out = tmp_path / "split.jsonl"
        result = runner.invoke(
            main, ["ingest", str(corpus_path), "--split", "0.7,0.15,0.15", "--seed", "3", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(lines) == len(CORPUS)
        assert {line["split"] for line in lines} <= {"train", "validation", "test"}

    def test_same_seed_same_output(self, runner, corpus_path, tmp_path):
        outs = []
        for name in ("a.jsonl", "b.jsonl"):
            out = tmp_path / name
            runner.invoke(main, ["ingest", str(corpus_path), "--seed", "5", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestIndexAndQuery:
    def test_index_then_query(self, runner, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, split="train")
        index_path = tmp_path / "index.json"
        result = runner.invoke(
            main, ["index", "--dataset", str(corpus), "--split", "train", "--out", str(index_path)]
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(index_path.read_text())
        assert payload["dim"] == 512
        assert len(payload["entries"]) == len(CORPUS)

        result = runner.invoke(
            main,
            ["query", "--index", str(index_path), "--text", CORPUS[2][1], "-k", "3", "--measure", "cosine"],
        )
        assert result.exit_code == 0, result.output
        first = result.output.splitlines()[0].split("\t")
        assert first[0] == "1"
        assert first[1] == CORPUS[2][0]


class TestEvaluate:
    def test_scores_and_footer(self, runner, tmp_path):
        ref = tmp_path / "ref.jsonl"
        write_corpus(ref)
        hyp = tmp_path / "hyp.jsonl"
        with open(hyp, "w", encoding="utf-8") as fh:
            for pair_id, _, tex in CORPUS:
                fh.write(json.dumps({"id": pair_id, "latex": tex}) + "\n")
        out = tmp_path / "scores.csv"
        result = runner.invoke(
            main, ["evaluate", "--hyp", str(hyp), "--ref", str(ref), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "pair_id,el,bucket"
        assert lines[1].startswith("eq1,0.000000,1")
        assert any(line.startswith("BLEU,100.00") for line in lines)
        assert any(line.startswith("chrF,100.00") for line in lines)
        assert any(line.startswith("EL<0.1,100.00") for line in lines)
        assert any(line.startswith("EL>0.4,0.00") for line in lines)

    def test_agreement_output(self, runner, tmp_path):
        ref = tmp_path / "ref.jsonl"
        write_corpus(ref, rows=CORPUS[:2])
        hyp = tmp_path / "hyp.jsonl"
        with open(hyp, "w", encoding="utf-8") as fh:
            for pair_id, _, tex in CORPUS[:2]:
                fh.write(json.dumps({"id": pair_id, "latex": tex}) + "\n")
        ann = tmp_path / "ann.jsonl"
        ann.write_text('{"pair_id": "eq1", "label": 1}\n{"pair_id": "eq2", "label": -1}\n')
        result = runner.invoke(
            main,
            ["evaluate", "--hyp", str(hyp), "--ref", str(ref), "--out", str(tmp_path / "o.csv"),
             "--annotations", str(ann)],
        )
        assert result.exit_code == 0, result.output
        assert "agreement: 0.5000" in result.output


class TestEvaluateGrid:
    def test_grid_with_stub(self, runner, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        rows = [(i, nl, tex) for i, nl, tex in CORPUS]
        dup = [(i + "_t", nl, tex) for i, nl, tex in CORPUS[:3]]
        with open(corpus, "w", encoding="utf-8") as fh:
            for pair_id, nl, tex in rows:
                fh.write(json.dumps({"id": pair_id, "nl_text": nl, "latex": tex, "split": "train"}, ensure_ascii=False) + "\n")
            for pair_id, nl, tex in dup:
                fh.write(json.dumps({"id": pair_id, "nl_text": nl, "latex": tex, "split": "test"}, ensure_ascii=False) + "\n")
        index_path = tmp_path / "index.json"
        runner.invoke(main, ["index", "--dataset", str(corpus), "--out", str(index_path)])
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"rows": [
            {"k": 0, "prompt_id": "p1"},
            {"k": 2, "measure": "cosine", "prompt_id": "p2"},
        ]}))
        out_csv = tmp_path / "results.csv"
        result = runner.invoke(
            main,
            ["evaluate-grid", "--dataset", str(corpus), "--index", str(index_path),
             "--grid", str(grid), "--llm", "fixed:z", "--out", str(out_csv)],
        )
        assert result.exit_code == 0, result.output
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "k,Sim/Dist,Prompt,EL<0.1,EL>0.4,BLEU,chrF,n_items"
        assert len(lines) == 3
        assert lines[1].startswith("–,–,–,")
        assert "k" in result.output and "Sim/Dist" in result.output


class TestDumpPrompt:
    def test_baseline_prompt(self, runner):
        result = runner.invoke(main, ["dump-prompt", "--prompt-id", "p1", "--text", "χι συν ψι"])
        assert result.exit_code == 0, result.output
        assert "[system]" in result.output
        assert "You are a LaTeX equation generator." in result.output
        assert "Input: χι συν ψι" in result.output

    def test_with_examples(self, runner, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, split="train")
        index_path = tmp_path / "index.json"
        runner.invoke(main, ["index", "--dataset", str(corpus), "--out", str(index_path)])
        result = runner.invoke(
            main,
            ["dump-prompt", "--prompt-id", "p2", "--text", CORPUS[0][1],
             "--index", str(index_path), "--dataset", str(corpus), "-k", "2"],
        )
        assert result.exit_code == 0, result.output
        assert result.output.count("Input:") == 3
        assert CORPUS[0][2] in result.output  # self-retrieved latex appears

import json
from pathlib import Path
from typing import List

import pytest

from sparta.eog.cli import run
from sparta.eog.corpus.documents import load_documents
from sparta.eog.corpus.vocabulary import Vocabulary

PUBTATOR = "\n".join(
    [
        "10|t|Aspirin causes headache.",
        "10|a|Ibuprofen eased fever.",
        "10\t0\t7\tAspirin\tChemical\tD001",
        "10\t15\t23\theadache\tDisease\tD002",
        "10\t25\t34\tIbuprofen\tChemical\tD003",
        "10\t41\t46\tfever\tDisease\tD004",
        "10\tCID\tD001\tD002",
        "",
        "20|t|Lithium induced tremor.",
        "20|a|",
        "20\t0\t7\tLithium\tChemical\tD005",
        "20\t16\t22\ttremor\tDisease\tD006",
        "20\tCID\tD005\tD006",
        "",
    ]
)

TINY = ["--word-dimension", "4", "--hidden-size", "3", "--node-type-dimension", "2", "--distance-dimension", "2", "--edge-dimension", "3"]


@pytest.fixture
def prepared(tmp_path: Path) -> Path:
    source = tmp_path / "corpus.PubTator.txt"
    source.write_text(PUBTATOR, encoding="utf-8")
    assert run(["prepare", str(source), str(tmp_path / "data.jsonl"), "--vocabulary", str(tmp_path / "vocab.txt"), "--pubtator", str(tmp_path / "out.txt")]) == 0
    return tmp_path / "data.jsonl"


def _train(tmp_path: Path, data: Path, *extra: str) -> Path:
    assert run(["train", "--train", str(data), "--dev", str(data), "--output", str(tmp_path / "runs"), "--max-epochs", "2", *TINY, *extra]) == 0
    (run_directory,) = (tmp_path / "runs").iterdir()
    return run_directory


def test_prepare_writes_documents(capsys: pytest.CaptureFixture[str], prepared: Path) -> None:
    documents = load_documents(prepared)
    assert [doc.doc_id for doc in documents] == ["10", "20"]
    assert len(documents[0].relations) == 1
    assert Vocabulary.load(prepared.parent / "vocab.txt").stoi["aspirin"] > 1
    assert (prepared.parent / "out.txt").read_text(encoding="utf-8").startswith("10|t|Aspirin causes headache.")
    assert "2 documents" in capsys.readouterr().out


def test_train_then_evaluate(prepared: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    run_directory = _train(tmp_path, prepared)
    assert len(run_directory.name) == 12
    assert "hidden_size=3" in (run_directory / "config.txt").read_text(encoding="utf-8").splitlines()
    epochs = [json.loads(line)["epoch"] for line in (run_directory / "train_log.jsonl").read_text().splitlines()]
    assert epochs == [1, 2]
    capsys.readouterr()

    predictions = tmp_path / "predictions.jsonl"
    assert run(["evaluate", "--checkpoint", str(run_directory / "checkpoint"), "--data", str(prepared), "--predictions", str(predictions)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "split\tP\tR\tF1\tTP\tFP\tFN"
    assert [line.split("\t")[0] for line in lines[1:]] == ["overall", "intra", "inter"]
    assert len(predictions.read_text().splitlines()) == 5

    assert run(["analyze", "distance", "--checkpoint", str(run_directory / "checkpoint"), "--data", str(prepared)]) == 0
    assert capsys.readouterr().out.startswith("distance\t")


def test_prepared_vocabulary_reaches_the_checkpoint(prepared: Path, tmp_path: Path) -> None:
    source = tmp_path / "corpus.PubTator.txt"
    pruned = tmp_path / "pruned.txt"
    assert run(["prepare", str(source), str(tmp_path / "again.jsonl"), "--vocabulary", str(pruned), "--min-freq", "2"]) == 0
    assert Vocabulary.load(pruned).regular_tokens == ["."]

    run_directory = _train(tmp_path, prepared, "--vocabulary", str(pruned))
    saved = Vocabulary.load(run_directory / "checkpoint" / "vocab.txt")
    assert saved.itos == Vocabulary.load(pruned).itos
    assert "aspirin" not in saved


def test_missing_vocabulary_is_a_data_error(prepared: Path, tmp_path: Path) -> None:
    assert run(["train", "--train", str(prepared), "--output", str(tmp_path / "runs"), "--vocabulary", str(tmp_path / "missing.txt"), *TINY]) == 2


def test_same_configuration_reuses_run_directory(prepared: Path, tmp_path: Path) -> None:
    first = _train(tmp_path, prepared)
    second = _train(tmp_path, prepared)
    assert first == second
    assert len((first / "train_log.jsonl").read_text().splitlines()) == 2


def test_analyze_stats(prepared: Path, capsys: pytest.CaptureFixture[str]) -> None:
    capsys.readouterr()
    assert run(["analyze", "stats", "--data", str(prepared)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert (stats["documents"], stats["positive_pairs"], stats["positive_intra"], stats["negative_pairs"]) == (2, 2, 2, 3)


def test_analyze_graph(prepared: Path, tmp_path: Path) -> None:
    output = tmp_path / "graph.jsonl"
    assert run(["analyze", "graph", "--data", str(prepared), "--output", str(output)]) == 0
    records: List[dict] = [json.loads(line) for line in output.read_text().splitlines()]
    assert {record["doc_id"] for record in records} == {"10", "20"}
    assert "EE" not in {record["family"] for record in records}


def test_analyze_sweep(prepared: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    output = tmp_path / "sweep.jsonl"
    argv = ["analyze", "sweep", "--train", str(prepared), "--test", str(prepared), "--ablation=-SS", "--grid", "beta=0.5,0.9"]
    assert run([*argv, "--max-epochs", "1", *TINY, "--output", str(output)]) == 0
    results = [json.loads(line) for line in output.read_text().splitlines()]
    assert [result["label"] for result in results] == ["-SS", "beta=0.5", "beta=0.9"]
    assert all(result["error"] is None for result in results)


def test_usage_errors_exit_with_one(prepared: Path, tmp_path: Path) -> None:
    assert run([]) == 1
    assert run(["train", "--bogus"]) == 1
    assert run(["train", "--train", str(prepared), "--variant", "NoInf", "--inference-iterations", "2"]) == 1
    assert run(["analyze", "sweep", "--train", str(prepared), "--test", str(prepared), "--grid", "beta"]) == 1


def test_data_errors_exit_with_two(tmp_path: Path) -> None:
    broken = tmp_path / "broken.txt"
    broken.write_text("10|t|Title\nnot a pubtator line\n", encoding="utf-8")
    assert run(["prepare", str(broken), str(tmp_path / "out.jsonl")]) == 2
    assert run(["prepare", str(tmp_path / "missing.txt"), str(tmp_path / "out.jsonl")]) == 2
    assert run(["evaluate", "--checkpoint", str(tmp_path / "missing"), "--data", str(broken)]) == 2


def test_gradcheck_passes() -> None:
    assert run(["gradcheck", "--seed", "0"]) == 0

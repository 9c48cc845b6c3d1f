import json

import pytest

from tweetcat.agreement import random_annotations, save_annotations
from tweetcat.cli import main, read_config


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """gen -> clean -> split -> train on a small corpus, shared by the tests below."""
    d = tmp_path_factory.mktemp("cli")
    assert run("gen", "--preset", "topuser-like", "--docs-per-class", 15, "--out", d / "raw.csv") == 0
    assert run("clean", "--data", d / "raw.csv", "--out", d / "clean.csv", "--report", d / "clean.json") == 0
    assert run("split", "--data", d / "clean.csv", "--train-out", d / "train.csv", "--test-out", d / "test.csv") == 0
    assert run("train", "--data", d / "train.csv", "--model", "nb", "--alpha", 0.1, "--out", d / "nb.json") == 0
    return d


def test_pipeline_files(workdir):
    assert json.loads((workdir / "clean.json").read_text())["retained"] == 180
    assert (workdir / "nb.vocab.json").exists()
    env = json.loads((workdir / "nb.json").read_text())
    assert env["model_type"] == "nb"
    assert env["hyperparams"]["alpha"] == 0.1


def test_split_sizes(workdir, capsys):
    run("split", "--data", workdir / "clean.csv", "--train-out", workdir / "a.csv", "--test-out", workdir / "b.csv")
    assert "train 135  test 45" in capsys.readouterr().out


def test_evaluate_and_report(workdir, capsys):
    rc = run(
        "evaluate",
        "--model", workdir / "nb.json",
        "--data", workdir / "test.csv",
        "--report", workdir / "nb.report.json",
        "--confusion-csv", workdir / "cm.csv",
        "--confusion-svg", workdir / "cm.svg",
    )
    assert rc == 0
    rep = json.loads((workdir / "nb.report.json").read_text())
    assert rep["meta"]["model_type"] == "nb"
    assert (workdir / "cm.csv").read_text().startswith("true\\pred,")
    assert (workdir / "cm.svg").read_text().startswith("<svg")
    capsys.readouterr()
    assert run("report", workdir / "nb.report.json", "--out", workdir / "table.md") == 0
    table = (workdir / "table.md").read_text().splitlines()
    assert table[0] == "| Model | Accuracy | Precision | Recall | F1 | AUC |"
    assert table[2].startswith("| nb |")


def test_predict(workdir):
    assert run("predict", "--model", workdir / "nb.json", "--data", workdir / "test.csv", "--out", workdir / "p.csv", "--scores") == 0
    lines = (workdir / "p.csv").read_text().splitlines()
    assert lines[0].startswith("id,predicted,score_")
    assert len(lines) == 46


def test_mismatched_vocab_is_data_error(workdir, tmp_path, capsys):
    run("gen", "--preset", "synonym-like", "--docs-per-class", 2, "--out", tmp_path / "o.csv")
    run("train", "--data", tmp_path / "o.csv", "--model", "nb", "--out", tmp_path / "o.json", "--min-df", 2)
    capsys.readouterr()
    rc = run(
        "--json-errors", "evaluate",
        "--model", workdir / "nb.json",
        "--data", workdir / "test.csv",
        "--report", tmp_path / "r.json",
        "--vocab", tmp_path / "o.vocab.json",
    )
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert err["kind"] == "dimension_mismatch" and err["exit_code"] == 2


def test_usage_errors(workdir, capsys):
    assert run() == 1
    assert run("train", "--data", workdir / "train.csv") == 1
    assert run("train", "--data", workdir / "train.csv", "--model", "nb", "--C", 1, "--out", workdir / "x.json") == 1
    assert run("train", "--data", workdir / "train.csv", "--model", "nb", "--param", "bogus=1", "--out", workdir / "x.json") == 1
    assert "error" in capsys.readouterr().err


def test_missing_input_is_data_error(tmp_path):
    assert run("clean", "--data", tmp_path / "nope.csv", "--out", tmp_path / "o.csv") == 2


def test_config_file(workdir, tmp_path):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(f"# training defaults\ndata = {workdir / 'train.csv'}\nmodel = lr\nC = 2.0\nmax-iter = 20\n")
    assert run("train", "--config", cfg, "--out", tmp_path / "lr.json") == 0
    assert json.loads((tmp_path / "lr.json").read_text())["hyperparams"]["C"] == 2.0
    # explicit flags win over the file
    assert run("train", "--config", cfg, "--C", 0.5, "--out", tmp_path / "lr2.json") == 0
    assert json.loads((tmp_path / "lr2.json").read_text())["hyperparams"]["C"] == 0.5
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown_key = 3\n")
    assert run("train", "--config", bad, "--model", "nb", "--data", "x", "--out", "y") == 1
    bad.write_text("just words\n")
    assert run("train", "--config", bad) == 1


def test_read_config_strips_comments(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("a-b = 1  # note\n\n c=x=y\n")
    assert read_config(p) == {"a_b": "1", "c": "x=y"}


def test_tune_command(workdir):
    out = workdir / "tune.json"
    rc = run(
        "tune", "--data", workdir / "train.csv", "--model", "nb",
        "--space", "alpha=grid:0.1,1.0,0.3", "--n-iter", 3, "--out", out, "--model-out", workdir / "tuned.json",
    )
    assert rc == 0
    res = json.loads(out.read_text())
    assert len(res["trials"]) == 3
    assert res["best_params"] == {"alpha": 0.1}
    assert (workdir / "tuned.json").exists()
    assert run("tune", "--data", workdir / "train.csv", "--model", "nb", "--space", "alpha=zipf:1", "--out", out) == 1


def test_agree_command(tmp_path, capsys):
    save_annotations(random_annotations(30, seed=0, agreement=0.7), tmp_path / "a.csv")
    rc = run("agree", "--annotations", tmp_path / "a.csv", "--report", tmp_path / "r.json", "--gt-out", tmp_path / "gt.csv")
    assert rc == 0
    assert "GT2YES(O)" in capsys.readouterr().out
    assert (tmp_path / "gt.csv").read_text().startswith("doc_id,topics,tag,multi_label")
    json.loads((tmp_path / "r.json").read_text())


def test_expand_command(workdir, tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    texts = [t for t in (workdir / "clean.csv").read_text().splitlines()[1:30]]
    with (src / "s.jsonl").open("w") as fh:
        for i, line in enumerate(texts):
            fh.write(json.dumps({"id": f"x{i}", "text": line.split(",", 1)[-1]}) + "\n")
    assert run("expand", "--model", workdir / "nb.json", "--out", tmp_path / "e.csv") == 1
    rc = run(
        "expand", "--model", workdir / "nb.json", "--source-dir", src,
        "--out", tmp_path / "e.csv", "--report", tmp_path / "e.json", "--per-class-terms", 2,
    )
    assert rc == 0
    assert "added_counts" in json.loads((tmp_path / "e.json").read_text())


def test_tsne_command(workdir, tmp_path):
    rc = run(
        "tsne", "--data", workdir / "clean.csv", "--out-svg", tmp_path / "t.svg", "--out-csv", tmp_path / "t.csv",
        "--meta", tmp_path / "t.json", "--perplexity", 10, "--iterations", 260, "--pair", "ST,ED",
    )
    assert rc == 0
    assert tmp_path.joinpath("t.svg").read_text().count("<circle") == 30
    assert len(json.loads((tmp_path / "t.json").read_text())["kl_trace"]) > 0
    assert run("tsne", "--data", workdir / "clean.csv", "--out-svg", tmp_path / "u.svg", "--pair", "ST") == 1


def test_version(capsys):
    assert run("--version") == 0
    assert "tweetcat" in capsys.readouterr().out
